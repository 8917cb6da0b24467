from __future__ import annotations

import numpy as np
import pytest

from fairdiv.distributions import Uniform
from fairdiv.model import (
    Allocation,
    Assignment,
    FairnessReport,
    Instance,
    RankingProfile,
    allocation_to_dict,
    bundle_utility,
    fairness_report,
    instance_from_dict,
    instance_to_dict,
    is_ef_assignment,
    rankings_from_instance,
    report_to_dict,
    sample_instance,
    sample_profile,
)
from fairdiv.rng import RngStream


def _brute_flags(u, bundles):
    """Triple-loop evaluation of all four definitions, plain Python floats."""
    n = len(bundles)
    def val(i, items):
        return sum(u[i][j] for j in items)
    ef = efx = ef1 = True
    for i in range(n):
        own = val(i, bundles[i])
        for ip in range(n):
            if ip == i:
                continue
            other = val(i, bundles[ip])
            if other > own:
                ef = False
                if not any(other - u[i][j] <= own for j in bundles[ip]):
                    ef1 = False
            for j in bundles[ip]:
                if other - u[i][j] > own:
                    efx = False
    prop = all(val(i, bundles[i]) >= sum(u[i]) / n for i in range(n))
    return ef, efx, ef1, prop


def test_report_shared_favorite():
    inst = Instance(np.array([[0.9, 0.1], [0.9, 0.1]]))
    rep = fairness_report(inst, Allocation(((0,), (1,))))
    assert not rep.envy_free
    assert rep.efx  # removing the envied singleton leaves the empty bundle
    assert rep.ef1
    assert not rep.proportional  # agent 1 holds 0.1 < 0.5
    assert rep.witness == (1, 0, None)


def test_report_ef1_but_not_efx():
    inst = Instance(np.array([[0.5, 0.6, 0.3], [0.1, 0.8, 0.7]]))
    rep = fairness_report(inst, Allocation(((0,), (1, 2))))
    assert not rep.envy_free
    assert rep.ef1  # dropping 0.6 leaves 0.3 <= 0.5
    assert not rep.efx  # dropping 0.3 leaves 0.6 > 0.5
    i, ip, j = rep.witness
    assert (i, ip) == (0, 1)
    assert j == 2  # least-valued removal that keeps the envy


def test_single_agent_always_fair():
    inst = Instance(np.array([[0.2, 0.9, 0.4]]))
    rep = fairness_report(inst, Allocation(((0, 1, 2),)))
    assert rep.flags() == {"envy_free": True, "efx": True, "ef1": True, "proportional": True}
    assert rep.witness is None


def test_proportionality_counts_unallocated():
    # agent holds half the total value; the rest was never handed out
    inst = Instance(np.array([[0.5, 0.5]]))
    rep = fairness_report(inst, Allocation(((0,),), unallocated=(1,)))
    assert rep.envy_free and rep.efx and rep.ef1
    assert not rep.proportional


def test_bundle_utility():
    inst = Instance(np.array([[0.2, 0.3, 0.5]]))
    assert bundle_utility(inst, 0, []) == 0.0
    assert abs(bundle_utility(inst, 0, [0, 2]) - 0.7) <= 1e-12
    assert abs(bundle_utility(inst, 0, [0, 1, 2]) - 1.0) <= 1e-12
    with pytest.raises((IndexError, ValueError)):
        bundle_utility(inst, 0, [3])


def test_rankings_from_instance():
    inst = Instance(np.array([[0.1, 0.9, 0.5], [0.5, 0.5, 0.4]]))
    prof = rankings_from_instance(inst)
    assert prof.rankings[0].tolist() == [1, 2, 0]
    assert prof.rankings[1].tolist() == [0, 1, 2]  # tie breaks to the lower index


def test_is_ef_assignment_rankings():
    shared = RankingProfile(np.array([[0, 1], [0, 1]]))
    ok, wit = is_ef_assignment(shared, Assignment((0, 1)))
    assert not ok
    assert wit == (1, 0)
    split = RankingProfile(np.array([[0, 1, 2], [1, 0, 2]]))
    ok, wit = is_ef_assignment(split, Assignment((0, 1)))
    assert ok and wit is None


def test_is_ef_assignment_instance_and_single_agent():
    one = Instance(np.array([[0.4, 0.9]]))
    assert is_ef_assignment(one, Assignment((0,))) == (True, None)
    inst = Instance(np.array([[0.4, 0.9], [0.5, 0.1]]))
    ok, wit = is_ef_assignment(inst, Assignment((0, 1)))
    assert not ok
    assert wit == (0, 1)
    ok, _ = is_ef_assignment(inst, Assignment((1, 0)))
    assert ok


def test_is_ef_assignment_requires_complete():
    prof = RankingProfile(np.array([[0, 1], [0, 1]]))
    with pytest.raises(ValueError):
        is_ef_assignment(prof, Assignment((0, None)))
    with pytest.raises(ValueError):
        is_ef_assignment(prof, Assignment((0, 1, 2)))  # wrong agent count / item range


def test_sample_instance_shape_support_determinism():
    assert sample_instance(1, 0, Uniform(), RngStream(1)).u.shape == (1, 0)
    inst = sample_instance(5, 7, Uniform(), RngStream(1))
    assert inst.u.shape == (5, 7)
    assert inst.u.min() >= 0.0 and inst.u.max() <= 1.0
    again = sample_instance(5, 7, Uniform(), RngStream(1))
    assert np.array_equal(inst.u, again.u)
    # row-major fill straight off the stream
    flat = Uniform()._quantile(RngStream(1).uniforms(35))
    assert np.array_equal(inst.u.ravel(), flat)
    with pytest.raises(ValueError):
        sample_instance(0, 3, Uniform(), RngStream(1))


def test_sample_profile():
    prof = sample_profile(6, 9, RngStream(3))
    assert prof.rankings.shape == (6, 9)
    again = sample_profile(6, 9, RngStream(3))
    assert np.array_equal(prof.rankings, again.rankings)
    with pytest.raises(ValueError):
        sample_profile(1, 0, RngStream(3))


def test_type_validation():
    with pytest.raises(ValueError):
        Instance(np.array([[0.5, 1.2]]))
    with pytest.raises(ValueError):
        Instance(np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        Allocation(((0, 1), (1,)))  # overlap
    with pytest.raises(ValueError):
        Allocation(((-1,),))
    with pytest.raises(ValueError):
        Assignment((2, 2))
    with pytest.raises(ValueError):
        RankingProfile(np.array([[0, 0]]))
    with pytest.raises(ValueError):
        fairness_report(Instance(np.array([[0.5]])), Allocation(((0,), ())))
    with pytest.raises(ValueError):
        fairness_report(Instance(np.array([[0.5]])), Allocation(((1,),)))


def test_report_matches_bruteforce():
    rng = RngStream(2_001)
    for trial in range(1000):
        n = 2 + int(rng.random() * 3)  # 2..4
        m = 1 + int(rng.random() * 6)  # 1..6
        u = RngStream(2_002).child(trial).uniforms(n * m).reshape(n, m)
        owners = [int(rng.random() * (n + 1)) for _ in range(m)]  # n means unallocated
        bundles = [[j for j in range(m) if owners[j] == i] for i in range(n)]
        free = [j for j in range(m) if owners[j] == n]
        rep = fairness_report(Instance(u), Allocation(tuple(map(tuple, bundles)), tuple(free)))
        want = _brute_flags(u.tolist(), bundles)
        assert (rep.envy_free, rep.efx, rep.ef1, rep.proportional) == want


def test_implication_chain():
    # EF implies EFX implies EF1 on complete allocations
    rng = RngStream(2_100)
    seen_ef = seen_efx_only = seen_ef1_only = 0
    for trial in range(10_000):
        n = 2 + int(rng.random() * 3)
        m = n + int(rng.random() * 6)
        u = RngStream(2_101).child(trial).uniforms(n * m).reshape(n, m)
        owners = [int(rng.random() * n) for _ in range(m)]
        bundles = tuple(tuple(j for j in range(m) if owners[j] == i) for i in range(n))
        rep = fairness_report(Instance(u), Allocation(bundles))
        if rep.envy_free:
            assert rep.efx
            seen_ef += 1
        if rep.efx:
            assert rep.ef1
            seen_efx_only += 1
        if rep.ef1:
            seen_ef1_only += 1
    # the battery actually exercises all three flags
    assert seen_ef > 0
    assert seen_efx_only > seen_ef
    assert seen_ef1_only > seen_efx_only


def test_witness_validity():
    rng = RngStream(2_200)
    checked = 0
    for trial in range(2000):
        n = 2 + int(rng.random() * 3)
        m = 1 + int(rng.random() * 6)
        u = RngStream(2_201).child(trial).uniforms(n * m).reshape(n, m)
        owners = [int(rng.random() * n) for _ in range(m)]
        bundles = [[j for j in range(m) if owners[j] == i] for i in range(n)]
        inst = Instance(u)
        rep = fairness_report(inst, Allocation(tuple(map(tuple, bundles))))
        if rep.envy_free:
            assert rep.witness is None
            continue
        i, ip, j = rep.witness
        own = bundle_utility(inst, i, bundles[i])
        other = bundle_utility(inst, i, bundles[ip])
        assert other > own
        if j is not None:
            assert j in bundles[ip]
            assert other - u[i, j] > own
        checked += 1
    assert checked > 100


def test_serialization_round_trip():
    inst = sample_instance(3, 4, Uniform(), RngStream(9))
    doc = instance_to_dict(inst)
    assert doc["n"] == 3 and doc["m"] == 4 and len(doc["utilities"]) == 12
    back = instance_from_dict(doc)
    assert np.array_equal(back.u, inst.u)
    alloc = Allocation(((0, 2), (1,), ()), unallocated=(3,))
    adoc = allocation_to_dict(alloc)
    assert adoc == {"bundles": [[0, 2], [1], []], "unallocated": [3]}
    rep = fairness_report(inst, alloc)
    rdoc = report_to_dict(rep)
    assert set(rdoc["flags"]) == {"envy_free", "efx", "ef1", "proportional"}
    assert rdoc["witness"] is None or len(rdoc["witness"]) == 3


def test_report_is_plain_dataclass():
    rep = FairnessReport(True, True, True, False, None)
    assert rep.flags()["proportional"] is False
