import numpy as np
import pytest

import shapalloc as sa
from shapalloc import matching

from conftest import random_scenario
from oracles import brute_force_opt, greedy_disjoint_value


def test_single_agent_takes_both_goods():
    scn = sa.AllocationScenario(
        ["x"], [("g", 5.0), ("h", 3.0)], {"x": ["g", "h"]}, k=2
    )
    alloc, value = sa.optimal_allocation(scn, scn.full_mask)
    assert value == 8.0
    assert alloc.assignment["x"] == frozenset({"g", "h"})


def test_contested_good_goes_to_exactly_one():
    scn = sa.AllocationScenario(
        ["x", "y"], [("g", 5.0)], {"x": ["g"], "y": ["g"]}, k=1
    )
    alloc, value = sa.optimal_allocation(scn, scn.full_mask)
    assert value == 5.0
    holders = [a for a, goods in alloc.assignment.items() if goods]
    assert len(holders) == 1


def test_reference_game_grand_value(ref_game):
    assert sa.optimal_value_only(ref_game, ref_game.full_mask) == 6.0


def test_value_only_equals_allocation_value(ref_game):
    for m in range(1, 1 << ref_game.n):
        alloc, value = sa.optimal_allocation(ref_game, m)
        assert sa.optimal_value_only(ref_game, m) == value
        assert alloc.value(ref_game) == pytest.approx(value, rel=1e-12, abs=1e-12)


def test_matches_exhaustive_search():
    for seed in range(20, 26):
        scn = random_scenario(seed, n=6, k=2)
        got = sa.optimal_value_only(scn, scn.full_mask)
        want = brute_force_opt(scn)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_capacity_expansion_matches_search():
    rng = np.random.default_rng(3)
    for k in (1, 2, 3):
        for seed in range(3):
            scn = random_scenario(int(rng.integers(1 << 30)), n=5, k=k)
            for m in (scn.full_mask, scn.full_mask >> 1, 0b101):
                got = sa.optimal_value_only(scn, m)
                want = brute_force_opt(scn, m)
                assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


def test_disjoint_interests_reduce_to_per_agent_top_k():
    scn = sa.AllocationScenario(
        ["x", "y", "z"],
        [("a", 5.0), ("b", 3.0), ("c", 2.0), ("d", 7.0), ("e", 1.0)],
        {"x": ["a", "b"], "y": ["c"], "z": ["d", "e"]},
        k=2,
    )
    for m in range(1, 1 << 3):
        assert sa.optimal_value_only(scn, m) == pytest.approx(
            greedy_disjoint_value(scn, m), rel=1e-12
        )


def test_declaration_order_invariance():
    scn = random_scenario(31, n=8, k=2)
    rng = np.random.default_rng(0)
    base = sa.optimal_value_only(scn, scn.full_mask)
    agent_perm = rng.permutation(scn.n)
    good_perm = rng.permutation(len(scn.good_ids))
    shuffled = sa.AllocationScenario(
        agents=[scn.agents[i] for i in agent_perm],
        goods=[(scn.good_ids[j], float(scn.good_values[j])) for j in good_perm],
        interest={
            a: [scn.good_ids[j] for j in scn.interest[scn.agent_index[a]]]
            for a in scn.agents
        },
        k=scn.k,
    )
    assert sa.optimal_value_only(shuffled, shuffled.full_mask) == pytest.approx(
        base, rel=1e-12
    )


def test_zero_value_goods_never_assigned():
    scn = sa.AllocationScenario(
        ["x", "y"],
        [("g", 0.0), ("h", 2.0)],
        {"x": ["g", "h"], "y": ["g"]},
        k=2,
    )
    alloc, value = sa.optimal_allocation(scn, scn.full_mask)
    assert value == 2.0
    assert alloc.assignment["y"] == frozenset()
    assert "g" not in alloc.assignment["x"]


def test_allocations_feasible_on_random_instances():
    for seed in (41, 42, 43):
        scn = random_scenario(seed, n=7)
        rng = np.random.default_rng(seed)
        for _ in range(10):
            m = int(rng.integers(1, 1 << scn.n))
            alloc, value = sa.optimal_allocation(scn, m)
            alloc.validate(scn, m)
            assert value >= 0.0


def test_instance_structure():
    scn = random_scenario(50, n=6, k=2)
    inst = sa.build_instance(scn, scn.full_mask)
    # one slot per usable capacity unit
    expect_slots = sum(
        min(scn.k, len(scn.positive_goods(i))) for i in range(scn.n)
    )
    assert inst.n_slots == expect_slots
    # every edge weight strictly positive, every column a positive-value good
    assert (inst.col_values > 0).all()
    assert len(inst.edge_rows) == len(inst.edge_cols)


def test_sparse_backend_agrees_with_dense(monkeypatch):
    scenarios = [random_scenario(s, n=8, k=2) for s in (61, 62, 63)]
    dense_vals = [sa.optimal_value_only(s, s.full_mask) for s in scenarios]
    monkeypatch.setattr(matching, "DENSE_CELL_LIMIT", 0)
    sparse_vals = [sa.optimal_value_only(s, s.full_mask) for s in scenarios]
    for d, s in zip(dense_vals, sparse_vals):
        assert s == pytest.approx(d, rel=1e-12, abs=1e-12)


def test_sparse_backend_allocation_feasible(monkeypatch):
    monkeypatch.setattr(matching, "DENSE_CELL_LIMIT", 0)
    scn = random_scenario(64, n=8, k=2)
    alloc, value = sa.optimal_allocation(scn, scn.full_mask)
    alloc.validate(scn, scn.full_mask)
    assert value == pytest.approx(brute_force_opt(scn), rel=1e-9)


class TestMarginalGain:
    """The augmentation route must match the difference of two optima."""

    def test_exhaustive_on_small_instances(self):
        for seed in range(70, 82):
            scn = random_scenario(seed, n=6)
            for i in range(scn.n):
                others = scn.full_mask & ~(1 << i)
                m = 0
                while True:
                    want = sa.optimal_value_only(scn, m | 1 << i) - sa.optimal_value_only(scn, m)
                    got = matching.marginal_gain(scn, m, i)
                    assert got == pytest.approx(want, rel=1e-9, abs=1e-12), (seed, i, m)
                    if m == others:
                        break
                    m = (m - others) & others

    def test_randomized_mid_size(self):
        rng = np.random.default_rng(0)
        for seed in (90, 91, 92):
            scn = random_scenario(seed, n=12, k=2)
            for _ in range(80):
                i = int(rng.integers(scn.n))
                m = int(rng.integers(1 << scn.n)) & ~(1 << i)
                want = sa.optimal_value_only(scn, m | 1 << i) - sa.optimal_value_only(scn, m)
                got = matching.marginal_gain(scn, m, i)
                assert got == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_big_sparse_component(self):
        scn = sa.generate(agents=120, coauthor_prob=0.55, max_claimers=2,
                          value_weights=(0.2, 0.2, 0.2, 0.2, 0.2), k=2, seed=77)
        scn = sa.strip_null_goods(scn)
        comp = max(scn.graph.components(), key=lambda m: m.bit_count())
        assert comp.bit_count() > 20
        rng = np.random.default_rng(1)
        members = [b for b in sa.iter_bits(comp)]
        for _ in range(25):
            i = int(rng.integers(len(members)))
            agent = members[i]
            keep = rng.random(len(members)) < rng.random()
            m = 0
            for pos, b in enumerate(members):
                if keep[pos] and b != agent:
                    m |= 1 << b
            want = sa.optimal_value_only(scn, m | 1 << agent) - sa.optimal_value_only(scn, m)
            got = matching.marginal_gain(scn, m, agent)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_member_rejected(self, ref_game):
        with pytest.raises(sa.ScenarioError):
            matching.marginal_gain(ref_game, ref_game.mask_of(["a1"]), 0)

    def test_empty_interest_agent(self):
        scn = sa.AllocationScenario(
            ["x", "y"], [("g", 2.0)], {"x": ["g"], "y": []}, k=1
        )
        assert matching.marginal_gain(scn, scn.mask_of(["x"]), scn.agent_index["y"]) == 0.0
