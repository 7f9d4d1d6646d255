"""Optimal allocation of goods to a coalition, as weighted bipartite matching.

Every solver in the package funnels through this kernel.  Capacity ``k`` is
handled by giving each agent one left node per usable slot; goods with value
zero are dropped up front (they can never change an optimal value).  Two
interchangeable backends are used depending on instance size:

* dense: ``scipy.optimize.linear_sum_assignment`` on a slot x good matrix
  padded implicitly with zero-weight non-edges;
* sparse: ``scipy.sparse.csgraph.min_weight_full_bipartite_matching`` on a
  cost matrix ``(C + 1) - value`` with one private parking column per slot,
  which makes a full matching always feasible and keeps costs positive.

Both are exact and deterministic for a fixed instance; routing is by size
only, so repeated evaluations of the same coalition always take the same
path and return the same float.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import min_weight_full_bipartite_matching

from .model import Coalition, ScenarioError, mask_to_indices

if TYPE_CHECKING:  # pragma: no cover
    from .model import AllocationScenario

# Above this many matrix cells the sparse backend wins (measured crossover).
DENSE_CELL_LIMIT = 20_000


@dataclass
class MatchingInstance:
    """Bipartite instance for one coalition.

    ``slot_agents[r]`` is the agent index owning left node ``r``; columns are
    the positive-value goods any member is interested in, ascending by good
    index.  Edge (slot of agent a, good g) exists iff g is in a's interest,
    with weight equal to the good's value (strictly positive).
    """

    slot_agents: np.ndarray
    cols: np.ndarray
    col_values: np.ndarray
    edge_rows: np.ndarray
    edge_cols: np.ndarray  # local column positions
    n_slots: int


def build_instance(scenario: "AllocationScenario", coalition: Coalition) -> MatchingInstance:
    members = mask_to_indices(coalition, scenario.n)
    lens = scenario.pos_lens[members]
    slots = np.minimum(lens, scenario.k)
    n_edges = int(lens.sum())
    if n_edges == 0:
        return MatchingInstance(
            slot_agents=np.empty(0, dtype=np.intp),
            cols=np.empty(0, dtype=np.intp),
            col_values=np.empty(0),
            edge_rows=np.empty(0, dtype=np.intp),
            edge_cols=np.empty(0, dtype=np.intp),
            n_slots=0,
        )
    # gather each member's interest segment from the flattened layout
    seg_starts = scenario.pos_offsets[members]
    out_starts = np.concatenate(([0], np.cumsum(lens)))[:-1]
    gather = np.repeat(seg_starts - out_starts, lens) + np.arange(n_edges)
    goods_cat = scenario.pos_flat[gather]
    cols, inv = np.unique(goods_cat, return_inverse=True)
    # slot rows are contiguous per member; slot 0 edges first, higher slots
    # duplicate their member's segment
    row_base = np.concatenate(([0], np.cumsum(slots)))[:-1]
    rows_first = np.repeat(row_base, lens)
    edge_rows = [rows_first]
    edge_cols = [inv]
    for extra in range(1, scenario.k):
        with_slot = slots > extra
        if not with_slot.any():
            break
        edge_sel = np.repeat(with_slot, lens)
        edge_rows.append(rows_first[edge_sel] + extra)
        edge_cols.append(inv[edge_sel])
    return MatchingInstance(
        slot_agents=np.repeat(members, slots).astype(np.intp),
        cols=cols,
        col_values=scenario.good_values[cols],
        edge_rows=np.concatenate(edge_rows),
        edge_cols=np.concatenate(edge_cols),
        n_slots=int(slots.sum()),
    )


# matchings performed in this process; jobs report deltas so parallel runs
# can still aggregate a meaningful total
_SOLVE_CALLS = 0


def solve_calls() -> int:
    return _SOLVE_CALLS


def _solve(inst: MatchingInstance) -> tuple[np.ndarray, np.ndarray]:
    """Matched (slot row, local column) pairs of an optimal assignment."""
    global _SOLVE_CALLS
    _SOLVE_CALLS += 1
    n_rows, n_cols = inst.n_slots, len(inst.cols)
    if n_rows == 0 or n_cols == 0:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    if n_rows * n_cols <= DENSE_CELL_LIMIT:
        W = np.zeros((n_rows, n_cols))
        W[inst.edge_rows, inst.edge_cols] = inst.col_values[inst.edge_cols]
        rows, cols = linear_sum_assignment(W, maximize=True)
        real = W[rows, cols] > 0.0
        return rows[real], cols[real]
    # Sparse: minimize (C+1) - value over a full matching with parking columns.
    ceiling = float(inst.col_values.max()) + 1.0
    data = np.concatenate([
        ceiling - inst.col_values[inst.edge_cols],
        np.full(n_rows, ceiling),
    ])
    rows = np.concatenate([inst.edge_rows, np.arange(n_rows)])
    cols = np.concatenate([inst.edge_cols, n_cols + np.arange(n_rows)])
    M = csr_matrix((data, (rows, cols)), shape=(n_rows, n_cols + n_rows))
    r, c = min_weight_full_bipartite_matching(M)
    real = c < n_cols
    return r[real], c[real]


def optimal_value_only(scenario: "AllocationScenario", coalition: Coalition) -> float:
    """Maximum total value of a feasible allocation for the coalition.

    Fast path that skips reconstructing who-gets-what.  The value is summed
    over the selected goods in ascending good order, so it is a deterministic
    function of the scenario and the coalition.
    """
    if coalition == 0:
        return 0.0
    if coalition & (coalition - 1) == 0:
        return float(scenario.solo_value[coalition.bit_length() - 1])
    inst = build_instance(scenario, coalition)
    _, cols = _solve(inst)
    if len(cols) == 0:
        return 0.0
    return float(np.sum(inst.col_values[np.sort(cols)]))


@dataclass
class Allocation:
    """A feasible assignment of goods to the agents of one coalition."""

    assignment: dict[str, frozenset[str]]

    def value(self, scenario: "AllocationScenario") -> float:
        total = 0.0
        for goods in self.assignment.values():
            for g in goods:
                total += float(scenario.good_values[scenario.good_index[g]])
        return total

    def validate(self, scenario: "AllocationScenario", coalition: Coalition) -> None:
        members = set(scenario.ids_of(coalition))
        seen: set[str] = set()
        for a, goods in self.assignment.items():
            if a not in members:
                raise ScenarioError(f"allocation assigns goods to non-member {a!r}")
            if len(goods) > scenario.k:
                raise ScenarioError(f"agent {a!r} holds more than k={scenario.k} goods")
            row = scenario.interest[scenario.agent_index[a]]
            allowed = {scenario.good_ids[j] for j in row}
            for g in goods:
                if g not in allowed:
                    raise ScenarioError(f"agent {a!r} assigned uninteresting good {g!r}")
                if g in seen:
                    raise ScenarioError(f"good {g!r} assigned twice")
                seen.add(g)


def marginal_gain(scenario: "AllocationScenario", coalition: Coalition, i: int) -> float:
    """opt(coalition + i) - opt(coalition), without valuing either side.

    One optimal matching of ``coalition`` is computed; agent ``i`` is then
    added one capacity unit at a time.  Adding a unit changes the optimal
    matching by a single alternating path from ``i``, whose net gain is the
    value of the free good at its far end (displaced holders keep their
    goods' values in the system), so each augmentation reduces to a
    reachability search over displacement moves and the best gain is the
    most valuable reachable free good.  Gains are non-increasing, so the
    greedy sum over at most k units is exact.

    Much cheaper than two full matchings when the coalition is large and
    ``i`` touches little of it.
    """
    if coalition & (1 << i):
        raise ScenarioError(f"agent index {i} already belongs to the coalition")
    own = scenario.positive_goods(i)
    capacity = min(scenario.k, len(own))
    if capacity == 0:
        return 0.0
    inst = build_instance(scenario, coalition)
    rows, cols = _solve(inst)
    held_by: dict[int, int] = {}
    held: dict[int, set[int]] = {}
    for r, c in zip(rows.tolist(), cols.tolist()):
        agent = int(inst.slot_agents[r])
        good = int(inst.cols[c])
        held_by[good] = agent
        held.setdefault(agent, set()).add(good)
    values = scenario.good_values
    interest = scenario.positive_goods
    ceiling = float(values.max()) if len(values) else 0.0
    total = 0.0
    held.setdefault(i, set())
    for _ in range(capacity):
        # reachability over displacement moves, tracking the chain
        best_good = -1
        best_val = 0.0
        parent: dict[int, int] = {}
        seen: set[int] = set()
        frontier = [int(g) for g in own if g not in held[i]]
        for g in frontier:
            parent[g] = -1
        while frontier and best_val < ceiling:
            nxt: list[int] = []
            for g in frontier:
                if g in seen:
                    continue
                seen.add(g)
                holder = held_by.get(g)
                if holder is None:
                    if values[g] > best_val:
                        best_val = float(values[g])
                        best_good = g
                    continue
                for g2 in interest(holder):
                    g2 = int(g2)
                    if g2 in seen or g2 in parent or g2 in held[holder]:
                        continue
                    parent[g2] = g
                    nxt.append(g2)
            frontier = nxt
        if best_good < 0:
            break
        total += best_val
        # apply the chain: walk back to a good wanted by i, shifting holders
        g = best_good
        while parent[g] != -1:
            prev = parent[g]
            holder = held_by[prev]
            held[holder].discard(prev)
            held[holder].add(g)
            held_by[g] = holder
            g = prev
        held_by[g] = i
        held[i].add(g)
    return total


def optimal_allocation(
    scenario: "AllocationScenario", coalition: Coalition
) -> tuple[Allocation, float]:
    """An optimal feasible allocation for the coalition, with its value."""
    if coalition == 0:
        return Allocation(assignment={}), 0.0
    assignment: dict[str, set[str]] = {a: set() for a in scenario.ids_of(coalition)}
    if coalition & (coalition - 1) == 0:
        i = coalition.bit_length() - 1
        for j in scenario.solo_goods(i):
            assignment[scenario.agents[i]].add(scenario.good_ids[int(j)])
        value = float(scenario.solo_value[i])
    else:
        inst = build_instance(scenario, coalition)
        rows, cols = _solve(inst)
        for r, c in zip(rows, cols):
            agent = scenario.agents[int(inst.slot_agents[r])]
            assignment[agent].add(scenario.good_ids[int(inst.cols[c])])
        value = float(np.sum(inst.col_values[np.sort(cols)])) if len(cols) else 0.0
    return (
        Allocation(assignment={a: frozenset(g) for a, g in assignment.items()}),
        value,
    )
