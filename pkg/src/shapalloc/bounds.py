"""Neighborhood-profile lower and upper bounds on Shapley values.

Only an agent's graph neighbors can change its marginal contribution, so the
coalitions C' not containing i are grouped by their profile P' = C' & neigh(i).
For each profile the marginal of i is evaluated at the two extremes of the
class -- with all non-neighbors present (lower bound, by anti-monotonicity)
or with only P' present (upper bound) -- and weighted by the total Shapley
mass y of the class.  Cost is two matchings per subset of neigh(i), so the
sweep is reserved for agents with at most ``max_neigh`` neighbors; the rest
fall back on the always-valid interval [marg(i, N), opt({i})].
"""

from __future__ import annotations

import time
from fractions import Fraction
from functools import lru_cache

from . import _pool
from .model import (
    AllocationScenario,
    CharacteristicCache,
    iter_bits,
    marginal_restricted,
)
from .report import AgentResult, ShapleyReport

DEFAULT_MAX_NEIGH = 19


def profile_weight(l: int, p: int, z: int, n: int) -> float:
    """Total Shapley weight of all coalitions sharing one neighbor profile.

    ``l`` non-neighbors are free to join or not; ``p`` neighbors are in,
    ``z`` neighbors are out, and l + p + z + 1 = n.  Summing the join weight
    over the number of present non-neighbors gives

        y = sum_k (l - k + p)! (z + k)! / n! * C(l, k).

    Exact integer arithmetic, rounded once at the end.
    """
    if min(l, p, z) < 0:
        raise ValueError("profile sizes must be non-negative")
    if l + p + z + 1 != n:
        raise ValueError(f"inconsistent profile sizes: {l}+{p}+{z}+1 != {n}")
    return _profile_weight_cached(l, p, z, n)


@lru_cache(maxsize=8)
def _factorials(n: int) -> tuple[int, ...]:
    out = [1] * (n + 1)
    for j in range(2, n + 1):
        out[j] = out[j - 1] * j
    return tuple(out)


@lru_cache(maxsize=65536)
def _profile_weight_cached(l: int, p: int, z: int, n: int) -> float:
    fact = _factorials(n)
    num = 0
    for k in range(l + 1):
        num += fact[l - k + p] * fact[z + k] * (fact[l] // (fact[k] * fact[l - k]))
    return float(Fraction(num, fact[n]))


def gray_subsets(items: list[int]):
    """All subsets of ``items`` as masks, consecutive ones differing by one bit."""
    mask = 0
    yield mask
    for g in range(1, 1 << len(items)):
        # standard reflected Gray order: flip the bit of the lowest set bit of g
        flip = items[(g & -g).bit_length() - 1]
        mask ^= 1 << flip
        yield mask


def _bounds_job(payload, job):
    scenario, cache, max_neigh, side = payload
    if cache is None:
        cache = _pool.worker_cache()
    i = job
    neigh_mask = scenario.graph.neighbor_masks[i]
    deg = neigh_mask.bit_count()
    full = scenario.full_mask
    bit = 1 << i
    solo = float(scenario.solo_value[i])

    if deg > max_neigh:
        marg_grand = marginal_restricted(scenario, i, full & ~bit, cache)
        lb = marg_grand if side in ("both", "lower") else None
        ub = solo if side in ("both", "upper") else None
        return i, lb, ub, True, cache.stats()

    n = scenario.n
    l = n - deg - 1
    rest = full & ~neigh_mask & ~bit  # non-neighbors of i
    neighbors = list(iter_bits(neigh_mask))
    y_by_size = [profile_weight(l, p, deg - p, n) for p in range(deg + 1)]

    lb = 0.0 if side in ("both", "lower") else None
    ub = 0.0 if side in ("both", "upper") else None
    for p_mask in gray_subsets(neighbors):
        y = y_by_size[p_mask.bit_count()]
        if ub is not None:
            ub += y * marginal_restricted(scenario, i, p_mask, cache)
        if lb is not None:
            lb += y * marginal_restricted(scenario, i, rest | p_mask, cache)
    return i, lb, ub, False, cache.stats()


def shapley_bounds(
    scenario: AllocationScenario,
    cache: CharacteristicCache | None = None,
    agents: list[str] | None = None,
    max_neigh: int = DEFAULT_MAX_NEIGH,
    side: str = "both",
    workers: int = 1,
) -> ShapleyReport:
    """Per-agent intervals [LB, UB] guaranteed to contain the Shapley value.

    Agents with more than ``max_neigh`` neighbors get the trivial interval
    and are flagged ``fallback=True``.  ``side`` restricts the sweep to one
    bound ("lower"/"upper") for timing comparisons; the skipped side is None.
    """
    if side not in ("both", "lower", "upper"):
        raise ValueError(f"side must be both/lower/upper, got {side!r}")
    t0 = time.perf_counter()
    if agents is None:
        indices = list(range(scenario.n))
    else:
        indices = sorted(scenario.agent_index[a] for a in agents)
    payload = (scenario, cache if workers <= 1 else None, max_neigh, side)
    results = _pool.run_jobs(_bounds_job, indices, payload, workers=workers)
    records = []
    fallbacks = 0
    for i, lb, ub, fell_back, _ in results:
        fallbacks += fell_back
        records.append(
            AgentResult(
                agent=scenario.agents[i],
                kind="interval",
                method="profile-bounds" if not fell_back else "trivial-range",
                lb=lb,
                ub=ub,
                fallback=fell_back,
            )
        )
    meta = {
        "method": "bounds",
        "max_neigh": max_neigh,
        "side": side,
        "fallbacks": fallbacks,
        "workers": workers,
        "wall_time": time.perf_counter() - t0,
    }
    return ShapleyReport(agents=records, meta=meta)
