"""Randomized Shapley estimators: permutation sampling and per-agent ranges.

Two samplers with different guarantees:

* ``fpras_shapley`` draws uniformly random agent permutations and averages
  each agent's marginal contribution to its predecessors, with a
  disconnected-agent fast path (an agent whose neighbors all come later
  contributes exactly its solo optimum, no matching needed).  Estimates from
  independent runs are combined by a per-agent median and finally scaled so
  the total matches the grand-coalition worth.

* ``range_sampler_shapley`` fixes, per agent, the number of samples needed by
  Hoeffding's inequality given the spread r_i = opt({i}) - marg(i, N) of its
  marginal contributions, then averages marginals over coalitions drawn from
  the permutation-prefix law (uniform size, then a uniform subset of that
  size), which makes the estimator unbiased for the Shapley value.

Randomness is confined to per-job streams keyed by (master seed, job index),
and job partials merge in job order, so reports are identical for any worker
count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _pool, matching
from .model import (
    AllocationScenario,
    CharacteristicCache,
    char_value,
    marginal_restricted,
    mask_from_bool,
)
from .report import AgentResult, ShapleyReport


def _job_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


# ---------------------------------------------------------------------------
# permutation sampler
# ---------------------------------------------------------------------------


@dataclass
class FprasConfig:
    """Parameters of the permutation sampler.

    Per run, ceil(n * (n-1) / (delta * epsilon^2)) marginal contributions are
    drawn; permutations are completed, so the realized count is the next
    multiple of n.  ``runs`` independent runs are combined by medians
    (3 covers the default delta = 0.01 comfortably).
    """

    epsilon: float
    delta: float
    runs: int = 3
    seed: int = 0
    workers: int = 1
    shortcut: bool = True
    batch_perms: int = 512
    table_limit: int = 14
    cache_max_entries: int | None = None

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.runs < 1:
            raise ValueError("runs must be positive")

    def contributions_per_run(self, n: int) -> int:
        return math.ceil(n * (n - 1) / (self.delta * self.epsilon**2))

    def permutations_per_run(self, n: int) -> int:
        return max(1, math.ceil(self.contributions_per_run(n) / n))


def _fpras_loop_job(payload, job):
    scenario, cache, seed, shortcut, cap = payload
    run, batch_idx, count = job
    if cache is None:
        cache = _pool.worker_cache(cap)
    rng = _job_rng(seed, 0, run, batch_idx)
    n = scenario.n
    neigh = scenario.graph.neighbor_masks
    solo = scenario.solo_value
    sums = np.zeros(n, dtype=np.float64)
    hits = 0
    solved_before = matching.solve_calls()
    for _ in range(count):
        perm = rng.permutation(n).tolist()
        coalition = 0
        for j in perm:
            bit = 1 << j
            if neigh[j] & coalition == 0:
                hits += 1
                if shortcut:
                    contrib = float(solo[j])
                else:
                    contrib = marginal_restricted(scenario, j, coalition, cache)
            else:
                contrib = marginal_restricted(scenario, j, coalition, cache)
            sums[j] += contrib
            coalition |= bit
    return run, sums, hits, matching.solve_calls() - solved_before, cache.stats()


def _fpras_table_job(vtab, neigh_arr, solo_arr, n, seed, run, batch_idx, count):
    rng = _job_rng(seed, 0, run, batch_idx)
    perms = np.vstack([rng.permutation(n) for _ in range(count)])
    bitvals = np.int64(1) << perms.astype(np.int64)
    after = np.cumsum(bitvals, axis=1)
    before = after - bitvals
    contrib = vtab[after] - vtab[before]
    disconnected = (neigh_arr[perms] & before) == 0
    contrib = np.where(disconnected, solo_arr[perms], contrib)
    sums = np.zeros(n, dtype=np.float64)
    np.add.at(sums, perms.ravel(), contrib.ravel())
    return sums, int(disconnected.sum())


def fpras_shapley(
    scenario: AllocationScenario,
    cache: CharacteristicCache | None = None,
    cfg: FprasConfig | None = None,
    **kwargs,
) -> ShapleyReport:
    """Approximate Shapley values by sampling random permutations.

    Intended for a single connected (post-preprocessing) component.  For
    small components the full worth table is precomputed and the walk is
    vectorized; larger components evaluate each marginal on the joining
    agent's connected component inside the prefix coalition, which is exact
    and avoids matching over agents that cannot interact with it.

    The ``shortcut`` flag only controls whether disconnected steps skip the
    evaluation machinery; contributed values are identical either way, and
    the number of steps served by the fast path is reported regardless.
    """
    if cfg is None:
        cfg = FprasConfig(**kwargs)
    t0 = time.perf_counter()
    n = scenario.n
    if n == 0:
        return ShapleyReport(agents=[], meta={"method": "fpras", "n": 0})
    perms_per_run = cfg.permutations_per_run(n)
    m_target = cfg.contributions_per_run(n)
    use_table = n <= cfg.table_limit and perms_per_run * n >= (1 << n)

    batches = []
    left = perms_per_run
    b = 0
    while left > 0:
        take = min(cfg.batch_perms, left)
        batches.append((b, take))
        left -= take
        b += 1

    run_sums = np.zeros((cfg.runs, n), dtype=np.float64)
    hits = 0
    matchings = 0
    if use_table:
        if cache is None:
            cache = CharacteristicCache()
        solved_before = matching.solve_calls()
        vtab = np.empty(1 << n, dtype=np.float64)
        for m in range(1 << n):
            vtab[m] = char_value(scenario, m, cache)
        matchings = matching.solve_calls() - solved_before
        neigh_arr = np.asarray(scenario.graph.neighbor_masks, dtype=np.int64)
        solo_arr = scenario.solo_value
        for run in range(cfg.runs):
            for batch_idx, count in batches:
                sums, h = _fpras_table_job(
                    vtab, neigh_arr, solo_arr, n, cfg.seed, run, batch_idx, count
                )
                run_sums[run] += sums
                hits += h
        cache_stats = cache.stats()
    else:
        jobs = [
            (run, batch_idx, count)
            for run in range(cfg.runs)
            for batch_idx, count in batches
        ]
        payload = (
            scenario,
            cache if cfg.workers <= 1 else None,
            cfg.seed,
            cfg.shortcut,
            cfg.cache_max_entries,
        )
        results = _pool.run_jobs(_fpras_loop_job, jobs, payload, workers=cfg.workers)
        cache_stats = {"hits": 0, "misses": 0, "entries": 0}
        for run, sums, h, solved, stats in results:
            run_sums[run] += sums
            hits += h
            matchings += solved
            for key in cache_stats:
                cache_stats[key] += stats.get(key, 0)

    estimates = run_sums / perms_per_run
    medians = np.median(estimates, axis=0)
    grand = char_value(scenario, scenario.full_mask, cache)
    total = float(medians.sum())
    scale = grand / total if total != 0.0 else 1.0
    values = medians * scale

    agents = [
        AgentResult(
            agent=a,
            kind="estimate",
            method="fpras",
            value=float(values[i]),
            epsilon=cfg.epsilon,
            delta=cfg.delta,
            samples=perms_per_run * cfg.runs,
        )
        for i, a in enumerate(scenario.agents)
    ]
    meta = {
        "method": "fpras",
        "n": n,
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
        "runs": cfg.runs,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "shortcut": cfg.shortcut,
        "mode": "table" if use_table else "loop",
        "contributions_target_per_run": m_target,
        "contributions_per_run": perms_per_run * n,
        "permutations_per_run": perms_per_run,
        "shortcut_hits": hits,
        "shortcut_fraction": hits / (perms_per_run * n * cfg.runs),
        "scale_factor": scale,
        "grand_value": grand,
        "matchings": matchings,
        "cache": cache_stats,
        "wall_time": time.perf_counter() - t0,
    }
    return ShapleyReport(agents=agents, meta=meta)


# ---------------------------------------------------------------------------
# range-based sampler
# ---------------------------------------------------------------------------


@dataclass
class AgentRange:
    """Extremes of one agent's marginal contributions."""

    solo: float  # opt({i}) = marginal to the empty coalition
    grand_marginal: float  # marginal to everyone else
    width: float  # solo - grand_marginal, >= 0


def compute_ranges(
    scenario: AllocationScenario,
    cache: CharacteristicCache | None = None,
) -> dict[str, AgentRange]:
    """Per-agent marginal-contribution ranges r_i = opt({i}) - marg(i, N)."""
    if cache is None:
        cache = CharacteristicCache()
    full = scenario.full_mask
    out: dict[str, AgentRange] = {}
    for i, a in enumerate(scenario.agents):
        solo = float(scenario.solo_value[i])
        marg = marginal_restricted(scenario, i, full & ~(1 << i), cache)
        out[a] = AgentRange(solo=solo, grand_marginal=marg, width=max(0.0, solo - marg))
    return out


def hoeffding_sample_count(width: float, epsilon: float, delta_i: float) -> int:
    """Hoeffding sample bound: ceil(ln(2/delta_i) * r^2 / (2 eps^2))."""
    if width <= 0.0:
        return 0
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta_i < 1.0:
        raise ValueError("per-agent failure probability must be in (0, 1)")
    return math.ceil(math.log(2.0 / delta_i) * width * width / (2.0 * epsilon * epsilon))


@dataclass
class RangeSamplerConfig:
    """Parameters of the range-based sampler.

    ``epsilon`` is an absolute error target in ``abs`` mode; in ``rel`` mode
    each agent's target is epsilon times a known positive lower bound on its
    Shapley value (supplied via ``lower_bounds``, or defaulting to the
    agent's grand-coalition marginal).  The overall failure probability
    ``delta`` is split evenly: delta_i = delta / n.
    """

    epsilon: float
    delta: float
    mode: str = "abs"
    lower_bounds: dict[str, float] | None = None
    batch_size: int = 512
    seed: int = 0
    workers: int = 1
    cache_max_entries: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.mode not in ("abs", "rel"):
            raise ValueError(f"mode must be 'abs' or 'rel', got {self.mode!r}")


def _range_job(payload, job):
    scenario, cache, seed, cap = payload
    i, batch_idx, count = job
    if cache is None:
        cache = _pool.worker_cache(cap)
    rng = _job_rng(seed, 1, i, batch_idx)
    n = scenario.n
    others = np.delete(np.arange(n, dtype=np.intp), i)
    sizes = rng.integers(0, n, size=count)
    subsets = rng.permuted(np.tile(others, (count, 1)), axis=1)
    total = 0.0
    members = np.zeros(n, dtype=bool)
    solved_before = matching.solve_calls()
    for t in range(count):
        size = sizes[t]
        if size == 0:
            mask = 0
        else:
            members[:] = False
            members[subsets[t, :size]] = True
            mask = mask_from_bool(members)
        total += marginal_restricted(scenario, i, mask, cache)
    return i, total, matching.solve_calls() - solved_before, cache.stats()


def range_sampler_shapley(
    scenario: AllocationScenario,
    cache: CharacteristicCache | None = None,
    cfg: RangeSamplerConfig | None = None,
    **kwargs,
) -> ShapleyReport:
    """Estimate each agent's Shapley value with a per-agent sample budget.

    Coalitions are drawn with a uniformly random size in {0..n-1} followed by
    a uniform subset of the other agents of that size; under this law the
    expected marginal contribution is exactly the Shapley value.  Agents with
    zero range need no samples at all: every marginal equals opt({i}).
    """
    if cfg is None:
        cfg = RangeSamplerConfig(**kwargs)
    t0 = time.perf_counter()
    n = scenario.n
    if n == 0:
        return ShapleyReport(agents=[], meta={"method": "range-sample", "n": 0})
    if cache is None:
        cache = CharacteristicCache(cfg.cache_max_entries)
    ranges = compute_ranges(scenario, cache)
    delta_i = cfg.delta / n

    eps_i: dict[str, float] = {}
    if cfg.mode == "abs":
        for a in scenario.agents:
            eps_i[a] = cfg.epsilon
    else:
        for a in scenario.agents:
            lb = (
                cfg.lower_bounds.get(a)
                if cfg.lower_bounds is not None
                else ranges[a].grand_marginal
            )
            if lb is None or lb <= 0.0:
                raise ValueError(
                    f"relative mode needs a positive lower bound for agent {a!r}; "
                    f"compute bounds first or use absolute mode"
                )
            eps_i[a] = cfg.epsilon * lb

    needed = {
        a: hoeffding_sample_count(ranges[a].width, eps_i[a], delta_i)
        for a in scenario.agents
    }

    jobs = []
    for i, a in enumerate(scenario.agents):
        left = needed[a]
        batch_idx = 0
        while left > 0:
            take = min(cfg.batch_size, left)
            jobs.append((i, batch_idx, take))
            left -= take
            batch_idx += 1
    payload = (scenario, cache if cfg.workers <= 1 else None, cfg.seed, cfg.cache_max_entries)
    results = _pool.run_jobs(_range_job, jobs, payload, workers=cfg.workers)

    totals = np.zeros(n, dtype=np.float64)
    cache_stats = {"hits": 0, "misses": 0, "entries": 0}
    matchings = 0
    for i, total, solved, stats in results:
        totals[i] += total
        matchings += solved
        for key in cache_stats:
            cache_stats[key] += stats.get(key, 0)

    agents = []
    for i, a in enumerate(scenario.agents):
        m_i = needed[a]
        est = totals[i] / m_i if m_i else ranges[a].solo
        agents.append(
            AgentResult(
                agent=a,
                kind="estimate",
                method="range-sample",
                value=float(est),
                epsilon=eps_i[a],
                delta=delta_i,
                samples=m_i,
            )
        )
    meta = {
        "method": "range-sample",
        "n": n,
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "total_samples": int(sum(needed.values())),
        "matchings": matchings,
        "ranges": {a: r.width for a, r in ranges.items()},
        "cache": cache_stats,
        "wall_time": time.perf_counter() - t0,
    }
    return ShapleyReport(agents=agents, meta=meta)
