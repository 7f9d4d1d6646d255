"""Domain types for capacity-constrained allocation games.

An allocation game is described by a scenario: a set of agents, a set of
indivisible goods with non-negative values, an interest map telling which
goods each agent can receive, and a capacity ``k`` limiting how many goods
one agent may hold.  The worth of a coalition is the value of an optimal
feasible allocation restricted to its members.

Coalitions are plain ``int`` bitmasks over the scenario's canonical agent
order (bit ``i`` set means agent ``i`` is in).  Python integers act as
arbitrarily wide bitsets, so the same representation covers components of
any size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

Coalition = int


class ScenarioError(ValueError):
    """Raised for malformed scenarios or scenario files."""


class AllocationScenario:
    """Agents, valued goods, interest sets and a per-agent capacity.

    Immutable once constructed; derived structures (index maps, per-agent
    value arrays, the agents graph) are precomputed or cached so the object
    can be shared freely across workers.
    """

    def __init__(
        self,
        agents: Sequence[str],
        goods: Sequence[tuple[str, float]],
        interest: Mapping[str, Iterable[str]],
        k: int,
    ):
        if k < 1:
            raise ScenarioError(f"capacity must be >= 1, got {k}")
        self.agents = tuple(str(a) for a in agents)
        if len(set(self.agents)) != len(self.agents):
            raise ScenarioError("duplicate agent ids")
        self.good_ids = tuple(str(g) for g, _ in goods)
        if len(set(self.good_ids)) != len(self.good_ids):
            raise ScenarioError("duplicate good ids")
        self.good_values = np.asarray([float(v) for _, v in goods], dtype=np.float64)
        if len(self.good_values) and self.good_values.min() < 0:
            bad = self.good_ids[int(np.argmin(self.good_values))]
            raise ScenarioError(f"good {bad!r} has negative value")
        self.k = int(k)

        self.agent_index = {a: i for i, a in enumerate(self.agents)}
        self.good_index = {g: j for j, g in enumerate(self.good_ids)}

        unknown = set(interest) - set(self.agents)
        if unknown:
            raise ScenarioError(f"interest map names undeclared agents: {sorted(unknown)}")
        self.interest: tuple[tuple[int, ...], ...] = tuple(
            self._interest_row(a, interest.get(a, ())) for a in self.agents
        )

        # Positive-value goods drive both matching and the agents graph.
        self._pos_interest: list[np.ndarray] = []
        for row in self.interest:
            pos = np.asarray(
                [j for j in row if self.good_values[j] > 0.0], dtype=np.intp
            )
            self._pos_interest.append(pos)
        self.slots = np.asarray(
            [min(self.k, len(p)) for p in self._pos_interest], dtype=np.intp
        )
        # flattened interest segments let matching gather coalition edges
        # without touching Python per member
        self.pos_lens = np.asarray([len(p) for p in self._pos_interest], dtype=np.intp)
        self.pos_offsets = np.concatenate(([0], np.cumsum(self.pos_lens))).astype(np.intp)
        self.pos_flat = (
            np.concatenate(self._pos_interest)
            if int(self.pos_lens.sum())
            else np.empty(0, dtype=np.intp)
        )

        # Best goods an agent can get alone: top `slots` values, ties broken
        # by good index.  This is the canonical singleton worth used by every
        # solver, so the float is computed once here.
        self._solo_goods: list[np.ndarray] = []
        solo = np.zeros(len(self.agents), dtype=np.float64)
        for i, pos in enumerate(self._pos_interest):
            if len(pos) == 0:
                self._solo_goods.append(pos)
                continue
            vals = self.good_values[pos]
            order = np.lexsort((pos, -vals))[: self.slots[i]]
            chosen = pos[order]
            self._solo_goods.append(chosen)
            solo[i] = float(np.sum(self.good_values[chosen]))
        self.solo_value = solo

        self._graph: AgentsGraph | None = None

    def _interest_row(self, agent: str, ids: Iterable[str]) -> tuple[int, ...]:
        out = []
        for g in ids:
            j = self.good_index.get(str(g))
            if j is None:
                raise ScenarioError(f"agent {agent!r} is interested in undeclared good {g!r}")
            out.append(j)
        return tuple(sorted(set(out)))

    # -- basic shape -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def full_mask(self) -> Coalition:
        return (1 << self.n) - 1

    def positive_goods(self, i: int) -> np.ndarray:
        """Indices of positive-value goods agent ``i`` is interested in."""
        return self._pos_interest[i]

    def solo_goods(self, i: int) -> np.ndarray:
        """Goods an agent alone would take (top ``k`` by value)."""
        return self._solo_goods[i]

    @property
    def graph(self) -> "AgentsGraph":
        if self._graph is None:
            self._graph = build_agents_graph(self)
        return self._graph

    # -- coalitions --------------------------------------------------------

    def mask_of(self, ids: Iterable[str]) -> Coalition:
        m = 0
        for a in ids:
            try:
                m |= 1 << self.agent_index[a]
            except KeyError:
                raise ScenarioError(f"unknown agent {a!r}") from None
        return m

    def ids_of(self, mask: Coalition) -> tuple[str, ...]:
        return tuple(self.agents[i] for i in iter_bits(mask))

    # -- derived scenarios --------------------------------------------------

    def restrict(self, ids: Iterable[str]) -> "AllocationScenario":
        """Sub-scenario over the given agents and the goods they reference.

        Agent and good order follow the original declaration order.
        """
        keep = set(ids)
        unknown = keep - set(self.agents)
        if unknown:
            raise ScenarioError(f"unknown agents in restriction: {sorted(unknown)}")
        agents = [a for a in self.agents if a in keep]
        used: set[int] = set()
        for a in agents:
            used.update(self.interest[self.agent_index[a]])
        goods = [
            (self.good_ids[j], float(self.good_values[j]))
            for j in range(len(self.good_ids))
            if j in used
        ]
        interest = {
            a: [self.good_ids[j] for j in self.interest[self.agent_index[a]]]
            for a in agents
        }
        return AllocationScenario(agents, goods, interest, self.k)

    def with_interest(self, interest: Mapping[str, Iterable[str]]) -> "AllocationScenario":
        """Same agents/goods/k with a replacement interest map."""
        goods = list(zip(self.good_ids, (float(v) for v in self.good_values)))
        return AllocationScenario(self.agents, goods, interest, self.k)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "goods": [
                {"id": g, "value": float(v)}
                for g, v in zip(self.good_ids, self.good_values)
            ],
            "agents": [
                {"id": a, "interest": [self.good_ids[j] for j in self.interest[i]]}
                for i, a in enumerate(self.agents)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AllocationScenario":
        try:
            k = data["k"]
            goods = [(g["id"], g["value"]) for g in data["goods"]]
            agents = [a["id"] for a in data["agents"]]
            interest = {a["id"]: a.get("interest", []) for a in data["agents"]}
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"malformed scenario object: {exc}") from exc
        return cls(agents, goods, interest, k)

    def __repr__(self) -> str:
        return (
            f"AllocationScenario(n={self.n}, goods={len(self.good_ids)}, k={self.k})"
        )


def load_scenario(path: str) -> AllocationScenario:
    """Load a scenario from its canonical JSON file format."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    try:
        return AllocationScenario.from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def save_scenario(scenario: AllocationScenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_dict(), fh, indent=2)
        fh.write("\n")


# -- bit helpers -------------------------------------------------------------


def iter_bits(mask: int) -> Iterator[int]:
    """Yield set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_from_indices(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


def mask_from_bool(members: np.ndarray) -> int:
    """Bitmask from a boolean membership vector (index i -> bit i)."""
    packed = np.packbits(members.astype(np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def mask_to_indices(mask: int, n: int) -> np.ndarray:
    """Set bit positions of ``mask`` as an array, ascending."""
    nbytes = (n + 7) // 8
    raw = np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.nonzero(np.unpackbits(raw, bitorder="little", count=n))[0]


# -- agents graph -------------------------------------------------------------


@dataclass
class AgentsGraph:
    """Undirected adjacency over agents, as per-agent neighbor bitmasks.

    Two agents are adjacent iff they share at least one positive-value good.
    """

    n: int
    neighbor_masks: tuple[int, ...]

    def neighbors(self, i: int) -> int:
        return self.neighbor_masks[i]

    def degree(self, i: int) -> int:
        return self.neighbor_masks[i].bit_count()

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for i in range(self.n):
            for j in iter_bits(self.neighbor_masks[i]):
                if j > i:
                    out.append((i, j))
        return out

    def components(self, within: int | None = None) -> list[int]:
        """Connected components (as masks) of the graph restricted to ``within``."""
        if within is None:
            within = (1 << self.n) - 1
        return list(connected_components(within, self.neighbor_masks))


def build_agents_graph(scenario: AllocationScenario) -> AgentsGraph:
    n = scenario.n
    good_claimers = [0] * len(scenario.good_ids)
    for i in range(n):
        for j in scenario.positive_goods(i):
            good_claimers[j] |= 1 << i
    neigh = [0] * n
    for j, claimers in enumerate(good_claimers):
        if claimers.bit_count() < 2:
            continue
        for i in iter_bits(claimers):
            neigh[i] |= claimers
    for i in range(n):
        neigh[i] &= ~(1 << i)
    return AgentsGraph(n=n, neighbor_masks=tuple(neigh))


def connected_components(mask: int, neighbor_masks: Sequence[int]) -> Iterator[int]:
    """Connected components of the induced subgraph on ``mask``.

    Yields component masks in ascending order of their lowest member index.
    """
    remaining = mask
    while remaining:
        seed = remaining & -remaining
        comp = seed
        frontier = seed
        while frontier:
            reach = 0
            f = frontier
            while f:
                low = f & -f
                f ^= low
                reach |= neighbor_masks[low.bit_length() - 1]
            frontier = reach & remaining & ~comp
            comp |= frontier
        yield comp
        remaining &= ~comp


def component_of(i: int, coalition: int, neighbor_masks: Sequence[int]) -> int:
    """Connected component of agent ``i`` inside ``coalition | {i}``."""
    allowed = coalition | (1 << i)
    comp = 1 << i
    frontier = comp
    while frontier:
        reach = 0
        f = frontier
        while f:
            low = f & -f
            f ^= low
            reach |= neighbor_masks[low.bit_length() - 1]
        frontier = reach & allowed & ~comp
        comp |= frontier
    return comp


# -- characteristic value cache ------------------------------------------------


class CharacteristicCache:
    """Memo of coalition worths keyed by bitmask.

    Bound to a single scenario: keys are masks in that scenario's agent
    order.  Values are deterministic, so a cache can be dropped, split
    across workers, or merged without changing any result.  An optional
    entry cap evicts least-recently-used masks.
    """

    def __init__(self, max_entries: int | None = None):
        self.store: dict[int, float] = {}
        self.hits = 0
        self.misses = 0
        self.max_entries = max_entries

    def get(self, mask: int) -> float | None:
        v = self.store.get(mask)
        if v is None:
            self.misses += 1
            return None
        self.hits += 1
        if self.max_entries is not None:
            # dict preserves insertion order; reinsert to mark recency
            del self.store[mask]
            self.store[mask] = v
        return v

    def put(self, mask: int, value: float) -> None:
        if self.max_entries is not None and len(self.store) >= self.max_entries:
            self.store.pop(next(iter(self.store)))
        self.store[mask] = value

    def __len__(self) -> int:
        return len(self.store)

    def stats(self) -> dict:
        return {"entries": len(self.store), "hits": self.hits, "misses": self.misses}


# -- characteristic function ---------------------------------------------------


def char_value(
    scenario: AllocationScenario,
    coalition: Coalition,
    cache: CharacteristicCache | None = None,
) -> float:
    """Worth of a coalition: the value of an optimal feasible allocation.

    The coalition is split into connected components of the agents graph
    first; each component is matched independently and the values are
    summed.  Decomposing is exact because disjoint interest sets cannot
    compete for goods, and it keeps matching instances small.
    """
    if coalition == 0:
        return 0.0
    if coalition < 0 or coalition > scenario.full_mask:
        raise ScenarioError("coalition mask outside the scenario's agent range")
    neigh = scenario.graph.neighbor_masks
    total = 0.0
    for comp in connected_components(coalition, neigh):
        total += _component_value(scenario, comp, cache)
    return total


def _component_value(
    scenario: AllocationScenario,
    comp: Coalition,
    cache: CharacteristicCache | None,
) -> float:
    if comp & (comp - 1) == 0:  # singleton
        return float(scenario.solo_value[comp.bit_length() - 1])
    if cache is not None:
        v = cache.get(comp)
        if v is not None:
            return v
    from . import matching

    v = matching.optimal_value_only(scenario, comp)
    if cache is not None:
        cache.put(comp, v)
    return v


def marginal_contribution(
    scenario: AllocationScenario,
    i: int,
    coalition: Coalition,
    cache: CharacteristicCache | None = None,
) -> float:
    """v(C + i) - v(C) for an agent i outside C."""
    bit = 1 << i
    if coalition & bit:
        raise ScenarioError(f"agent index {i} already belongs to the coalition")
    return char_value(scenario, coalition | bit, cache) - char_value(
        scenario, coalition, cache
    )


# beyond this component size, one matching plus augmentations beats valuing
# both sides of the difference
AUGMENT_THRESHOLD = 40


def marginal_restricted(
    scenario: AllocationScenario,
    i: int,
    coalition: Coalition,
    cache: CharacteristicCache | None = None,
) -> float:
    """Marginal contribution of ``i`` to ``coalition``, evaluated locally.

    Only the connected component of ``i`` inside ``coalition | {i}`` can
    change when ``i`` joins, so the difference is taken on that component
    alone.  Small components are valued twice through the cache; large ones
    are handled by augmenting one optimal matching with ``i``'s capacity
    units, which never values the rest of the component at all.  Exact
    either way.
    """
    bit = 1 << i
    if coalition & bit:
        raise ScenarioError(f"agent index {i} already belongs to the coalition")
    neigh = scenario.graph.neighbor_masks
    if neigh[i] & coalition == 0:
        return float(scenario.solo_value[i])
    comp = component_of(i, coalition, neigh)
    if comp.bit_count() > AUGMENT_THRESHOLD:
        from . import matching

        return matching.marginal_gain(scenario, comp & ~bit, i)
    return _component_value(scenario, comp, cache) - char_value(
        scenario, comp & ~bit, cache
    )
