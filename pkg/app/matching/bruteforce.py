from __future__ import annotations

from typing import Callable, Dict, List, Optional, Tuple

from app.config import Strategy
from app.data.models import BitConfiguration, Hyperedge, Matching, MemoryState
from app.matching.base import MatchingSolver
from app.matching.hypergraph import HypergraphInstance, build_instance, cardinality_bounds, weigh

DEFAULT_SUBSET_LIMIT = 5_000_000


class MatchingTooLarge(RuntimeError):
    def __init__(self, limit: int, n_edges: int) -> None:
        super().__init__(
            f"matching instance too large: more than {limit} candidate subsets "
            f"({n_edges} hyperedges); raise QROUTER_MATCH_LIMIT to allow it"
        )
        self.limit = limit
        self.n_edges = n_edges


# objective to minimize for a candidate matching; None means "first found"
Objective = Optional[Callable[[Tuple[Hyperedge, ...]], int]]


def _objective(strategy: Strategy, ages: Optional[MemoryState]) -> Objective:
    if strategy == Strategy.S0:
        return None
    if ages is None:
        raise ValueError(f"strategy {strategy.value} needs qubit ages")
    cache: Dict[Hyperedge, Tuple[int, int]] = {}

    def w(e: Hyperedge) -> Tuple[int, int]:
        got = cache.get(e)
        if got is None:
            we = weigh(e, ages)
            got = cache[e] = (we.w1, we.w2)
        return got

    if strategy == Strategy.S1A:
        return lambda edges: sum(w(e)[0] for e in edges)
    if strategy == Strategy.S1B:
        return lambda edges: -sum(w(e)[0] for e in edges)
    return lambda edges: sum(w(e)[1] for e in edges)


def search(
    instance: HypergraphInstance,
    objective: Objective = None,
    limit: int = DEFAULT_SUBSET_LIMIT,
    target: Optional[int] = None,
) -> Matching:
    """
    Exhaustive search over pairwise-disjoint hyperedge subsets.

    Subsets are visited A-slot by A-slot (take an edge of that slot, in
    lexicographic order, before skipping the slot), which visits equal-size
    subsets in lexicographic order. Among maximum-cardinality subsets the
    objective is minimized; ties keep the first visited.
    `target`, when known, is the maximum cardinality and only prunes.
    """
    by_a: Dict[int, List[Hyperedge]] = {}
    for e in instance.hyperedges:
        by_a.setdefault(e.a, []).append(e)
    a_order = sorted(by_a)
    upper = cardinality_bounds(instance.filled, instance.w)[1]
    if target is not None:
        upper = min(upper, target)
    floor = target if target is not None else 0

    n_parties = instance.n_parties
    used: List[set] = [set() for _ in range(n_parties)]
    cur: List[Hyperedge] = []
    best: List[Optional[Tuple[Hyperedge, ...]]] = [None]
    best_size = [0]
    best_obj: List[Optional[int]] = [None]
    visited = [0]

    def consider() -> None:
        size = len(cur)
        if size < best_size[0] or (size == 0 and best[0] is not None):
            return
        if size > best_size[0] or best[0] is None:
            best[0] = tuple(cur)
            best_size[0] = size
            best_obj[0] = objective(best[0]) if objective else None
            return
        if objective is not None:
            val = objective(tuple(cur))
            if best_obj[0] is None or val < best_obj[0]:
                best[0] = tuple(cur)
                best_obj[0] = val

    def done() -> bool:
        return objective is None and best_size[0] >= upper

    def dfs(i: int) -> None:
        visited[0] += 1
        if visited[0] > limit:
            raise MatchingTooLarge(limit, len(instance.hyperedges))
        remaining = len(a_order) - i
        reach = len(cur) + remaining
        if reach < max(best_size[0], floor) or (objective is None and reach <= best_size[0] and best[0] is not None):
            return
        if i == len(a_order):
            consider()
            return
        for e in by_a[a_order[i]]:
            if any(e.members[k] in used[k] for k in range(1, n_parties)):
                continue
            for k in range(1, n_parties):
                used[k].add(e.members[k])
            cur.append(e)
            dfs(i + 1)
            cur.pop()
            for k in range(1, n_parties):
                used[k].discard(e.members[k])
            if done():
                return
        dfs(i + 1)

    dfs(0)
    return Matching(best[0] or ())


def max_matching_bruteforce(instance: HypergraphInstance, limit: int = DEFAULT_SUBSET_LIMIT) -> Matching:
    """Maximum matching; the lexicographically smallest among the maximum ones."""
    return search(instance, None, limit)


def max_matching_weighted(
    instance: HypergraphInstance,
    ages: MemoryState,
    strategy: Strategy,
    limit: int = DEFAULT_SUBSET_LIMIT,
    target: Optional[int] = None,
) -> Matching:
    """Maximum matching first, then the strategy's weight optimum among them."""
    return search(instance, _objective(strategy, ages), limit, target)


def all_maximum_matchings(instance: HypergraphInstance, limit: int = DEFAULT_SUBSET_LIMIT) -> List[Matching]:
    """Every maximum-cardinality matching, in visiting order (audit helper)."""
    found: List[Tuple[Hyperedge, ...]] = []
    size = len(max_matching_bruteforce(instance, limit))
    if size == 0:
        return [Matching()]

    def collect(edges: Tuple[Hyperedge, ...]) -> int:
        if len(edges) == size:
            found.append(edges)
        return 0

    search(instance, collect, limit, target=size)
    return [Matching(e) for e in found]


class BruteForceSolver(MatchingSolver):
    name = "bruteforce"

    def __init__(self, limit: int = DEFAULT_SUBSET_LIMIT) -> None:
        self.limit = limit

    def supports(self, config: BitConfiguration, w: int, strategy: Strategy) -> bool:
        return True

    def solve(
        self,
        config: BitConfiguration,
        w: int,
        strategy: Strategy = Strategy.S0,
        ages: Optional[MemoryState] = None,
        target: Optional[int] = None,
    ) -> Matching:
        instance = build_instance(config, w)
        if strategy == Strategy.S0:
            return search(instance, None, self.limit, target)
        return max_matching_weighted(instance, ages, strategy, self.limit, target)
