from __future__ import annotations

from typing import List, Optional

from app.config import Strategy
from app.data.models import BitConfiguration, Hyperedge, Matching, MemoryState
from app.matching.base import MatchingSolver


def max_matching_parallel(config: BitConfiguration) -> Matching:
    """w = 0: slot j is matched iff it is filled for every party."""
    n = config.n_parties
    edges = [
        Hyperedge((j,) * n)
        for j in range(config.mem_per_party)
        if all(config.row(k)[j] for k in range(n))
    ]
    return Matching(tuple(edges))


def max_matching_fullrange(config: BitConfiguration) -> Matching:
    """w = m-1: pair the lowest unused filled slot of every party until one runs out."""
    filled: List[List[int]] = [config.filled(k) for k in range(config.n_parties)]
    size = min(len(f) for f in filled)
    return Matching(tuple(Hyperedge(tuple(f[i] for f in filled)) for i in range(size)))


class ParallelSolver(MatchingSolver):
    name = "parallel"

    def supports(self, config: BitConfiguration, w: int, strategy: Strategy) -> bool:
        # the w = 0 maximum matching is unique, so every strategy agrees
        return w == 0

    def solve(
        self,
        config: BitConfiguration,
        w: int,
        strategy: Strategy = Strategy.S0,
        ages: Optional[MemoryState] = None,
    ) -> Matching:
        return max_matching_parallel(config)


class FullRangeSolver(MatchingSolver):
    name = "fullrange"

    def supports(self, config: BitConfiguration, w: int, strategy: Strategy) -> bool:
        # greedy lowest-index pairing is the canonical (S0) matching only
        return w >= config.mem_per_party - 1 and strategy == Strategy.S0

    def solve(
        self,
        config: BitConfiguration,
        w: int,
        strategy: Strategy = Strategy.S0,
        ages: Optional[MemoryState] = None,
    ) -> Matching:
        return max_matching_fullrange(config)
