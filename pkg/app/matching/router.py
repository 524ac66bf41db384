from __future__ import annotations

from typing import List, Optional

from app.config import Strategy
from app.data.cache import TableCache
from app.data.models import BitConfiguration, Matching, MemoryState, to_bit_configuration
from app.matching.base import MatchingSolver
from app.matching.bruteforce import DEFAULT_SUBSET_LIMIT, BruteForceSolver
from app.matching.flow import Flow3Solver
from app.matching.trivial import FullRangeSolver, ParallelSolver

# N = 3 flow cardinality per (index, m, w); at most 2^(3m) configurations per (m, w)
FLOW_CARDINALITY = TableCache(max_entries=1 << 13)


class SolverRouter:
    """
    Picks the matching solver for an instance: closed-form regimes first
    (w = 0, full range), exhaustive search otherwise. For N = 3 the
    network-flow cardinality bounds the exhaustive search.
    """
    def __init__(self, limit: int = DEFAULT_SUBSET_LIMIT) -> None:
        self.bruteforce = BruteForceSolver(limit)
        self.flow = Flow3Solver()
        self.solvers: List[MatchingSolver] = [ParallelSolver(), FullRangeSolver(), self.bruteforce]

    def pick(self, config: BitConfiguration, w: int, strategy: Strategy) -> MatchingSolver:
        for s in self.solvers:
            if s.supports(config, w, strategy):
                return s
        raise RuntimeError(f"No solver for N={config.n_parties} w={w} strategy={strategy.value}")

    def solve(
        self,
        config: BitConfiguration,
        w: int,
        strategy: Strategy = Strategy.S0,
        ages: Optional[MemoryState] = None,
    ) -> Matching:
        if min(config.filled_counts()) == 0:
            return Matching()
        solver = self.pick(config, w, strategy)
        if solver is not self.bruteforce:
            return solver.solve(config, w, strategy, ages)
        target = None
        if config.n_parties == 3:
            target = self.flow_cardinality(config, w)
        return self.bruteforce.solve(config, w, strategy, ages, target=target)

    def flow_cardinality(self, config: BitConfiguration, w: int) -> int:
        key = (config.index, config.mem_per_party, w)
        return FLOW_CARDINALITY.get_or_build(key, lambda: len(self.flow.solve(config, w)))

    def solve_state(self, state: MemoryState, w: int, strategy: Strategy) -> Matching:
        return self.solve(to_bit_configuration(state), w, strategy, state)
