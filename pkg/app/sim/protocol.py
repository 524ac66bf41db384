from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from app.config import Params
from app.data.models import EMPTY, MemoryState, RoundRecord
from app.matching.hypergraph import edge_ages
from app.matching.router import SolverRouter


def step_storage(state: MemoryState, eta: float, rng: np.random.Generator) -> MemoryState:
    """Each empty memory receives a fresh qubit (age 0) with probability eta."""
    # One draw per memory every round, filled or not: keeps streams aligned
    # across strategies that share a seed.
    u = rng.random((state.n_parties, state.mem_per_party))
    rows = []
    for k, row in enumerate(state.slots):
        rows.append(tuple(0 if (a is EMPTY and u[k, j] < eta) else a for j, a in enumerate(row)))
    return MemoryState(tuple(rows))


def step_measure(
    state: MemoryState,
    params: Params,
    rng: np.random.Generator,
    router: Optional[SolverRouter] = None,
    round_no: int = 0,
) -> Tuple[MemoryState, RoundRecord]:
    """
    Perform the strategy's maximum matching. Every matched hyperedge is a GHZ
    attempt succeeding with p_ghz; matched memories are cleared whether or
    not the attempt succeeds. Only successes are recorded.
    """
    router = router or SolverRouter()
    u = rng.random(state.mem_per_party)
    matching = router.solve_state(state, params.max_conn_len, params.strategy)

    tuples = []
    for i, edge in enumerate(matching.edges):
        if u[i] < params.p_ghz:
            tuples.append(edge_ages(edge, state))
    after = state.clear(matching.cells()) if matching.edges else state
    rec = RoundRecord(
        round=round_no,
        num_measurements=len(tuples),
        age_tuples=tuple(tuples),
        attempted=len(matching),
    )
    return after, rec


def age_increment(state: MemoryState) -> MemoryState:
    return MemoryState(tuple(tuple(a if a is EMPTY else a + 1 for a in row) for row in state.slots))


def step_cutoff(state: MemoryState, s_cutoff: Optional[int]) -> MemoryState:
    """Empty every memory whose qubit is older than s_cutoff rounds."""
    if s_cutoff is None:
        return state
    return MemoryState(
        tuple(tuple(EMPTY if (a is not EMPTY and a > s_cutoff) else a for a in row) for row in state.slots)
    )


def run_protocol(
    params: Params,
    rng: np.random.Generator,
    router: Optional[SolverRouter] = None,
    keep_snapshots: bool = False,
) -> List[RoundRecord]:
    """
    One protocol run from all-empty memories. Per round: storage, measurement,
    then the surviving qubits age by one and the cutoff drops those past it
    (a qubit stored s_cutoff rounds stays, s_cutoff + 1 is removed).
    """
    router = router or SolverRouter()
    state = MemoryState.empty(params.n_parties, params.mem_per_party)
    records: List[RoundRecord] = []
    for s in range(1, params.total_rounds + 1):
        state = step_storage(state, params.transmittivity, rng)
        before = state
        state, rec = step_measure(state, params, rng, router, round_no=s)
        if keep_snapshots:
            rec = RoundRecord(rec.round, rec.num_measurements, rec.age_tuples, rec.attempted, snapshot=before)
        state = step_cutoff(age_increment(state), params.cutoff)
        records.append(rec)
    return records
