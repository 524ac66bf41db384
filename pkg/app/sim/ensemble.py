from __future__ import annotations

import logging
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.config import Params
from app.data.models import RoundRecord
from app.matching.bruteforce import DEFAULT_SUBSET_LIMIT
from app.matching.router import SolverRouter
from app.sim.protocol import run_protocol
from app.sim.rng import sample_rng

logger = logging.getLogger("qrouter")

DEFAULT_CHUNK_SAMPLES = 500


@dataclass
class RoundTally:
    """
    Exact integer moments of one round across samples. Integer sums merge
    associatively, so any partition of the samples gives identical results.
    """
    n: int = 0
    sum_l: int = 0
    sum_l2: int = 0
    attempted: int = 0
    marginals: List[Counter] = field(default_factory=list)   # per party: age -> count
    joint: Counter = field(default_factory=Counter)         # age tuple -> count

    def add(self, rec: RoundRecord, n_parties: int) -> None:
        if not self.marginals:
            self.marginals = [Counter() for _ in range(n_parties)]
        self.n += 1
        self.sum_l += rec.num_measurements
        self.sum_l2 += rec.num_measurements ** 2
        self.attempted += rec.attempted
        for t in rec.age_tuples:
            self.joint[t] += 1
            for k, a in enumerate(t):
                self.marginals[k][a] += 1

    def merged(self, other: "RoundTally") -> "RoundTally":
        parties = max(len(self.marginals), len(other.marginals))
        marg = [Counter() for _ in range(parties)]
        for src in (self.marginals, other.marginals):
            for k, c in enumerate(src):
                marg[k].update(c)
        joint = Counter(self.joint)
        joint.update(other.joint)
        return RoundTally(
            n=self.n + other.n,
            sum_l=self.sum_l + other.sum_l,
            sum_l2=self.sum_l2 + other.sum_l2,
            attempted=self.attempted + other.attempted,
            marginals=marg,
            joint=joint,
        )


@dataclass
class EnsembleStats:
    n_parties: int
    mem_per_party: int
    rounds: List[RoundTally]

    @staticmethod
    def empty(n_parties: int, mem_per_party: int, total_rounds: int) -> "EnsembleStats":
        return EnsembleStats(n_parties, mem_per_party, [RoundTally() for _ in range(total_rounds)])

    @property
    def samples(self) -> int:
        return self.rounds[0].n if self.rounds else 0

    def add_run(self, records: Sequence[RoundRecord]) -> None:
        for tally, rec in zip(self.rounds, records):
            tally.add(rec, self.n_parties)

    def merged(self, other: "EnsembleStats") -> "EnsembleStats":
        if len(self.rounds) != len(other.rounds):
            raise ValueError("cannot merge ensembles with different round counts")
        return EnsembleStats(
            self.n_parties, self.mem_per_party, [a.merged(b) for a, b in zip(self.rounds, other.rounds)]
        )

    # -------------------------
    # Derived views
    # -------------------------

    def mean_l(self) -> np.ndarray:
        return np.array([t.sum_l / t.n if t.n else 0.0 for t in self.rounds])

    def stderr_l(self) -> np.ndarray:
        out = []
        for t in self.rounds:
            if t.n < 2:
                out.append(0.0)
                continue
            mean = t.sum_l / t.n
            var = (t.sum_l2 - t.n * mean * mean) / (t.n - 1)
            out.append(math.sqrt(max(var, 0.0) / t.n))
        return np.array(out)

    def router_rate(self) -> np.ndarray:
        ml = self.mean_l()
        return np.cumsum(ml) / (np.arange(1, ml.size + 1) * self.mem_per_party)

    def age_marginals(self, round_no: int) -> List[Dict[int, float]]:
        """Prob[delta_i](s) per party; empty dicts when no measurement happened."""
        t = self.rounds[round_no - 1]
        out = []
        for k in range(self.n_parties):
            c = t.marginals[k] if k < len(t.marginals) else Counter()
            tot = sum(c.values())
            out.append({a: c[a] / tot for a in sorted(c)} if tot else {})
        return out

    def joint_age_weights(self, round_no: int) -> List[Tuple[Tuple[int, ...], int]]:
        return sorted(self.rounds[round_no - 1].joint.items())

    def fresh_qubit_violations(self) -> Tuple[int, int]:
        """(tuples with no age-0 member, all tuples)."""
        stale = total = 0
        for t in self.rounds:
            for ages, c in t.joint.items():
                total += c
                if min(ages) > 0:
                    stale += c
        return stale, total

    def to_json(self) -> Dict[str, object]:
        names = ["A"] + [f"B{i}" for i in range(1, self.n_parties)]
        rounds = []
        ml = self.mean_l()
        for s, t in enumerate(self.rounds, start=1):
            marg = self.age_marginals(s)
            rounds.append(
                {
                    "round": s,
                    "mean_l": float(ml[s - 1]),
                    "measurements": sum(t.joint.values()),
                    "age_marginals": {names[k]: {str(a): p for a, p in marg[k].items()} for k in range(self.n_parties)},
                    "joint_age_weights": [list(ages) + [cnt] for ages, cnt in self.joint_age_weights(s)],
                }
            )
        return {"samples": self.samples, "n_parties": self.n_parties, "rounds": rounds}


def _run_chunk(args: Tuple[Params, int, int, int]) -> EnsembleStats:
    params, start, stop, limit = args
    router = SolverRouter(limit)
    stats = EnsembleStats.empty(params.n_parties, params.mem_per_party, params.total_rounds)
    for i in range(start, stop):
        stats.add_run(run_protocol(params, sample_rng(params.rng_seed, i), router))
    return stats


def chunk_bounds(samples: int, chunk: int) -> List[Tuple[int, int]]:
    chunk = max(1, chunk)
    return [(a, min(a + chunk, samples)) for a in range(0, samples, chunk)]


def run_ensemble(
    params: Params,
    threads: int = 1,
    chunk_samples: int = DEFAULT_CHUNK_SAMPLES,
    limit: int = DEFAULT_SUBSET_LIMIT,
) -> EnsembleStats:
    """Aggregate `samples` independent runs; identical output for any worker count."""
    t0 = time.time()
    jobs = [(params, a, b, limit) for a, b in chunk_bounds(params.samples, chunk_samples)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts: Iterable[EnsembleStats] = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]

    total: Optional[EnsembleStats] = None
    for part in parts:
        total = part if total is None else total.merged(part)
    assert total is not None
    stale, measured = total.fresh_qubit_violations()
    if stale:
        logger.warning("FRESH_QUBIT_CHECK | tuples_without_age0=%d | tuples=%d", stale, measured)
    logger.info(
        "ENSEMBLE_DONE | N=%d m=%d w=%d | strategy=%s cutoff=%s | samples=%d rounds=%d | workers=%d | %.1fs",
        params.n_parties,
        params.mem_per_party,
        params.max_conn_len,
        params.strategy.value,
        params.cutoff,
        total.samples,
        params.total_rounds,
        threads,
        time.time() - t0,
    )
    return total
