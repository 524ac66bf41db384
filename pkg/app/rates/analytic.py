from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binom

from app.config import ANALYTIC_DIM_LIMIT, Params, Strategy
from app.data.cache import TABLES
from app.data.models import BitConfiguration
from app.matching.router import SolverRouter

logger = logging.getLogger("qrouter")

STOCHASTIC_TOL = 1e-12


class DimensionGuardError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConfigDistribution:
    """Probability of each post-measurement configuration, indexed by BitConfiguration.index."""
    probs: np.ndarray
    round: int
    n_parties: int
    mem_per_party: int

    @staticmethod
    def initial(n_parties: int, mem_per_party: int) -> "ConfigDistribution":
        probs = np.zeros(2 ** (n_parties * mem_per_party))
        probs[0] = 1.0  # all memories empty
        return ConfigDistribution(probs, 0, n_parties, mem_per_party)

    def prob(self, config: BitConfiguration) -> float:
        return float(self.probs[config.index])

    def tv_distance(self, other: "ConfigDistribution") -> float:
        return 0.5 * float(np.abs(self.probs - other.probs).sum())


@dataclass(frozen=True)
class MeasurementTable:
    target: np.ndarray   # index of C'' = mu(C') for each C'
    size: np.ndarray     # l for each C'


@dataclass(frozen=True)
class AnalyticRound:
    round: int
    prob_lambda: np.ndarray
    prob_sigma: np.ndarray
    expected_l: float
    router_rate: float


@dataclass(frozen=True)
class SteadyState:
    expected_l: float
    rate: float             # steady-state <l>/m
    convergence_round: Optional[int]
    rounds_evolved: int


def _guard(n_parties: int, mem_per_party: int, force: bool) -> None:
    n = n_parties * mem_per_party
    if n > ANALYTIC_DIM_LIMIT and not force:
        raise DimensionGuardError(
            f"analytic engine needs N*m <= {ANALYTIC_DIM_LIMIT} (got {n}); use --force or the simulator"
        )


# -------------------------
# Storage map sigma
# -------------------------

def storage_transition(c: BitConfiguration, c_prime: BitConfiguration, eta: float) -> float:
    """Prob[C' | C] as a product of per-memory transitions; filled memories never empty."""
    if len(c.bits) != len(c_prime.bits):
        raise ValueError("configurations differ in length")
    p = 1.0
    for ci, cpi in zip(c.bits, c_prime.bits):
        p *= (1 - eta) * (1 - cpi) * (1 - ci) + eta * cpi * (1 - ci) + cpi * ci
        if p == 0.0:
            return 0.0
    return p


def _bit_kernel(eta: float) -> np.ndarray:
    # rows c', columns c
    return np.array([[1.0 - eta, 0.0], [eta, 1.0]])


def storage_matrix(n_bits: int, eta: float) -> np.ndarray:
    """Dense 2^n x 2^n matrix M[c', c]; for small n only."""
    return functools.reduce(np.kron, [_bit_kernel(eta)] * n_bits, np.ones((1, 1)))


def apply_storage(probs: np.ndarray, n_bits: int, eta: float) -> np.ndarray:
    """sigma applied to a distribution, one memory axis at a time."""
    k = _bit_kernel(eta)
    t = probs.reshape((2,) * n_bits)
    for axis in range(n_bits):
        t = np.moveaxis(np.tensordot(k, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


# -------------------------
# Measurement map mu
# -------------------------

def measurement_map(
    c_prime: BitConfiguration, w: int, router: Optional[SolverRouter] = None
) -> Tuple[BitConfiguration, int]:
    """Clear the memories of the canonical maximum matching; returns (C'', l)."""
    router = router or SolverRouter()
    matching = router.solve(c_prime, w, Strategy.S0)
    return c_prime.clear(matching.cells()), len(matching)


def measurement_table(n_parties: int, mem_per_party: int, w: int) -> MeasurementTable:
    def build() -> MeasurementTable:
        router = SolverRouter()
        n_states = 2 ** (n_parties * mem_per_party)
        target = np.empty(n_states, dtype=np.int64)
        size = np.empty(n_states, dtype=np.int64)
        for idx in range(n_states):
            c2, l = measurement_map(BitConfiguration.from_index(idx, n_parties, mem_per_party), w, router)
            target[idx] = c2.index
            size[idx] = l
        logger.info("MU_TABLE | N=%d m=%d w=%d | states=%d", n_parties, mem_per_party, w, n_states)
        return MeasurementTable(target=target, size=size)

    return TABLES.get_or_build(("mu", n_parties, mem_per_party, w), build)


# -------------------------
# Evolution
# -------------------------

def evolve_round(
    dist: ConfigDistribution, params: Params, force: bool = False
) -> Tuple[ConfigDistribution, np.ndarray]:
    n, m = dist.n_parties, dist.mem_per_party
    _guard(n, m, force)
    table = measurement_table(n, m, params.max_conn_len)

    p_prime = apply_storage(dist.probs, n * m, params.transmittivity)
    prob_lambda = np.bincount(table.size, weights=p_prime, minlength=m + 1)[: m + 1]
    nxt = np.bincount(table.target, weights=p_prime, minlength=p_prime.size)

    for name, vec in (("prob_lambda", prob_lambda), ("distribution", nxt)):
        if abs(vec.sum() - 1.0) > STOCHASTIC_TOL:
            raise AssertionError(f"{name} not normalized after round {dist.round + 1}: sum={vec.sum()!r}")
    return ConfigDistribution(nxt, dist.round + 1, n, m), prob_lambda


def prob_sigma(prob_lambda: Sequence[float], p_ghz: float) -> np.ndarray:
    """Prob[Sigma = l]: each of the i performed measurements succeeds with p_ghz."""
    pl = np.asarray(prob_lambda, dtype=float)
    m = pl.size - 1
    out = np.zeros(m + 1)
    ls = np.arange(m + 1)
    for i in range(m + 1):
        if pl[i] == 0.0:
            continue
        out[: i + 1] += pl[i] * binom.pmf(ls[: i + 1], i, p_ghz)
    return out


def expected_l(prob_sigma_vec: Sequence[float]) -> float:
    ps = np.asarray(prob_sigma_vec, dtype=float)
    return float(np.dot(np.arange(ps.size), ps))


def router_rate(l_series: Sequence[float], m: int, s_c: int) -> float:
    """R(s_c) = (1/s_c) * sum_{s=1..s_c} <l>(s)/m."""
    if len(l_series) < s_c:
        raise ValueError(f"need {s_c} rounds of <l>, got {len(l_series)}")
    return float(np.sum(l_series[:s_c])) / (s_c * m)


def run_analytic(params: Params, force: bool = False) -> List[AnalyticRound]:
    _guard(params.n_parties, params.mem_per_party, force)
    dist = ConfigDistribution.initial(params.n_parties, params.mem_per_party)
    rows: List[AnalyticRound] = []
    total = 0.0
    for s in range(1, params.total_rounds + 1):
        dist, pl = evolve_round(dist, params, force)
        ps = prob_sigma(pl, params.p_ghz)
        el = expected_l(ps)
        total += el
        rows.append(AnalyticRound(s, pl, ps, el, total / (s * params.mem_per_party)))
    return rows


def steady_state(params: Params, tol: float = 1e-10, max_rounds: int = 100_000, force: bool = False) -> SteadyState:
    """Evolve until successive distributions differ by less than tol in total variation."""
    _guard(params.n_parties, params.mem_per_party, force)
    dist = ConfigDistribution.initial(params.n_parties, params.mem_per_party)
    converged: Optional[int] = None
    el = 0.0
    for s in range(1, max_rounds + 1):
        nxt, pl = evolve_round(dist, params, force)
        el = expected_l(prob_sigma(pl, params.p_ghz))
        if nxt.tv_distance(dist) < tol:
            converged = s
            dist = nxt
            break
        dist = nxt
    if converged is None:
        logger.warning("STEADY_STATE | not converged | rounds=%d | tol=%g", max_rounds, tol)
    return SteadyState(
        expected_l=el,
        rate=el / params.mem_per_party,
        convergence_round=converged,
        rounds_evolved=dist.round,
    )
