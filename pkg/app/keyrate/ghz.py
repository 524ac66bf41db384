from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from app.keyrate.noise import Fidelities, check_fidelity, fidelity
from app.keyrate.oracle import MAX_ORACLE_PARTIES, circuit_density, ghz_weights, x_expectation, zz_expectation

TRACE_TOL = 1e-12


@dataclass(frozen=True)
class GhzDiagonal3:
    lambda0_plus: float
    lambda0_minus: float
    lambda1: float
    lambda2: float
    lambda3: float

    def as_tuple(self) -> Tuple[float, float, float, float, float]:
        return (self.lambda0_plus, self.lambda0_minus, self.lambda1, self.lambda2, self.lambda3)

    def trace(self) -> float:
        return self.lambda0_plus + self.lambda0_minus + 2.0 * (self.lambda1 + self.lambda2 + self.lambda3)

    @property
    def output_fidelity(self) -> float:
        return self.lambda0_plus


@dataclass(frozen=True)
class QberSet:
    q_x: float
    q_ab: Tuple[float, ...]   # one per B_i

    @property
    def max_q_ab(self) -> float:
        return max(self.q_ab) if self.q_ab else 0.0


def lambda_arrays(fa, fb1, fb2) -> Tuple[np.ndarray, ...]:
    """Tripartite GHZ-diagonal coefficients; broadcasts over numpy arrays."""
    fa, fb1, fb2 = (np.asarray(x, dtype=float) for x in (fa, fb1, fb2))
    pairs = fa * fb1 + fb1 * fb2 + fa * fb2
    triple = fa * fb1 * fb2
    l0p = (4 - fa - fb1 - fb2 - 2 * pairs + 32 * triple) / 27
    l0m = (5 - 5 * (fa + fb1 + fb2) + 14 * pairs - 32 * triple) / 27
    l1 = (fb2 + 2 * fa * fb1 - 2 * fa * fb2 - 2 * fb1 * fb2 + 1) / 9
    l2 = (fb1 - 2 * fa * fb1 - 2 * fb1 * fb2 + 2 * fa * fb2 + 1) / 9
    l3 = (fa - 2 * fa * fb1 - 2 * fa * fb2 + 2 * fb1 * fb2 + 1) / 9
    return l0p, l0m, l1, l2, l3


def qber_arrays(fa, fb1, fb2) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Q_X, Q_AB1, Q_AB2) over broadcast fidelity arrays."""
    l0p, l0m, l1, l2, l3 = lambda_arrays(fa, fb1, fb2)
    return (1.0 - (l0p - l0m)) / 2.0, 2.0 * (l2 + l3), 2.0 * (l1 + l3)


def ghz_diag_lambdas(fids: Fidelities) -> GhzDiagonal3:
    if fids.n_parties != 3:
        raise ValueError(f"closed-form lambdas are tripartite only, got N={fids.n_parties}")
    for f in fids.f:
        check_fidelity(f)
    return GhzDiagonal3(*(float(v) for v in lambda_arrays(*fids.f)))


def circuit_oracle_3(fids: Fidelities) -> GhzDiagonal3:
    if fids.n_parties != 3:
        raise ValueError(f"circuit_oracle_3 needs N=3, got N={fids.n_parties}")
    plus, minus = ghz_weights(circuit_density(fids.f))
    return GhzDiagonal3(float(plus[0]), float(minus[0]), float(plus[1]), float(plus[2]), float(plus[3]))


def qbers_3(lam: GhzDiagonal3) -> QberSet:
    return QberSet(
        q_x=(1.0 - (lam.lambda0_plus - lam.lambda0_minus)) / 2.0,
        q_ab=(2.0 * (lam.lambda2 + lam.lambda3), 2.0 * (lam.lambda1 + lam.lambda3)),
    )


def qbers_from_density(rho: np.ndarray) -> QberSet:
    n = rho.shape[0].bit_length() - 1
    return QberSet(
        q_x=(1.0 - x_expectation(rho)) / 2.0,
        q_ab=tuple((1.0 - zz_expectation(rho, k)) / 2.0 for k in range(1, n)),
    )


@dataclass(frozen=True)
class TupleNoise:
    qber: QberSet
    output_fidelity: float


def noise_for_fidelities(f: Sequence[float]) -> TupleNoise:
    """QBERs and GHZ_0^+ weight; closed form for N=3, circuit oracle for the other sizes."""
    fids = Fidelities(tuple(float(x) for x in f))
    if fids.n_parties == 3:
        lam = ghz_diag_lambdas(fids)
        return TupleNoise(qbers_3(lam), lam.output_fidelity)
    if fids.n_parties > MAX_ORACLE_PARTIES:
        raise ValueError(f"QBERs available for N <= {MAX_ORACLE_PARTIES}, got N={fids.n_parties}")
    rho = circuit_density(fids.f)
    plus, _ = ghz_weights(rho)
    return TupleNoise(qbers_from_density(rho), float(plus[0]))


@functools.lru_cache(maxsize=65536)
def noise_for_ages(ages: Tuple[int, ...], tau: int) -> TupleNoise:
    return noise_for_fidelities([fidelity(d, tau) for d in ages])


def qbers_for_ages(ages: Sequence[int], tau: int) -> QberSet:
    return noise_for_ages(tuple(int(d) for d in ages), tau).qber


def qbers_product_of_marginals_3(marginals: Sequence[Dict[int, float]], tau: int) -> Tuple[QberSet, float]:
    """
    Sum of Q(delta_a, delta_b1, delta_b2) * Prob[delta_a] Prob[delta_b1] Prob[delta_b2]
    over the three per-party age histograms. Returns the QBERs and the mean output fidelity.
    """
    if len(marginals) != 3:
        raise ValueError("tripartite marginals expected")
    grids = []
    weights = []
    for k, hist in enumerate(marginals):
        ages = sorted(hist)
        shape = [1, 1, 1]
        shape[k] = len(ages)
        grids.append(np.array([fidelity(a, tau) for a in ages]).reshape(shape))
        weights.append(np.array([hist[a] for a in ages]).reshape(shape))
    wt = weights[0] * weights[1] * weights[2]
    l0p, l0m, l1, l2, l3 = lambda_arrays(*grids)
    q = qbers_3(
        GhzDiagonal3(
            float((l0p * wt).sum()),
            float((l0m * wt).sum()),
            float((l1 * wt).sum()),
            float((l2 * wt).sum()),
            float((l3 * wt).sum()),
        )
    )
    return q, float((l0p * wt).sum())
