from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import entr

from app.keyrate.ghz import QberSet, noise_for_ages, noise_for_fidelities, qbers_product_of_marginals_3
from app.keyrate.noise import fidelity
from app.sim.ensemble import EnsembleStats

logger = logging.getLogger("qrouter")


class QberMode(str, Enum):
    JOINT = "joint"        # recorded age tuples, exact empirical average
    MARGINAL = "marginal"  # product of per-party age marginals

    @staticmethod
    def parse(raw: str) -> "QberMode":
        return QberMode(raw.strip().lower())


def binary_entropy(q: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """h(q) in bits; h(0) = h(1) = 0."""
    q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
    h = (entr(q) + entr(1.0 - q)) / math.log(2.0)
    return float(h) if h.ndim == 0 else h


def secret_fraction(q: QberSet) -> float:
    """Asymptotic secret fraction max(0, 1 - h(Q_X) - max_i h(Q_ABi))."""
    r = 1.0 - binary_entropy(q.q_x) - max((binary_entropy(x) for x in q.q_ab), default=0.0)
    return max(0.0, float(r))


def secret_key_rate(r_inf: float, router_rate: float) -> float:
    if r_inf < 0 or router_rate < 0:
        raise ValueError("secret fraction and router rate must be non-negative")
    return r_inf * router_rate


# -------------------------
# Totals over rounds
# -------------------------

@dataclass(frozen=True)
class TotalNoise:
    qber: QberSet
    output_fidelity: float
    measurements: int


def _round_noise_marginal(stats: EnsembleStats, s: int, tau: int):
    marg = stats.age_marginals(s)
    if stats.n_parties == 3:
        return qbers_product_of_marginals_3(marg, tau)
    # the output state is multilinear in the input fidelities
    mean_f = [sum(p * fidelity(a, tau) for a, p in hist.items()) for hist in marg]
    got = noise_for_fidelities(mean_f)
    return got.qber, got.output_fidelity


def total_noise(stats: EnsembleStats, tau: int, mode: QberMode = QberMode.JOINT) -> List[Optional[TotalNoise]]:
    """
    Cumulative measurement-weighted QBERs for s_c = 1 .. total_rounds.
    Entries stay None until the first measurement happens.
    """
    n_b = stats.n_parties - 1
    num_x = 0.0
    num_ab = np.zeros(n_b)
    num_f = 0.0
    count = 0
    out: List[Optional[TotalNoise]] = []
    for s, tally in enumerate(stats.rounds, start=1):
        n_s = sum(tally.joint.values())
        if n_s:
            if mode == QberMode.JOINT:
                for ages, c in tally.joint.items():
                    tn = noise_for_ages(ages, tau)
                    num_x += c * tn.qber.q_x
                    num_ab += c * np.asarray(tn.qber.q_ab)
                    num_f += c * tn.output_fidelity
            else:
                q, f = _round_noise_marginal(stats, s, tau)
                num_x += n_s * q.q_x
                num_ab += n_s * np.asarray(q.q_ab)
                num_f += n_s * f
            count += n_s
        if count == 0:
            out.append(None)
            continue
        out.append(
            TotalNoise(
                qber=QberSet(num_x / count, tuple(float(v) for v in num_ab / count)),
                output_fidelity=num_f / count,
                measurements=count,
            )
        )
    return out


def total_qber(stats: EnsembleStats, tau: int, mode: QberMode = QberMode.JOINT) -> List[Optional[QberSet]]:
    return [t.qber if t is not None else None for t in total_noise(stats, tau, mode)]


@dataclass(frozen=True)
class KeyRateRow:
    round: int
    qber: Optional[QberSet]
    secret_fraction: Optional[float]
    router_rate: float
    key_rate: float
    output_fidelity: Optional[float]


def key_rate_series(stats: EnsembleStats, tau: int, mode: QberMode = QberMode.JOINT) -> List[KeyRateRow]:
    rates = stats.router_rate()
    rows = []
    for s, tn in enumerate(total_noise(stats, tau, mode), start=1):
        r_router = float(rates[s - 1])
        if tn is None:
            rows.append(KeyRateRow(s, None, None, r_router, 0.0, None))
            continue
        r_inf = secret_fraction(tn.qber)
        rows.append(KeyRateRow(s, tn.qber, r_inf, r_router, secret_key_rate(r_inf, r_router), tn.output_fidelity))
    return rows


def peak_round(rows: Sequence[KeyRateRow]) -> Optional[int]:
    """Round of maximal key rate (earliest on ties); None if the key rate is zero throughout."""
    best = max(rows, key=lambda r: (r.key_rate, -r.round), default=None)
    if best is None or best.key_rate <= 0.0:
        return None
    return best.round


def non_decreasing_after(rows: Sequence[KeyRateRow], transient: int, rel_tol: float = 0.01) -> bool:
    """
    True when, from round `transient` on, the key rate never drops more than
    rel_tol below the highest value seen since that round.
    """
    high = 0.0
    for r in rows:
        if r.round < transient:
            continue
        if r.key_rate < high * (1.0 - rel_tol):
            return False
        high = max(high, r.key_rate)
    return True


# -------------------------
# Threshold helpers
# -------------------------

def qber_threshold() -> float:
    """Symmetric QBER q with 1 - 2 h(q) = 0 (about 0.110028)."""
    return float(brentq(lambda q: 1.0 - 2.0 * binary_entropy(q), 0.01, 0.5))


def max_storage_rounds_for_threshold(tau: int, threshold: Optional[float] = None, limit: int = 100_000) -> int:
    """
    Largest storage age delta for which Q_X stays at or below the threshold
    when A's qubit is fresh and both B qubits have been stored delta rounds.
    """
    q_max = qber_threshold() if threshold is None else threshold
    delta = 0
    while delta < limit:
        q = noise_for_fidelities([1.0, fidelity(delta + 1, tau), fidelity(delta + 1, tau)]).qber
        if max(q.q_x, q.max_q_ab) > q_max:
            return delta
        delta += 1
    logger.warning("THRESHOLD | no crossing below limit | tau=%d limit=%d", tau, limit)
    return limit
