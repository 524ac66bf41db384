from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

F_MIN = 0.25
F_TOL = 1e-12


def white_noise_prob(delta: int, tau: int) -> float:
    """p(delta) = exp(-delta/tau): weight of the undisturbed Bell state after delta storage rounds."""
    if delta < 0:
        raise ValueError(f"storage age must be >= 0, got {delta}")
    if tau < 1:
        raise ValueError(f"decoherence parameter must be >= 1, got {tau}")
    return math.exp(-delta / tau)


def fidelity_from_prob(p: float) -> float:
    return F_MIN + (1.0 - F_MIN) * p


@functools.lru_cache(maxsize=65536)
def fidelity(delta: int, tau: int) -> float:
    return fidelity_from_prob(white_noise_prob(delta, tau))


def check_fidelity(f: float) -> None:
    if not (F_MIN - F_TOL) <= f <= 1.0 + F_TOL:
        raise ValueError(f"fidelity out of [1/4, 1]: {f!r}")


@dataclass(frozen=True)
class Fidelities:
    """Per-party Bell-pair fidelities, party A first."""
    f: Tuple[float, ...]

    def __post_init__(self) -> None:
        for x in self.f:
            check_fidelity(x)

    @staticmethod
    def from_ages(ages: Sequence[int], tau: int) -> "Fidelities":
        return Fidelities(tuple(fidelity(int(d), tau) for d in ages))

    @property
    def n_parties(self) -> int:
        return len(self.f)

    def probs(self) -> Tuple[float, ...]:
        """Undisturbed-state weights p_i recovered from the fidelities."""
        return tuple((x - F_MIN) / (1.0 - F_MIN) for x in self.f)
