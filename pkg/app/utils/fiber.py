from __future__ import annotations

import math

# Attenuation of commercial fiber at 1550 nm, dB/km.
DEFAULT_ALPHA_DB_PER_KM = 0.2


def fiber_distance_km(eta: float, alpha: float = DEFAULT_ALPHA_DB_PER_KM) -> float:
    """
    Party-to-router distance for a channel transmittivity: d = -10/alpha * log10(eta).
    eta = 0.1 at alpha = 0.2 dB/km gives 50 km.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"transmittivity must be in (0,1], got {eta}")
    return -10.0 / alpha * math.log10(eta)


def transmittivity_for_distance(d_km: float, alpha: float = DEFAULT_ALPHA_DB_PER_KM) -> float:
    if d_km < 0:
        raise ValueError(f"distance must be >= 0, got {d_km}")
    return 10.0 ** (-alpha * d_km / 10.0)
