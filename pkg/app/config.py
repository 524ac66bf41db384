from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

logger = logging.getLogger("qrouter")

# Above this many memories the analytic engine's 2^(N*m) state space is impractical.
ANALYTIC_DIM_LIMIT = 12


def _getenv(name: str, default: Optional[str] = None) -> str:
    val = os.getenv(name, default)
    if val is None:
        raise RuntimeError(f"Missing required env var: {name}")
    return val


def _getenv_int(name: str, default: str) -> int:
    raw = _getenv(name, default)
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None


class Strategy(str, Enum):
    S0 = "S0"    # first maximum matching in canonical order
    S1A = "S1a"  # minimize sum of W1
    S1B = "S1b"  # maximize sum of W1
    S2 = "S2"    # minimize sum of W2

    @staticmethod
    def parse(raw: str) -> "Strategy":
        s = raw.strip()
        for st in Strategy:
            if st.value.lower() == s.lower():
                return st
        raise ValueError(f"unknown strategy: {raw!r}")


class ParamsError(ValueError):
    def __init__(self, errors: List[str]) -> None:
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class Params:
    n_parties: int = 3
    mem_per_party: int = 4
    max_conn_len: int = 1
    transmittivity: float = 0.1
    decoherence_rounds: int = 100
    p_ghz: float = 1.0
    strategy: Strategy = Strategy.S2
    cutoff: Optional[int] = None
    total_rounds: int = 60
    samples: int = 50_000
    rng_seed: int = 20240101

    @property
    def n_memories(self) -> int:
        return self.n_parties * self.mem_per_party

    def with_overrides(self, overrides: Iterable[Tuple[str, str]]) -> "Params":
        changes: Dict[str, object] = {}
        for key, raw in overrides:
            changes[key] = _parse_value(key, raw)
        return replace(self, **changes)

    def checked(self, analytic: bool = False) -> "Params":
        errors = validate(self, analytic=analytic)
        if errors:
            raise ParamsError(errors)
        return self

    def to_dict(self) -> Dict[str, object]:
        d = asdict(self)
        d["strategy"] = self.strategy.value
        return d

    def to_config_text(self) -> str:
        lines = []
        for k, v in self.to_dict().items():
            lines.append(f"{k} = {'none' if v is None else v}")
        return "\n".join(lines) + "\n"


_INT_KEYS = {"n_parties", "mem_per_party", "max_conn_len", "decoherence_rounds", "total_rounds", "samples", "rng_seed"}
_FLOAT_KEYS = {"transmittivity", "p_ghz"}
CONFIG_KEYS = tuple(f.name for f in fields(Params))


def _parse_value(key: str, raw: str) -> object:
    if key not in CONFIG_KEYS:
        raise ParamsError([f"unknown config key: {key}"])
    s = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(s, 0)
        if key in _FLOAT_KEYS:
            return float(s)
        if key == "strategy":
            return Strategy.parse(s)
        if key == "cutoff":
            return None if s.lower() in ("", "none", "inf", "off") else int(s)
    except ValueError as e:
        raise ParamsError([f"bad value for {key}: {raw!r} ({e})"]) from e
    raise ParamsError([f"unhandled config key: {key}"])


def parse_config_text(text: str, base: Optional[Params] = None) -> Params:
    pairs: List[Tuple[str, str]] = []
    errors: List[str] = []
    for n, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            errors.append(f"line {n}: expected 'key = value'")
            continue
        k, v = body.split("=", 1)
        pairs.append((k.strip(), v))
    if errors:
        raise ParamsError(errors)
    return (base or Params()).with_overrides(pairs)


def load_params(path: Optional[Path], overrides: Iterable[Tuple[str, str]] = ()) -> Params:
    params = Params()
    if path is not None:
        params = parse_config_text(Path(path).read_text(encoding="utf-8"), params)
    return params.with_overrides(overrides)


def validate(params: Params, analytic: bool = False) -> List[str]:
    """Return every violated parameter invariant (empty list means ok)."""
    errors: List[str] = []
    p = params
    if p.n_parties < 2:
        errors.append("n_parties must be >= 2")
    if p.mem_per_party < 1:
        errors.append("mem_per_party must be >= 1")
    if p.max_conn_len < 0:
        errors.append("max_conn_len must be >= 0")
    elif p.mem_per_party >= 1 and p.max_conn_len > p.mem_per_party - 1:
        errors.append("w exceeds m−1")
    if not 0.0 <= p.transmittivity <= 1.0:
        errors.append("transmittivity out of [0,1]")
    if not 0.0 <= p.p_ghz <= 1.0:
        errors.append("p_ghz out of [0,1]")
    if p.decoherence_rounds < 1:
        errors.append("decoherence_rounds must be a positive integer")
    if p.cutoff is not None and p.cutoff < 1:
        errors.append("cutoff must be a positive integer")
    if p.total_rounds < 1:
        errors.append("total_rounds must be >= 1")
    if p.samples < 1:
        errors.append("samples must be >= 1")
    if not -(2**63) <= p.rng_seed < 2**64:
        errors.append("rng_seed must fit in 64 bits")
    if not isinstance(p.strategy, Strategy):
        errors.append(f"unknown strategy: {p.strategy!r}")
    if analytic and p.n_memories > ANALYTIC_DIM_LIMIT:
        # warning only: the analytic engine has its own guard
        logger.warning(
            "PARAMS_WARN | n_memories=%d > %d | analytic engine runtime becomes infeasible",
            p.n_memories,
            ANALYTIC_DIM_LIMIT,
        )
    return errors


@dataclass(frozen=True)
class RuntimeConfig:
    log_level: str
    out_dir: str
    threads: int
    match_limit: int
    chunk_samples: int

    @staticmethod
    def load() -> "RuntimeConfig":
        return RuntimeConfig(
            log_level=_getenv("LOG_LEVEL", "INFO").upper(),
            out_dir=_getenv("QROUTER_OUT_DIR", "out"),
            threads=_getenv_int("QROUTER_THREADS", "1"),
            match_limit=_getenv_int("QROUTER_MATCH_LIMIT", "5000000"),
            chunk_samples=_getenv_int("QROUTER_CHUNK_SAMPLES", "500"),
        )
