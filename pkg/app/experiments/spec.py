from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

from app.config import Params
from app.matching.bruteforce import DEFAULT_SUBSET_LIMIT
from app.sim.ensemble import DEFAULT_CHUNK_SAMPLES

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_VERIFY_FAILED = 3


class Command(str, Enum):
    ANALYTIC_RATE = "analytic-rate"
    SIMULATE = "simulate"
    KEY_RATE = "key-rate"
    COMPARE_STRATEGIES = "compare-strategies"
    SWEEP_CUTOFF = "sweep-cutoff"
    VERIFY = "verify"
    SHOW_INSTANCE = "show-instance"


@dataclass(frozen=True)
class ExperimentSpec:
    command: Command
    params: Params
    output_dir: Path
    overrides: Tuple[Tuple[str, str], ...] = ()
    force: bool = False
    quick: bool = False
    threads: int = 1
    chunk_samples: int = DEFAULT_CHUNK_SAMPLES
    match_limit: int = DEFAULT_SUBSET_LIMIT
    cutoffs: Tuple[Optional[int], ...] = ()
    bits: Optional[Tuple[Tuple[int, ...], ...]] = field(default=None)

    def out(self, name: str) -> Path:
        return self.output_dir / name
