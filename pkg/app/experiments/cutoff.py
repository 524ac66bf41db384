from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from app.data.artifacts import write_csv, write_json
from app.experiments.key_rate import key_rate_frame, key_rate_tables
from app.experiments.simulate import ensemble_for
from app.experiments.spec import ExperimentSpec
from app.keyrate.secret import (
    KeyRateRow,
    QberMode,
    max_storage_rounds_for_threshold,
    non_decreasing_after,
    qber_threshold,
)

logger = logging.getLogger("qrouter")

DEFAULT_CUTOFFS = (8, 9, 10, 11, 12, 13)
# rounds skipped before the key-rate curve is expected to settle
SETTLE_TRANSIENT = 20
SETTLE_REL_TOL = 0.01

Curves = Dict[Optional[int], List[KeyRateRow]]


def cutoff_label(c: Optional[int]) -> str:
    return "none" if c is None else str(c)


def _ordered(cutoffs) -> List[Optional[int]]:
    finite = sorted(c for c in cutoffs if c is not None)
    return finite + ([None] if None in cutoffs else [])


def sweep_cutoff(spec: ExperimentSpec, cutoffs: Sequence[Optional[int]]) -> Dict[QberMode, Curves]:
    """Key-rate curves per QBER mode and cutoff; both modes share one ensemble per cutoff."""
    out: Dict[QberMode, Curves] = {mode: {} for mode in QberMode}
    for c in cutoffs:
        p = replace(spec.params, cutoff=c).checked()
        tables = key_rate_tables(ensemble_for(spec, p), p.decoherence_rounds)
        for mode, rows in tables.items():
            out[mode][c] = rows
    return out


def best_cutoff(curves: Curves) -> Optional[int]:
    """Cutoff with the largest key rate at the last round; ties go to the smaller cutoff."""
    order = _ordered(curves)
    return max(order, key=lambda c: (curves[c][-1].key_rate, -order.index(c)))


def settle_status(curves: Curves, transient: int = SETTLE_TRANSIENT, rel_tol: float = SETTLE_REL_TOL) -> Dict[str, bool]:
    return {cutoff_label(c): non_decreasing_after(curves[c], transient, rel_tol) for c in _ordered(curves)}


def stable_cutoff(curves: Curves, transient: int = SETTLE_TRANSIENT, rel_tol: float = SETTLE_REL_TOL) -> Optional[str]:
    """Largest cutoff whose key rate keeps from decreasing after the transient; None if no curve settles."""
    stable = [label for label, ok in settle_status(curves, transient, rel_tol).items() if ok]
    return stable[-1] if stable else None


def cmd_sweep_cutoff(spec: ExperimentSpec) -> List[Path]:
    p = spec.params
    cutoffs = spec.cutoffs or DEFAULT_CUTOFFS
    tables = sweep_cutoff(spec, cutoffs)

    frames = []
    for mode, curves in tables.items():
        for c, rows in curves.items():
            df = key_rate_frame(rows, p.n_parties)
            df.insert(0, "mode", mode.value)
            df.insert(0, "cutoff", cutoff_label(c))
            frames.append(df)

    q_max = qber_threshold()
    max_age = max_storage_rounds_for_threshold(p.decoherence_rounds, q_max)
    summary: Dict[str, object] = {
        "qber_threshold": q_max,
        "max_storage_rounds_below_threshold": max_age,
        "settle_transient": SETTLE_TRANSIENT,
        "settle_rel_tol": SETTLE_REL_TOL,
    }
    for mode, curves in tables.items():
        best = best_cutoff(curves)
        stable = stable_cutoff(curves)
        logger.info(
            "CUTOFF_SWEEP | mode=%s | cutoffs=%s | best=%s | stable=%s | K(s_c)=%.6g | max_age_below_threshold=%d",
            mode.value,
            ",".join(cutoff_label(c) for c in cutoffs),
            cutoff_label(best),
            stable,
            curves[best][-1].key_rate,
            max_age,
        )
        summary[mode.value] = {
            "best_cutoff": best,
            "stable_cutoff": stable,
            "non_decreasing_after_transient": settle_status(curves),
            "key_rate_final": {cutoff_label(c): rows[-1].key_rate for c, rows in curves.items()},
            "router_rate_final": {cutoff_label(c): rows[-1].router_rate for c, rows in curves.items()},
        }
    return [
        write_csv(spec.out("sweep_cutoff.csv"), pd.concat(frames, ignore_index=True), p),
        write_json(spec.out("sweep_cutoff_summary.json"), summary, p),
    ]
