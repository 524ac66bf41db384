from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Sequence

import pandas as pd

from app.data.artifacts import write_csv, write_json
from app.experiments.simulate import ensemble_for
from app.experiments.spec import ExperimentSpec
from app.keyrate.secret import KeyRateRow, QberMode, key_rate_series, peak_round
from app.sim.ensemble import EnsembleStats

logger = logging.getLogger("qrouter")

NAN = float("nan")


def key_rate_frame(rows: Sequence[KeyRateRow], n_parties: int) -> pd.DataFrame:
    recs = []
    for r in rows:
        rec: Dict[str, object] = {"round": r.round, "q_x_tot": r.qber.q_x if r.qber else NAN}
        for i in range(1, n_parties):
            rec[f"q_ab{i}_tot"] = r.qber.q_ab[i - 1] if r.qber else NAN
        rec["secret_fraction"] = NAN if r.secret_fraction is None else r.secret_fraction
        rec["router_rate"] = r.router_rate
        rec["key_rate"] = r.key_rate
        rec["output_fidelity"] = NAN if r.output_fidelity is None else r.output_fidelity
        recs.append(rec)
    return pd.DataFrame.from_records(recs)


def mode_discrepancy(joint: Sequence[KeyRateRow], marginal: Sequence[KeyRateRow]) -> float:
    """Largest relative Q_X difference between the two modes over rounds where both are defined."""
    worst = 0.0
    for a, b in zip(joint, marginal):
        if a.qber is None or b.qber is None or a.qber.q_x == 0.0:
            continue
        worst = max(worst, abs(a.qber.q_x - b.qber.q_x) / a.qber.q_x)
    return worst


def key_rate_tables(stats: EnsembleStats, tau: int) -> Dict[QberMode, List[KeyRateRow]]:
    return {mode: key_rate_series(stats, tau, mode) for mode in QberMode}


def cmd_key_rate(spec: ExperimentSpec) -> List[Path]:
    p = spec.params
    stats = ensemble_for(spec, p)
    tables = key_rate_tables(stats, p.decoherence_rounds)
    disc = mode_discrepancy(tables[QberMode.JOINT], tables[QberMode.MARGINAL])
    level = logging.WARNING if disc > 0.10 else logging.INFO
    logger.log(level, "QBER_MODES | max_rel_diff_q_x=%.4f", disc)

    paths = []
    summary: Dict[str, object] = {"max_rel_diff_q_x": disc}
    for mode, rows in tables.items():
        paths.append(write_csv(spec.out(f"key_rate_{mode.value}.csv"), key_rate_frame(rows, p.n_parties), p))
        summary[f"peak_round_{mode.value}"] = peak_round(rows)
        summary[f"key_rate_final_{mode.value}"] = rows[-1].key_rate
        logger.info(
            "KEY_RATE | mode=%s | peak_round=%s | K(s_c)=%.6g",
            mode.value,
            peak_round(rows),
            rows[-1].key_rate,
        )
    paths.append(write_json(spec.out("key_rate_summary.json"), summary, p))
    return paths
