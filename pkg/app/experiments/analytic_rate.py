from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Sequence

import pandas as pd

from app.data.artifacts import write_csv, write_json
from app.experiments.spec import ExperimentSpec
from app.rates.analytic import AnalyticRound, run_analytic, steady_state

logger = logging.getLogger("qrouter")


def analytic_frame(rows: Sequence[AnalyticRound], m: int) -> pd.DataFrame:
    recs = []
    for r in rows:
        rec = {"round": r.round}
        rec.update({f"prob_lambda_{l}": float(r.prob_lambda[l]) for l in range(m + 1)})
        rec.update({f"prob_sigma_{l}": float(r.prob_sigma[l]) for l in range(m + 1)})
        rec["expected_l"] = r.expected_l
        rec["router_rate"] = r.router_rate
        recs.append(rec)
    return pd.DataFrame.from_records(recs)


def cmd_analytic_rate(spec: ExperimentSpec) -> List[Path]:
    p = spec.params
    rows = run_analytic(p, force=spec.force)
    ss = steady_state(p, force=spec.force)
    logger.info(
        "ANALYTIC_RATE | N=%d m=%d w=%d eta=%.4g | R(s_c)=%.6f | steady=%.6f conv=%s",
        p.n_parties,
        p.mem_per_party,
        p.max_conn_len,
        p.transmittivity,
        rows[-1].router_rate,
        ss.rate,
        ss.convergence_round,
    )
    summary = {
        "router_rate_final": rows[-1].router_rate,
        "steady_state_expected_l": ss.expected_l,
        "steady_state_rate": ss.rate,
        "convergence_round": ss.convergence_round,
        "rounds_evolved": ss.rounds_evolved,
    }
    return [
        write_csv(spec.out("analytic_rate.csv"), analytic_frame(rows, p.mem_per_party), p),
        write_json(spec.out("analytic_summary.json"), summary, p),
    ]
