from __future__ import annotations

from pathlib import Path
from typing import List

import pandas as pd

from app.config import Params
from app.data.artifacts import write_csv, write_json
from app.experiments.spec import ExperimentSpec
from app.sim.ensemble import EnsembleStats, run_ensemble


def ensemble_for(spec: ExperimentSpec, params: Params) -> EnsembleStats:
    return run_ensemble(params, threads=spec.threads, chunk_samples=spec.chunk_samples, limit=spec.match_limit)


def rate_frame(stats: EnsembleStats) -> pd.DataFrame:
    ml = stats.mean_l()
    return pd.DataFrame(
        {
            "round": range(1, ml.size + 1),
            "mean_l": ml,
            "stderr_l": stats.stderr_l(),
            "router_rate": stats.router_rate(),
        }
    )


def cmd_simulate(spec: ExperimentSpec) -> List[Path]:
    p = spec.params
    stats = ensemble_for(spec, p)
    return [
        write_csv(spec.out("simulate_rate.csv"), rate_frame(stats), p),
        write_json(spec.out("simulate_ages.json"), stats.to_json(), p),
    ]
