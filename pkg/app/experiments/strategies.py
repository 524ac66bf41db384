from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from app.config import Strategy
from app.data.artifacts import write_csv, write_json
from app.experiments.key_rate import key_rate_frame, key_rate_tables
from app.experiments.simulate import ensemble_for
from app.experiments.spec import ExperimentSpec
from app.keyrate.secret import KeyRateRow, QberMode, peak_round

logger = logging.getLogger("qrouter")


@dataclass(frozen=True)
class SoftCheck:
    passed: bool
    reason: str


def strategy_tables(spec: ExperimentSpec) -> Dict[QberMode, Dict[Strategy, List[KeyRateRow]]]:
    """All strategies on the same rng_seed: sample i sees the same storage draws under each."""
    out: Dict[QberMode, Dict[Strategy, List[KeyRateRow]]] = {mode: {} for mode in QberMode}
    for st in Strategy:
        p = replace(spec.params, strategy=st)
        for mode, rows in key_rate_tables(ensemble_for(spec, p), p.decoherence_rounds).items():
            out[mode][st] = rows
    return out


def compare_strategies(spec: ExperimentSpec, mode: QberMode = QberMode.JOINT) -> Dict[Strategy, List[KeyRateRow]]:
    return strategy_tables(spec)[mode]


def check_dominance(curves: Dict[Strategy, Sequence[KeyRateRow]], best: Strategy = Strategy.S2) -> SoftCheck:
    final = {st: rows[-1].key_rate for st, rows in curves.items()}
    losers = [st.value for st, k in final.items() if st != best and k > final[best]]
    if losers:
        return SoftCheck(False, f"{best.value} below {','.join(losers)} at s_c={len(curves[best])}")
    return SoftCheck(True, f"{best.value} long-run key rate {final[best]:.6g} is highest")


def crossover_round(early: Sequence[KeyRateRow], late: Sequence[KeyRateRow]) -> Optional[int]:
    """First round after which `late` stays ahead of `early`, provided `early` led at some point before."""
    led = False
    for a, b in zip(early, late):
        if a.key_rate > b.key_rate:
            led = True
        elif led and b.key_rate >= a.key_rate:
            if all(y.key_rate >= x.key_rate for x, y in zip(early[b.round - 1:], late[b.round - 1:])):
                return b.round
    return None


def check_crossover(curves: Dict[Strategy, Sequence[KeyRateRow]]) -> SoftCheck:
    s = crossover_round(curves[Strategy.S1A], curves[Strategy.S0])
    if s is None:
        return SoftCheck(False, "no S1a->S0 crossover observed")
    return SoftCheck(True, f"S0 overtakes S1a at round {s}")


def cmd_compare_strategies(spec: ExperimentSpec) -> List[Path]:
    p = spec.params
    tables = strategy_tables(spec)
    curves = tables[QberMode.JOINT]

    frames = []
    for mode, by_strategy in tables.items():
        for st, rows in by_strategy.items():
            df = key_rate_frame(rows, p.n_parties)
            df.insert(0, "mode", mode.value)
            df.insert(0, "strategy", st.value)
            frames.append(df)

    checks = {"dominance": check_dominance(curves), "crossover": check_crossover(curves)}
    for name, c in checks.items():
        logger.log(logging.INFO if c.passed else logging.WARNING, "STRATEGY_CHECK | %s | passed=%s | %s", name, c.passed, c.reason)

    summary = {
        "strategies": {
            mode.value: {
                st.value: {"key_rate_final": rows[-1].key_rate, "peak_round": peak_round(rows)}
                for st, rows in by_strategy.items()
            }
            for mode, by_strategy in tables.items()
        },
        "best_long_run": max(curves, key=lambda st: curves[st][-1].key_rate).value,
        "checks": {name: {"passed": c.passed, "reason": c.reason} for name, c in checks.items()},
    }
    return [
        write_csv(spec.out("compare_strategies.csv"), pd.concat(frames, ignore_index=True), p),
        write_json(spec.out("compare_strategies_summary.json"), summary, p),
    ]
