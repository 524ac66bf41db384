from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from typing import Callable, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import norm

from app.config import Params, Strategy
from app.data.artifacts import write_csv
from app.data.models import BitConfiguration
from app.experiments.show_instance import EXAMPLE_ROWS
from app.experiments.spec import EXIT_OK, EXIT_VERIFY_FAILED, ExperimentSpec
from app.keyrate.ghz import (
    GhzDiagonal3,
    QberSet,
    circuit_oracle_3,
    ghz_diag_lambdas,
    lambda_arrays,
    qber_arrays,
)
from app.keyrate.noise import Fidelities
from app.keyrate.oracle import circuit_density, offdiagonal_weight
from app.keyrate.secret import secret_fraction
from app.matching.bruteforce import max_matching_bruteforce
from app.matching.flow import max_matching_flow3
from app.matching.hypergraph import build_instance, check_bounds, enumerate_hyperedges
from app.matching.router import SolverRouter
from app.rates.analytic import run_analytic, steady_state
from app.sim.ensemble import run_ensemble

logger = logging.getLogger("qrouter")

LambdasFn = Callable[[Fidelities], GhzDiagonal3]

# two-sided 3-sigma false-alarm rate, split across rounds
ALPHA_3SIGMA = 0.0027
# analytic-vs-MC grid covers every N*m up to this many memory bits
MC_GRID_BITS = 9
STEADY_REL_TOL = 0.01
STEADY_WINDOW = 50
STEADY_BURN_IN_CAP = 200


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    reason: str
    seconds: float = 0.0


def _timed(name: str, fn: Callable[[], Tuple[bool, str]]) -> CheckResult:
    t0 = time.time()
    try:
        ok, reason = fn()
    except Exception as e:  # a crashing check is a failing check
        logger.exception("VERIFY | %s | crashed", name)
        ok, reason = False, f"{type(e).__name__}: {e}"
    res = CheckResult(name, ok, reason, time.time() - t0)
    logger.log(logging.INFO if ok else logging.ERROR, "VERIFY | %s | passed=%s | %s", name, ok, reason)
    return res


def random_config(rng: np.random.Generator, n: int, m: int) -> BitConfiguration:
    fill = rng.uniform(0.2, 0.9)
    return BitConfiguration(tuple(int(x) for x in (rng.random(n * m) < fill)), n, m)


def bonferroni_z(rounds: int) -> float:
    return float(norm.ppf(1.0 - ALPHA_3SIGMA / (2.0 * rounds)))


# -------------------------
# Matching
# -------------------------

def check_worked_example() -> Tuple[bool, str]:
    config = BitConfiguration.from_rows(EXAMPLE_ROWS)
    router = SolverRouter()
    got = {w: len(router.solve(config, w, Strategy.S0)) for w in (3, 2, 1, 0)}
    flows = {w: len(max_matching_flow3(config, w)) for w in (3, 2, 1, 0)}
    want = {3: 2, 2: 2, 1: 1, 0: 0}
    edges = {e.b1_first_labels() for e in enumerate_hyperedges(config, 1)}
    want_edges = {(2, 3, 3), (2, 3, 4), (4, 3, 3), (4, 3, 4)}
    if got != want or flows != want:
        return False, f"cardinalities {got} / flow {flows}, expected {want}"
    if edges != want_edges:
        return False, f"w=1 hyperedges {sorted(edges)}"
    return True, "cardinalities 2,2,1,0 and w=1 hyperedges match"


def check_flow_vs_bruteforce(rng: np.random.Generator, count: int) -> Tuple[bool, str]:
    for i in range(count):
        m = int(rng.integers(1, 6))
        config = random_config(rng, 3, m)
        sizes = []
        for w in range(m):
            brute = max_matching_bruteforce(build_instance(config, w))
            flow = max_matching_flow3(config, w)
            if len(brute) != len(flow) or not brute.is_disjoint() or not flow.is_disjoint():
                return False, f"bits={config.bits} w={w}: brute={len(brute)} flow={len(flow)}"
            sizes.append(len(brute))
        if sizes != sorted(sizes):
            return False, f"cardinality not monotone in w for bits={config.bits}: {sizes}"
    return True, f"{count} random tripartite instances agree"


def check_bounds_multiparty(rng: np.random.Generator, count: int) -> Tuple[bool, str]:
    below = 0
    for i in range(count):
        n = 4 + (i % 2)
        m = int(rng.integers(1, 4))
        config = random_config(rng, n, m)
        for w in range(m):
            got = len(max_matching_bruteforce(build_instance(config, w)))
            bc = check_bounds(config, w, got)
            if bc.reason == "above_upper_bound":
                return False, f"N={n} bits={config.bits} w={w}: l={got} > upper={bc.upper}"
            below += bc.reason == "below_lower_bound"
    return True, f"{count} instances within upper bound; degree lower bound missed {below} times"


# -------------------------
# Noise model
# -------------------------

def check_lambda_oracle(rng: np.random.Generator, count: int, lambdas_fn: LambdasFn) -> Tuple[bool, str]:
    worst = 0.0
    for _ in range(count):
        fids = Fidelities(tuple(float(x) for x in rng.uniform(0.25, 1.0, 3)))
        a = np.array(lambdas_fn(fids).as_tuple())
        b = np.array(circuit_oracle_3(fids).as_tuple())
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst < 1e-10, f"max |formula - circuit| = {worst:.3g} over {count} triples"


def check_oracle_ghz_diagonal(rng: np.random.Generator, count: int) -> Tuple[bool, str]:
    worst = 0.0
    for i in range(count):
        n = 3 + (i % 3)
        rho = circuit_density([float(x) for x in rng.uniform(0.25, 1.0, n)])
        worst = max(worst, offdiagonal_weight(rho), abs(float(np.trace(rho)) - 1.0))
    return worst < 1e-12, f"off-diagonal/trace deviation {worst:.3g} for N=3..5"


def check_lambda_grid(points: int) -> Tuple[bool, str]:
    g = np.linspace(0.25, 1.0, points)
    fa, fb1, fb2 = np.meshgrid(g, g, g, indexing="ij")
    l0p, l0m, l1, l2, l3 = lambda_arrays(fa, fb1, fb2)
    trace_err = float(np.max(np.abs(l0p + l0m + 2 * (l1 + l2 + l3) - 1.0)))
    low = float(min(x.min() for x in (l0p, l0m, l1, l2, l3)))
    ok = trace_err < 1e-12 and low >= -1e-15
    return ok, f"{points}^3 grid: trace error {trace_err:.3g}, min lambda {low:.3g}"


def check_fidelity_monotone(points: int) -> Tuple[bool, str]:
    """lambda0+ never falls and no QBER rises when any single fidelity increases."""
    g = np.linspace(0.25, 1.0, points)
    grid = np.meshgrid(g, g, g, indexing="ij")
    l0p = lambda_arrays(*grid)[0]
    qbers = qber_arrays(*grid)
    worst_lambda = min(float(np.diff(l0p, axis=ax).min()) for ax in range(3))
    worst_q = max(float(np.diff(q, axis=ax).max()) for q in qbers for ax in range(3))
    ok = worst_lambda >= -1e-12 and worst_q <= 1e-12
    return ok, f"{points}^3 grid: min d(lambda0+) {worst_lambda:.3g}, max dQ {worst_q:.3g}"


def check_lambda_corners(lambdas_fn: LambdasFn) -> Tuple[bool, str]:
    perfect = np.array(lambdas_fn(Fidelities((1.0, 1.0, 1.0))).as_tuple())
    mixed = np.array(lambdas_fn(Fidelities((0.25, 0.25, 0.25))).as_tuple())
    ok = np.allclose(perfect, [1, 0, 0, 0, 0], atol=1e-12) and np.allclose(mixed, 0.125, atol=1e-12)
    return bool(ok), f"(1,1,1)->{np.round(perfect, 12).tolist()} (1/4,..)->{np.round(mixed, 12).tolist()}"


def check_threshold() -> Tuple[bool, str]:
    def sf(q: float) -> float:
        return secret_fraction(QberSet(q, (q, q)))

    at, below, above = sf(0.11), sf(0.105), sf(0.115)
    ok = abs(at) <= 0.01 and below > 0.0 and above == 0.0
    return ok, f"r(0.105)={below:.4g} r(0.11)={at:.4g} r(0.115)={above:.4g}"


# -------------------------
# Rates
# -------------------------

def analytic_vs_mc(params: Params, threads: int = 1) -> Tuple[bool, str]:
    """Per-round <l> within Bonferroni-corrected 3 sigma of the analytic value."""
    rows = run_analytic(params)
    stats = run_ensemble(params, threads=threads)
    mc = stats.mean_l()
    z = bonferroni_z(params.total_rounds)
    ls = np.arange(params.mem_per_party + 1)
    worst = 0.0
    for r in rows:
        var = float(np.dot(ls ** 2, r.prob_sigma)) - r.expected_l ** 2
        se = np.sqrt(max(var, 0.0) / params.samples)
        diff = abs(mc[r.round - 1] - r.expected_l)
        if se == 0.0:
            if diff > 1e-12:
                return False, f"round {r.round}: deterministic <l>={r.expected_l} but MC {mc[r.round - 1]}"
            continue
        worst = max(worst, diff / se)
        if diff > z * se:
            return False, f"round {r.round}: |{mc[r.round - 1]:.5f} - {r.expected_l:.5f}| = {diff / se:.2f} se > {z:.2f}"
    return True, f"max deviation {worst:.2f} se (limit {z:.2f})"


def steady_vs_mc(params: Params, threads: int = 1, window: int = STEADY_WINDOW) -> Tuple[bool, str]:
    """
    Steady-state router rate from the analytic chain against the Monte Carlo
    per-round rate averaged over `window` rounds after the chain has converged.
    """
    ss = steady_state(params)
    burn_in = min(ss.convergence_round or STEADY_BURN_IN_CAP, STEADY_BURN_IN_CAP)
    p = replace(params, total_rounds=burn_in + window)
    stats = run_ensemble(p, threads=threads)
    m = params.mem_per_party
    late = stats.mean_l()[burn_in:] / m
    se = float(np.sqrt(np.mean(stats.stderr_l()[burn_in:] ** 2) / window)) / m
    mc_rate = float(late.mean())
    diff = abs(mc_rate - ss.rate)
    # 1% band, widened to 3 se when the ensemble is too small to resolve it
    tol = max(STEADY_REL_TOL * ss.rate, 3.0 * se)
    msg = f"analytic {ss.rate:.5f} vs MC {mc_rate:.5f} (rounds {burn_in + 1}..{burn_in + window}, tol {tol:.2g})"
    return diff <= tol, msg


def mc_grid(quick: bool) -> List[Tuple[int, int, int, float]]:
    if quick:
        return [(2, 1, 0, 0.5), (2, 2, 1, 0.5), (3, 1, 0, 0.5), (3, 2, 1, 0.1)]
    out = []
    for n in (2, 3, 4):
        for m in range(1, MC_GRID_BITS // n + 1):
            for w in range(m):
                for eta in (0.1, 0.5):
                    out.append((n, m, w, eta))
    return out


def steady_grid(quick: bool) -> List[Tuple[int, int, int, float]]:
    if quick:
        return [(2, 1, 0, 0.5), (3, 2, 1, 0.5)]
    return [(2, 2, 1, 0.5), (2, 4, 2, 0.5), (3, 2, 1, 0.5), (3, 3, 1, 0.5), (4, 2, 1, 0.5), (3, 3, 0, 0.3)]


# -------------------------
# Suite
# -------------------------

def _grid_params(params: Params, n: int, m: int, w: int, eta: float, samples: int, **kw) -> Params:
    return replace(
        params,
        n_parties=n,
        mem_per_party=m,
        max_conn_len=w,
        transmittivity=eta,
        strategy=Strategy.S0,
        cutoff=None,
        samples=samples,
        **kw,
    )


def run_verify(
    params: Params,
    quick: bool = False,
    lambdas_fn: LambdasFn = ghz_diag_lambdas,
    threads: int = 1,
) -> List[CheckResult]:
    rng = np.random.default_rng(params.rng_seed & ((1 << 64) - 1))
    checks: List[CheckResult] = [
        _timed("worked_example", check_worked_example),
        _timed("flow_vs_bruteforce", lambda: check_flow_vs_bruteforce(rng, 60 if quick else 200)),
        _timed("bounds_n4_n5", lambda: check_bounds_multiparty(rng, 20 if quick else 100)),
        _timed("lambda_vs_circuit", lambda: check_lambda_oracle(rng, 100 if quick else 1000, lambdas_fn)),
        _timed("circuit_ghz_diagonal", lambda: check_oracle_ghz_diagonal(rng, 6 if quick else 30)),
        _timed("lambda_grid", lambda: check_lambda_grid(12 if quick else 50)),
        _timed("fidelity_monotone", lambda: check_fidelity_monotone(12 if quick else 50)),
        _timed("lambda_corners", lambda: check_lambda_corners(lambdas_fn)),
        _timed("secret_threshold", check_threshold),
    ]
    rounds = 10 if quick else 30
    samples = 2000 if quick else params.samples
    for n, m, w, eta in mc_grid(quick):
        p = _grid_params(params, n, m, w, eta, samples, total_rounds=rounds)
        checks.append(_timed(f"analytic_vs_mc_N{n}_m{m}_w{w}_eta{eta:g}", lambda p=p: analytic_vs_mc(p, threads)))
    for n, m, w, eta in steady_grid(quick):
        p = _grid_params(params, n, m, w, eta, samples)
        checks.append(_timed(f"steady_state_N{n}_m{m}_w{w}_eta{eta:g}", lambda p=p: steady_vs_mc(p, threads)))
    return checks


def format_table(results: Sequence[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(width)}  result  time    reason"]
    for r in results:
        lines.append(f"{r.name.ljust(width)}  {'PASS' if r.passed else 'FAIL':6}  {r.seconds:6.2f}  {r.reason}")
    return "\n".join(lines)


def cmd_verify(spec: ExperimentSpec, lambdas_fn: LambdasFn = ghz_diag_lambdas) -> int:
    results = run_verify(spec.params, quick=spec.quick, lambdas_fn=lambdas_fn, threads=spec.threads)
    print(format_table(results))
    df = pd.DataFrame(
        {
            "check": [r.name for r in results],
            "passed": [r.passed for r in results],
            "reason": [r.reason for r in results],
        }
    )
    write_csv(spec.out("verify_report.csv"), df, spec.params, {"quick": spec.quick})
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error("VERIFY_FAILED | %d/%d | %s", len(failed), len(results), ",".join(failed))
        return EXIT_VERIFY_FAILED
    logger.info("VERIFY_OK | %d checks", len(results))
    return EXIT_OK
