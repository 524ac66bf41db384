from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from app import __version__
from app.config import ParamsError, RuntimeConfig, load_params
from app.data.artifacts import ArtifactWriteError
from app.experiments.analytic_rate import cmd_analytic_rate
from app.experiments.cutoff import cmd_sweep_cutoff
from app.experiments.key_rate import cmd_key_rate
from app.experiments.show_instance import cmd_show_instance, parse_bits
from app.experiments.simulate import cmd_simulate
from app.experiments.spec import EXIT_INVALID, EXIT_OK, EXIT_USAGE, Command, ExperimentSpec
from app.experiments.strategies import cmd_compare_strategies
from app.experiments.verify import cmd_verify
from app.matching.bruteforce import MatchingTooLarge
from app.rates.analytic import DimensionGuardError
from app.utils.logger import log_fields, setup_logger


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _override(raw: str) -> Tuple[str, str]:
    key, sep, value = raw.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected key=value, got {raw!r}")
    return key.strip(), value


def _cutoffs(raw: str) -> Tuple[Optional[int], ...]:
    out: List[Optional[int]] = []
    for tok in raw.split(","):
        tok = tok.strip().lower()
        if tok in ("none", "inf", "off"):
            out.append(None)
            continue
        try:
            out.append(int(tok))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad cutoff {tok!r}") from None
    return tuple(out)


def _bits(raw: str):
    try:
        return parse_bits(raw)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="key = value parameter file")
    common.add_argument("--set", dest="overrides", type=_override, action="append", default=[], metavar="KEY=VALUE")
    common.add_argument("--out", type=Path, default=None, help="output directory (QROUTER_OUT_DIR)")
    common.add_argument("--force", action="store_true", help="lift the analytic N*m <= 12 guard")
    common.add_argument("--quick", action="store_true", help="reduced verification grids")
    common.add_argument("--threads", type=int, default=None, help="worker processes (QROUTER_THREADS)")
    common.add_argument("--cutoffs", type=_cutoffs, default=(), help="comma list, e.g. 8,9,10,none")
    common.add_argument("--bits", type=_bits, default=None, help="configuration rows, e.g. 1010,1101,0011")

    parser = _Parser(prog="qrouter", description="Multiplexed quantum-router rate and key-rate toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in Command:
        sub.add_parser(cmd.value, parents=[common])
    return parser


def _run_show_instance(spec: ExperimentSpec) -> int:
    cmd_show_instance(spec)
    return EXIT_OK


def _run_verify(spec: ExperimentSpec) -> int:
    return cmd_verify(spec)


def _artifacts(fn: Callable[[ExperimentSpec], Sequence[Path]]) -> Callable[[ExperimentSpec], int]:
    def run(spec: ExperimentSpec) -> int:
        for path in fn(spec):
            print(path)
        return EXIT_OK

    return run


HANDLERS: Dict[Command, Callable[[ExperimentSpec], int]] = {
    Command.ANALYTIC_RATE: _artifacts(cmd_analytic_rate),
    Command.SIMULATE: _artifacts(cmd_simulate),
    Command.KEY_RATE: _artifacts(cmd_key_rate),
    Command.COMPARE_STRATEGIES: _artifacts(cmd_compare_strategies),
    Command.SWEEP_CUTOFF: _artifacts(cmd_sweep_cutoff),
    Command.VERIFY: _run_verify,
    Command.SHOW_INSTANCE: _run_show_instance,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    log = setup_logger("INFO")
    try:
        rc = RuntimeConfig.load()
        log = setup_logger(rc.log_level)
    except ValueError as e:
        log.error("ENV | %s", e)
        return EXIT_INVALID
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    command = Command(args.command)
    try:
        params = load_params(args.config, args.overrides).checked(analytic=command == Command.ANALYTIC_RATE)
        spec = ExperimentSpec(
            command=command,
            params=params,
            output_dir=args.out or Path(rc.out_dir),
            overrides=tuple(args.overrides),
            force=args.force,
            quick=args.quick,
            threads=args.threads if args.threads is not None else rc.threads,
            chunk_samples=rc.chunk_samples,
            match_limit=rc.match_limit,
            cutoffs=args.cutoffs,
            bits=args.bits,
        )
        log.info(log_fields("RUN", cmd=command.value, version=__version__, params=params.to_dict()))
        return HANDLERS[command](spec)
    except ParamsError as e:
        for err in e.errors:
            log.error("PARAMS | %s", err)
        return EXIT_INVALID
    except (MatchingTooLarge, DimensionGuardError, ArtifactWriteError) as e:
        log.error("GUARD | %s", e)
        return EXIT_INVALID
    except OSError as e:
        log.error("IO | %s", e)
        return EXIT_INVALID
    except Exception as e:
        log.exception("Unhandled error: %s", e)
        raise


if __name__ == "__main__":
    sys.exit(main())
