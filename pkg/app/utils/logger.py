import itertools
import logging
import os
import sys
from typing import IO, Any, Optional

LOGGER_NAME = "qrouter"
LOG_FORMAT = "%(asctime)s.%(msecs)03d | %(levelname)s | %(name)s | %(seq)d | %(proc)s | %(message)s"

_SEQ = itertools.count(1)


class _RunContextFilter(logging.Filter):
    """Stamps a per-process sequence number and the worker tag on every record."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.seq = next(_SEQ)  # type: ignore[attr-defined]
        name = record.processName
        record.proc = "main" if name == "MainProcess" else f"{name}:{record.process}"  # type: ignore[attr-defined]
        return True


def setup_logger(level: Optional[str] = None, stream: Optional[IO[str]] = None) -> logging.Logger:
    """
    Configure the `qrouter` logger once per CLI invocation.

    Log lines go to stderr; stdout is reserved for tables printed by
    show-instance and verify.
    """
    level = (level or os.getenv("LOG_LEVEL", "INFO")).upper()

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)
    logger.propagate = False
    for h in list(logger.handlers):
        logger.removeHandler(h)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setLevel(level)
    handler.addFilter(_RunContextFilter())
    handler.setFormatter(logging.Formatter(fmt=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    logger.addHandler(handler)
    return logger


def log_fields(tag: str, **fields: Any) -> str:
    """'TAG | k1=v1 | k2=v2' in keyword order."""
    return " | ".join([tag] + [f"{k}={v}" for k, v in fields.items()])
