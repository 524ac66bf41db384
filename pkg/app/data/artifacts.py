from __future__ import annotations

import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd

from app import __version__
from app.config import Params
from app.utils.logger import log_fields

logger = logging.getLogger("qrouter")

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.12g"

PathLike = Union[str, Path]


class ArtifactWriteError(OSError):
    pass


def _atomic_write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise ArtifactWriteError(f"cannot write {path}: {e}") from e


def header(params: Optional[Params], extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    h: Dict[str, Any] = {"schema_version": SCHEMA_VERSION, "code_version": __version__}
    if params is not None:
        h["params"] = params.to_dict()
    if extra:
        h.update(extra)
    return h


def write_csv(path: PathLike, df: pd.DataFrame, params: Optional[Params], extra: Optional[Dict[str, Any]] = None) -> Path:
    """Versioned CSV: '#' header lines (schema, code version, params JSON), then the table."""
    path = Path(path)
    lines = [f"# {k}={json.dumps(v, sort_keys=True)}" for k, v in header(params, extra).items()]
    buf = io.StringIO()
    df.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    _atomic_write(path, "\n".join(lines) + "\n" + buf.getvalue())
    logger.info(log_fields("ARTIFACT", kind="csv", path=path, rows=len(df)))
    return path


def write_json(path: PathLike, payload: Dict[str, Any], params: Optional[Params]) -> Path:
    path = Path(path)
    doc = header(params)
    doc.update(payload)
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    logger.info(log_fields("ARTIFACT", kind="json", path=path))
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def read_header(path: PathLike) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("# "):
                break
            key, _, raw = line[2:].rstrip("\n").partition("=")
            out[key] = json.loads(raw)
    return out
