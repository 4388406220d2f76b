"""File formats: MatrixMarket dense arrays, CSV traces, JSON documents."""
import csv
import json
import math
import re
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .errors import ParseError

TRACE_COLUMNS = ("iter", "residual_w", "dist_x", "dist_y", "clipped_x", "clipped_y", "millis")
_INT_COLUMNS = {"iter", "clipped_x", "clipped_y"}
_LINE_RE = re.compile(r"[Ll]ine (\d+)")


def write_matrix(path, a):
    """Dense MatrixMarket array file, column-major, 17 significant digits."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    scipy.io.mmwrite(str(path), a, precision=17)


def _scan_for_error(path):
    # fallback when the reader's message has no line number
    with open(path) as fh:
        header_done = False
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("%"):
                continue
            if not header_done:
                header_done = True
                continue
            for tok in text.split():
                try:
                    float(tok)
                except ValueError:
                    return lineno
    return None


def read_matrix(path):
    """Read a MatrixMarket file into a dense float64 array.

    Any malformed content raises :class:`ParseError` with the offending
    line when it can be located.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", str(path))
    try:
        data = scipy.io.mmread(str(path))
    except (ValueError, IndexError, TypeError, OverflowError) as exc:
        found = _LINE_RE.search(str(exc))
        line = int(found.group(1)) if found else _scan_for_error(path)
        raise ParseError(str(exc), str(path), line) from exc
    if scipy.sparse.issparse(data):
        data = data.toarray()
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ParseError("expected a matrix", str(path))
    if not np.isfinite(data).all():
        raise ParseError("matrix contains NaN or Inf", str(path))
    return data


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_trace(path, trace, timing=True):
    """One CSV row per iteration in :data:`TRACE_COLUMNS` order.

    ``timing=False`` writes ``millis`` as 0 so the file is reproducible.
    """
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(TRACE_COLUMNS)
        for r in trace:
            out.writerow([
                _fmt(r.iteration), _fmt(r.residual_w), _fmt(r.dist_x), _fmt(r.dist_y),
                _fmt(r.clipped_x), _fmt(r.clipped_y), _fmt(r.millis if timing else 0.0),
            ])


def read_trace(path):
    """Parse a trace CSV back into a list of dicts."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise ParseError(f"trace header must be {','.join(TRACE_COLUMNS)}", str(path), 1)
        for lineno, fields in enumerate(reader, 2):
            if len(fields) != len(TRACE_COLUMNS):
                raise ParseError("wrong number of fields", str(path), lineno)
            try:
                rows.append({
                    k: int(v) if k in _INT_COLUMNS else float(v)
                    for k, v in zip(TRACE_COLUMNS, fields)
                })
            except ValueError as exc:
                raise ParseError(str(exc), str(path), lineno) from exc
    return rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, str(path), exc.lineno) from exc
