"""CSV files with '#' metadata lines; floats are written with repr so they re-parse exactly."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .. import __version__
from ..photon import CountSeries


class IngestError(ValueError):
    pass


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence],
    meta: Mapping[str, object] | None = None,
) -> Path:
    buf = io.StringIO()
    meta = {"artifact_version": __version__, **(meta or {})}
    for k, v in meta.items():
        buf.write(f"# {k}: {fmt(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(buf.getvalue())
    return path


def read_csv(path: Path) -> tuple[dict[str, str], list[str], list[tuple[int, list[str]]]]:
    """Return (metadata, header, [(line_number, fields), ...])."""
    meta: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[tuple[int, list[str]]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                key, _, value = stripped[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            fields = next(csv.reader([stripped]))
            if header is None:
                header = [f.strip() for f in fields]
            else:
                rows.append((lineno, [f.strip() for f in fields]))
    if header is None:
        raise IngestError(f"{path}: no header row")
    return meta, header, rows


def read_table(path: Path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Numeric CSV as column arrays."""
    meta, header, rows = read_csv(path)
    cols: dict[str, list[float]] = {h: [] for h in header}
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise IngestError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        for h, f in zip(header, fields):
            try:
                cols[h].append(float(f))
            except ValueError:
                raise IngestError(f"{path}:{lineno}: {h}={f!r} is not a number") from None
    return meta, {h: np.array(v) for h, v in cols.items()}


def _parse_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(text)
    return int(value)


def ingest_counts(path: Path, trial: int | None = None) -> CountSeries:
    """Read a photon-count trace with columns t_bin,n (and optionally trial).

    When a trial column is present, ``trial`` selects one series (default: the
    first trial in the file).
    """
    path = Path(path)
    meta, header, rows = read_csv(path)
    for col in ("t_bin", "n"):
        if col not in header:
            raise IngestError(f"{path}: missing column {col!r} (header: {','.join(header)})")
    i_t, i_n = header.index("t_bin"), header.index("n")
    i_trial = header.index("trial") if "trial" in header else None

    starts, counts = [], []
    chosen = trial
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise IngestError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
        try:
            if i_trial is not None:
                tr = _parse_int(fields[i_trial])
                if chosen is None:
                    chosen = tr
                if tr != chosen:
                    continue
            t = float(fields[i_t])
            n = _parse_int(fields[i_n])
        except ValueError:
            raise IngestError(f"{path}:{lineno}: malformed row {','.join(fields)!r}") from None
        if not math.isfinite(t):
            raise IngestError(f"{path}:{lineno}: non-finite bin time")
        if n < 0:
            raise IngestError(f"{path}:{lineno}: negative count {n}")
        if starts and t <= starts[-1]:
            raise IngestError(f"{path}:{lineno}: bin times are not increasing")
        starts.append(t)
        counts.append(n)

    if len(starts) < 2:
        raise IngestError(f"{path}: need at least two bins to infer the bin width")
    widths = np.diff(starts)
    width = float(widths[0])
    if np.any(np.abs(widths - width) > 1e-6 * abs(width)):
        raise IngestError(f"{path}: bins are not uniform (widths {widths.min():.6g}..{widths.max():.6g})")
    edges = np.append(np.array(starts), starts[-1] + width)
    seed = meta.get("seed")
    return CountSeries(
        edges=edges,
        expected=np.full(len(counts), np.nan),
        sampled=np.array(counts, dtype=np.int64),
        seed=int(seed) if seed not in (None, "", "None") else None,
        trial=chosen,
    )
