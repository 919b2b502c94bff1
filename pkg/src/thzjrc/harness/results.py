"""Result rows and their CSV form."""

import csv
import io
from dataclasses import astuple, dataclass, fields

import numpy as np

__all__ = ["ResultRow", "COLUMNS", "rate_halfwidth", "emit", "read_rows", "format_rows"]


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    variant: str
    sweep_var: str
    sweep_value: float
    metric: str
    value: float
    trials: int
    seed: int


COLUMNS = tuple(f.name for f in fields(ResultRow))
_FLOATS = {"sweep_value", "value"}
_INTS = {"trials", "seed"}


def rate_halfwidth(trials, z=1.96):
    """Conservative 95% half-width of a rate estimate, ``z*sqrt(0.25/n)``.

    Uses the worst-case variance ``p(1-p) <= 1/4`` so the reported width depends
    only on the trial count and never grows when trials are added.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    return float(z * np.sqrt(0.25 / trials))


def _cell(name, value):
    if name in _FLOATS:
        return repr(float(value))
    return str(value)


def format_rows(rows):
    """CSV text with a header line; floats written with ``repr`` (round-trip exact)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(name, v) for name, v in zip(COLUMNS, astuple(r))])
    return buf.getvalue()


def emit(rows, path, format="csv"):
    """Write ``rows`` to ``path``; I/O errors name the path."""
    if format != "csv":
        raise ValueError(f"unsupported output format {format!r}")
    text = format_rows(rows)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results to {path}: {exc.strerror}") from exc


def _parse(name, text):
    if name in _FLOATS:
        return float(text)
    if name in _INTS:
        return int(text)
    return text


def read_rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        return [ResultRow(*(_parse(n, t) for n, t in zip(COLUMNS, line))) for line in reader]
