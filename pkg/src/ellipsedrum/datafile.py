"""Eigenvalue data files and ``key = value`` config files.

A data file holds one record per line::

    e=0.01 convention=A digits=120 M=21 N=27 dist=cheb lambda=5.78...

Lines are sorted by eccentricity; ``#`` lines are comments.  Eigenvalues are
written in plain decimal notation with ``digits + LAMBDA_GUARD`` significant
digits, so writing, reading and writing again gives identical bytes.
"""

from __future__ import annotations

import os
import re
import tempfile
from decimal import Decimal
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath

from .geometry import Convention, EigenvalueRecord, EllipseShape, SolverMeta

LAMBDA_GUARD = 5

_FIELDS = ("e", "convention", "digits", "M", "N", "dist", "lambda")
_DECIMAL = re.compile(r"^[0-9]+(\.[0-9]+)?$")


class DataFileError(ValueError):
    pass


def _fixed(x, sig: int) -> str:
    return mpmath.nstr(x, sig, min_fixed=-mpmath.inf, max_fixed=mpmath.inf)


def format_record(rec: EigenvalueRecord) -> str:
    meta = rec.solver_meta or SolverMeta(0, 0, "cheb")
    sig = rec.digits_claimed + LAMBDA_GUARD
    ctx = mpmath.MPContext()
    ctx.dps = sig + 10
    lam = _fixed(ctx.mpf(rec.lam), sig)
    return (
        f"e={rec.shape.e} convention={rec.convention.value} digits={rec.digits_claimed} "
        f"M={meta.basis_size} N={meta.collocation_count} dist={meta.distribution} lambda={lam}"
    )


def parse_record(line: str) -> EigenvalueRecord:
    parts = line.split()
    fields: Dict[str, str] = {}
    for part in parts:
        key, sep, value = part.partition("=")
        if not sep or key not in _FIELDS or key in fields:
            raise DataFileError(f"bad field {part!r} in line {line!r}")
        fields[key] = value
    missing = [k for k in _FIELDS if k not in fields]
    if missing:
        raise DataFileError(f"missing {', '.join(missing)} in line {line!r}")
    for key in ("e", "lambda"):
        if not _DECIMAL.match(fields[key]):
            raise DataFileError(f"{key} must be a plain decimal, got {fields[key]!r}")
    digits = int(fields["digits"])
    ctx = mpmath.MPContext()
    ctx.dps = max(len(fields["lambda"]), digits + LAMBDA_GUARD) + 10
    m, n = int(fields["M"]), int(fields["N"])
    meta = SolverMeta(m, n, fields["dist"]) if m > 0 else None
    return EigenvalueRecord(
        shape=EllipseShape(fields["e"], Convention.parse(fields["convention"])),
        lam=ctx.mpf(fields["lambda"]),
        digits_claimed=digits,
        solver_meta=meta,
    )


def sort_key(rec: EigenvalueRecord):
    # exact: eccentricities near 1 can differ only past the 15th digit
    return (Decimal(rec.shape.e), rec.convention.value)


def dumps(records: Iterable[EigenvalueRecord], comments: Sequence[str] = ()) -> str:
    lines = [c if c.startswith("#") else f"# {c}" for c in comments]
    lines += [format_record(r) for r in sorted(records, key=sort_key)]
    return "".join(line + "\n" for line in lines)


def loads(text: str) -> Tuple[List[EigenvalueRecord], List[str]]:
    """Records and comment lines of a data file's text."""
    records, comments = [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        records.append(parse_record(line))
    return records, comments


def read_records(path) -> List[EigenvalueRecord]:
    path = Path(path)
    if not path.exists():
        return []
    return loads(path.read_text(encoding="utf-8"))[0]


def write_records(path, records: Iterable[EigenvalueRecord], comments: Sequence[str] = ()) -> None:
    """Replace ``path`` atomically (temporary file in the same directory, then rename)."""
    path = Path(path)
    text = dumps(records, comments)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=str(path.parent or "."))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        # mkstemp creates 0600; keep what a plain open() would have given
        mode = path.stat().st_mode & 0o777 if path.exists() else 0o666 & ~_umask()
        os.chmod(tmp, mode)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def read_config(path) -> Dict[str, str]:
    """``key = value`` lines; keys are normalised to underscores, ``#`` starts a comment line."""
    out: Dict[str, str] = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise DataFileError(f"{path}:{n}: expected 'key = value', got {raw!r}")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def format_report(fields: Sequence[Tuple[str, object]]) -> str:
    """Fenced machine-readable ``key = value`` block."""
    body = "".join(f"{k} = {v}\n" for k, v in fields)
    return "```\n" + body + "```\n"


def parse_report(text: str) -> Dict[str, str]:
    """The ``key = value`` pairs of the first fenced block in ``text``."""
    inside = False
    out: Dict[str, str] = {}
    for line in text.splitlines():
        if line.strip() == "```":
            if inside:
                break
            inside = True
            continue
        if inside:
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out
