import random

import mpmath
import pytest

from ellipsedrum.datafile import (
    DataFileError,
    dumps,
    format_record,
    format_report,
    loads,
    parse_record,
    parse_report,
    read_config,
    read_records,
    write_records,
)
from ellipsedrum.geometry import Convention, EigenvalueRecord, EllipseShape, SolverMeta


def synthetic_records(n, seed=0):
    rng = random.Random(seed)
    mp = mpmath.MPContext()
    out = []
    for i in range(n):
        digits = rng.randint(10, 120)
        mp.dps = digits + 20
        e = f"{rng.random() * 0.9:.{rng.randint(1, 12)}f}"
        lam = mp.mpf(rng.random() + 0.01) * mp.mpf(10) ** rng.randint(0, 6) + mp.mpf(1) / 7
        conv = rng.choice(list(Convention))
        meta = SolverMeta(rng.randint(4, 200), rng.randint(4, 300), rng.choice(["cheb", "uniform"]))
        out.append(EigenvalueRecord(EllipseShape(e, conv), lam, digits, meta))
    return out


def test_line_format():
    rec = EigenvalueRecord(EllipseShape("0.01"), mpmath.mpf("5.78"), 10, SolverMeta(21, 27))
    line = format_record(rec)
    assert line.startswith("e=0.01 convention=A digits=10 M=21 N=27 dist=cheb lambda=5.78")
    assert "e+" not in line and "e-" not in line


def test_no_exponent_for_tiny_or_huge_values():
    rec = EigenvalueRecord(EllipseShape("0.000001", "Aprime"), mpmath.mpf("123456789.5"), 12)
    line = format_record(rec)
    assert "e=0.000001 " in line and "lambda=123456789.5" in line


def test_round_trip_byte_exact():
    records = synthetic_records(200, seed=5)
    text = dumps(records, ["# synthetic"])
    again, comments = loads(text)
    assert comments == ["# synthetic"]
    assert dumps(again, comments) == text


def test_parse_preserves_precision():
    rec = synthetic_records(1, seed=9)[0]
    back = parse_record(format_record(rec))
    with mpmath.workdps(rec.digits_claimed + 20):
        assert abs(back.lam - rec.lam) / rec.lam < mpmath.mpf(10) ** -(rec.digits_claimed + 3)


@pytest.mark.parametrize(
    "line",
    [
        "e=0.1 convention=A digits=10 M=1 N=1 dist=cheb",
        "e=0.1 convention=A digits=10 M=1 N=1 dist=cheb lambda=1e5",
        "e=1e-3 convention=A digits=10 M=1 N=1 dist=cheb lambda=5.0",
        "e=0.1 convention=A digits=10 M=1 N=1 dist=cheb lambda=5.0 extra=1",
        "e=0.1 convention=Q digits=10 M=1 N=1 dist=cheb lambda=5.0",
    ],
)
def test_bad_lines(line):
    with pytest.raises((DataFileError, ValueError)):
        parse_record(line)


def test_sorted_by_eccentricity(tmp_path):
    records = synthetic_records(30, seed=2)
    path = tmp_path / "data.txt"
    write_records(path, records)
    es = [mpmath.mpf(r.shape.e) for r in read_records(path)]
    assert es == sorted(es)
    assert not list(tmp_path.glob("*.tmp"))


def test_missing_file_reads_empty(tmp_path):
    assert read_records(tmp_path / "absent.txt") == []


def test_config_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\ndigits = 60\n--ladder-step = 6\nconvention=Aprime\n")
    assert read_config(p) == {"digits": "60", "ladder_step": "6", "convention": "Aprime"}
    p.write_text("digits 60\n")
    with pytest.raises(DataFileError):
        read_config(p)


def test_report_block():
    text = format_report([("a", 1), ("b", "x y")]) + "\ntable\n"
    assert parse_report(text) == {"a": "1", "b": "x y"}


def test_rewrite_keeps_permissions(tmp_path):
    path = tmp_path / "data.txt"
    write_records(path, synthetic_records(2))
    assert path.stat().st_mode & 0o777 != 0o600
    path.chmod(0o640)
    write_records(path, synthetic_records(3))
    assert path.stat().st_mode & 0o777 == 0o640


def test_sort_beyond_double_precision():
    recs = [EigenvalueRecord(EllipseShape(e, "Aprime"), mpmath.mpf(1000), 20)
            for e in ("0.99999900000000000002", "0.99999900000000000001")]
    again, _ = loads(dumps(recs))
    assert [r.shape.e for r in again] == ["0.99999900000000000001", "0.99999900000000000002"]
