"""Shared fixtures: the two acceptance datasets and a per-criterion verdict list.

The datasets are expensive (several minutes for the thin-ellipse grid), so
they are computed once per session and only when an acceptance test asks.
"""

import time

import pytest

from ellipsedrum.pipeline import compute_eigenvalues, eccentricity_grid

VERDICTS = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Keep the last verdict per criterion; the summary prints them in order."""
    VERDICTS[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


class Dataset:
    def __init__(self, path, records, failures, seconds):
        self.path = path
        self.records = records
        self.failures = failures
        self.seconds = seconds


def _build(tmp_path_factory, name, grid, convention, digits):
    path = tmp_path_factory.mktemp("acceptance") / name
    start = time.perf_counter()
    records, failures = compute_eigenvalues(path, grid, convention, digits, progress=lambda _: None)
    return Dataset(path, records, failures, time.perf_counter() - start)


@pytest.fixture(scope="session")
def maclaurin_dataset(tmp_path_factory):
    """20 eigenvalues, e = 0.01 .. 0.20 linear, constant area, 120 digits."""
    grid = eccentricity_grid("0.01", "0.20", 20, "linear")
    return _build(tmp_path_factory, "maclaurin.dat", grid, "A", 120)


@pytest.fixture(scope="session")
def asymptotic_dataset(tmp_path_factory):
    """12 eigenvalues near the strip limit, constant semi-major axis, 60 digits.

    Geometric in 1 - e over the thin end of [0.9998, 0.999995]; see the
    decisions ledger for why the grid does not start at 0.9998.
    """
    grid = eccentricity_grid("0.999968", "0.999995", 12, "geometric")
    return _build(tmp_path_factory, "asymptotic.dat", grid, "Aprime", 60)
