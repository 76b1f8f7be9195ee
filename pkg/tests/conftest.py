"""Shared fixtures, random-instance helpers, and the acceptance-criteria
report printed after every run."""
import numpy as np
import pytest

from drdetect import MomentSequence

# ---------------------------------------------------------------------------
# acceptance criteria bookkeeping: tests register one line per criterion and
# the summary hook prints them all, pass or fail, at the end of the run.

_CRITERION_RESULTS: dict[int, tuple[str, bool, str]] = {}


def record_criterion(number: int, label: str, passed: bool, detail: str = ""):
    _CRITERION_RESULTS[number] = (label, bool(passed), detail)


def check_criterion(number: int, label: str, passed, detail: str = ""):
    """Record the outcome first so a failing assert still reports."""
    record_criterion(number, label, bool(passed), detail)
    assert passed, f"criterion {number} [{label}]: {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERION_RESULTS):
        label, passed, detail = _CRITERION_RESULTS[number]
        verdict = "PASS" if passed else "FAIL"
        line = f"criterion {number:2d} [{verdict}] {label}"
        if detail:
            line += f" — {detail}"
        terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# random feasible moment sequences (finite atomic measures on R+ are always
# feasible, and their moments are exact to rounding)


def atomic_moments(atoms, weights, k) -> MomentSequence:
    atoms = np.asarray(atoms, dtype=float)
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    vals = [1.0] + [float(np.sum(weights * atoms**r)) for r in range(1, k + 1)]
    return MomentSequence(tuple(vals))


def random_moments(rng, k, n_atoms=None, lo=0.0, hi=5.0) -> MomentSequence:
    """Random (k+1)-atom measure on [lo, hi] with a nondegenerate mean."""
    n_atoms = (k + 1) if n_atoms is None else n_atoms
    while True:
        atoms = np.sort(rng.uniform(lo, hi, size=n_atoms))
        weights = rng.dirichlet(np.ones(n_atoms))
        mom = atomic_moments(atoms, weights, k)
        if mom.mean > 1e-2:
            return mom


def random_oracle_instance(rng, k):
    """(moments, alpha) pair whose support fits the oracle grid [0, 10a]."""
    while True:
        atoms = np.sort(rng.uniform(0.0, 5.0, size=k + 1))
        weights = rng.dirichlet(np.ones(k + 1))
        mu = float(np.sum(weights * atoms))
        if mu <= 1e-3:
            continue
        alpha = float(rng.uniform(1.1, 3.0)) * mu
        if atoms[-1] <= 10.0 * alpha:
            return atomic_moments(atoms, weights, k), alpha


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)
