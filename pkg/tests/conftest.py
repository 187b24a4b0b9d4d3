import numpy as np
import pytest

from spectrum_lease.core import Scenario, reference_scenario
from spectrum_lease.nash import GameParams


def random_game(rng: np.random.Generator, max_m: int = 4, max_n3: int = 12,
                zero_budgets: bool = True) -> GameParams:
    """A validated random Epoch II game.  Budgets are sometimes zero."""
    m = int(rng.integers(1, max_m + 1))
    n3 = int(rng.integers(0, max_n3 + 1))
    c1 = float(rng.uniform(0.2, 3.0))
    q1 = float(rng.uniform(0.0, 120.0))
    q2 = float(rng.uniform(0.0, 120.0))
    if zero_budgets:
        roll = rng.random()
        if roll < 0.05:
            q1 = 0.0
        elif roll < 0.10:
            q2 = 0.0
    c0 = 2.0 * c1 * max(q1 + q2, 1.0) * float(rng.uniform(1.02, 4.0))
    s = Scenario(c0, c1, q1, q2, 0, m, n3)
    return GameParams(s, s.layout, q1, q2)


@pytest.fixture
def ref():
    """c0=480, c1=1, q1=100, 60 units of Epoch II stock, Epoch II = 4..8, Epoch III = 1..3."""
    return reference_scenario()


@pytest.fixture
def ref_layout(ref):
    return ref.layout


_CRITERIA = []


class _Criterion:
    def __init__(self, label, title):
        self.label, self.title, self.detail = label, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            _CRITERIA.append(f"criterion {self.label}: PASS  {self.title}  {self.detail}")
        else:
            first = str(exc).strip().splitlines()[0] if str(exc).strip() else exc_type.__name__
            _CRITERIA.append(f"criterion {self.label}: FAIL  {self.title}  ({first})")
        return False


@pytest.fixture
def criterion():
    """``with criterion("3", "title") as c:`` records one pass/fail line."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_CRITERIA, key=_order):
            terminalreporter.write_line(line)


def _order(line):
    label = line.split(":")[0].split()[1]
    digits = "".join(ch for ch in label if ch.isdigit())
    return int(digits), label[len(digits):]
