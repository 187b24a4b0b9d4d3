import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from spectrum_lease.baseline import compare_schemes, project_capped_simplex, solve_cooperative
from spectrum_lease.core import Scenario


@settings(max_examples=80, deadline=None)
@given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-50, 50)),
       st.floats(0.0, 40.0))
def test_projection_is_feasible_and_closest(v, budget):
    p = project_capped_simplex(v, budget)
    assert p.min() >= 0
    assert p.sum() <= budget + 1e-9 * max(1.0, budget)
    # no random feasible point is closer
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = rng.dirichlet(np.ones(len(v))) * budget * rng.random()
        assert np.linalg.norm(v - p) <= np.linalg.norm(v - q) + 1e-9


def joint_grid(s, q1, q2, step=0.25):
    """Brute force for one shared stage (n=2, w2=1) plus one seller-1 stage (n=1).

    Both budgets bind, so seller 1 splits q1 between the two stages and
    seller 2 puts q2 on the shared one.
    """
    a = np.arange(0.0, q1 + step / 2, step)
    b = q1 - a
    shared = (s.c0 - s.c1 * (a + q2)) * (a * 2 + q2 * 1)
    alone = (s.c0 - s.c1 * b) * b
    return (shared + alone).max()


class TestCooperative:
    def test_grid_oracle(self):
        s = Scenario(200.0, 1.0, 30.0, 20.0, 0, 1, 1)
        coop = solve_cooperative(s, s.layout, 30.0, 20.0, restarts=8)
        assert coop.total >= joint_grid(s, 30.0, 20.0) - 1e-6 * coop.total
        assert coop.total == pytest.approx(joint_grid(s, 30.0, 20.0, step=0.001), rel=1e-6)

    def test_budgets_and_kkt(self):
        s = Scenario(480.0, 1.0, 100.0, 100.0, 0, 4, 2)
        coop = solve_cooperative(s, s.layout, 100.0, 100.0)
        assert sum(coop.d1.values()) == pytest.approx(100.0, abs=1e-6)
        assert sum(coop.d2.values()) == pytest.approx(100.0, abs=1e-6)
        assert min(coop.d1.values()) >= 0 and min(coop.d2.values()) >= 0
        assert coop.kkt_residual <= 1e-3 * s.c0
        assert coop.restarts == 32

    def test_deterministic_for_seed(self):
        s = Scenario(480.0, 1.0, 50.0, 150.0, 0, 4, 2)
        a = solve_cooperative(s, s.layout, 50.0, 150.0, restarts=6, seed=3)
        b = solve_cooperative(s, s.layout, 50.0, 150.0, restarts=6, seed=3)
        assert a == b


def test_compare_rows():
    s = Scenario(480.0, 1.0, 100.0, 100.0, 0, 4, 2)
    rows = compare_schemes(s, s.layout, [(200.0, 0.0)], restarts=4)
    prop, coop = rows
    assert (prop.scheme, coop.scheme) == ("proposed", "cooperative")
    # without a rival the schemes coincide
    assert prop.total == pytest.approx(coop.total, rel=1e-6)
