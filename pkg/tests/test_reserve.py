import numpy as np
import pytest

from spectrum_lease.core import Scenario
from spectrum_lease.monopoly import epoch3_value
from spectrum_lease.nash import Decomposition, candidate_from
from spectrum_lease.reserve import (FeasibilityInterval, algorithm1_search, evaluate_G_H_U,
                                    feasibility_interval, game_at, linearize_kkt,
                                    maximize_over_interval, total_revenue_seller1)

FIRST = "Z1=7,8;Z2=6;Z4=4,5"
SECOND = "Z1=7,8;Z4=4,5,6"
Q2 = 60.0


def dec(ref_layout, text):
    return Decomposition.parse(text, tuple(ref_layout.epoch2))


class TestLinearization:
    def test_lines_match_direct_solves(self, ref, ref_layout):
        d = dec(ref_layout, FIRST)
        lin = linearize_kkt(d, ref, ref_layout, Q2)
        for x in (3.0, 17.5, 33.0):
            g = game_at(ref, ref_layout, Q2, x)
            c = candidate_from(d, g)
            at = lin.at(x)
            assert at["lam"] == pytest.approx(c.lam, abs=1e-7)
            assert at["zeta"] == pytest.approx(c.zeta, abs=1e-7)
            assert at["d1[6]"] == pytest.approx(c.schedule1[6], abs=1e-9)


class TestFeasibilityInterval:
    @pytest.mark.parametrize("text,x0,expect", [
        (FIRST, 10.0, (0.0, 250 / 7)),
        (SECOND, 50.0, (250 / 7, 6500 / 71)),
    ])
    def test_exact_endpoints(self, ref, ref_layout, text, x0, expect):
        iv = feasibility_interval(dec(ref_layout, text), x0, ref, ref_layout, Q2)
        assert (iv.x_lo, iv.x_hi) == pytest.approx(expect, abs=1e-9)

    @pytest.mark.parametrize("text,x0", [(FIRST, 10.0), (SECOND, 50.0)])
    def test_bisection_agrees(self, ref, ref_layout, text, x0):
        d = dec(ref_layout, text)
        a = feasibility_interval(d, x0, ref, ref_layout, Q2)
        b = feasibility_interval(d, x0, ref, ref_layout, Q2, method="bisection")
        assert b.x_lo == pytest.approx(a.x_lo, abs=1e-6 * ref.q1)
        assert b.x_hi == pytest.approx(a.x_hi, abs=1e-6 * ref.q1)

    def test_infeasible_start(self, ref, ref_layout):
        with pytest.raises(ValueError):
            feasibility_interval(dec(ref_layout, FIRST), 80.0, ref, ref_layout, Q2)

    def test_unknown_method(self, ref, ref_layout):
        with pytest.raises(ValueError):
            feasibility_interval(dec(ref_layout, FIRST), 1.0, ref, ref_layout, Q2, method="x")


class TestGH:
    def test_decomposition_identity(self, ref, ref_layout):
        d = dec(ref_layout, SECOND)
        for x in np.linspace(40, 70, 7):
            G, H, U = evaluate_G_H_U(d, float(x), ref, ref_layout, Q2)
            assert U == pytest.approx(G - H, abs=1e-9)

    def test_infeasible_raises(self, ref, ref_layout):
        with pytest.raises(ValueError):
            evaluate_G_H_U(dec(ref_layout, FIRST), 60.0, ref, ref_layout, Q2)


def dense_max(d, iv, s, layout, q2, points=2001):
    """Grid oracle for F = U + V on an interval with the decomposition held fixed."""
    best = -np.inf
    for x in np.linspace(iv.x_lo, iv.x_hi, points):
        c = candidate_from(d, game_at(s, layout, q2, float(x)))
        best = max(best, c.revenue1 + epoch3_value(s, layout, float(x))[0])
    return best


class TestBranchAndBound:
    @pytest.mark.parametrize("text,lo,hi", [(FIRST, 0.0, 30.0), (SECOND, 40.0, 70.0)])
    def test_matches_dense_grid(self, ref, ref_layout, text, lo, hi):
        d = dec(ref_layout, text)
        iv = FeasibilityInterval(d, lo, hi)
        x_hat, f_hat, trace = maximize_over_interval(iv, ref, ref_layout, Q2)
        assert lo <= x_hat <= hi
        assert f_hat >= dense_max(d, iv, ref, ref_layout, Q2) - 1e-6 * f_hat
        assert trace.bound_violations == 0

    def test_interior_maximum(self):
        # seller 1 gains from reserving when Epoch III stages are heavy relative to Epoch II
        s = Scenario(480.0, 1.0, 100.0, 60.0, 0, 2, 6)
        layout = s.layout
        res = algorithm1_search(s, layout, 60.0)
        grid = [total_revenue_seller1(s, layout, 60.0, float(x))[0]
                for x in np.linspace(0, 100, 201)]
        assert res.r_star >= max(grid) * (1 - 1e-4)
        assert 0.0 < res.x_star <= 100.0


class TestIntervalSweep:
    def test_reference_run(self, ref, ref_layout):
        res = algorithm1_search(ref, ref_layout, Q2)
        assert res.x_star == 0.0
        assert res.r_star == pytest.approx(300880.812883, rel=1e-9)
        assert [r.decomposition for r in res.intervals][:2] == [
            "Z1=7,8;Z2=6;Z3=;Z4=4,5", "Z1=7,8;Z2=;Z3=;Z4=4,5,6"]
        assert res.intervals[0].x_lo == 0.0
        assert res.intervals[-1].x_hi == ref.q1
        # intervals tile [0, q1]
        for a, b in zip(res.intervals, res.intervals[1:]):
            assert b.x_lo == pytest.approx(a.x_hi, abs=1e-6 * ref.q1)

    def test_no_epoch3(self):
        s = Scenario(480.0, 1.0, 100.0, 60.0, 0, 3, 0)
        res = algorithm1_search(s, s.layout, 60.0)
        assert res.x_star == 0.0 and res.intervals == ()
        assert res.r_star == pytest.approx(res.equilibrium.revenue1)

    def test_zero_stock(self):
        s = Scenario(480.0, 1.0, 0.0, 60.0, 0, 3, 2)
        res = algorithm1_search(s, s.layout, 60.0)
        assert res.x_star == 0.0
        assert res.r_star == pytest.approx(0.0, abs=1e-6)
