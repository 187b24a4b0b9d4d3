import pytest
from hypothesis import given, strategies as st

from spectrum_lease.core import (EpochLayout, Scenario, ScenarioError, check_schedule,
                                 revenue_of, stage_weight, unit_price, validate_scenario)


class TestLayout:
    def test_stage_sets(self):
        lay = EpochLayout(2, 5, 3)
        assert list(lay.epoch3) == [1, 2, 3]
        assert list(lay.epoch2) == [4, 5, 6, 7, 8]
        assert list(lay.epoch1) == [9, 10]
        assert list(lay.seller1_stages) == list(range(1, 9))
        assert list(lay.seller2_stages) == list(range(4, 11))
        assert lay.first_epoch2_stage == 8
        assert [lay.epoch_of(n) for n in (1, 4, 9)] == [3, 2, 1]

    def test_weights(self):
        lay = EpochLayout(0, 5, 3)
        assert stage_weight(lay, 1, 8) == 8
        assert stage_weight(lay, 2, 8) == 5
        with pytest.raises(ValueError):
            stage_weight(lay, 2, 3)

    def test_needs_epoch2(self):
        with pytest.raises(ScenarioError):
            EpochLayout(1, 0, 1)
        with pytest.raises(ScenarioError):
            EpochLayout(-1, 2, 1)

    @given(st.integers(0, 6), st.integers(1, 6), st.integers(0, 6))
    def test_partition(self, a, b, c):
        lay = EpochLayout(a, b, c)
        stages = sorted(list(lay.epoch1) + list(lay.epoch2) + list(lay.epoch3))
        assert stages == list(range(1, lay.n_total + 1))


class TestValidation:
    def test_reference_market_is_valid(self, ref):
        assert validate_scenario(ref) is ref

    def test_price_condition(self):
        with pytest.raises(ScenarioError, match="price-coefficient"):
            validate_scenario(Scenario(100, 1, 100, 60, 0, 1, 0))
        # boundary: equality is rejected
        with pytest.raises(ScenarioError):
            validate_scenario(Scenario(320, 1, 100, 60, 0, 1, 0))

    @pytest.mark.parametrize("kw", [dict(c0=-1), dict(c1=0), dict(q1=-1), dict(q2=-0.5),
                                    dict(tol=0)])
    def test_bad_values(self, kw):
        base = dict(c0=480, c1=1, q1=10, q2=10, tol=1e-9)
        base.update(kw)
        with pytest.raises(ScenarioError):
            validate_scenario(Scenario(**base))

    def test_unit_price(self, ref):
        assert unit_price(ref, 160) == 320
        with pytest.raises(ValueError):
            unit_price(ref, -1)


class TestRevenue:
    def test_hand_values(self, ref, ref_layout):
        rep = revenue_of(ref, ref_layout, {4: 100.0}, {4: 60.0})
        assert rep.prices[4] == 320
        assert rep.revenue1[4] == 320 * 100 * 4
        assert rep.revenue2[4] == 320 * 60 * 1
        assert rep.total == rep.total1 + rep.total2

    def test_rejects_foreign_stage(self, ref_layout):
        with pytest.raises(ValueError):
            check_schedule(ref_layout, 2, {2: 1.0})
        with pytest.raises(ValueError):
            check_schedule(ref_layout, 1, {2: -1.0})
