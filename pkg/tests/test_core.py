import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snellmc import (
    ConfigError,
    DiscountSpec,
    PathBundle,
    PayoffSpec,
    TimeGrid,
    cumulative_discount,
    evaluate_payoff,
    intrinsic_matrix,
)


def make_bundle(values, accrual=None):
    values = np.asarray(values, dtype=float)
    if accrual is None:
        accrual = np.ones((values.shape[0], values.shape[1] - 1))
    return PathBundle(values=values, accrual=np.asarray(accrual, dtype=float))


class TestTimeGrid:
    def test_total_steps_and_maturity(self):
        grid = TimeGrid(num_exercise_dates=49, steps_per_exercise=2, dt_years=1 / 504)
        assert grid.total_steps == 98
        assert grid.exercise_period_years == pytest.approx(2 / 504)
        assert grid.maturity_years == pytest.approx(49 / 252)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(num_exercise_dates=0),
            dict(num_exercise_dates=1, steps_per_exercise=0),
            dict(num_exercise_dates=1, dt_years=0.0),
            dict(num_exercise_dates=1, dt_years=-1.0),
        ],
    )
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ConfigError):
            TimeGrid(**kwargs)


class TestPayoffs:
    def test_max_of_two_puts(self):
        spec = PayoffSpec(kind="dual_strike_put", strikes=(70.0, 70.0), weights=(1.0, 1.0))
        assert evaluate_payoff(spec, [68.05, 69.72]) == pytest.approx(1.95)

    def test_average_basket(self):
        spec = PayoffSpec(kind="basket_put", strikes=(70.0, 70.0), weights=(1.0, 1.0))
        assert evaluate_payoff(spec, [68.05, 69.72]) == pytest.approx(1.115)

    def test_out_of_the_money_put_is_zero(self):
        spec = PayoffSpec(kind="vanilla_put", strikes=(70.0,))
        assert evaluate_payoff(spec, [80.0]) == 0.0

    def test_call_side(self):
        spec = PayoffSpec(kind="vanilla_call", strikes=(70.0,))
        assert evaluate_payoff(spec, [80.0]) == pytest.approx(10.0)
        assert evaluate_payoff(spec, [60.0]) == 0.0

    def test_weights_scale_the_state(self):
        spec = PayoffSpec(kind="vanilla_call", strikes=(0.5,), weights=(100.0,))
        assert evaluate_payoff(spec, [0.0075]) == pytest.approx(0.25)

    def test_dimension_mismatch_raises(self):
        spec = PayoffSpec(kind="vanilla_put", strikes=(70.0,), weights=(1.0,))
        with pytest.raises(ConfigError):
            evaluate_payoff(spec, [1.0, 2.0])

    @pytest.mark.parametrize(
        "kind,strikes",
        [
            ("vanilla_put", (70.0, 70.0)),
            ("basket_put", (70.0,)),
            ("dual_strike_put", (70.0,)),
            ("vanilla_put", (-1.0,)),
            ("no_such_kind", (70.0,)),
        ],
    )
    def test_rejects_inconsistent_specs(self, kind, strikes):
        with pytest.raises(ConfigError):
            PayoffSpec(kind=kind, strikes=strikes)

    @given(
        s1=st.floats(1.0, 200.0),
        s2=st.floats(1.0, 200.0),
        k1=st.floats(1.0, 150.0),
        k2=st.floats(1.0, 150.0),
        bump=st.floats(0.0, 10.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_nonnegative_and_lipschitz_in_strike(self, s1, s2, k1, k2, bump):
        state = [s1, s2]
        for kind in ("dual_strike_put", "basket_put"):
            base = evaluate_payoff(
                PayoffSpec(kind=kind, strikes=(k1, k2), weights=(1.0, 1.0)), state
            )
            bumped = evaluate_payoff(
                PayoffSpec(kind=kind, strikes=(k1 + bump, k2), weights=(1.0, 1.0)), state
            )
            assert base >= 0.0
            assert abs(bumped - base) <= bump + 1e-12

    @given(
        s1=st.floats(1.0, 200.0), s2=st.floats(1.0, 200.0), k=st.floats(1.0, 150.0)
    )
    @settings(max_examples=100, deadline=None)
    def test_max_put_dominates_average_basket(self, s1, s2, k):
        state = [s1, s2]
        dual = evaluate_payoff(
            PayoffSpec(kind="dual_strike_put", strikes=(k, k), weights=(1.0, 1.0)), state
        )
        basket = evaluate_payoff(
            PayoffSpec(kind="basket_put", strikes=(k, k), weights=(1.0, 1.0)), state
        )
        assert dual >= basket - 1e-12


class TestIntrinsicMatrix:
    def test_at_the_money_everywhere_is_zero(self):
        spec = PayoffSpec(kind="vanilla_put", strikes=(70.0,))
        paths = make_bundle(np.full((4, 3, 1), 70.0))
        assert (intrinsic_matrix(paths, spec) == 0.0).all()

    def test_single_path_single_date(self):
        spec = PayoffSpec(kind="vanilla_put", strikes=(70.0,))
        paths = make_bundle([[[50.0], [50.0]]])
        z = intrinsic_matrix(paths, spec)
        assert z.shape == (1, 2)
        assert z[0, 1] == pytest.approx(20.0)

    def test_matches_elementwise_evaluation(self):
        spec = PayoffSpec(kind="vanilla_put", strikes=(70.0,))
        values = np.array(
            [[[68.0], [73.0], [64.5]], [[68.0], [61.0], [70.0]]]
        )
        paths = make_bundle(values)
        z = intrinsic_matrix(paths, spec)
        for n in range(2):
            for t in range(3):
                assert z[n, t] == pytest.approx(
                    evaluate_payoff(spec, values[n, t], t)
                )
        assert (z[:, 0] == z[0, 0]).all()


class TestDiscounting:
    def test_empty_range_is_one(self):
        grid = TimeGrid(num_exercise_dates=4)
        spec = DiscountSpec(grid=grid, annual_rate=0.1)
        paths = make_bundle(np.full((2, 5, 1), 70.0))
        assert cumulative_discount(spec, paths, 3, 3) == 1.0

    def test_constant_rate_matches_scalar_arithmetic(self):
        grid = TimeGrid(num_exercise_dates=1, steps_per_exercise=49, dt_years=1 / 252)
        spec = DiscountSpec(grid=grid, annual_rate=0.015)
        paths = make_bundle(np.full((1, 2, 1), 70.0), np.full((1, 1), 0.5))
        assert cumulative_discount(spec, paths, 0, 1) == pytest.approx(
            math.exp(-0.015 * 49 / 252), abs=1e-9
        )
        assert cumulative_discount(spec, paths, 0, 1) == pytest.approx(0.997088, abs=1e-6)

    def test_path_accrual_product(self):
        grid = TimeGrid(num_exercise_dates=2)
        spec = DiscountSpec(grid=grid, mode="path_accrual")
        paths = make_bundle(np.full((1, 3, 1), 70.0), np.array([[0.9, 0.8]]))
        assert cumulative_discount(spec, paths, 0, 2) == pytest.approx(0.72)

    def test_reversed_indices_raise(self):
        grid = TimeGrid(num_exercise_dates=2)
        spec = DiscountSpec(grid=grid, annual_rate=0.0)
        paths = make_bundle(np.full((1, 3, 1), 70.0))
        with pytest.raises(ConfigError):
            cumulative_discount(spec, paths, 2, 1)

    @given(
        a=st.integers(0, 3), b=st.integers(0, 3), c=st.integers(0, 3),
        factors=st.lists(st.floats(0.5, 1.0), min_size=3, max_size=3),
    )
    @settings(max_examples=60, deadline=None)
    def test_multiplicative_over_adjacent_intervals(self, a, b, c, factors):
        a, b, c = sorted((a, b, c))
        grid = TimeGrid(num_exercise_dates=3)
        spec = DiscountSpec(grid=grid, mode="path_accrual")
        paths = make_bundle(
            np.full((1, 4, 1), 70.0), np.array(factors).reshape(1, 3)
        )
        left = cumulative_discount(spec, paths, a, b) * cumulative_discount(spec, paths, b, c)
        assert cumulative_discount(spec, paths, a, c) == pytest.approx(left, rel=1e-12)


class TestPathBundle:
    def test_rejects_diverging_start_states(self):
        values = np.ones((2, 3, 1))
        values[1, 0, 0] = 2.0
        with pytest.raises(ConfigError):
            make_bundle(values)

    def test_rejects_nonpositive_accrual(self):
        with pytest.raises(ConfigError):
            make_bundle(np.ones((1, 3, 1)), np.array([[0.9, 0.0]]))

    def test_rejects_non_finite(self):
        values = np.ones((1, 3, 1))
        values[0, 2, 0] = np.inf
        with pytest.raises(ConfigError):
            make_bundle(values)

    def test_arrays_are_read_only(self):
        paths = make_bundle(np.ones((2, 3, 1)))
        with pytest.raises(ValueError):
            paths.values[0, 0, 0] = 5.0

    def test_csv_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        values = np.ones((3, 4, 2)) * 70
        values[:, 1:, :] += rng.normal(0, 5, (3, 3, 2))
        accrual = np.full((3, 3), 0.99)
        paths = make_bundle(values, accrual)
        vp, ap = tmp_path / "values.csv", tmp_path / "accrual.csv"
        paths.to_csv(vp, ap)
        loaded = PathBundle.from_csv(vp, ap)
        np.testing.assert_array_equal(loaded.values, paths.values)
        np.testing.assert_array_equal(loaded.accrual, paths.accrual)
