import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isoreduce.errors import ConvergenceError, InvalidParamsError, ParamsParseError, WindowTooSmallError
from isoreduce.markov_family import (
    FamilyParams,
    family_weight,
    folded_transition_matrix,
    merge_empirical,
    monte_carlo_stationary,
    parse_params,
    reduced_2x2,
    truncated_stationary,
    stationary_closed_form,
    stationary_power_iteration,
    total_variation,
    truncated_weight,
    truncation_convergence,
)

# exact value of a_2 + b_2 a_3 + b_2 b_3 a_4 + ... for a_i = b_i = 2^-i,
# summed in rational arithmetic far past double precision
S_DYADIC = float(sum(Fraction(1, 2 ** (l * (l + 3) // 2 + l + 2)) for l in range(30)))


def dyadic():
    return FamilyParams(
        a=lambda i: 2.0**-i,
        b=lambda i: 2.0**-i,
        C=1.01,
        rho=0.5,
        a_tail_bound=lambda N: 2.0 ** (1 - N),
        label="dyadic",
    )


class TestWeights:
    def test_examples(self, reference_params):
        p = reference_params
        assert family_weight(p, 2, 2) == 1 - p.b(1)
        assert family_weight(p, 1, 3) == 1 - p.b(2)
        assert family_weight(p, 4, 1) == p.a(4)
        assert family_weight(p, 3, 4) == p.b(3)
        assert family_weight(p, 4, 3) == 0

    def test_truncated_examples(self, reference_params):
        p = reference_params
        assert truncated_weight(p, 5, 1, 7) == 1
        assert truncated_weight(p, 5, 4, 5) == p.b(4)
        assert truncated_weight(p, 5, 5, 6) == 0
        assert truncated_weight(p, 5, 1, 5) == 1 - p.b(4)
        with pytest.raises(ValueError):
            truncated_weight(p, 1, 1, 1)

    @settings(max_examples=30)
    @given(st.integers(min_value=2, max_value=40), st.integers(min_value=2, max_value=80))
    def test_columns_are_stochastic(self, n, j):
        p = FamilyParams.reference()
        for weight in (lambda i: family_weight(p, i, j), lambda i: truncated_weight(p, n, i, j)):
            assert abs(math.fsum(weight(i) for i in range(1, j + 2)) - 1) <= 1e-12

    def test_first_column_with_tail(self, reference_params):
        p = reference_params
        for N in (5, 20, 60):
            assert abs(math.fsum(p.a(i) for i in range(1, N + 1)) + p.a_tail_bound(N + 1) - 1) <= 1e-15


class TestParams:
    def test_reference_is_valid(self):
        FamilyParams.reference().validate()

    @pytest.mark.parametrize(
        "params, condition",
        [
            (FamilyParams.geometric(beta=1.05, C=1.01), "B2"),
            (FamilyParams.geometric(C=1.0), "B2"),
            (FamilyParams.geometric(rho=1.2), "B2"),
            (FamilyParams.geometric(beta=2.0, C=3.0), "B1"),
            (FamilyParams(lambda i: 0.3 * 0.5**i, lambda i: 0.1 * 0.5**i, 1.01, 0.5, lambda N: 0.5 ** (N - 1)), "B1"),
        ],
    )
    def test_violations(self, params, condition):
        with pytest.raises(InvalidParamsError) as info:
            params.validate()
        assert info.value.condition == condition

    def test_parse(self):
        p = parse_params("family = geometric\nalpha = 0.5\nbeta = 0.5\nrho = 0.6\nC = 1.01\n")
        ref = FamilyParams.reference()
        assert [p.a(i) for i in range(1, 6)] == [ref.a(i) for i in range(1, 6)]
        assert [p.b(i) for i in range(1, 6)] == [ref.b(i) for i in range(1, 6)]
        assert (p.C, p.rho) == (1.01, 0.6)

    @pytest.mark.parametrize(
        "text, line",
        [("family = geometric\nalpha 0.5", 2), ("alpha = 0.5\nalpha = 0.4", 2), ("alpha = x", None), ("gamma = 1", None)],
    )
    def test_parse_errors(self, text, line):
        with pytest.raises(ParamsParseError) as info:
            parse_params(text)
        assert info.value.line == line

    def test_unknown_family(self):
        with pytest.raises(ParamsParseError):
            parse_params("family = poisson")

    def test_superexponential_diagnostic(self, reference_params):
        slopes = {n: math.log(reference_params.b_product(n)) / n for n in range(2, 40)}
        assert all(slopes[n + 1] < slopes[n] for n in range(2, 39))
        for level in (-1, -2, -5):
            assert min(slopes.values()) < level
        assert slopes[25] < -5

    def test_type_a_sequence(self, reference_params):
        C, rho = 1.01, 0.6
        assert reference_params.type_a_sequence(2) == pytest.approx(C**2 * (rho**3 + rho**3 / (1 - rho)))
        assert reference_params.type_a_sequence(5) == pytest.approx(
            C**2 * (rho**3 + rho**6 / (1 - rho)) * C * rho * C * rho**2
        )


class TestReducedMatrix:
    def test_dyadic_value(self):
        R, rep = reduced_2x2(dyadic(), tol=1e-16)
        assert R[1, 0] == pytest.approx(S_DYADIC, abs=1e-15)
        assert rep.tail_bound < 1e-16

    def test_dyadic_partial_sum_within_tail_bound(self):
        # 1/4 + 1/32 + 1/512 + 1/16384 and the stopping product 2^-14 < 1e-4
        R, rep = reduced_2x2(dyadic(), tol=1e-4)
        assert rep.terms_used == 4
        assert R[1, 0] == pytest.approx(0.2832642, abs=5e-8)
        assert rep.tail_bound == 2.0**-14
        assert 0 <= S_DYADIC - R[1, 0] <= rep.tail_bound

    def test_columns_sum_to_one(self, reference_params):
        R, _ = reduced_2x2(reference_params)
        np.testing.assert_allclose(R.sum(axis=0), [1, 1], atol=1e-15)
        assert R[0, 1] == reference_params.b(1)

    def test_negligible_b(self):
        tiny = FamilyParams(lambda i: 0.5**i, lambda i: 1e-20, 1.01, 0.5, lambda N: 0.5 ** (N - 1))
        R, _ = reduced_2x2(tiny, tol=1e-12)
        assert R[1, 0] == pytest.approx(0.25, abs=1e-12)

    def test_non_decaying_b(self):
        flat = FamilyParams(lambda i: 0.5**i, lambda i: 0.99, 1.01, 0.5, lambda N: 0.5 ** (N - 1))
        with pytest.raises(ConvergenceError):
            reduced_2x2(flat, tol=1e-12, max_terms=100)


class TestStationary:
    def test_eigenvector(self, reference_params):
        st_ = stationary_closed_form(reference_params)
        v = np.array(st_.v)
        assert np.abs((st_.reduced - np.eye(2)) @ v).max() <= 1e-15
        assert st_.v[0] == reference_params.b(1)

    def test_normalisation_and_sign(self, reference_params):
        st_ = stationary_closed_form(reference_params, tol=1e-12, window=40)
        assert (st_.q >= 0).all()
        assert abs(st_.q.sum() + st_.tail_bound - 1) <= 1e-10
        assert st_.tail_bound <= 1e-12

    def test_term_splitting_bound(self, reference_params):
        p = reference_params
        st_ = stationary_closed_form(p, window=50)
        for i in range(3, 51):
            assert st_.u[i - 1] <= st_.v[0] * (p.a(i) + p.b(i)) * (1 + 1e-14)

    def test_dyadic_against_power_iteration(self):
        q = stationary_closed_form(dyadic(), tol=1e-12, window=40).q
        x = stationary_power_iteration(dyadic(), n_states=60, tol=1e-15)
        assert total_variation(q, x) < 1e-8

    def test_fixed_point_residual(self, reference_params):
        p = reference_params
        W = 40
        q = stationary_closed_form(p, window=W).q
        M = np.array([[family_weight(p, i, j) for j in range(1, W + 1)] for i in range(1, W + 1)])
        # row 1 draws on every state and row W on state W + 1, both outside the window
        resid = (M @ q - q)[1 : W - 1]
        assert np.abs(resid).sum() <= 1e-13

    def test_scale_invariance(self, reference_params):
        v = stationary_closed_form(reference_params).v
        q1, _, _ = truncated_stationary(reference_params, 8, v, 40)
        q3, _, _ = truncated_stationary(reference_params, 8, [3 * x for x in v], 40)
        np.testing.assert_allclose(q1, q3, rtol=1e-13)

    def test_window_too_small(self, reference_params):
        with pytest.raises(WindowTooSmallError):
            stationary_closed_form(reference_params, tol=1e-12, window=5)


class TestPowerIteration:
    def test_probability_vector_and_residual(self, reference_params):
        tol = 1e-13
        x = stationary_power_iteration(reference_params, n_states=30, tol=tol)
        W = folded_transition_matrix(reference_params, 30)
        assert (x >= 0).all() and abs(x.sum() - 1) <= 1e-12
        assert np.abs(W @ x - x).sum() <= 10 * tol
        np.testing.assert_allclose(W.sum(axis=0), 1, atol=1e-15)

    def test_budget(self, reference_params):
        with pytest.raises(ConvergenceError):
            stationary_power_iteration(reference_params, n_states=30, tol=1e-15, max_iter=3)


class TestMonteCarlo:
    def test_determinism(self, reference_params):
        a = monte_carlo_stationary(reference_params, steps=20_000, seed=3)
        b = monte_carlo_stationary(reference_params, steps=20_000, seed=3)
        c = monte_carlo_stationary(reference_params, steps=20_000, seed=4)
        assert a.freq.tobytes() == b.freq.tobytes()
        assert a.freq.tobytes() != c.freq.tobytes()

    def test_mass_accounting(self, reference_params):
        r = monte_carlo_stationary(reference_params, steps=20_000, seed=1, window=6)
        assert r.freq.sum() <= 1
        assert r.freq.sum() + r.above_window == pytest.approx(1)
        assert r.burn_in == 2_000

    def test_merge(self, reference_params):
        a = monte_carlo_stationary(reference_params, steps=10_000, seed=1)
        b = monte_carlo_stationary(reference_params, steps=30_000, seed=2)
        m = merge_empirical([a, b])
        np.testing.assert_allclose(m.freq, (a.freq + 3 * b.freq) / 4)
        assert m.steps == 40_000

    def test_rejects_zero_steps(self, reference_params):
        with pytest.raises(ValueError):
            monte_carlo_stationary(reference_params, steps=0)


class TestConvergence:
    def test_table(self, reference_params):
        p = reference_params
        table = truncation_convergence(p, [3, 5, 8, 12])
        assert table.monotone and not table.warnings
        for row in table.rows:
            assert row.gap == pytest.approx(2 * max(p.b(i) for i in range(row.n, 80)), abs=1e-12)
            assert row.gap <= row.gap_bound
            assert row.tv_distance <= row.gap

    def test_rejects_small_orders(self, reference_params):
        with pytest.raises(ValueError):
            truncation_convergence(reference_params, [1, 3])
