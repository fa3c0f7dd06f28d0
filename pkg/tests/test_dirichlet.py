import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from fraceig import (
    DirichletProblem,
    FracParams,
    GridFunction,
    PairFunction,
    comparison_check,
    gagliardo_energy,
    monotonicity_certificate,
    nonlocal_gradient,
    psmall_pairwise_gap,
    seminorm_distance,
    solve_dirichlet,
)
from fraceig.core import energy_kernel, phi_p
from fraceig.eigen import oracle_matrix

from conftest import random_function

P2 = FracParams(s=0.5, p=2.0)
P15 = FracParams(s=0.5, p=1.5)
P3 = FracParams(s=0.5, p=3.0)


class TestSolveDirichlet:
    def test_zero_data_gives_zero(self, interval16):
        w = solve_dirichlet(DirichletProblem(interval16, P3, np.zeros(interval16.n_omega)))
        assert np.all(w.values == 0.0)

    def test_p2_matches_dense_solve(self, interval64):
        rng = np.random.default_rng(30)
        f = rng.standard_normal(interval64.n_omega)
        w = solve_dirichlet(DirichletProblem(interval64, P2, f))
        dense = scipy.linalg.solve(oracle_matrix(interval64, P2), f, assume_a="pos")
        assert np.linalg.norm(w.omega_values - dense) <= 1e-8 * np.linalg.norm(dense)

    def test_nonnegative_data_nonnegative_solution(self, interval16):
        rng = np.random.default_rng(31)
        for params in (P2, P15, P3):
            f = np.abs(rng.standard_normal(interval16.n_omega))
            w = solve_dirichlet(DirichletProblem(interval16, params, f))
            assert w.values.min() >= -1e-10

    def test_uniqueness_from_different_starts(self, interval16):
        rng = np.random.default_rng(32)
        f = rng.standard_normal(interval16.n_omega)
        prob = DirichletProblem(interval16, P15, f)
        w1 = solve_dirichlet(prob)
        start = random_function(interval16, rng)
        w2 = solve_dirichlet(prob, start=start)
        assert seminorm_distance(w1, w2, P15) <= 1e-8

    def test_energy_identity_at_solution(self, interval16):
        rng = np.random.default_rng(33)
        for params in (P2, P15, P3):
            f = rng.standard_normal(interval16.n_omega)
            w = solve_dirichlet(DirichletProblem(interval16, params, f))
            lhs = gagliardo_energy(w, params)
            rhs = float(np.sum(f * w.omega_values)) * interval16.h
            assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_first_order_optimality(self, interval16):
        # J(w - tau g) - J(w) collapses quadratically in tau at the solution
        rng = np.random.default_rng(34)
        f = rng.standard_normal(interval16.n_omega)
        params = P3
        w = solve_dirichlet(DirichletProblem(interval16, params, f))
        kern = energy_kernel(interval16, params)
        b = f * kern.hn

        def j(vec):
            return kern.energy(vec) / params.p - float(np.dot(b, vec))

        g = kern.grad_omega(w.omega_values) / params.p - b
        base = j(w.omega_values)
        gaps = []
        for tau in (1e-2, 1e-3):
            gaps.append(abs(j(w.omega_values - tau * g) - base))
        # quadratic decay: shrinking tau by 10 shrinks the gap by ~100
        assert gaps[1] <= gaps[0] * 1e-1

    def test_pair_datum_weak_form(self, interval8):
        # solution with pair datum F satisfies the full weak equation
        rng = np.random.default_rng(35)
        params = P3
        f = rng.standard_normal(interval8.n_omega)
        pair_values = rng.standard_normal((interval8.n_cells,) * 2)
        F = PairFunction(pair_values, interval8)
        prob = DirichletProblem(interval8, params, f, F=F)
        w = solve_dirichlet(prob)
        kern = energy_kernel(interval8, params)
        hn, h2n = interval8.h, interval8.h**2
        lhs_vec = kern.grad_omega(w.omega_values) / params.p  # weak-form operator
        for _ in range(5):
            v = random_function(interval8, rng)
            lhs = float(np.dot(lhs_vec, v.omega_values))
            rhs = float(np.sum(f * v.omega_values)) * hn + float(
                np.sum(F.values * nonlocal_gradient(v, params).values)
            ) * h2n
            assert lhs == pytest.approx(rhs, rel=1e-7, abs=1e-10)

    def test_only_antisymmetric_part_acts(self, interval8):
        rng = np.random.default_rng(36)
        f = rng.standard_normal(interval8.n_omega)
        raw = rng.standard_normal((interval8.n_cells,) * 2)
        anti = 0.5 * (raw - raw.T)
        w_raw = solve_dirichlet(DirichletProblem(interval8, P2, f, F=PairFunction(raw, interval8)))
        w_anti = solve_dirichlet(DirichletProblem(interval8, P2, f, F=PairFunction(anti, interval8)))
        np.testing.assert_allclose(w_raw.values, w_anti.values, rtol=1e-9, atol=1e-12)

    def test_rejects_bad_data(self, interval16):
        with pytest.raises(ValueError, match="one value per Omega cell"):
            DirichletProblem(interval16, P2, np.zeros(3))
        with pytest.raises(ValueError, match="finite"):
            DirichletProblem(interval16, P2, np.full(interval16.n_omega, np.nan))
        with pytest.raises(ValueError, match="truncation"):
            DirichletProblem(interval16, FracParams(s=0.5, p=2.0, t=3.0), np.zeros(interval16.n_omega))


class TestComparisonCheck:
    def test_equal_data(self, interval16):
        rng = np.random.default_rng(37)
        f = rng.standard_normal(interval16.n_omega)
        report = comparison_check(interval16, f, f, P15)
        assert report.max_gap <= 1e-12
        assert report.passed

    def test_zero_below_one(self, interval16):
        report = comparison_check(
            interval16, np.zeros(interval16.n_omega), np.ones(interval16.n_omega), P2
        )
        assert report.passed
        assert report.max_gap <= 0.0  # w1 = 0 and w2 >= 0

    def test_random_ordered_pairs(self, interval16):
        rng = np.random.default_rng(38)
        for params in (P2, P15):
            for _ in range(3):
                f1 = rng.standard_normal(interval16.n_omega)
                f2 = f1 + np.abs(rng.standard_normal(interval16.n_omega))
                report = comparison_check(interval16, f1, f2, params)
                assert report.max_gap <= 1e-8

    def test_unordered_data_rejected(self, interval16):
        f1 = np.ones(interval16.n_omega)
        f2 = np.zeros(interval16.n_omega)
        with pytest.raises(ValueError, match="f1 <= f2"):
            comparison_check(interval16, f1, f2, P2)


class TestMonotonicityCertificate:
    def test_equal_arguments(self, interval16):
        rng = np.random.default_rng(39)
        u = random_function(interval16, rng)
        pairing, bound = monotonicity_certificate(u, u, P3)
        assert pairing == 0.0
        assert bound == 0.0

    def test_p2_is_energy_of_difference(self, interval16):
        rng = np.random.default_rng(40)
        for _ in range(10):
            u, v = random_function(interval16, rng), random_function(interval16, rng)
            pairing, bound = monotonicity_certificate(u, v, P2)
            e = gagliardo_energy(u - v, P2)
            assert pairing == pytest.approx(e, rel=1e-12)
            assert bound == pytest.approx(e, rel=1e-12)

    def test_p3_lower_bound(self, interval16):
        rng = np.random.default_rng(41)
        for _ in range(20):
            u, v = random_function(interval16, rng), random_function(interval16, rng)
            pairing, bound = monotonicity_certificate(u, v, P3)
            assert bound == pytest.approx(0.5 * gagliardo_energy(u - v, P3), rel=1e-12)
            assert pairing >= bound * (1 - 1e-12)

    def test_p15_nonnegative_and_pairwise(self, interval16):
        rng = np.random.default_rng(42)
        for _ in range(20):
            u, v = random_function(interval16, rng), random_function(interval16, rng)
            pairing, bound = monotonicity_certificate(u, v, P15)
            assert bound == 0.0
            assert pairing >= 0.0
            gap, scale = psmall_pairwise_gap(u, v, P15)
            assert gap <= 1e-12 * scale

    def test_pairwise_oracle_scan(self, interval8):
        # the per-pair inequality rechecked by explicit loops
        rng = np.random.default_rng(43)
        p = 1.5
        u, v = random_function(interval8, rng), random_function(interval8, rng)
        cells, mask = interval8.cells, interval8.omega_mask
        worst = -np.inf
        for i in range(len(cells)):
            for j in range(len(cells)):
                if i == j or not (mask[i] or mask[j]):
                    continue
                ksi = u.values[i] - u.values[j]
                eta = v.values[i] - v.values[j]
                if ksi == 0.0 and eta == 0.0:
                    continue
                d = (phi_p(np.array([ksi]), p) - phi_p(np.array([eta]), p))[0] * (ksi - eta)
                rhs = d * (abs(ksi) ** p + abs(eta) ** p) ** ((2 - p) / p)
                worst = max(worst, (p - 1) * (ksi - eta) ** 2 - rhs)
        assert worst <= 1e-12

    def test_host_mismatch(self, interval16, interval8):
        with pytest.raises(ValueError, match="hosts"):
            monotonicity_certificate(
                GridFunction.indicator(interval16), GridFunction.indicator(interval8), P2
            )


_scalars = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestScalarInequalities:
    """Pointwise inequalities behind the certificates, scanned by hypothesis."""

    @settings(max_examples=400, deadline=None)
    @given(a=_scalars, b=_scalars, p=st.floats(min_value=2.0, max_value=6.0))
    def test_large_p_monotonicity(self, a, b, p):
        eps = np.finfo(float).eps
        if abs(a - b) <= 4.0 * eps * (abs(a) + abs(b)):
            return  # below the float quantization of the odd power
        d = (phi_p(np.array([a]), p)[0] - phi_p(np.array([b]), p)[0]) * (a - b)
        assert abs(a - b) ** p <= 2.0 ** (p - 2.0) * d * (1 + 1e-12) + 1e-300

    @settings(max_examples=400, deadline=None)
    @given(a=_scalars, b=_scalars, p=st.floats(min_value=1.01, max_value=2.0))
    def test_small_p_monotonicity(self, a, b, p):
        eps = np.finfo(float).eps
        if a == 0.0 and b == 0.0:
            return
        if abs(a - b) <= 4.0 * eps * (abs(a) + abs(b)):
            return  # below the float quantization of the odd power
        d = (phi_p(np.array([a]), p)[0] - phi_p(np.array([b]), p)[0]) * (a - b)
        weight = (abs(a) ** p + abs(b) ** p) ** ((2.0 - p) / p)
        assert (p - 1.0) * (a - b) ** 2 <= d * weight * (1 + 1e-12) + 1e-300

    @settings(max_examples=400, deadline=None)
    @given(a=_scalars, b=_scalars, p=st.floats(min_value=2.0, max_value=6.0))
    def test_clarkson_scalar(self, a, b, p):
        lhs = abs((a - b) / 2.0) ** p + abs((a + b) / 2.0) ** p
        rhs = 0.5 * abs(a) ** p + 0.5 * abs(b) ** p
        assert lhs <= rhs * (1 + 1e-12) + 1e-300
