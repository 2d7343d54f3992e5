import math
from fractions import Fraction as F

import numpy as np
import pytest

import kakeya_lab as kl
from kakeya_lab.slices import aux_matrix

from conftest import float_T, float_X_of_lambda

I2 = kl.RationalMatrix.identity(2)
NIL = kl.companion([0, 0])


class TestSliceMatrices:
    def test_scalar_case(self):
        sm = kl.slice_matrices(kl.RationalMatrix.zero(2), F(1, 4), F(3, 4), F(1, 2))
        assert sm.X == I2
        assert sm.T == F(1, 3) * I2
        assert sm.M == kl.RationalMatrix.zero(2)

    def test_square_zero_closed_form(self):
        sm = kl.slice_matrices(NIL, 0, 1, F(1, 2))
        assert sm.X == I2 - NIL == kl.RationalMatrix([[1, -1], [0, 1]])
        assert sm.T is None  # undefined through height zero

    def test_parallel_collapse(self):
        # lam/(1-lam) = t0/t1 forces X = T when C^2 = 0
        sm = kl.slice_matrices(NIL, F(1, 3), F(2, 3), F(1, 3))
        assert sm.T is not None
        assert sm.X * sm.T.inverse() == I2

    @pytest.mark.parametrize("lam", [F(1, 5), F(1, 2), F(7, 8), F(-1, 3)])
    def test_zero_matrix_gives_scalar(self, lam):
        sm = kl.slice_matrices(kl.RationalMatrix.zero(2), F(-1, 2), F(1, 4), lam)
        assert sm.X == (lam / (1 - lam)) * I2

    def test_equal_heights_rejected(self):
        with pytest.raises(kl.SingularConfiguration):
            kl.slice_matrices(NIL, F(1, 2), F(1, 2), F(1, 3))

    def test_lambda_one_rejected(self):
        with pytest.raises(kl.SingularConfiguration):
            kl.slice_matrices(NIL, 0, F(1, 2), 1)

    def test_matches_float_formulas(self):
        C = kl.RationalMatrix([[F(1, 4), F(-1, 8)], [F(1, 8), F(1, 4)]])
        t0, t1, lam = F(-1, 3), F(1, 2), F(2, 5)
        sm = kl.slice_matrices(C, t0, t1, lam)
        Cf = C.to_float()
        assert np.allclose(sm.X.to_float(), float_X_of_lambda(Cf, float(t0), float(t1), float(lam)), atol=1e-12)
        assert np.allclose(sm.T.to_float(), float_T(Cf, float(t0), float(t1)), atol=1e-12)


class TestNondegeneracy:
    def test_zero(self):
        assert kl.check_nondegenerate(kl.RationalMatrix.zero(2))

    def test_large_real_eigenvalue(self):
        # det(I + 2t diag(3/5, 0)) vanishes at t = -5/6 inside the support
        assert not kl.check_nondegenerate(kl.RationalMatrix.diagonal([F(3, 5), 0]))

    def test_nilpotent(self):
        assert kl.check_nondegenerate(NIL)

    def test_boundary_eigenvalue(self):
        # eigenvalue exactly 1/2 makes det(I + 2tC) vanish at t = -1
        assert not kl.check_nondegenerate(kl.RationalMatrix.diagonal([F(1, 2), 0]))

    def test_complex_pair_large_modulus(self):
        # no real eigenvalues, so nondegenerate regardless of modulus
        assert kl.check_nondegenerate(kl.RationalMatrix([[F(5, 2), -1], [1, F(5, 2)]]))


class TestNikodymSolver:
    def test_square_zero_canonical_solution(self):
        sol = kl.solve_nikodym_three_slice(NIL)
        assert sol.kind == "nikodym3"
        assert sol.heights == (F(1, 3), F(2, 3), F(4, 9))
        assert sol.lam == F(1, 3)
        assert sol.residual == 0.0
        assert sol.t0_range is not None

    def test_complex_pair_branch(self):
        C = kl.RationalMatrix([[F(5, 2), -1], [1, F(5, 2)]])
        sol = kl.solve_nikodym_three_slice(C)
        t0, t1, t2 = (float(h) for h in sol.heights)
        a2b2 = 2.5**2 + 1.0
        assert abs(t0 - math.sqrt(3 * 2.5**2 - 1.0) / a2b2) < 1e-12
        assert t1 == -t0
        assert abs(t2 - (-2 * 2.5 / a2b2)) < 1e-12
        # reciprocal-sum identity
        assert abs(2 * 2.5 / a2b2 + (t0 + t1 + t2)) < 1e-8
        assert sol.residual <= 1e-9
        assert sol.t0_range is not None

    def test_repeated_real_eigenvalue_blocked(self):
        with pytest.raises(kl.NoSolution) as e:
            kl.solve_nikodym_three_slice(kl.RationalMatrix.diagonal([F(2, 5), F(2, 5)]))
        assert e.value.reason == "reciprocal_sum_out_of_range"

    def test_real_pair_region_walk(self):
        C = kl.RationalMatrix.diagonal([F(1, 4), F(-2, 5)])
        sol = kl.solve_nikodym_three_slice(C)
        assert sol.residual <= 1e-9
        t0, t1, t2 = (float(h) for h in sol.heights)
        assert abs((4 - 2.5) + (t0 + t1 + t2)) < 1e-8  # 1/h + 1/k = 4 - 5/2
        assert sol.t0_range is not None

    def test_zero_eigenvalue_blocked(self):
        with pytest.raises(kl.NoSolution):
            kl.solve_nikodym_three_slice(kl.RationalMatrix.diagonal([F(1, 4), 0]))

    @pytest.mark.parametrize("h,k", [
        (F(1, 4), F(-2, 5)), (F(2, 5), F(-1, 4)), (F(9, 20), F(-7, 20)),
        (F(-2, 5), F(3, 10)), (F(3, 10), F(-9, 20)), (F(1, 3), F(-5, 12)),
    ])
    def test_real_pair_sweep(self, h, k):
        # opposite-sign pairs with |1/h + 1/k| < 3, swept across the region
        assert abs(1 / h + 1 / k) < 3
        tau = 1 + min(h, k, key=abs) / max(h, k, key=abs)
        assert 0 < tau < F(3, 5)
        sol = kl.solve_nikodym_three_slice(kl.RationalMatrix.diagonal([h, k]))
        assert sol.residual <= 1e-9
        t0, t1, t2 = (float(x) for x in sol.heights)
        assert abs((1 / float(h) + 1 / float(k)) + (t0 + t1 + t2)) < 1e-8

    def test_diagonal_three_by_three(self):
        # repeated eigenvalue is fine as long as only two distinct values occur
        C = kl.RationalMatrix.diagonal([F(1, 4), F(1, 4), F(-2, 5)])
        sol = kl.solve_nikodym_three_slice(C)
        assert sol.residual <= 1e-9

    def test_residual_recomputed_independently(self):
        for C in (NIL, kl.RationalMatrix([[F(5, 2), -1], [1, F(5, 2)]]),
                  kl.RationalMatrix.diagonal([F(1, 4), F(-2, 5)])):
            sol = kl.solve_nikodym_three_slice(C)
            t0, t1, t2 = (float(h) for h in sol.heights)
            lam = (t0 - t2) / (t0 - t1)
            Cf = C.to_float()
            res = np.max(np.abs(float_X_of_lambda(Cf, t0, t1, lam) - float_T(Cf, t0, t1)))
            assert res <= 1e-9

    def test_heights_satisfy_matrix_quadratic(self):
        # independent check straight against the height-quadratic matrix identity
        for C in (kl.RationalMatrix([[F(5, 2), -1], [1, F(5, 2)]]),
                  kl.RationalMatrix.diagonal([F(1, 4), F(-2, 5)]),
                  kl.RationalMatrix.diagonal([F(9, 20), F(-7, 20)])):
            sol = kl.solve_nikodym_three_slice(C)
            t0, t1, t2 = (float(h) for h in sol.heights)
            Cf = C.to_float()
            quad = ((t0**2 * t2**2 + t1**2 * t2**2 - 2 * t0**2 * t1**2) * (Cf @ Cf)
                    + (t0 + t1 + t2) * (t0 * t2 + t1 * t2 - 2 * t0 * t1) * Cf
                    + (t0 * t2 + t1 * t2 - 2 * t0 * t1) * np.eye(C.dim))
            assert np.max(np.abs(quad)) <= 1e-9


class TestKakeyaSolver:
    def test_pure_rotation(self):
        C = kl.RationalMatrix([[0, -10], [10, 0]])
        sol = kl.solve_kakeya_four_slice(C)
        assert sol.kind == "kakeya4"
        assert sol.residual <= 1e-9
        assert 0 < sol.lam < 1 and 0 < sol.mu < 1
        assert sol.t0_range is not None
        # the recovered eigenvalue pair satisfies the sum/product relations
        M = aux_matrix(C, sol.heights[0], sol.heights[1])
        ev = np.linalg.eigvals(M.to_float())
        s_, p_ = ev.sum().real, (ev[0] * ev[1]).real
        lam, mu = sol.lam, sol.mu
        assert abs((2 / mu + 1 / (1 - mu) - 1 / (1 - lam)) + s_) < 1e-8
        assert abs((1 / (lam * mu) - 1 / (mu * (1 - lam)) + 1 / (lam * (1 - mu))) - p_) < 1e-8

    def test_nilpotent_blocked(self):
        with pytest.raises(kl.NoSolution) as e:
            kl.solve_kakeya_four_slice(NIL)
        assert e.value.reason == "nilpotent_M"

    def test_real_spectrum_blocked(self):
        with pytest.raises(kl.NoSolution) as e:
            kl.solve_kakeya_four_slice(kl.RationalMatrix.diagonal([F(1, 4), F(1, 8)]))
        assert e.value.reason == "real_spectrum_blocked"

    def test_small_rotation_region_violated(self):
        with pytest.raises(kl.NoSolution) as e:
            kl.solve_kakeya_four_slice(kl.RationalMatrix([[0, -1], [1, 0]]))
        assert e.value.reason == "region_violated"

    def test_negative_alpha_branch(self):
        C = kl.RationalMatrix([[-2, F(-1, 2)], [F(1, 2), -2]])
        sol = kl.solve_kakeya_four_slice(C)
        assert sol.residual <= 1e-9

    def test_positive_alpha_uses_swapped_heights(self):
        # real part just above (1+sqrt(2))/2 only works with the outer heights swapped
        C = kl.RationalMatrix([[F(13, 10), F(-1, 10)], [F(1, 10), F(13, 10)]])
        sol = kl.solve_kakeya_four_slice(C)
        assert sol.residual <= 1e-9
        assert sol.regime == "complex_pair_swapped"
        assert float(sol.heights[0]) > 0 > float(sol.heights[1])

    def test_repeated_conjugate_pair_higher_dimension(self):
        # two identical rotation blocks: still a single conjugate pair
        C = kl.RationalMatrix([
            [0, -10, 0, 0],
            [10, 0, 0, 0],
            [0, 0, 0, -10],
            [0, 0, 10, 0],
        ])
        sol = kl.solve_kakeya_four_slice(C)
        assert sol.residual <= 1e-9


class TestQuarticQ:
    def test_mu_zero(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            l = F(int(rng.integers(-8, 9)), int(rng.integers(1, 7)))
            m = F(int(rng.integers(-8, 9)), int(rng.integers(1, 7)))
            assert kl.quartic_q(0, l, m) == -4

    def test_mu_one_m_minus_one(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            l = F(int(rng.integers(-8, 9)), int(rng.integers(1, 7)))
            assert kl.quartic_q(1, l, F(-1)) == 0

    def test_mu_one_general(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            l = F(int(rng.integers(-8, 9)), int(rng.integers(1, 7)))
            m = F(int(rng.integers(-8, 9)), int(rng.integers(1, 7)))
            assert kl.quartic_q(1, l, m) == -(l + 1) * (m + 1)

    def test_symmetric_in_l_m(self):
        assert kl.quartic_q(F(1, 3), F(2, 5), F(-7, 2)) == kl.quartic_q(F(1, 3), F(-7, 2), F(2, 5))

    def test_conjugate_pair_is_real(self):
        val = kl.quartic_q(0.3, complex(-8.6, 10.5), complex(-8.6, -10.5))
        assert isinstance(val, float)

    def test_solver_coefficients_match_q_exactly(self):
        # the root-finding polynomial written in (s, p) = (l+m, lm) is the same
        # function as the quadratic-in-l form of q
        from kakeya_lab.slices import _quartic_coeffs

        rng = np.random.default_rng(9)
        for _ in range(50):
            l = F(int(rng.integers(-9, 10)), int(rng.integers(1, 7)))
            m = F(int(rng.integers(-9, 10)), int(rng.integers(1, 7)))
            mu = F(int(rng.integers(-6, 7)), int(rng.integers(1, 9)))
            coeffs = _quartic_coeffs(l + m, l * m)
            poly_val = sum(F(c) * mu ** (4 - i) for i, c in enumerate(coeffs))
            assert poly_val == kl.quartic_q(mu, l, m)


class TestIteration:
    def test_zero(self):
        assert kl.iterate_epsilon(F(0)) == F(1, 4)

    def test_quarter(self):
        assert kl.iterate_epsilon(F(1, 4)) == F(31, 101)

    def test_convergence_from_one_sixth(self):
        e = 1 / 6
        for _ in range(50):
            e = kl.iterate_epsilon(e)
        assert abs(e - 0.32486) <= 1e-4

    def test_monotone_below_fixed_point(self):
        xs = np.linspace(0, 0.32486, 50)
        vals = [kl.iterate_epsilon(float(x)) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_fixed_point_residual(self):
        p = kl.iteration_fixed_point()
        assert abs(kl.iterate_epsilon(p) - p) <= 1e-10

    def test_domain(self):
        with pytest.raises(ValueError):
            kl.iterate_epsilon(1.0)


class TestDimensionLowerBound:
    def test_trivial_bound(self):
        assert kl.dimension_lower_bound(7, F(0), True) == F(8, 2)

    def test_large_n_value(self):
        val = kl.dimension_lower_bound(10, 0.32486, True)
        assert abs(val - 6.372) <= 1e-3

    def test_exact_small_case(self):
        assert kl.dimension_lower_bound(3, F(1, 6), False) == F(12, 11)


class TestGenfailExponents:
    def test_base_case(self):
        out = kl.genfail_exponents(3, 0)
        assert out.p_max == F(5, 2)

    def test_trace_flag(self):
        out = kl.genfail_exponents(3, 0, tr_adj_zero=True)
        assert out.p_max == F(7, 3)

    def test_generic_n(self):
        for n in range(3, 10):
            assert kl.genfail_exponents(n, 0).p_max == n - F(1, 2)

    def test_full_exponent_iff_top_multiplicity(self):
        for n in range(3, 10):
            for k in range(0, n - 1):
                p = kl.genfail_exponents(n, k).p_max
                assert (p == n) == (k == n - 2)

    def test_m_values(self):
        assert kl.genfail_exponents(3, 0).m == 3
        assert kl.genfail_exponents(3, 0, tr_adj_zero=True).m == 4
        assert math.isinf(kl.genfail_exponents(3, 0, tr_adj_zero=True, det_zero=True).m)

    def test_k_range_validated(self):
        with pytest.raises(ValueError):
            kl.genfail_exponents(3, 2)


class TestWMatrix:
    def test_l2_example(self):
        C = kl.companion([3, 5])
        W = kl.w_matrix(C)
        assert W == kl.RationalMatrix([[0, 0], [-1, 0]])
        assert kl.direction_map_det(C, W) == kl.Polynomial([0, 0, 0, 3, -5])

    def test_l1_block(self):
        C = kl.companion([F(7, 2)])
        W = kl.w_matrix(C)
        assert W == kl.RationalMatrix([[0]])
        assert kl.direction_map_det(C, W) == kl.Polynomial([0, -1, F(-7, 2)])

    def test_l3_block_coefficients(self):
        c1, c2, c3 = F(2), F(-3), F(5)
        C = kl.companion([c1, c2, c3])
        det = kl.direction_map_det(C, kl.w_matrix(C))
        assert all(det[i] == 0 for i in range(5))
        assert det[5] == c2 and det[6] == -c3

    def test_block_diagonal_assembly(self):
        # direct sum of a 2-block and a 1-block
        rows = [[F(3), 1, 0], [F(5), 0, 0], [0, 0, F(2)]]
        C = kl.RationalMatrix(rows)
        W = kl.w_matrix(C)
        assert W == kl.RationalMatrix([[0, 0, 0], [-1, 0, 0], [0, 0, 0]])
        det = kl.direction_map_det(C, W)
        # product of per-block dets: (3t^3 - 5t^4) * (-t - 2t^2)
        expect = kl.Polynomial([0, 0, 0, 3, -5]) * kl.Polynomial([0, -1, -2])
        assert det == expect

    def test_not_companion_form(self):
        with pytest.raises(kl.NotCompanionForm):
            kl.w_matrix(kl.RationalMatrix([[0, 0], [1, 0]]))
        with pytest.raises(kl.NotCompanionForm):
            kl.w_matrix(kl.RationalMatrix([[1, 2], [3, 4]]))

    def test_vanishing_order(self):
        C = kl.companion([3, 5])
        assert kl.vanishing_order(C, kl.w_matrix(C)) == 3
        Z = kl.companion([0, 0])
        assert math.isinf(kl.vanishing_order(Z, kl.w_matrix(Z)))


def test_heights_solution_json():
    sol = kl.solve_nikodym_three_slice(NIL)
    j = sol.to_json()
    assert j["kind"] == "nikodym3"
    assert j["heights"] == ["1/3", "2/3", "4/9"]
    assert j["lambda"] == "1/3"
    assert j["range"] is not None
