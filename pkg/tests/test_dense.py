"""Dense reference assemblies and the spectral verification suite."""

import math

import numpy as np
import pytest
import scipy.linalg

from fractau import (
    AllAtOnceOperator,
    ProblemSpec,
    SpatialOperator,
    SpatialScheme,
    TemporalOperator,
    build_preconditioner,
    l1_weights,
    spatial_weights,
    tau_eigenvalues,
    tau_first_column,
)
from fractau.dense import (
    DENSE_SIZE_CAP,
    check_c_lower_bound,
    check_condition_number,
    check_spectrum_inclusion,
    check_tau_equivalence,
    check_temporal_definite,
    check_weight_matrix_definite,
    dense_A,
    dense_hankel_correction,
    dense_P,
    dense_Pl,
    dense_Pr,
    dense_spatial,
    dense_spatial_tau,
    dense_tau,
    dense_temporal,
    dense_W,
    kappa_bound,
    run_theorem_checks,
)

RNG = np.random.default_rng(1105)


def small_spec(n_time=4, m_space=(4, 3), alpha=0.5, betas=(1.4, 1.8)):
    return ProblemSpec(
        alpha=alpha,
        beta=betas,
        c=(1.0,) * len(m_space),
        bounds=((0.0, 1.0),) * len(m_space),
        final_time=1.0,
        n_time=n_time,
        m_space=m_space,
        scheme=SpatialScheme.SHIFTED_GRUNWALD,
    )


class TestHankelCorrection:
    def test_explicit_entries_m4(self):
        w = np.array([10.0, 20.0, 30.0, 40.0])
        h = dense_hankel_correction(w, 4)
        # 1-based: h_11 = w_2, h_44 = w_{10-8} = w_2, h_23 = 0 (central band)
        assert h[0, 0] == 30.0
        assert h[3, 3] == 30.0
        assert h[1, 2] == 0.0
        assert h[0, 1] == 40.0  # w_3
        assert h[2, 3] == 40.0  # mirrored w_{10-7} = w_3
        assert h[0, 3] == 0.0 and h[1, 1] == 0.0

    @pytest.mark.parametrize("m", [1, 2])
    def test_tiny_sizes_vanish(self, m):
        w = RNG.standard_normal(4)
        np.testing.assert_array_equal(dense_hankel_correction(w, m), np.zeros((m, m)))

    def test_symmetries(self):
        w = RNG.standard_normal(9)
        h = dense_hankel_correction(w, 9)
        np.testing.assert_array_equal(h, h.T)
        # Hankel structure: constant along anti-diagonals
        np.testing.assert_array_equal(h, np.flip(h).T)

    def test_first_column_matches_projection(self):
        w = spatial_weights(SpatialScheme.CENTERED, 1.6, 8).w
        tau = dense_tau(w, 8)
        np.testing.assert_allclose(tau[:, 0], tau_first_column(w, 8), rtol=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            dense_W(np.ones(3), 4)
        with pytest.raises(ValueError):
            dense_W(np.ones(3), 0)


class TestDenseAssemblies:
    @pytest.mark.parametrize("scheme", list(SpatialScheme))
    def test_tau_eigenvalues_match_dense(self, scheme):
        m = 16
        w = spatial_weights(scheme, 1.5, m)
        got = np.sort(tau_eigenvalues(w, m))
        want = np.sort(scipy.linalg.eigvalsh(dense_tau(w, m)))
        np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-12)

    def test_temporal_is_lower_triangular_toeplitz(self):
        col = l1_weights(0.5, 6, 0.2).l
        t = dense_temporal(TemporalOperator(col))
        assert np.all(np.triu(t, 1) == 0.0)
        for k in range(6):
            np.testing.assert_array_equal(np.diag(t, -k), np.full(6 - k, col[k]))

    def test_spatial_matches_matrix_free(self):
        spec = small_spec()
        op = SpatialOperator.from_spec(spec)
        b = dense_spatial(spec)
        cols = np.column_stack([op.apply(e) for e in np.eye(op.n_space)])
        np.testing.assert_allclose(b, cols, rtol=0, atol=1e-12 * np.abs(b).max())

    def test_spatial_tau_two_assemblies_agree(self):
        # route 1: Kronecker sum of dense tau blocks; route 2: sine-basis
        # eigen-decomposition with the separable eigenvalue grid
        spec = small_spec()
        prec = build_preconditioner(spec)
        route1 = dense_spatial_tau(spec)
        s = np.kron(prec.plans[0].matrix(), prec.plans[1].matrix())
        route2 = s @ np.diag(prec.lambda_tilde) @ s
        np.testing.assert_allclose(route1, route2, rtol=0, atol=1e-11 * prec.lambda_tilde.max())

    def test_all_at_once_matches_matrix_free(self):
        spec = small_spec(n_time=3, m_space=(3, 2))
        op = AllAtOnceOperator.from_spec(spec)
        a = dense_A(spec)
        cols = np.column_stack([op.apply(e) for e in np.eye(op.size)])
        np.testing.assert_allclose(a, cols, rtol=0, atol=1e-12 * np.abs(a).max())

    def test_P_inverts_matrix_free_apply(self):
        spec = small_spec()
        prec = build_preconditioner(spec)
        p = dense_P(prec)
        v = RNG.standard_normal(prec.size)
        np.testing.assert_allclose(
            p @ prec.apply_P_inv(v), v, rtol=0, atol=1e-11 * np.abs(v).max()
        )

    def test_split_factors_multiply_to_P(self):
        spec = small_spec()
        prec = build_preconditioner(spec)
        np.testing.assert_allclose(
            dense_Pl(prec) @ dense_Pr(prec),
            dense_P(prec),
            rtol=0,
            atol=1e-11 * prec.lambda_tilde.max(),
        )

    def test_split_factors_match_matrix_free(self):
        spec = small_spec()
        prec = build_preconditioner(spec)
        v = RNG.standard_normal(prec.size)
        np.testing.assert_allclose(
            dense_Pl(prec) @ prec.apply_Pl_inv(v), v, rtol=0, atol=1e-11 * np.abs(v).max()
        )
        np.testing.assert_allclose(
            dense_Pr(prec) @ v, prec.apply_Pr(v), rtol=0, atol=1e-11 * np.abs(v).max()
        )

    def test_size_cap_enforced(self):
        spec = small_spec(n_time=100, m_space=(50,), betas=(1.4,))
        assert spec.total_unknowns > DENSE_SIZE_CAP
        with pytest.raises(ValueError, match="cap"):
            dense_A(spec)
        prec = build_preconditioner(spec)
        with pytest.raises(ValueError, match="cap"):
            dense_P(prec)
        with pytest.raises(ValueError, match="cap"):
            check_condition_number(spec)


class TestKappaBound:
    def test_frozen_values(self):
        assert kappa_bound(math.sqrt(3.0) / 2.0) == pytest.approx(3.0, rel=1e-14)
        assert kappa_bound(1.0) == pytest.approx(math.sqrt(12.0), rel=1e-14)
        assert kappa_bound(0.5) == pytest.approx(3.0, rel=1e-14)
        assert kappa_bound(2.0) == pytest.approx(math.sqrt(48.0), rel=1e-14)

    def test_default_scaling_is_minimizer(self):
        etas = np.linspace(0.2, 2.5, 47)
        values = [kappa_bound(e) for e in etas]
        assert min(values) >= 3.0 - 1e-12

    def test_validation(self):
        with pytest.raises(ValueError):
            kappa_bound(0.0)


class TestSpectrumInclusion:
    @pytest.mark.parametrize("m", [1, 2])
    def test_projection_exact_at_tiny_sizes(self, m):
        # tau(W) = W for m <= 2, so every generalized eigenvalue is 1
        w = spatial_weights(SpatialScheme.SHIFTED_GRUNWALD, 1.5, m)
        report = check_spectrum_inclusion(w, m)
        assert report.min_eigenvalue == pytest.approx(1.0, abs=1e-12)
        assert report.max_eigenvalue == pytest.approx(1.0, abs=1e-12)
        assert report.passed

    @pytest.mark.parametrize("scheme", list(SpatialScheme))
    @pytest.mark.parametrize("beta", [1.1, 1.5, 1.9])
    def test_inclusion_holds(self, scheme, beta):
        w = spatial_weights(scheme, beta, 32)
        report = check_spectrum_inclusion(w)
        assert report.passed, str(report)
        assert 0.5 < report.min_eigenvalue <= report.max_eigenvalue < 1.5

    def test_size_cap(self):
        w = spatial_weights(SpatialScheme.CENTERED, 1.5, 600)
        with pytest.raises(ValueError):
            check_spectrum_inclusion(w, 600)


class TestConditionNumber:
    def test_canonical_scaling_meets_bound_of_three(self):
        report = check_condition_number(small_spec())
        assert report.passed, str(report)
        assert 1.0 < report.kappa <= 3.0 * (1.0 + 1e-8)

    @pytest.mark.parametrize("eta", [0.5, 1.0, 2.0])
    def test_other_scalings_meet_their_bounds(self, eta):
        report = check_condition_number(small_spec(), eta=eta)
        assert report.passed, str(report)
        assert report.bound == pytest.approx(kappa_bound(eta))

    def test_sigma_fields_consistent(self):
        report = check_condition_number(small_spec())
        assert report.kappa == pytest.approx(report.sigma_max / report.sigma_min)


class TestLowerBound:
    @pytest.mark.parametrize("m", [8, 64])
    def test_one_dimensional_bound(self, m):
        spec = ProblemSpec(
            alpha=0.5,
            beta=(1.5,),
            c=(1.0,),
            bounds=((0.0, 1.0),),
            final_time=1.0,
            n_time=4,
            m_space=(m,),
            scheme=SpatialScheme.SHIFTED_GRUNWALD,
        )
        report = check_c_lower_bound(spec)
        assert report.passed, str(report)
        assert report.c_check > 0.0
        assert report.lambda_min >= report.c_check * (1.0 - 1e-12)
        assert report.horizon == 4096

    def test_lambda_min_is_separable(self):
        spec = small_spec()
        report = check_c_lower_bound(spec)
        prec = build_preconditioner(spec)
        assert report.lambda_min == pytest.approx(prec.lambda_min, rel=1e-13)

    def test_bound_scales_with_eta(self):
        spec = small_spec()
        one = check_c_lower_bound(spec, eta=1.0)
        half = check_c_lower_bound(spec, eta=0.5)
        assert half.c_check == pytest.approx(0.5 * one.c_check, rel=1e-14)
        assert half.lambda_min == pytest.approx(0.5 * one.lambda_min, rel=1e-14)


class TestDefiniteness:
    @pytest.mark.parametrize("scheme", list(SpatialScheme))
    def test_weight_matrix_positive_definite(self, scheme):
        w = spatial_weights(scheme, 1.3, 64)
        report = check_weight_matrix_definite(w)
        assert report.passed, str(report)
        assert report.size == 64

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
    def test_temporal_symmetric_part_positive(self, alpha):
        temporal = TemporalOperator(l1_weights(alpha, 64, 1.0 / 64).l)
        report = check_temporal_definite(temporal)
        assert report.passed, str(report)


class TestEquivalence:
    def test_generalized_eigenvalues_in_interval(self):
        report = check_tau_equivalence(small_spec())
        assert report.passed, str(report)
        lower, upper = math.sqrt(3.0) / 3.0, math.sqrt(3.0)
        assert report.min_eigenvalue >= lower * (1.0 - 1e-10)
        assert report.max_eigenvalue <= upper * (1.0 + 1e-10)
        assert report.min_eigenvalue < report.max_eigenvalue

    def test_size_cap(self):
        spec = small_spec(n_time=2, m_space=(80, 80))
        with pytest.raises(ValueError, match="cap"):
            check_tau_equivalence(spec)


class TestAggregateSuite:
    def test_all_checks_pass_and_print(self):
        reports, ok = run_theorem_checks(small_spec())
        assert ok
        assert len(reports) >= 10
        for report in reports:
            line = str(report)
            assert "PASS" in line and "FAIL" not in line
