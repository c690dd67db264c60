"""Matrix-free operators against dense Kronecker oracles."""

import numpy as np
import pytest
import scipy.linalg

from fractau import (
    AllAtOnceOperator,
    ProblemSpec,
    SpatialOperator,
    SpatialScheme,
    TemporalOperator,
    apply_A,
    apply_B,
    apply_T,
    assemble_rhs,
    direction_weights,
    l1_weights,
    spatial_weights,
)
from fractau.operators import DIRECT_CROSSOVER

RNG = np.random.default_rng(20260818)


def dense_lower(col):
    return np.tril(scipy.linalg.toeplitz(col))


def dense_symmetric(col):
    return scipy.linalg.toeplitz(col)


def dense_kron_sum(mats, etas):
    # sum_i eta_i I (x) ... (x) W_i (x) ... (x) I in C-order layout:
    # the first grid axis is the outermost Kronecker factor
    sizes = [m.shape[0] for m in mats]
    total = int(np.prod(sizes))
    out = np.zeros((total, total))
    for i, (mat, eta) in enumerate(zip(mats, etas)):
        term = np.eye(1)
        for j, size in enumerate(sizes):
            factor = mat if j == i else np.eye(size)
            term = np.kron(term, factor)
        out += eta * term
    return out


class TestTemporalOperator:
    @pytest.mark.parametrize("n", [1, 5, DIRECT_CROSSOVER - 1, DIRECT_CROSSOVER + 1])
    def test_matches_dense_lower_toeplitz(self, n):
        # straddles the dense/FFT crossover: both paths are exact
        col = RNG.standard_normal(n)
        col[0] = abs(col[0]) + 1.0
        op = TemporalOperator(col)
        dense = dense_lower(col)
        for _ in range(3):
            v = RNG.standard_normal(n)
            got = op.apply(v)
            want = dense @ v
            np.testing.assert_allclose(got, want, rtol=0, atol=1e-13 * np.abs(want).max() + 1e-300)

    @pytest.mark.parametrize("n", [20, 40])
    def test_causality(self, n):
        # lower-triangular coupling: a kick at level j cannot reach levels
        # < j (up to FFT roundoff on the circulant path)
        tw = l1_weights(0.6, n, 0.05)
        op = TemporalOperator.from_weights(tw)
        j = 17
        e = np.zeros(n)
        e[j] = 1.0
        out = op.apply(e)
        assert np.abs(out[:j]).max() <= 1e-14 * tw.l[0]
        assert out[j] == pytest.approx(tw.l[0])

    def test_apply_along_batches(self):
        col = RNG.standard_normal(12)
        col[0] = 2.0
        op = TemporalOperator(col)
        x = RNG.standard_normal((3, 4, 12))
        got = op.apply_along(x, 2)
        for i in range(3):
            for j in range(4):
                np.testing.assert_allclose(
                    got[i, j], op.apply(x[i, j]), rtol=1e-14, atol=1e-15
                )

    def test_validation(self):
        with pytest.raises(ValueError):
            TemporalOperator(np.array([]))
        with pytest.raises(ValueError):
            TemporalOperator(np.array([-1.0, 0.3]))
        op = TemporalOperator(np.array([1.0, -0.25]))
        with pytest.raises(ValueError):
            op.apply(np.zeros(3))


class TestSpatialOperator:
    def test_one_dimensional_matches_dense(self):
        m = 17
        w = spatial_weights(SpatialScheme.SHIFTED_GRUNWALD, 1.4, m)
        eta = 3.7
        op = SpatialOperator([w], [eta])
        dense = eta * dense_symmetric(w.w)
        v = RNG.standard_normal(m)
        np.testing.assert_allclose(op.apply(v), dense @ v, rtol=1e-13)

    @pytest.mark.parametrize(
        "shape, betas",
        [((5, 7), (1.2, 1.8)), ((3, 4, 5), (1.1, 1.5, 1.9))],
    )
    def test_kronecker_sum_matches_dense(self, shape, betas):
        weights = [
            spatial_weights(SpatialScheme.CENTERED, b, m)
            for b, m in zip(betas, shape)
        ]
        etas = [1.0 + 0.5 * i for i in range(len(shape))]
        op = SpatialOperator(weights, etas)
        dense = dense_kron_sum([dense_symmetric(w.w) for w in weights], etas)
        for _ in range(4):
            v = RNG.standard_normal(op.n_space)
            want = dense @ v
            np.testing.assert_allclose(op.apply(v), want, rtol=0, atol=1e-13 * np.abs(want).max())

    def test_fft_path_agrees_with_dense_path(self):
        # same weights, one size on each side of the crossover; the long
        # operator restricted to a leading block is NOT the short operator,
        # so compare each against an explicit dense product instead
        for m in (DIRECT_CROSSOVER - 2, DIRECT_CROSSOVER + 2):
            w = spatial_weights(SpatialScheme.WEIGHTED_SHIFTED, 1.6, m)
            op = SpatialOperator([w], [1.0])
            dense = dense_symmetric(w.w)
            v = RNG.standard_normal(m)
            np.testing.assert_allclose(op.apply(v), dense @ v, rtol=1e-13)

    def test_apply_grid_carries_time_axis(self):
        weights = [
            spatial_weights(SpatialScheme.SHIFTED_GRUNWALD, 1.5, 4),
            spatial_weights(SpatialScheme.SHIFTED_GRUNWALD, 1.3, 6),
        ]
        op = SpatialOperator(weights, [2.0, 5.0])
        x = RNG.standard_normal((4, 6, 9))
        got = op.apply_grid(x)
        for t in range(9):
            want = op.apply(x[:, :, t].reshape(-1)).reshape(4, 6)
            np.testing.assert_allclose(got[:, :, t], want, rtol=1e-13, atol=1e-14)

    def test_symmetry_and_positivity(self):
        weights = [
            spatial_weights(SpatialScheme.CENTERED, 1.7, 6),
            spatial_weights(SpatialScheme.CENTERED, 1.2, 5),
        ]
        op = SpatialOperator(weights, [1.0, 4.0])
        v = RNG.standard_normal(op.n_space)
        u = RNG.standard_normal(op.n_space)
        assert u @ op.apply(v) == pytest.approx(v @ op.apply(u), rel=1e-12)
        assert v @ op.apply(v) > 0

    def test_from_spec_uses_derived_scales(self):
        spec = ProblemSpec(
            alpha=0.5,
            beta=(1.3, 1.8),
            c=(2.0, 0.5),
            bounds=((0.0, 1.0), (0.0, 2.0)),
            final_time=1.0,
            n_time=4,
            m_space=(5, 7),
            scheme=SpatialScheme.SHIFTED_GRUNWALD,
        )
        op = SpatialOperator.from_spec(spec)
        assert op.eta == pytest.approx(spec.eta)
        for w, ref in zip(op.weights, direction_weights(spec)):
            np.testing.assert_array_equal(w.w, ref.w)

    def test_validation(self):
        w = spatial_weights(SpatialScheme.CENTERED, 1.5, 4)
        with pytest.raises(ValueError):
            SpatialOperator([w], [1.0, 2.0])
        with pytest.raises(ValueError):
            SpatialOperator([w], [0.0])
        with pytest.raises(ValueError):
            SpatialOperator([], [])


class TestAllAtOnceOperator:
    @pytest.mark.parametrize(
        "n_time, m_space",
        [(4, (4,)), (8, (4, 4)), (4, (2, 2, 2))],
    )
    def test_matches_dense_all_at_once(self, n_time, m_space):
        spec = ProblemSpec(
            alpha=0.5,
            beta=tuple(1.1 + 0.3 * i for i in range(len(m_space))),
            c=tuple(1.0 for _ in m_space),
            bounds=tuple((0.0, 1.0) for _ in m_space),
            final_time=1.0,
            n_time=n_time,
            m_space=m_space,
            scheme=SpatialScheme.SHIFTED_GRUNWALD,
        )
        op = AllAtOnceOperator.from_spec(spec)
        t_dense = dense_lower(l1_weights(spec.alpha, n_time, spec.mu).l)
        w_dense = [dense_symmetric(w.w) for w in direction_weights(spec)]
        b_dense = dense_kron_sum(w_dense, spec.eta)
        size = op.size
        a_dense = np.kron(np.eye(b_dense.shape[0]), t_dense) + np.kron(
            b_dense, np.eye(n_time)
        )
        for _ in range(3):
            v = RNG.standard_normal(size)
            want = a_dense @ v
            np.testing.assert_allclose(op.apply(v), want, rtol=0, atol=1e-13 * np.abs(want).max())

    def test_layout_is_space_major(self):
        # entry index = spatial index * N + time index: hitting one unknown
        # with the temporal factor stays inside its spatial block
        spec = ProblemSpec(
            alpha=0.3,
            beta=(1.5,),
            c=(1.0,),
            bounds=((0.0, 1.0),),
            final_time=1.0,
            n_time=6,
            m_space=(3,),
            scheme=SpatialScheme.CENTERED,
        )
        op = AllAtOnceOperator.from_spec(spec)
        n = spec.n_time
        e = np.zeros(op.size)
        s, t = 1, 0
        e[s * n + t] = 1.0
        out = op.apply(e)
        grid = out.reshape(3, n)
        # temporal fill propagates down the time axis of spatial row s only;
        # the spatial coupling touches time level t of the other rows only
        assert np.all(grid[0, 1:] == 0.0) and np.all(grid[2, 1:] == 0.0)
        assert np.all(grid[s, 1:] != 0.0)

    def test_functional_aliases(self):
        spec = ProblemSpec(
            alpha=0.4,
            beta=(1.6,),
            c=(1.0,),
            bounds=((0.0, 1.0),),
            final_time=1.0,
            n_time=5,
            m_space=(4,),
            scheme=SpatialScheme.SHIFTED_GRUNWALD,
        )
        op = AllAtOnceOperator.from_spec(spec)
        v = RNG.standard_normal(op.size)
        np.testing.assert_array_equal(apply_A(op, v), op.apply(v))
        sv = RNG.standard_normal(op.n_space)
        np.testing.assert_array_equal(apply_B(op.spatial, sv), op.spatial.apply(sv))
        tv = RNG.standard_normal(op.n_time)
        np.testing.assert_array_equal(apply_T(op.temporal, tv), op.temporal.apply(tv))

    def test_shape_validation(self):
        spec = ProblemSpec(
            alpha=0.4,
            beta=(1.6,),
            c=(1.0,),
            bounds=((0.0, 1.0),),
            final_time=1.0,
            n_time=5,
            m_space=(4,),
            scheme=SpatialScheme.SHIFTED_GRUNWALD,
        )
        op = AllAtOnceOperator.from_spec(spec)
        with pytest.raises(ValueError):
            op.apply(np.zeros(op.size + 1))


class TestAssembleRhs:
    @staticmethod
    def spec_1d(n_time=4, m=3, alpha=0.5):
        return ProblemSpec(
            alpha=alpha,
            beta=(1.5,),
            c=(1.0,),
            bounds=((0.0, 1.0),),
            final_time=1.0,
            n_time=n_time,
            m_space=(m,),
            scheme=SpatialScheme.SHIFTED_GRUNWALD,
        )

    def test_layout_and_grid_sampling(self):
        spec = self.spec_1d()
        rhs = assemble_rhs(spec, lambda x, t: 100.0 * x + t)
        xs = spec.grids()[0]
        ts = spec.time_levels()
        grid = rhs.reshape(3, 4)
        for s in range(3):
            for n in range(4):
                assert grid[s, n] == pytest.approx(100.0 * xs[s] + ts[n])

    def test_initial_condition_subtraction(self):
        spec = self.spec_1d(n_time=6, m=5, alpha=0.7)
        rhs = assemble_rhs(spec, lambda x, t: 0.0 * x * t, psi=lambda x: x**2)
        l_init = l1_weights(spec.alpha, spec.n_time, spec.mu).l_init
        xs = spec.grids()[0]
        grid = rhs.reshape(5, 6)
        want = -(xs**2)[:, None] * l_init
        np.testing.assert_allclose(grid, want, rtol=1e-14)

    def test_zero_initial_condition_default(self):
        spec = self.spec_1d()
        a = assemble_rhs(spec, lambda x, t: x + t)
        b = assemble_rhs(spec, lambda x, t: x + t, psi=lambda x: 0.0 * x)
        np.testing.assert_array_equal(a, b)

    def test_constant_source_broadcasts(self):
        spec = self.spec_1d()
        rhs = assemble_rhs(spec, lambda x, t: np.float64(3.0))
        np.testing.assert_array_equal(rhs, np.full(spec.total_unknowns, 3.0))

    def test_two_dimensional_layout(self):
        spec = ProblemSpec(
            alpha=0.5,
            beta=(1.5, 1.5),
            c=(1.0, 1.0),
            bounds=((0.0, 1.0), (0.0, 1.0)),
            final_time=1.0,
            n_time=3,
            m_space=(2, 3),
            scheme=SpatialScheme.SHIFTED_GRUNWALD,
        )
        rhs = assemble_rhs(spec, lambda x1, x2, t: x1 + 10.0 * x2 + 100.0 * t)
        g1, g2 = spec.grids()
        ts = spec.time_levels()
        grid = rhs.reshape(2, 3, 3)
        assert grid[1, 2, 0] == pytest.approx(g1[1] + 10.0 * g2[2] + 100.0 * ts[0])
        assert grid[0, 1, 2] == pytest.approx(g1[0] + 10.0 * g2[1] + 100.0 * ts[2])
