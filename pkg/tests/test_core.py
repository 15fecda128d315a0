import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdrvm.core import (BlockLayout, DimensionMismatch, FitOptions,
                        HyperPriors, InvalidBlockLayout, LinearSystem,
                        NonPositivePrecision, NotPositiveDefinite,
                        PrecisionState, spd_solve, validate)


class TestSpdSolve:
    def test_scalar(self):
        X, logdet = spd_solve([[2.0]], [[4.0]])
        np.testing.assert_allclose(X, [[2.0]])
        np.testing.assert_allclose(logdet, np.log(2.0))

    def test_identity(self):
        X, logdet = spd_solve(np.eye(3), np.eye(3))
        np.testing.assert_allclose(X, np.eye(3))
        assert logdet == 0.0

    def test_two_by_two_against_explicit_inverse(self):
        X, _ = spd_solve([[4.0, 1.0], [1.0, 3.0]], [[1.0], [0.0]])
        np.testing.assert_allclose(X, [[3 / 11], [-1 / 11]], rtol=1e-12)

    def test_indefinite_raises(self):
        with pytest.raises(NotPositiveDefinite):
            spd_solve([[1.0, 2.0], [2.0, 1.0]], np.eye(2))

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            spd_solve([[1.0, 0.1], [0.0, 1.0]], np.eye(2))

    @settings(max_examples=60, deadline=None)
    @given(k=st.integers(1, 20), seed=st.integers(0, 2**32 - 1))
    def test_round_trip(self, k, seed):
        rng = np.random.default_rng(seed)
        G = rng.standard_normal((k, k))
        M = G @ G.T + k * np.eye(k)
        X, _ = spd_solve(M, np.eye(k))
        assert np.linalg.norm(M @ X - np.eye(k)) <= 1e-9

    @settings(max_examples=60, deadline=None)
    @given(k=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
    def test_logdet_against_characteristic_polynomial(self, k, seed):
        rng = np.random.default_rng(seed)
        G = rng.standard_normal((k, k))
        M = G @ G.T + 0.5 * np.eye(k)
        # det M is (-1)^k times the constant term of det(tI - M)
        coeffs = np.poly(M)
        det = (-1) ** k * coeffs[-1]
        _, logdet = spd_solve(M, np.eye(k))
        np.testing.assert_allclose(logdet, np.log(det), atol=1e-9)


class TestLinearSystem:
    def test_shapes(self):
        s = LinearSystem(np.ones((3, 2)), np.ones(3))
        assert (s.m, s.n) == (3, 2)

    def test_row_mismatch(self):
        with pytest.raises(DimensionMismatch):
            LinearSystem(np.ones((3, 2)), np.ones(2))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            LinearSystem([[np.nan]], [1.0])

    def test_immutable(self):
        s = LinearSystem(np.ones((2, 2)), np.ones(2))
        with pytest.raises(ValueError):
            s.A[0, 0] = 5.0


class TestValidate:
    def test_singletons_ok(self):
        s = LinearSystem(np.ones((3, 2)), np.ones(3))
        validate(s, BlockLayout.singletons(2))

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            validate((np.ones((3, 2)), np.ones(2)))

    def test_overlap_flagged_disjoint(self):
        with pytest.raises(InvalidBlockLayout):
            BlockLayout(([0, 1], [1, 2]), 3, "disjoint")

    def test_uncovered_and_empty(self):
        with pytest.raises(InvalidBlockLayout):
            BlockLayout(([0], [2]), 3)
        with pytest.raises(InvalidBlockLayout):
            BlockLayout(([0, 1, 2], []), 3, "overlapping")
        with pytest.raises(InvalidBlockLayout):
            BlockLayout(([0, 3],), 3, "overlapping")

    def test_nonpositive_precision(self):
        s = LinearSystem(np.ones((2, 2)), np.ones(2))
        with pytest.raises(NonPositivePrecision):
            validate(s, state=PrecisionState(np.array([1.0, 0.0]), np.ones(2)))

    def test_pruned_precision_allowed(self):
        s = LinearSystem(np.ones((2, 2)), np.ones(2))
        validate(s, state=PrecisionState(np.array([1.0, np.inf]), np.ones(2)))


class TestLayouts:
    def test_windows_cover_everything(self):
        lay = BlockLayout.windows(12, 5)
        assert len(lay) == 8
        assert lay.coverage().min() >= 1

    def test_contiguous_short_last_block(self):
        lay = BlockLayout.contiguous(7, 3)
        np.testing.assert_array_equal(lay.sizes, [3, 3, 1])
        np.testing.assert_array_equal(lay.labels(), [0, 0, 0, 1, 1, 1, 2])


class TestOptions:
    def test_bad_options(self):
        with pytest.raises(ValueError):
            FitOptions(max_iter=0)
        with pytest.raises(ValueError):
            FitOptions(prune_threshold=1.0)
        with pytest.raises(ValueError):
            HyperPriors(a=-1.0)
