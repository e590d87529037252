"""Series handling, normalization, windowing, and per-window matrix tests."""

import numpy as np
import pytest

from pmim import entropy, mi_matrix
from pmim.entropy import KernelConfig, matrix_mi, renyi_entropy
from pmim.errors import DataError, UsageError
from pmim.mi_matrix import (
    MIMatrix,
    SampleWindow,
    as_series,
    covariance_matrix,
    fit_normalizer,
    iter_windows,
    mi_from_spectra,
    mi_matrix_renyi,
    pair_indices,
    window_at,
    window_spectra,
)


class TestAsSeries:
    def test_nested_lists_accepted(self):
        X = as_series([[1, 2], [3, 4], [5, 6]])
        assert X.shape == (3, 2) and X.dtype == float

    def test_rejects_one_dimensional(self):
        with pytest.raises(DataError):
            as_series([1.0, 2.0, 3.0])

    def test_rejects_single_row(self):
        with pytest.raises(DataError):
            as_series([[1.0, 2.0]])

    def test_rejects_non_finite(self):
        with pytest.raises(DataError):
            as_series([[1.0], [np.inf]])


class TestNormalizer:
    def test_minmax_frozen_example(self):
        norm = fit_normalizer([[0.0], [10.0]], "minmax")
        assert norm.shift[0] == 0.0 and norm.scale[0] == 10.0
        assert norm.offset[0] == 0.5
        out = norm.apply([[5.0], [0.0], [10.0]])
        assert np.array_equal(out[:, 0], [0.0, -0.5, 0.5])

    def test_minmax_is_default(self):
        assert fit_normalizer([[0.0], [1.0]]).kind == "minmax"

    def test_zscore_example(self):
        norm = fit_normalizer([[0.0], [10.0]], "zscore")
        out = norm.apply([[10.0], [0.0], [5.0]])
        assert np.array_equal(out[:, 0], [1.0, -1.0, 0.0])

    @pytest.mark.parametrize("kind", ["zscore", "minmax"])
    def test_constant_variable_passes_through(self, kind):
        norm = fit_normalizer([[2.0, 0.0], [2.0, 10.0]], kind)
        assert norm.constant.tolist() == [True, False]
        assert norm.scale[0] == 1.0
        out = norm.apply([[2.0, 5.0], [2.0, 7.0]])
        assert out[0, 0] == 0.0 and out[1, 0] == 0.0

    @pytest.mark.parametrize("kind", ["zscore", "minmax"])
    def test_round_trip(self, kind):
        rng = np.random.default_rng(0)
        train = rng.normal(size=(50, 4)) * [1, 10, 0.1, 100] + [0, 5, -2, 1000]
        other = rng.normal(size=(20, 4))
        norm = fit_normalizer(train, kind)
        assert np.allclose(norm.invert(norm.apply(other)), other, atol=1e-9)

    def test_apply_dimension_mismatch(self):
        norm = fit_normalizer([[0.0, 1.0], [1.0, 2.0]])
        with pytest.raises(DataError):
            norm.apply([[1.0], [2.0]])

    def test_unknown_kind(self):
        with pytest.raises(UsageError):
            fit_normalizer([[0.0], [1.0]], "robust")

    def test_zscore_train_output_standardized(self):
        rng = np.random.default_rng(1)
        train = rng.normal(size=(200, 3)) * [2, 5, 0.3]
        out = fit_normalizer(train, "zscore").apply(train)
        assert np.allclose(out.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(out.std(axis=0), 1.0, atol=1e-12)

    def test_minmax_train_output_range(self):
        rng = np.random.default_rng(2)
        train = rng.normal(size=(200, 3))
        out = fit_normalizer(train, "minmax").apply(train)
        span = out.max(axis=0) - out.min(axis=0)
        assert np.allclose(span, 1.0, atol=1e-12)
        assert np.allclose(out.mean(axis=0), 0.0, atol=1e-12)


class TestWindows:
    SERIES = np.arange(20.0).reshape(10, 2)

    def test_window_end_semantics(self):
        win = window_at(self.SERIES, 4, 4)
        assert win.end_index == 4
        assert np.array_equal(win.data, self.SERIES[0:4])

    def test_last_window(self):
        win = window_at(self.SERIES, 10, 4)
        assert np.array_equal(win.data, self.SERIES[6:10])

    @pytest.mark.parametrize("k", [3, 11, 0])
    def test_end_out_of_range(self, k):
        with pytest.raises(DataError):
            window_at(self.SERIES, k, 4)

    def test_window_too_small(self):
        with pytest.raises(UsageError):
            window_at(self.SERIES, 4, 1)

    def test_iter_windows_count_and_ends(self):
        wins = list(iter_windows(self.SERIES, 4))
        assert len(wins) == 7
        assert [w.end_index for w in wins] == list(range(4, 11))

    def test_iter_windows_stride(self):
        ends = [w.end_index for w in iter_windows(self.SERIES, 4, stride=3)]
        assert ends == [4, 7, 10]


class TestPairIndices:
    def test_five_variables(self):
        assert pair_indices(5) == [
            (0, 1), (0, 2), (0, 3), (0, 4),
            (1, 2), (1, 3), (1, 4),
            (2, 3), (2, 4),
            (3, 4),
        ]

    def test_single_variable(self):
        assert pair_indices(1) == []


class TestWindowSpectra:
    def test_shapes_and_hygiene(self):
        rng = np.random.default_rng(3)
        data = rng.standard_normal((30, 3))
        lam_m, lam_j = window_spectra(data, 0.5)
        assert lam_m.shape == (3, 30) and lam_j.shape == (3, 30)
        for lam in (lam_m, lam_j):
            assert lam.min() >= 0.0
            assert np.allclose(lam.sum(axis=1), 1.0, atol=1e-9)
            assert np.all(np.diff(lam, axis=1) <= 0)

    def test_exactly_two_eigensolver_calls(self, monkeypatch):
        # one batched call for the m marginals, one for the m(m-1)/2 joints
        sizes = []
        real = entropy._batch_eigvalsh

        def spy(stack):
            sizes.append(stack.shape[0])
            return real(stack)

        monkeypatch.setattr(entropy, "_batch_eigvalsh", spy)
        rng = np.random.default_rng(4)
        window_spectra(rng.standard_normal((25, 4)), 0.5)
        assert sizes == [4, 6]

    def test_too_short(self):
        with pytest.raises(DataError):
            window_spectra(np.ones((1, 3)), 0.5)


class TestMIMatrixRenyi:
    CFG = KernelConfig(sigma=0.5, alpha=1.01)

    def make(self, seed=5, w=20, m=3):
        rng = np.random.default_rng(seed)
        return SampleWindow(rng.standard_normal((w, m)), w)

    def test_symmetry_and_tag(self):
        M = mi_matrix_renyi(self.make(), self.CFG)
        assert M.source == "renyi"
        assert np.array_equal(M.entries, M.entries.T)
        assert np.all(np.isfinite(M.entries))

    def test_diagonal_is_marginal_entropy(self):
        win = self.make()
        M = mi_matrix_renyi(win, self.CFG)
        for i in range(3):
            A = entropy.normalize_gram(entropy.rbf_gram(win.data[:, i], 0.5))
            assert abs(M.entries[i, i] - renyi_entropy(A, 1.01)) <= 1e-10

    def test_off_diagonal_matches_pairwise_mi(self):
        win = self.make(m=2)
        M = mi_matrix_renyi(win, self.CFG)
        direct = matrix_mi(win.data[:, 0], win.data[:, 1], self.CFG)
        assert abs(M.entries[0, 1] - direct) <= 1e-10

    def test_constant_window_is_zero_matrix(self):
        win = SampleWindow(np.ones((12, 3)) * [1.0, 2.0, 3.0], 12)
        M = mi_matrix_renyi(win, self.CFG)
        assert np.abs(M.entries).max() <= 1e-6

    def test_spectra_path_matches_direct(self):
        win = self.make(seed=6)
        lam_m, lam_j = window_spectra(win.data, 0.5)
        rebuilt = mi_from_spectra(lam_m, lam_j, 1.01)
        M = mi_matrix_renyi(win, self.CFG)
        assert np.allclose(rebuilt, M.entries, atol=1e-12)

    def test_alpha_reuse_from_one_spectra_pass(self):
        win = self.make(seed=7)
        lam_m, lam_j = window_spectra(win.data, 0.5)
        for alpha in (0.5, 2.0):
            rebuilt = mi_from_spectra(lam_m, lam_j, alpha)
            direct = mi_matrix_renyi(win, KernelConfig(sigma=0.5, alpha=alpha))
            assert np.allclose(rebuilt, direct.entries, atol=1e-12)


class TestCovarianceMatrix:
    def test_frozen_example(self):
        win = SampleWindow(np.array([[0.0, 0.0], [1.0, 1.0]]), 2)
        M = covariance_matrix(win)
        assert M.source == "covariance"
        assert np.array_equal(M.entries, np.ones((2, 2)))

    def test_orthogonal_rows(self):
        win = SampleWindow(np.array([[1.0, 0.0], [0.0, 1.0]]), 2)
        assert np.array_equal(covariance_matrix(win).entries, np.eye(2))

    def test_matches_numpy_on_centered_data(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((40, 3))
        X = X - X.mean(axis=0)
        M = covariance_matrix(SampleWindow(X, 40))
        assert np.allclose(M.entries, np.cov(X.T, ddof=1), atol=1e-12)

    def test_too_short(self):
        with pytest.raises(DataError):
            covariance_matrix(SampleWindow(np.ones((1, 2)), 1))
