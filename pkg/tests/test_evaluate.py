"""Metric scoring, PCA baseline, and sweep tests."""

import numpy as np
import pytest

from pmim.detector import DetectionTrace, DetectorConfig, detect, train
from pmim.errors import DataError, UsageError
from pmim.evaluate import MetricsReport, pca_baseline, score, sweep


def make_trace(n_windows, w, alarmed_ends=()):
    ends = np.arange(w, w + n_windows)
    alarms = np.isin(ends, list(alarmed_ends))
    causes = tuple(None for _ in range(n_windows))
    return DetectionTrace(ends, np.zeros(n_windows), alarms, np.zeros((n_windows, 0)), causes)


class TestScore:
    def test_fdr_fraction(self):
        # all ten windows fully faulted, nine alarmed
        trace = make_trace(10, 4, alarmed_ends=range(5, 14))
        report = score(trace, 1, 4)
        assert report.fdr == 0.9
        assert report.far == 0.0 and report.tfdr == 0.0
        assert report.alarms == 9 and report.evaluated_windows == 10

    def test_class_boundaries(self):
        # w=4, onset=8: normal ends <= 7, fully faulted ends >= 11
        trace = make_trace(10, 4, alarmed_ends=(5, 9, 12))
        report = score(trace, 8, 4)
        assert report.far == pytest.approx(1.0 / 4.0)  # ends 4..7
        assert report.tfdr == pytest.approx(1.0 / 3.0)  # ends 8..10
        assert report.fdr == pytest.approx(1.0 / 3.0)  # ends 11..13

    def test_delay_counts_from_onset(self):
        trace = make_trace(30, 4, alarmed_ends=(5, 13))
        report = score(trace, 10, 4)
        # first alarm at or past onset ends at 13: samples 10..13 inclusive
        assert report.detection_delay == 4

    def test_delay_one_when_alarm_at_onset(self):
        trace = make_trace(30, 4, alarmed_ends=(10,))
        assert score(trace, 10, 4).detection_delay == 1

    def test_no_alarm_no_delay(self):
        trace = make_trace(10, 4)
        report = score(trace, 5, 4)
        assert report.detection_delay is None and report.alarms == 0

    def test_pre_onset_alarms_do_not_set_delay(self):
        trace = make_trace(30, 4, alarmed_ends=(6,))
        assert score(trace, 20, 4).detection_delay is None

    def test_clean_run_semantics(self):
        trace = make_trace(20, 4, alarmed_ends=(7, 9))
        report = score(trace, None, 4)
        assert report.far == 0.1
        assert report.fdr == 0.0 and report.tfdr == 0.0
        assert report.detection_delay is None

    @pytest.mark.parametrize("onset", [0, -3, 24, 100])
    def test_onset_outside_trace(self, onset):
        trace = make_trace(20, 4)
        with pytest.raises(DataError):
            score(trace, onset, 4)

    def test_onset_at_last_end_allowed(self):
        trace = make_trace(20, 4)
        assert score(trace, 23, 4).far >= 0.0

    def test_empty_trace(self):
        trace = make_trace(0, 4)
        with pytest.raises(DataError):
            score(trace, None, 4)

    def test_partition_is_exhaustive(self):
        rng = np.random.default_rng(0)
        ends = np.arange(4, 104)
        alarms = rng.uniform(size=100) < 0.3
        trace = DetectionTrace(
            ends, np.zeros(100), alarms, np.zeros((100, 0)), tuple([None] * 100)
        )
        for onset in (10, 50, 99):
            report = score(trace, onset, 4)
            fully = (ends >= onset + 3).sum()
            normal = (ends <= onset - 1).sum()
            trans = 100 - fully - normal
            total = (
                report.fdr * fully + report.far * normal + report.tfdr * trans
            )
            assert total == pytest.approx(alarms.sum())

    def test_report_validation(self):
        with pytest.raises(DataError):
            MetricsReport(1.5, 0.0, 0.0, None, 0, 10)
        with pytest.raises(DataError):
            MetricsReport(0.0, 0.0, 0.0, -1, 0, 10)


class TestPcaBaseline:
    @pytest.fixture(scope="class")
    @staticmethod
    def gaussian():
        rng = np.random.default_rng(1)
        scales = np.array([3.0, 1.0, 0.5, 0.2])
        train_x = rng.standard_normal((300, 4)) * scales
        test_x = rng.standard_normal((120, 4)) * scales
        return train_x, test_x

    def test_full_rank_t2_is_mahalanobis(self, gaussian):
        train_x, test_x = gaussian
        trace = pca_baseline(
            train_x, test_x, cpv=1.0, matrix_source="covariance", statistic="T2"
        )
        mu, sd = train_x.mean(axis=0), train_x.std(axis=0)
        z_train = (train_x - mu) / sd
        z_test = (test_x - mu) / sd
        G = z_train.T @ z_train / (len(z_train) - 1)
        oracle = np.einsum("ij,ij->i", z_test, np.linalg.solve(G, z_test.T).T)
        assert np.allclose(trace.d_values, oracle, rtol=1e-8)

    def test_single_component_projection(self, gaussian):
        train_x, test_x = gaussian
        trace = pca_baseline(
            train_x, test_x, cpv=1e-9, matrix_source="covariance", statistic="T2"
        )
        mu, sd = train_x.mean(axis=0), train_x.std(axis=0)
        z_train = (train_x - mu) / sd
        z_test = (test_x - mu) / sd
        G = z_train.T @ z_train / (len(z_train) - 1)
        lam, V = np.linalg.eigh(G)
        v1, l1 = V[:, -1], lam[-1]
        oracle = (z_test @ v1) ** 2 / l1
        assert np.allclose(trace.d_values, oracle, rtol=1e-8)

    def test_full_rank_spe_vanishes(self, gaussian):
        train_x, test_x = gaussian
        trace = pca_baseline(
            train_x, test_x, cpv=1.0, matrix_source="covariance", statistic="SPE"
        )
        assert trace.d_values.max() <= 1e-12

    def test_training_alarm_rate_near_eta(self, gaussian):
        train_x, _ = gaussian
        trace = pca_baseline(train_x, train_x, matrix_source="covariance")
        far = score(trace, None, 1).far
        assert far <= 0.05 + 1.0 / len(train_x)

    def test_detects_mean_shift(self, gaussian):
        train_x, test_x = gaussian
        shifted = test_x.copy()
        # zscore scaling makes the covariance near-identity, so T2 keeps
        # all 4 components; a 5-sigma shift defeats the extra df cleanly
        shifted[60:] += np.array([15.0, 0.0, 0.0, 0.0])
        trace = pca_baseline(train_x, shifted, matrix_source="covariance")
        report = score(trace, 61, 1)
        assert report.fdr >= 0.9
        assert report.far <= 0.15

    def test_per_sample_trace_layout(self, gaussian):
        train_x, test_x = gaussian
        trace = pca_baseline(train_x, test_x)
        assert np.array_equal(trace.end_indices, np.arange(1, 121))
        assert len(trace) == 120

    def test_mi_renyi_source_with_subsample(self, gaussian):
        train_x, test_x = gaussian
        trace = pca_baseline(
            train_x, test_x, matrix_source="mi_renyi", subsample=150
        )
        assert np.all(np.isfinite(trace.d_values))

    def test_mi_binned_source(self, gaussian):
        train_x, test_x = gaussian
        trace = pca_baseline(train_x, test_x, matrix_source="mi_shannon_binned")
        assert np.all(np.isfinite(trace.d_values))

    @pytest.mark.parametrize("cpv", [0.0, 1.2, -0.5])
    def test_bad_cpv(self, gaussian, cpv):
        train_x, test_x = gaussian
        with pytest.raises(UsageError):
            pca_baseline(train_x, test_x, cpv=cpv)

    def test_bad_source_and_statistic(self, gaussian):
        train_x, test_x = gaussian
        with pytest.raises(UsageError):
            pca_baseline(train_x, test_x, matrix_source="ica")
        with pytest.raises(UsageError):
            pca_baseline(train_x, test_x, statistic="Q")

    def test_variable_mismatch(self, gaussian):
        train_x, test_x = gaussian
        with pytest.raises(DataError):
            pca_baseline(train_x, test_x[:, :3])


class TestSweep:
    def test_single_cell_matches_direct_run(self, bias_scn, unit_cfg):
        result = sweep(bias_scn.train, bias_scn.test, bias_scn.onset, unit_cfg)
        cell = result.cells[(unit_cfg.alpha, unit_cfg.sigma, unit_cfg.w)]
        model = train(bias_scn.train, unit_cfg)
        direct = score(detect(model, bias_scn.test), bias_scn.onset, unit_cfg.w)
        assert cell == direct

    def test_grid_completeness_and_order(self, bias_scn, unit_cfg):
        alphas, sigmas = (0.5, 1.01), (0.5, 1.0)
        result = sweep(
            bias_scn.train, bias_scn.test, bias_scn.onset, unit_cfg,
            alphas=alphas, sigmas=sigmas,
        )
        rows = list(result.rows())
        assert [(a, s, w) for a, s, w, _ in rows] == [
            (a, s, unit_cfg.w) for a in alphas for s in sigmas
        ]
        for *_, cell in rows:
            assert cell.fdr >= 0.0

    def test_invalid_alpha_recorded_not_raised(self, bias_scn, unit_cfg):
        result = sweep(
            bias_scn.train, bias_scn.test, bias_scn.onset, unit_cfg,
            alphas=(1.01, -2.0),
        )
        good = result.cells[(1.01, unit_cfg.sigma, unit_cfg.w)]
        bad = result.cells[(-2.0, unit_cfg.sigma, unit_cfg.w)]
        assert good.fdr >= 0.0
        assert isinstance(bad, str) and "alpha" in bad

    def test_oversized_window_recorded_not_raised(self, bias_scn, unit_cfg):
        result = sweep(
            bias_scn.train, bias_scn.test, bias_scn.onset, unit_cfg,
            ws=(unit_cfg.w, 10_000),
        )
        assert isinstance(result.cells[(unit_cfg.alpha, unit_cfg.sigma, 10_000)], str)
        ok = result.cells[(unit_cfg.alpha, unit_cfg.sigma, unit_cfg.w)]
        assert ok.fdr >= 0.0

    def test_covariance_source_path(self, bias_scn, unit_cfg):
        base = DetectorConfig(w=unit_cfg.w, matrix_source="covariance")
        result = sweep(bias_scn.train, bias_scn.test, bias_scn.onset, base)
        cell = result.cells[(base.alpha, base.sigma, base.w)]
        assert cell.fdr >= 0.0

    def test_deterministic(self, bias_scn, unit_cfg):
        a = sweep(bias_scn.train, bias_scn.test, bias_scn.onset, unit_cfg)
        b = sweep(bias_scn.train, bias_scn.test, bias_scn.onset, unit_cfg)
        key = (unit_cfg.alpha, unit_cfg.sigma, unit_cfg.w)
        assert a.cells[key] == b.cells[key]

    def test_alpha_group_reuses_spectra_consistently(self, bias_scn, unit_cfg):
        # grouped evaluation must agree with one-alpha-at-a-time runs
        grouped = sweep(
            bias_scn.train, bias_scn.test, bias_scn.onset, unit_cfg,
            alphas=(0.8, 1.2),
        )
        for alpha in (0.8, 1.2):
            single = sweep(
                bias_scn.train, bias_scn.test, bias_scn.onset, unit_cfg,
                alphas=(alpha,),
            )
            key = (alpha, unit_cfg.sigma, unit_cfg.w)
            assert grouped.cells[key] == single.cells[key]
