import json

import numpy as np
import pytest

from gossipnet.analysis import (
    AnalysisError,
    ClassificationOutcome,
    CorpusEntry,
    RateModel,
    alarm_classify,
    build_corpus,
    default_corpus_specs,
    estimate_gamma,
    fit_model,
    gamma_fit,
    outlier_detect,
    read_corpus_csv,
    write_corpus_csv,
)
from gossipnet.engine import Trace
from gossipnet.graph import GraphSpec
from gossipnet.metrics import MetricAverages


def synthetic_trace(t, delta_hat, n=10):
    t = np.asarray(t, dtype=float)
    delta_hat = np.asarray(delta_hat, dtype=float)
    return Trace(
        t=t,
        delta_norm=delta_hat.copy(),
        means=np.zeros((t.shape[0], 4)),
        alpha=0.0,
        n=n,
        x0_norm=1.0,
    )


class TestGammaFit:
    def test_exact_exponential(self):
        t = np.arange(0.0, 300.0, 1.0)
        trace = synthetic_trace(t, 10.0 ** (-0.018 * t))
        for mode in (False, True):
            fit = gamma_fit(trace, through_origin=mode)
            assert fit.gamma == pytest.approx(0.018, abs=1e-9)
            assert fit.r2 == pytest.approx(1.0, abs=1e-9)

    def test_transient_excluded(self):
        # half a decade gained instantly, then clean decay: the intercept
        # variant must recover the asymptotic slope exactly
        t = np.arange(0.0, 200.0, 1.0)
        delta = 10.0 ** (-0.5 - 0.02 * t)
        delta[0] = 1.0
        trace = synthetic_trace(t, delta)
        assert estimate_gamma(trace) == pytest.approx(0.02, abs=1e-9)

    def test_through_origin_folds_transient(self):
        t = np.arange(0.0, 200.0, 1.0)
        delta = 10.0 ** (-0.5 - 0.02 * t)
        delta[0] = 1.0
        trace = synthetic_trace(t, delta)
        plain = estimate_gamma(trace)
        folded = estimate_gamma(trace, through_origin=True)
        assert folded > plain

    def test_window_reported(self):
        t = np.arange(0.0, 100.0, 1.0)
        trace = synthetic_trace(t, 10.0 ** (-0.1 * t))
        fit = gamma_fit(trace)
        # strictly below half a decade first happens at t = 6
        assert fit.t_start == 6.0
        assert fit.t_end == t[-1]
        assert fit.n_samples == 94

    def test_floor_excluded(self):
        t = np.arange(0.0, 100.0, 1.0)
        delta = 10.0 ** (-0.5 * t)
        trace = synthetic_trace(t, delta)
        fit = gamma_fit(trace)
        # samples at or below 1e-13 are rounding noise and must be dropped
        assert 10.0 ** (-0.5 * fit.t_end) > 1e-13
        assert fit.gamma == pytest.approx(0.5, abs=1e-9)

    def test_never_leaves_transient(self):
        t = np.arange(0.0, 50.0, 1.0)
        with pytest.raises(AnalysisError):
            gamma_fit(synthetic_trace(t, np.full(50, 0.9)))

    def test_too_few_samples(self):
        t = np.arange(0.0, 5.0, 1.0)
        with pytest.raises(AnalysisError):
            gamma_fit(synthetic_trace(t, 10.0 ** (-0.5 * t)))

    def test_non_decreasing_rejected(self):
        t = np.arange(0.0, 50.0, 1.0)
        delta = np.full(50, 0.1)
        delta[0] = 1.0
        with pytest.raises(AnalysisError):
            gamma_fit(synthetic_trace(t, delta))

    def test_zero_initial_rejected(self):
        t = np.arange(0.0, 50.0, 1.0)
        with pytest.raises(AnalysisError):
            gamma_fit(synthetic_trace(t, np.zeros(50)))


def entry(k, cl, eff, gamma, family="er", n=100, seed=0, params=None):
    return CorpusEntry(
        spec=GraphSpec(family, n, seed=seed, params=params or {"p": 0.2}),
        averages=MetricAverages(k, cl, eff),
        gamma=gamma,
        runs=5,
    )


def planted_corpus(a=0.002, b=-0.05, c=0.01, d=0.003):
    rng = np.random.default_rng(0)
    entries = []
    for i in range(20):
        k = float(rng.uniform(5, 40))
        cl = float(rng.uniform(0.0, 0.8))
        eff = float(rng.uniform(0.0, 1.0))
        entries.append(entry(k, cl, eff, a * k + b * cl + c * eff + d, seed=i))
    return entries


class TestFitModel:
    def test_exact_recovery(self):
        model = fit_model(planted_corpus())
        assert model.a == pytest.approx(0.002, abs=1e-9)
        assert model.b == pytest.approx(-0.05, abs=1e-9)
        assert model.c == pytest.approx(0.01, abs=1e-9)
        assert model.d == pytest.approx(0.003, abs=1e-9)
        assert model.r2 == pytest.approx(1.0, abs=1e-9)
        assert model.corpus_size == 20

    def test_gamma_evaluation(self):
        model = fit_model(planted_corpus())
        av = MetricAverages(20.0, 0.3, 0.6)
        expected = 0.002 * 20 - 0.05 * 0.3 + 0.01 * 0.6 + 0.003
        assert model.gamma(av) == pytest.approx(expected, abs=1e-9)

    def test_too_small(self):
        with pytest.raises(AnalysisError):
            fit_model(planted_corpus()[:3])

    def test_rank_deficient(self):
        same = [entry(10.0, 0.2, 0.5, 0.01 + 0.001 * i, seed=i) for i in range(6)]
        with pytest.raises(AnalysisError):
            fit_model(same)

    def test_json_round_trip(self):
        model = fit_model(planted_corpus())
        clone = RateModel.from_json(model.to_json())
        assert clone == model


class TestBuildCorpus:
    SPECS = [
        GraphSpec("er", 60, seed=1, params={"p": 0.2}),
        GraphSpec("ws", 60, seed=2, params={"k": 8, "pr": 0.2}),
        GraphSpec("grg", 60, seed=3, params={"target_degree": 10.0}),
        GraphSpec("sf", 60, seed=4, params={"m": 4, "pt": 0.3}),
    ]

    def test_deterministic(self):
        a = build_corpus(self.SPECS, runs_per_graph=2, seed=7)
        b = build_corpus(self.SPECS, runs_per_graph=2, seed=7)
        assert len(a) == 4
        assert [e.gamma for e in a] == [e.gamma for e in b]
        assert [e.runs for e in a] == [2] * 4

    def test_worker_count_invariant(self):
        serial = build_corpus(self.SPECS, runs_per_graph=1, seed=7)
        parallel = build_corpus(self.SPECS, runs_per_graph=1, seed=7, workers=2)
        assert [e.gamma for e in serial] == [e.gamma for e in parallel]

    def test_failed_generation_skipped(self):
        specs = [
            GraphSpec("er", 60, seed=1, params={"p": 0.2}),
            GraphSpec("er", 200, seed=0, params={"p": 0.001}),  # always disconnected
        ]
        corpus = build_corpus(specs, runs_per_graph=1, seed=3)
        assert len(corpus) == 1

    def test_rates_positive_and_plausible(self):
        corpus = build_corpus(self.SPECS, runs_per_graph=2, seed=11)
        for e in corpus:
            assert 0.0 < e.gamma < 1.0


class TestDefaultSpecs:
    def test_count_and_mixture(self):
        specs = default_corpus_specs(60, seed=5)
        assert len(specs) == 60
        families = [s.family for s in specs]
        assert families.count("er") == 8
        assert families.count("grg") == 8
        assert families.count("ws") == 22
        assert families.count("sf") == 22

    def test_ranges(self):
        for s in default_corpus_specs(40, seed=6, n_range=(50, 80)):
            assert 50 <= s.n <= 80

    def test_deterministic(self):
        assert default_corpus_specs(30, seed=9) == default_corpus_specs(30, seed=9)


class TestAlarmClassify:
    def test_consensus_no_errors(self):
        x0 = np.array([0.0, 1.0, 5.0])
        alpha = 2.0
        out = alarm_classify(x0, np.full(3, alpha), alpha, m_threshold=2.5)
        assert out.error_rate == 0.0
        assert out.true_positive == 1  # node 2: |5 - 2| > 2.5
        assert out.true_negative == 2

    def test_huge_threshold_all_negative(self):
        x0 = np.array([0.0, 1.0, 5.0])
        out = alarm_classify(x0, x0, 2.0, m_threshold=100.0)
        assert out == ClassificationOutcome(0, 0, 3, 0)

    def test_early_estimates_give_false_positives(self):
        # before any mixing each node compares its measurement to itself
        # shifted by nothing, so nobody alarms; nodes beyond M from the true
        # mean become false negatives
        x0 = np.array([0.0, 10.0])
        out = alarm_classify(x0, x0, alpha=5.0, m_threshold=3.0)
        assert out.false_negative == 2
        assert out.error_rate == 1.0

    def test_bad_threshold(self):
        with pytest.raises(AnalysisError):
            alarm_classify(np.zeros(2), np.zeros(2), 0.0, m_threshold=0.0)

    def test_json_fields(self):
        out = alarm_classify(np.zeros(2), np.zeros(2), 0.0, m_threshold=1.0)
        data = json.loads(out.to_json())
        assert data["error_rate"] == 0.0
        assert set(data) == {
            "true_positive", "false_positive", "true_negative",
            "false_negative", "error_rate",
        }


class TestOutlierDetect:
    def test_wide_interval_at_t0_suppresses(self):
        # at t = 0 the 3-sigma band is still wide: a 3.5-sigma outlier with
        # m = 1 stays hidden
        flags = outlier_detect(np.array([3.5]), np.array([0.0]), 1.0, 0.05, 0.0, 1.0)
        assert not flags[0]

    def test_late_time_detects(self):
        flags = outlier_detect(np.array([3.5]), np.array([0.0]), 1.0, 0.05, 100.0, 1.0)
        assert flags[0]

    def test_inliers_never_flagged(self):
        x0 = np.array([0.1, -0.2, 0.05])
        for t in (0.0, 10.0, 1000.0):
            assert not outlier_detect(x0, np.zeros(3), 1.0, 0.05, t, 1.0).any()

    def test_threshold_boundary(self):
        # distance beyond the band is exactly 4 sigma0; m = 5 keeps it quiet
        flags = outlier_detect(np.array([4.0]), np.array([0.0]), 1.0, 0.05, 1000.0, 5.0)
        assert not flags[0]

    def test_bad_params(self):
        with pytest.raises(AnalysisError):
            outlier_detect(np.zeros(1), np.zeros(1), 0.0, 0.05, 1.0, 1.0)
        with pytest.raises(AnalysisError):
            outlier_detect(np.zeros(1), np.zeros(1), 1.0, -0.1, 1.0, 1.0)


class TestCorpusCsv:
    def test_round_trip(self, tmp_path):
        corpus = [
            entry(10.0, 0.2, 0.5, 0.012, family="ws", seed=3,
                  params={"k": 8, "pr": 0.1}),
            entry(25.0, 0.4, 0.8, 0.031, family="grg", seed=4,
                  params={"target_degree": 25.0}),
        ]
        path = tmp_path / "corpus.csv"
        write_corpus_csv(corpus, path)
        assert read_corpus_csv(path) == corpus

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("t,delta_hat,sigma\n")
        with pytest.raises(AnalysisError):
            read_corpus_csv(path)
