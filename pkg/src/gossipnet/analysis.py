"""Contraction-rate estimation, corpus regression, and anomaly detection.

The contraction rate is the negative slope of log10 disagreement versus
time in the stationary (log-linear) regime. A corpus of generated graphs
maps metric averages to measured rates; an ordinary least squares fit of

    gamma = a <k> + b <cl> + c <eff> + d

gives nodes a local predictor of convergence speed. The two anomaly
applications compare each node's measurement with its running average
estimate (threshold alarm) or with a shrinking confidence interval around
it (sigma-based outlier detection).
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from typing import Optional, Sequence

import numpy as np

from . import metrics as _metrics
from .engine import SimConfig, Trace, init_states, run_async
from .graph import GenerationError, Graph, GraphSpec, generate
from .metrics import MetricAverages
from .spectral import expected_weight_matrix, uniform_neighbor_probabilities

__all__ = [
    "RateModel",
    "CorpusEntry",
    "ClassificationOutcome",
    "GammaFit",
    "AnalysisError",
    "estimate_gamma",
    "gamma_fit",
    "build_corpus",
    "default_corpus_specs",
    "fit_model",
    "alarm_classify",
    "outlier_detect",
    "write_corpus_csv",
    "read_corpus_csv",
]

# stationary window: start after half a decade of decay (transient), stop at
# the numeric floor where rounding dominates
TRANSIENT_DECADES = 0.5
NUMERIC_FLOOR = 1e-13
MIN_STATIONARY_SAMPLES = 10

# defaults for corpus simulation runs
CORPUS_SAMPLE_INTERVAL = 0.2
CORPUS_STOP_ACCURACY = 4.0
CORPUS_HORIZON = 3000.0


class AnalysisError(RuntimeError):
    pass


@dataclass(frozen=True)
class RateModel:
    """Linear predictor of the contraction rate from metric averages."""

    a: float
    b: float
    c: float
    d: float
    r2: float
    corpus_size: int

    def gamma(self, averages: MetricAverages) -> float:
        return (
            self.a * averages.mean_degree
            + self.b * averages.mean_clustering
            + self.c * averages.mean_efficiency
            + self.d
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @staticmethod
    def from_json(text: str) -> "RateModel":
        return RateModel(**json.loads(text))


@dataclass(frozen=True)
class CorpusEntry:
    spec: GraphSpec
    averages: MetricAverages
    gamma: float
    runs: int


@dataclass(frozen=True)
class ClassificationOutcome:
    true_positive: int
    false_positive: int
    true_negative: int
    false_negative: int

    @property
    def error_rate(self) -> float:
        total = (
            self.true_positive + self.false_positive
            + self.true_negative + self.false_negative
        )
        return (self.false_positive + self.false_negative) / total

    def to_json(self) -> str:
        data = asdict(self)
        data["error_rate"] = self.error_rate
        return json.dumps(data, indent=2)


@dataclass(frozen=True)
class GammaFit:
    gamma: float
    r2: float
    n_samples: int
    t_start: float
    t_end: float


def gamma_fit(trace: Trace, through_origin: bool = False) -> GammaFit:
    """Fit the contraction rate over the stationary window.

    The log disagreement relative to t = 0 is regressed against time. The
    window starts once the disagreement has dropped half a decade below its
    initial value (transient exclusion) and ends where it reaches the
    numeric floor. With through_origin the regression line is forced
    through (0, 0), folding the fast transient into the rate; that variant
    keeps the fitted rate consistent with the time-to-accuracy relation
    t = R / gamma and is what the prediction pipeline trains on. Raises
    AnalysisError when fewer than MIN_STATIONARY_SAMPLES samples remain or
    the slope is not negative.
    """
    delta_hat = trace.delta_hat
    d0 = float(delta_hat[0])
    if d0 <= 0.0:
        raise AnalysisError("initial disagreement is zero, nothing to fit")
    usable = delta_hat > NUMERIC_FLOOR * max(d0, 1.0)
    below = np.nonzero(usable & (delta_hat < d0 * 10.0 ** (-TRANSIENT_DECADES)))[0]
    if below.size == 0:
        raise AnalysisError("disagreement never left the transient regime")
    start = int(below[0])
    end = start
    while end < delta_hat.shape[0] and usable[end]:
        end += 1
    if end - start < MIN_STATIONARY_SAMPLES:
        raise AnalysisError(
            f"only {end - start} stationary samples, need {MIN_STATIONARY_SAMPLES}"
        )
    t = trace.t[start:end]
    y = np.log10(delta_hat[start:end] / d0)
    if through_origin:
        slope = float(np.dot(t, y) / np.dot(t, t))
        resid = y - slope * t
    else:
        slope, intercept = np.polyfit(t, y, 1)
        slope = float(slope)
        resid = y - (slope * t + intercept)
    if slope >= 0.0:
        raise AnalysisError("disagreement is not decreasing in the stationary window")
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if sst == 0.0 else 1.0 - float(np.sum(resid**2)) / sst
    return GammaFit(
        gamma=-slope,
        r2=r2,
        n_samples=end - start,
        t_start=float(t[0]),
        t_end=float(t[-1]),
    )


def estimate_gamma(trace: Trace, through_origin: bool = False) -> float:
    return gamma_fit(trace, through_origin=through_origin).gamma


def _measure_spec(args) -> Optional[CorpusEntry]:
    spec, runs, run_seeds = args
    try:
        g = generate(spec)
    except GenerationError:
        return None
    averages = _metrics.graph_averages(g)
    p = uniform_neighbor_probabilities(g)
    # accepted generator outputs are connected and non-bipartite, which
    # already guarantees the spectral condition; only the cheap
    # stochasticity identities are rechecked here
    w = expected_weight_matrix(g, p)
    if max(
        float(np.max(np.abs(w.sum(axis=0) - 1.0))),
        float(np.max(np.abs(w.sum(axis=1) - 1.0))),
    ) > 1e-12:
        return None
    gammas = []
    for run_seed in run_seeds:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(run_seed)))
        values = rng.standard_normal(g.n)
        states = init_states(g, values, np.full(g.n, 3.0))
        cfg = SimConfig(
            mode="async",
            horizon=CORPUS_HORIZON,
            seed=int(run_seed) + 1,
            sample_interval=CORPUS_SAMPLE_INTERVAL,
            stop_accuracy=CORPUS_STOP_ACCURACY,
            check=False,
        )
        trace = run_async(g, p, states, cfg)
        try:
            # through-origin: corpus rates feed t = R/gamma predictions
            gammas.append(estimate_gamma(trace, through_origin=True))
        except AnalysisError:
            continue
    if not gammas:
        return None
    return CorpusEntry(
        spec=spec, averages=averages, gamma=float(np.mean(gammas)), runs=len(gammas)
    )


def build_corpus(
    specs: Sequence[GraphSpec],
    runs_per_graph: int,
    seed: int,
    workers: int = 1,
) -> list[CorpusEntry]:
    """Generate each spec, measure its mean contraction rate over
    runs_per_graph async runs with standard-normal initial values.

    Failed generations are skipped. Deterministic given seed, independent
    of the worker count (tasks are keyed by spec index).
    """
    root = np.random.SeedSequence(entropy=seed)
    children = root.spawn(len(specs))
    tasks = []
    for idx, spec in enumerate(specs):
        run_seeds = [int(s.generate_state(1)[0]) for s in children[idx].spawn(runs_per_graph)]
        tasks.append((spec, runs_per_graph, run_seeds))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_measure_spec, tasks, chunksize=4))
    else:
        results = [_measure_spec(task) for task in tasks]
    return [entry for entry in results if entry is not None]


def default_corpus_specs(
    count: int,
    seed: int,
    n_range: tuple[int, int] = (100, 300),
    degree_range: tuple[float, float] = (6.0, 40.0),
) -> list[GraphSpec]:
    """Mixed-family corpus recipe: ~13% Erdos-Renyi, ~13% geometric random,
    ~37% small world, ~37% scale free, with sizes in n_range and average
    degrees spread over degree_range."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xC0,)))
    counts = {
        "er": round(count * 2 / 15),
        "grg": round(count * 2 / 15),
        "ws": round(count * 5.5 / 15),
    }
    counts["sf"] = count - sum(counts.values())
    lo, hi = degree_range
    ring_lo, ring_hi = max(2, int(lo // 2)), max(2, int(hi // 2))
    m_lo, m_hi = max(2, int(lo // 2)), max(3, int(hi // 2))
    specs: list[GraphSpec] = []
    for family, k in counts.items():
        for _ in range(k):
            n = int(rng.integers(n_range[0], n_range[1] + 1))
            spec_seed = int(rng.integers(0, 2**63 - 1))
            if family == "er":
                params = {"p": min(float(rng.uniform(lo, hi)) / (n - 1), 1.0)}
            elif family == "grg":
                params = {"target_degree": float(rng.uniform(lo, hi))}
            elif family == "ws":
                ring = 2 * int(rng.integers(ring_lo, ring_hi + 1))
                params = {"k": ring, "pr": float(10.0 ** rng.uniform(-2.0, np.log10(0.5)))}
            else:
                params = {
                    "m": int(rng.integers(m_lo, m_hi + 1)),
                    "pt": float(rng.uniform(0.0, 0.6)),
                }
            specs.append(GraphSpec(family=family, n=n, seed=spec_seed, params=params))
    return specs


def fit_model(corpus: Sequence[CorpusEntry]) -> RateModel:
    """Ordinary least squares of measured rates on metric averages."""
    if len(corpus) < 4:
        raise AnalysisError(f"need at least 4 corpus entries, got {len(corpus)}")
    design = np.array(
        [
            [e.averages.mean_degree, e.averages.mean_clustering, e.averages.mean_efficiency, 1.0]
            for e in corpus
        ]
    )
    y = np.array([e.gamma for e in corpus])
    coeffs, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 4:
        raise AnalysisError("rank-deficient design matrix (graphs too similar)")
    resid = y - design @ coeffs
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise AnalysisError("all corpus rates identical, nothing to explain")
    r2 = 1.0 - float(np.sum(resid**2)) / sst
    a, b, c, d = (float(v) for v in coeffs)
    return RateModel(a=a, b=b, c=c, d=d, r2=r2, corpus_size=len(corpus))


def alarm_classify(x0: np.ndarray, x: np.ndarray, alpha: float, m_threshold: float) -> ClassificationOutcome:
    """Node-level alarm decisions |x0 - estimate| > M against the
    omniscient ground truth |x0 - alpha| > M."""
    if m_threshold <= 0:
        raise AnalysisError("threshold M must be positive")
    x0 = np.asarray(x0, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    decided = np.abs(x0 - x) > m_threshold
    truth = np.abs(x0 - alpha) > m_threshold
    return ClassificationOutcome(
        true_positive=int(np.sum(decided & truth)),
        false_positive=int(np.sum(decided & ~truth)),
        true_negative=int(np.sum(~decided & ~truth)),
        false_negative=int(np.sum(~decided & truth)),
    )


def outlier_detect(x0, x, sigma0: float, gamma: float, t: float, m: float):
    """Flag measurements lying more than m initial standard deviations away
    from the 3-sigma confidence interval around the current estimate, with
    sigma(t) = sigma0 * 10^(-gamma t)."""
    if sigma0 <= 0 or gamma <= 0 or m <= 0:
        raise AnalysisError("sigma0, gamma and m must be positive")
    sigma_t = sigma0 * 10.0 ** (-gamma * t)
    distance = np.maximum(np.abs(np.asarray(x0) - np.asarray(x)) - 3.0 * sigma_t, 0.0)
    return distance > m * sigma0


def write_corpus_csv(corpus: Sequence[CorpusEntry], path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("family,n,param,seed,mean_degree,mean_clustering,mean_efficiency,gamma,runs\n")
        for e in corpus:
            param = json.dumps(e.spec.params, sort_keys=True).replace(",", ";")
            fh.write(
                f"{e.spec.family},{e.spec.n},{param},{e.spec.seed},"
                f"{e.averages.mean_degree:.12g},{e.averages.mean_clustering:.12g},"
                f"{e.averages.mean_efficiency:.12g},{e.gamma:.12g},{e.runs}\n"
            )


def read_corpus_csv(path) -> list[CorpusEntry]:
    entries = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        if not header.startswith("family,"):
            raise AnalysisError(f"{path}: not a corpus file")
        for line in fh:
            if not line.strip():
                continue
            family, n, param, seed, k, cl, eff, gamma, runs = line.rstrip("\n").split(",")
            spec = GraphSpec(
                family=family,
                n=int(n),
                seed=int(seed),
                params=json.loads(param.replace(";", ",")),
            )
            entries.append(
                CorpusEntry(
                    spec=spec,
                    averages=MetricAverages(float(k), float(cl), float(eff)),
                    gamma=float(gamma),
                    runs=int(runs),
                )
            )
    return entries
