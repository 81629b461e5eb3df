"""Averaging state machines: asynchronous pairwise gossip driven by Poisson
activation and the synchronous expected-matrix iteration.

Each node carries a 4-component state (value estimate plus running
estimates of mean degree, mean clustering, mean efficiency); every pairwise
interaction averages all four components, so metric knowledge piggybacks on
the same messages as value averaging. Nodes turn the averaged metrics into
a convergence-rate estimate and a predicted time to reach their accuracy
requirement.

Async event scheduling uses the superposition property: n independent
rate-1 node clocks are one global rate-n clock with a uniform activator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from . import metrics as _metrics
from ._kernels import async_events
from .graph import Graph
from .spectral import expected_weight_matrix, verify_convergence

if TYPE_CHECKING:  # pragma: no cover
    from .analysis import RateModel

__all__ = [
    "States",
    "SimConfig",
    "Trace",
    "SimulationError",
    "GAMMA_MIN",
    "init_states",
    "gossip_interact",
    "run_async",
    "run_sync",
    "predict_time",
]

# floor for the estimated contraction rate; prevents division blow-up while
# metric estimates are still in their early transient
GAMMA_MIN = 1e-6

FIELD_NAMES = ("x", "m_deg", "m_cl", "m_eff")


class SimulationError(RuntimeError):
    pass


@dataclass
class States:
    """Per-node simulator state, stored columnwise.

    fields is a (4, n) array whose rows are the value estimate and the
    three running metric-average estimates; x0 keeps the initial
    measurements, r the per-node accuracy requirements (decades).
    """

    fields: np.ndarray
    x0: np.ndarray
    r: np.ndarray

    @property
    def n(self) -> int:
        return self.fields.shape[1]

    @property
    def x(self) -> np.ndarray:
        return self.fields[0]

    def copy(self) -> "States":
        return States(self.fields.copy(), self.x0.copy(), self.r.copy())


@dataclass(frozen=True)
class SimConfig:
    mode: str  # "async" | "sync"
    horizon: float
    seed: int = 0
    sample_interval: float = 1.0
    model: Optional["RateModel"] = None
    snapshots: bool = False
    stop_accuracy: Optional[float] = None  # stop once this many decades gained
    check: bool = True  # verify convergence conditions before running

    def __post_init__(self):
        if self.mode not in ("async", "sync"):
            raise ValueError(f"mode must be 'async' or 'sync', got {self.mode!r}")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.sample_interval <= 0:
            raise ValueError("sample_interval must be > 0")


@dataclass
class Trace:
    """Sampled time series of one run.

    delta_norm holds the raw l2 norm of the disagreement vector, from which
    both normalisations (relative to the initial values or to the initial
    disagreement) derive.
    """

    t: np.ndarray
    delta_norm: np.ndarray
    means: np.ndarray  # (samples, 4) per-field means
    alpha: float
    n: int
    x0_norm: float
    snapshots: Optional[np.ndarray] = None  # (samples, 4, n)
    t_pred: Optional[np.ndarray] = None  # (samples, n)

    @property
    def delta0_norm(self) -> float:
        return float(self.delta_norm[0])

    @property
    def delta_hat(self) -> np.ndarray:
        """Disagreement normalised by the initial value norm (raw norm when
        the initial vector is all zero)."""
        if self.x0_norm == 0.0:
            return self.delta_norm.copy()
        return self.delta_norm / self.x0_norm

    @property
    def sigma(self) -> np.ndarray:
        return self.delta_norm / np.sqrt(self.n)

    def accuracy(self) -> np.ndarray:
        """Decades of disagreement reduction relative to t = 0."""
        d0 = self.delta0_norm
        if d0 == 0.0:
            return np.full_like(self.delta_norm, np.inf)
        with np.errstate(divide="ignore"):
            return -np.log10(self.delta_norm / d0)

    def time_to_accuracy(self, target: float) -> Optional[float]:
        """Earliest sample time with at least `target` decades gained."""
        hits = np.nonzero(self.accuracy() >= target)[0]
        if hits.size == 0:
            return None
        return float(self.t[hits[0]])

    def write_csv(self, path) -> None:
        delta_hat = self.delta_hat
        sigma = self.sigma
        with open(path, "w", encoding="ascii") as fh:
            fh.write("t,delta_hat,sigma\n")
            for k in range(self.t.shape[0]):
                fh.write(f"{self.t[k]:.12g},{delta_hat[k]:.12g},{sigma[k]:.12g}\n")

    def write_snapshots_csv(self, path) -> None:
        if self.snapshots is None:
            raise SimulationError("trace was recorded without snapshots")
        with open(path, "w", encoding="ascii") as fh:
            fh.write("t,node,x,t_pred\n")
            for k in range(self.t.shape[0]):
                for v in range(self.n):
                    tp = "" if self.t_pred is None else f"{self.t_pred[k, v]:.12g}"
                    fh.write(f"{self.t[k]:.12g},{v},{self.snapshots[k, 0, v]:.12g},{tp}\n")


def init_states(g: Graph, values: Sequence[float], accuracies: Sequence[float]) -> States:
    """Set up node states: estimates start at the measurements, the metric
    averagers start at each node's own local metrics."""
    values = np.asarray(values, dtype=np.float64)
    accuracies = np.asarray(accuracies, dtype=np.float64)
    if values.shape != (g.n,) or accuracies.shape != (g.n,):
        raise SimulationError(
            f"need {g.n} values and accuracies, got {values.shape} and {accuracies.shape}"
        )
    if np.any(accuracies <= 0):
        raise SimulationError("accuracy requirements must be positive")
    deg, clu, eff = _metrics.all_node_metrics(g)
    fields = np.vstack([values, deg, clu, eff]).astype(np.float64)
    return States(fields=fields, x0=values.copy(), r=accuracies.copy())


def gossip_interact(g: Graph, states: States, i: int, j: int) -> None:
    """One pairwise exchange: nodes i and j set all four state components
    to the pair averages. Mutates states in place."""
    if i == j or j not in g.adjacency[i]:
        raise SimulationError(f"({i},{j}) is not an edge")
    avg = 0.5 * (states.fields[:, i] + states.fields[:, j])
    states.fields[:, i] = avg
    states.fields[:, j] = avg


def predict_time(m_deg, m_cl, m_eff, r, model) -> np.ndarray:
    """Predicted time to reach r decades of accuracy from metric-average
    estimates: r divided by the modelled contraction rate, with the rate
    clamped below at GAMMA_MIN."""
    gamma_est = model.a * m_deg + model.b * m_cl + model.c * m_eff + model.d
    gamma_est = np.maximum(gamma_est, GAMMA_MIN)
    return r / gamma_est


def _row_cumulative(g: Graph, p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    indptr, nbrs = g.csr()
    cum = np.empty(nbrs.shape[0], dtype=np.float64)
    for i in range(g.n):
        lo, hi = indptr[i], indptr[i + 1]
        if lo == hi:
            raise SimulationError(f"node {i} is isolated")
        row = np.cumsum(p[i, nbrs[lo:hi]])
        row[-1] = 1.0  # guard against cumulative rounding
        cum[lo:hi] = row
    return indptr, nbrs, cum


def _sample_grid(horizon: float, dt: float) -> np.ndarray:
    count = int(np.floor(horizon / dt + 1e-9)) + 1
    return np.arange(count, dtype=np.float64) * dt


def _alloc_outputs(n_samples: int, n: int, want_snapshots: bool):
    delta_norm = np.zeros(n_samples)
    means = np.zeros((n_samples, 4))
    if want_snapshots:
        snap = np.zeros((n_samples, 4, n))
    else:
        snap = np.zeros((1, 4, 1))  # placeholder, kernel never writes it
    return delta_norm, means, snap


def _finalize(
    states: States,
    cfg: SimConfig,
    sample_times: np.ndarray,
    delta_norm: np.ndarray,
    means: np.ndarray,
    snap: np.ndarray,
    want_snapshots: bool,
    filled: int,
    alpha: float,
    x0_norm: float,
) -> Trace:
    t = sample_times[:filled]
    delta_norm = delta_norm[:filled]
    means = means[:filled]
    snapshots = snap[:filled] if want_snapshots else None
    t_pred = None
    if cfg.model is not None and snapshots is not None:
        t_pred = np.empty((filled, states.n))
        for k in range(filled):
            t_pred[k] = predict_time(
                snapshots[k, 1], snapshots[k, 2], snapshots[k, 3], states.r, cfg.model
            )
    return Trace(
        t=t,
        delta_norm=delta_norm,
        means=means,
        alpha=alpha,
        n=states.n,
        x0_norm=x0_norm,
        snapshots=snapshots if cfg.snapshots else None,
        t_pred=t_pred,
    )


def _check_conditions(g: Graph, w: np.ndarray) -> None:
    report = verify_convergence(w)
    if not report.passes:
        raise SimulationError(
            "weight matrix fails the convergence conditions: "
            f"row_err={report.row_stochastic_err:.3g} "
            f"col_err={report.col_stochastic_err:.3g} "
            f"gap={report.spectral_radius_gap:.3g}"
        )


def run_async(g: Graph, p: np.ndarray, states: States, cfg: SimConfig) -> Trace:
    """Simulate the randomised gossip protocol.

    Global events arrive as a rate-n Poisson process; each event picks a
    uniform activator which selects a neighbour according to its row of p,
    and the pair averages its state. The trace is sampled on a fixed grid;
    with stop_accuracy set the run ends early once the disagreement has
    dropped that many decades.
    """
    if cfg.mode != "async":
        raise SimulationError("run_async needs an async config")
    if states.n != g.n:
        raise SimulationError("states/graph size mismatch")
    if cfg.check:
        _check_conditions(g, expected_weight_matrix(g, p))
    n = g.n
    indptr, nbrs, cum = _row_cumulative(g, p)
    alpha = float(states.x0.mean())
    x0_norm = float(np.linalg.norm(states.x0))
    delta0 = float(np.linalg.norm(states.x0 - alpha))

    sample_times = _sample_grid(cfg.horizon, cfg.sample_interval)
    n_samples = sample_times.shape[0]
    want_snapshots = cfg.snapshots or cfg.model is not None
    delta_norm, means, snap = _alloc_outputs(n_samples, n, want_snapshots)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed))
    t = 0.0
    s_idx = 0
    stop_norm = None
    if cfg.stop_accuracy is not None and delta0 > 0.0:
        stop_norm = delta0 * 10.0 ** (-cfg.stop_accuracy)
    while s_idx < n_samples:
        remaining = max(cfg.horizon - t, cfg.sample_interval)
        if stop_norm is not None:
            # keep chunks short so an early stop wastes little work
            remaining = min(remaining, max(50.0 * cfg.sample_interval, 0.05 * remaining))
        chunk = min(max(256, int(n * remaining * 1.05) + 64), 2_000_000)
        gaps = rng.exponential(1.0 / n, chunk)
        acts = rng.integers(0, n, chunk, dtype=np.int64)
        unis = rng.random(chunk)
        t, s_idx = async_events(
            states.fields, indptr, nbrs, cum, alpha, t, s_idx, sample_times,
            gaps, acts, unis, delta_norm, means, snap, want_snapshots,
        )
        if stop_norm is not None and s_idx > 0 and delta_norm[s_idx - 1] <= stop_norm:
            break
    return _finalize(
        states, cfg, sample_times, delta_norm, means, snap, want_snapshots,
        int(s_idx), alpha, x0_norm,
    )


def run_sync(g: Graph, w: np.ndarray, states: States, cfg: SimConfig) -> Trace:
    """Iterate the deterministic scheme x(k) = W x(k-1).

    One step advances the clock by one time unit, matching the async
    normalisation of n expected interactions per unit; all four state
    fields are iterated identically.
    """
    if cfg.mode != "sync":
        raise SimulationError("run_sync needs a sync config")
    if states.n != g.n or w.shape != (g.n, g.n):
        raise SimulationError("states/graph/matrix size mismatch")
    if cfg.check:
        _check_conditions(g, w)
    alpha = float(states.x0.mean())
    x0_norm = float(np.linalg.norm(states.x0))
    delta0 = float(np.linalg.norm(states.x0 - alpha))

    sample_times = _sample_grid(cfg.horizon, cfg.sample_interval)
    n_samples = sample_times.shape[0]
    want_snapshots = cfg.snapshots or cfg.model is not None
    delta_norm, means, snap = _alloc_outputs(n_samples, g.n, want_snapshots)

    def record(s_idx: int):
        delta_norm[s_idx] = np.linalg.norm(states.fields[0] - alpha)
        means[s_idx] = states.fields.mean(axis=1)
        if want_snapshots:
            snap[s_idx] = states.fields

    stop_norm = None
    if cfg.stop_accuracy is not None and delta0 > 0.0:
        stop_norm = delta0 * 10.0 ** (-cfg.stop_accuracy)
    steps = int(np.floor(cfg.horizon + 1e-9))
    s_idx = 0
    stopped = False
    for k in range(1, steps + 1):
        while s_idx < n_samples and sample_times[s_idx] < k:
            record(s_idx)
            s_idx += 1
            if stop_norm is not None and delta_norm[s_idx - 1] <= stop_norm:
                stopped = True
                break
        if stopped or s_idx >= n_samples:
            break
        states.fields = states.fields @ w.T
    while not stopped and s_idx < n_samples:
        record(s_idx)
        s_idx += 1
        if stop_norm is not None and delta_norm[s_idx - 1] <= stop_norm:
            break
    return _finalize(
        states, cfg, sample_times, delta_norm, means, snap, want_snapshots,
        s_idx, alpha, x0_norm,
    )
