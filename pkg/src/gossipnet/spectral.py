"""Gossip matrices and convergence diagnostics.

Builds the neighbour-selection probability matrix P, the expected weight
matrix of the pairwise-averaging scheme

    W = I - D/(2n) + (P + P^T)/(2n),   D_i = sum_j (p_ij + p_ji),

and its Laplacian L = D/(2n) - (P + P^T)/(2n). The convergence check
verifies double stochasticity and that the spectral radius of
W - 11^T/n is below 1, estimated by power iteration with deflation of
the known all-ones eigenvector.

These checks validate simulations; the prediction pipeline itself never
uses eigenvalues.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .graph import Graph

__all__ = [
    "ConvergenceReport",
    "SpectralError",
    "uniform_neighbor_probabilities",
    "expected_weight_matrix",
    "laplacian",
    "spectral_radius_deflated",
    "verify_convergence",
]

STOCHASTIC_TOL = 1e-12
POWER_ITER_CAP = 100_000
POWER_ITER_TOL = 1e-10


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class ConvergenceReport:
    row_stochastic_err: float
    col_stochastic_err: float
    spectral_radius_gap: float
    lambda2: float
    passes: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def uniform_neighbor_probabilities(g: Graph) -> np.ndarray:
    """p_ij = 1/|neighbours of i| for each neighbour j, else 0."""
    p = np.zeros((g.n, g.n))
    for i, nbrs in enumerate(g.adjacency):
        if not nbrs:
            raise SpectralError(f"node {i} is isolated, no neighbour to select")
        p[i, list(nbrs)] = 1.0 / len(nbrs)
    return p


def expected_weight_matrix(g: Graph, p: np.ndarray) -> np.ndarray:
    _check_probability_matrix(g, p)
    n = g.n
    d = p.sum(axis=1) + p.sum(axis=0)
    return np.eye(n) - np.diag(d) / (2 * n) + (p + p.T) / (2 * n)


def laplacian(p: np.ndarray) -> np.ndarray:
    n = p.shape[0]
    d = p.sum(axis=1) + p.sum(axis=0)
    return (np.diag(d) - p - p.T) / (2 * n)


def _check_probability_matrix(g: Graph, p: np.ndarray) -> None:
    if p.shape != (g.n, g.n):
        raise SpectralError(f"probability matrix shape {p.shape} != ({g.n},{g.n})")
    if np.any(p < 0):
        raise SpectralError("negative selection probability")
    if np.max(np.abs(p.sum(axis=1) - 1.0)) > STOCHASTIC_TOL:
        raise SpectralError("probability rows must sum to 1")
    mask = np.ones_like(p, dtype=bool)
    for i, nbrs in enumerate(g.adjacency):
        mask[i, list(nbrs)] = False
    if np.any(p[mask] != 0):
        raise SpectralError("nonzero probability on a non-edge")


def spectral_radius_deflated(
    w: np.ndarray,
    seed: int = 0,
    cap: int = POWER_ITER_CAP,
    tol: float = POWER_ITER_TOL,
) -> tuple[float, bool]:
    """Spectral radius of w - 11^T/n by power iteration.

    The all-ones eigenvector is deflated by subtracting the mean of the
    iterate each step; the magnitude of the converged Rayleigh quotient is
    the radius. Returns (radius, converged).
    """
    n = w.shape[0]
    if n == 1:
        return 0.0, True
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    z -= z.mean()
    norm = np.linalg.norm(z)
    if norm == 0.0:
        z = np.zeros(n)
        z[0] = 1.0
        z -= z.mean()
        norm = np.linalg.norm(z)
    z /= norm
    prev = np.inf
    for _ in range(cap):
        wz = w @ z
        wz -= wz.mean()
        rayleigh = float(z @ wz)
        norm = np.linalg.norm(wz)
        if norm == 0.0:
            return 0.0, True
        z = wz / norm
        if abs(rayleigh - prev) < tol:
            return abs(rayleigh), True
        prev = rayleigh
    return abs(prev), False


def verify_convergence(w: np.ndarray, tol: float = STOCHASTIC_TOL, seed: int = 0) -> ConvergenceReport:
    """Check the three asymptotic-averaging conditions on a weight matrix:
    1 is a left and a right eigenvector (sum preservation, fixed point) and
    all other eigenvalues lie strictly inside the unit circle."""
    n = w.shape[0]
    if w.ndim != 2 or w.shape[1] != n:
        raise SpectralError("weight matrix must be square")
    row_err = float(np.max(np.abs(w.sum(axis=1) - 1.0)))
    col_err = float(np.max(np.abs(w.sum(axis=0) - 1.0)))
    # non-converged power iteration still yields a best estimate; passes is
    # decided on that value
    rho, _converged = spectral_radius_deflated(w, seed=seed)
    gap = 1.0 - rho
    passes = row_err <= tol and col_err <= tol and gap > 0.0
    return ConvergenceReport(
        row_stochastic_err=row_err,
        col_stochastic_err=col_err,
        spectral_radius_gap=gap,
        lambda2=rho,
        passes=passes,
    )
