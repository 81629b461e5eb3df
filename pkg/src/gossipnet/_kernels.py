"""Hot inner loops of the asynchronous simulator.

The event loop is written once in numba-compatible Python and compiled
with @njit by default. Setting the environment variable
``GOSSIPNET_DISABLE_NUMBA=1`` (or any non-empty value other than "0")
before import selects the uncompiled fallback; both paths execute the
identical statements, so traces are bit-identical either way.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["async_events", "NUMBA_ENABLED"]

_disable = os.environ.get("GOSSIPNET_DISABLE_NUMBA", "0") not in ("", "0")

NUMBA_ENABLED = False
if not _disable:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        pass


def _async_events(
    state,          # (fields, n) float64, field 0 is the value estimate
    indptr,         # (n+1,) int64 CSR row pointers
    nbrs,           # (2m,) int64 CSR neighbour indices
    cum,            # (2m,) float64 per-row cumulative selection probabilities
    alpha,          # float64, true average of field 0
    t,              # float64, simulation clock at entry
    s_idx,          # int64, next sample slot to fill
    sample_times,   # (S,) float64 strictly increasing
    gaps,           # (E,) float64 exponential inter-event gaps
    acts,           # (E,) int64 activator per event
    unis,           # (E,) float64 neighbour-selection uniforms
    delta_norm,     # (S,) float64 output: l2 norm of field0 - alpha
    means,          # (S, fields) float64 output: per-field means
    snap,           # (S, fields, n) float64 output, written when do_snap
    do_snap,        # bool
):
    n = state.shape[1]
    fields = state.shape[0]
    n_samples = sample_times.shape[0]
    n_events = gaps.shape[0]
    for e in range(n_events):
        t_new = t + gaps[e]
        while s_idx < n_samples and sample_times[s_idx] < t_new:
            acc = 0.0
            for v in range(n):
                d = state[0, v] - alpha
                acc += d * d
            delta_norm[s_idx] = np.sqrt(acc)
            for f in range(fields):
                m = 0.0
                for v in range(n):
                    m += state[f, v]
                means[s_idx, f] = m / n
            if do_snap:
                for f in range(fields):
                    for v in range(n):
                        snap[s_idx, f, v] = state[f, v]
            s_idx += 1
        if s_idx >= n_samples:
            return t, s_idx
        t = t_new
        i = acts[e]
        lo = indptr[i]
        hi = indptr[i + 1]
        # first slot with cum > u (row-local binary search)
        u = unis[e]
        while lo < hi:
            mid = (lo + hi) // 2
            if cum[mid] <= u:
                lo = mid + 1
            else:
                hi = mid
        j = nbrs[min(lo, indptr[i + 1] - 1)]
        for f in range(fields):
            avg = 0.5 * (state[f, i] + state[f, j])
            state[f, i] = avg
            state[f, j] = avg
    return t, s_idx


if NUMBA_ENABLED:
    async_events = njit(cache=True)(_async_events)
else:
    async_events = _async_events
