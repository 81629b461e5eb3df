"""Benchmark the async gossip event loop: numba kernel vs pure-Python path.

Runs itself twice in subprocesses (the path is chosen at import time via
GOSSIPNET_DISABLE_NUMBA) and reports events/second for each.

Usage: python benchmarks/bench_kernels.py [--n 500] [--horizon 200]
"""

import argparse
import os
import subprocess
import sys
import time


def run_once(n: int, horizon: float) -> None:
    import numpy as np

    from gossipnet import GraphSpec, SimConfig, generate, init_states, run_async
    from gossipnet import uniform_neighbor_probabilities
    from gossipnet._kernels import NUMBA_ENABLED

    g = generate(GraphSpec("er", n, seed=3, params={"p": 20 / (n - 1)}))
    p = uniform_neighbor_probabilities(g)
    rng = np.random.default_rng(1)
    values = rng.standard_normal(g.n)

    base = init_states(g, values, np.full(g.n, 3.0))

    def one_run(seed):
        cfg = SimConfig("async", horizon, seed=seed, check=False)
        return run_async(g, p, base.copy(), cfg)

    one_run(0)  # warm-up (JIT compile on the numba path)
    t0 = time.perf_counter()
    trace = one_run(7)
    elapsed = time.perf_counter() - t0
    events = n * horizon
    label = "numba" if NUMBA_ENABLED else "python"
    print(f"{label:>7}: {events:>10.0f} events in {elapsed:8.4f} s "
          f"({events / elapsed:12.0f} events/s)  final delta_hat {trace.delta_hat[-1]:.3e}")


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=500)
    parser.add_argument("--horizon", type=float, default=200.0)
    parser.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.child:
        run_once(args.n, args.horizon)
        return 0
    for disable in ("0", "1"):
        env = dict(os.environ, GOSSIPNET_DISABLE_NUMBA=disable)
        subprocess.run(
            [sys.executable, __file__, "--child", "--n", str(args.n),
             "--horizon", str(args.horizon)],
            env=env,
            check=True,
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
