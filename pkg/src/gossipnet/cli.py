"""Command-line front end.

Subcommands: generate, metrics, simulate, fit, predict, detect. Every
stochastic command takes an explicit --seed (no wall-clock seeding) so
repeated invocations are byte-identical. A JSON config file can supply
defaults; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import analysis, engine, graph, metrics, spectral

DIST_CHOICES = ("normal", "gamma")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_apply_config(argv))
    try:
        return args.func(args)
    except (graph.GraphError, engine.SimulationError, analysis.AnalysisError,
            spectral.SpectralError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _apply_config(argv: list[str]) -> list[str]:
    """Prepend flags from a --config JSON file so explicit flags override."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    with open(path) as fh:
        config = json.load(fh)
    injected: list[str] = []
    for key, value in config.items():
        injected.extend([f"--{key.replace('_', '-')}", str(value)])
    # subcommand stays first, config flags precede explicit ones
    head, tail = argv[:1], argv[1:]
    del tail[idx - 1:idx + 1]
    return head + injected + tail


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gossipnet")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a random graph and write its edge list")
    p.add_argument("--family", required=True, choices=graph.FAMILIES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, help="edge probability (er)")
    p.add_argument("--radius", type=float, help="connection radius (grg)")
    p.add_argument("--target-degree", type=float, help="mean degree target (grg)")
    p.add_argument("--k", type=int, help="ring degree (ws)")
    p.add_argument("--pr", type=float, help="rewire probability (ws)")
    p.add_argument("--m", type=int, help="attachments per node (sf)")
    p.add_argument("--pt", type=float, help="triad probability (sf)")
    p.add_argument("--rewire", type=float, help="post-generation random rewiring probability")
    p.add_argument("--fail", type=float, help="post-generation link failure probability")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("metrics", help="per-node metrics CSV for a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("simulate", help="run one averaging simulation and write the trace")
    p.add_argument("--graph", required=True)
    p.add_argument("--mode", choices=("async", "sync"), default="async")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--sample-interval", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    _add_value_flags(p)
    p.add_argument("--r", type=float, default=3.0, help="per-node accuracy requirement (decades)")
    p.add_argument("--model", help="rate model JSON enabling live time predictions")
    p.add_argument("--out", required=True, help="trace CSV path")
    p.add_argument("--snapshots-out", help="optional per-node snapshot CSV")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="build a rate corpus and fit the regression model")
    p.add_argument("--spec-file", help="JSON list of graph specs")
    p.add_argument("--auto", type=int, help="size of an auto-generated mixed-family corpus")
    p.add_argument("--n-min", type=int, default=100)
    p.add_argument("--n-max", type=int, default=300)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out-corpus", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predicted time to accuracy from a fitted model")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--r", type=float, default=3.0)
    p.add_argument("--out", required=True, help="summary JSON path")
    p.add_argument("--per-node", help="optional CSV of per-node initial predictions")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("detect", help="alarm or outlier detection experiment")
    p.add_argument("--graph", required=True)
    p.add_argument("--mode", choices=("alarm", "outlier"), required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--sample-interval", type=float, default=1.0)
    p.add_argument("--seed", type=int, required=True)
    _add_value_flags(p)
    p.add_argument("--threshold", type=float, required=True,
                   help="M (alarm, absolute) or m (outlier, initial standard deviations)")
    p.add_argument("--sigma0", type=float, help="known initial standard deviation (outlier)")
    p.add_argument("--gamma", type=float, help="contraction rate for the sigma decay law "
                                               "(outlier; default: estimated from the run)")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--curve", required=True, help="per-time outcome CSV path")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_detect)

    return parser


def _add_value_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dist", choices=DIST_CHOICES, default="normal")
    p.add_argument("--mu", type=float, default=0.0, help="normal mean")
    p.add_argument("--sd", type=float, default=1.0, help="normal standard deviation")
    p.add_argument("--shape", type=float, default=1.0, help="gamma shape")
    p.add_argument("--scale", type=float, default=1.0, help="gamma scale")


def _draw_values(args, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=args.seed, spawn_key=(1,)))
    if args.dist == "normal":
        return rng.normal(args.mu, args.sd, n)
    return rng.gamma(args.shape, args.scale, n)


def _load_graph(path) -> graph.Graph:
    g = graph.read_edgelist(path)
    if not graph.is_connected(g):
        raise graph.GraphError(f"{path}: graph is disconnected, refusing to simulate")
    if graph.is_bipartite(g):
        # the symmetric pairwise construction still converges (positive
        # diagonal); the matrix conditions are verified before running
        print(f"warning: {path}: graph is bipartite", file=sys.stderr)
    return g


def cmd_generate(args) -> int:
    params = {}
    if args.family == "er":
        params["p"] = _require(args.p, "--p")
    elif args.family == "grg":
        if args.radius is not None:
            params["radius"] = args.radius
        else:
            params["target_degree"] = _require(args.target_degree, "--radius or --target-degree")
    elif args.family == "ws":
        params["k"] = _require(args.k, "--k")
        params["pr"] = _require(args.pr, "--pr")
    else:
        params["m"] = _require(args.m, "--m")
        params["pt"] = _require(args.pt, "--pt")
    g = graph.generate(graph.GraphSpec(args.family, args.n, seed=args.seed, params=params))
    if args.rewire is not None:
        g = graph.rewire_random(g, args.rewire, args.seed + 1)
    if args.fail is not None:
        g = graph.fail_links(g, args.fail, args.seed + 2)
    graph.write_edgelist(g, args.out)
    averages = metrics.graph_averages(g)
    print(f"n {g.n} edges {g.edge_count} connected {graph.is_connected(g)} "
          f"bipartite {graph.is_bipartite(g)}")
    print(f"mean_degree {averages.mean_degree:.12g} "
          f"mean_clustering {averages.mean_clustering:.12g} "
          f"mean_efficiency {averages.mean_efficiency:.12g}")
    return 0


def _require(value, flag: str):
    if value is None:
        raise graph.GraphError(f"missing {flag}")
    return value


def cmd_metrics(args) -> int:
    g = graph.read_edgelist(args.graph)
    metrics.write_metrics_csv(g, args.out)
    averages = metrics.graph_averages(g)
    print(f"mean_degree {averages.mean_degree:.12g} "
          f"mean_clustering {averages.mean_clustering:.12g} "
          f"mean_efficiency {averages.mean_efficiency:.12g}")
    return 0


def cmd_simulate(args) -> int:
    g = _load_graph(args.graph)
    model = None
    if args.model:
        with open(args.model) as fh:
            model = analysis.RateModel.from_json(fh.read())
    values = _draw_values(args, g.n)
    states = engine.init_states(g, values, np.full(g.n, args.r))
    cfg = engine.SimConfig(
        mode=args.mode,
        horizon=args.horizon,
        seed=args.seed,
        sample_interval=args.sample_interval,
        model=model,
        snapshots=bool(args.snapshots_out),
    )
    if args.mode == "async":
        p = spectral.uniform_neighbor_probabilities(g)
        trace = engine.run_async(g, p, states, cfg)
    else:
        p = spectral.uniform_neighbor_probabilities(g)
        w = spectral.expected_weight_matrix(g, p)
        trace = engine.run_sync(g, w, states, cfg)
    trace.write_csv(args.out)
    if args.snapshots_out:
        trace.write_snapshots_csv(args.snapshots_out)
    final_r = trace.accuracy()[-1]
    try:
        fitted = analysis.gamma_fit(trace)
        print(f"gamma {fitted.gamma:.12g} fit_r2 {fitted.r2:.12g} final_R {final_r:.12g}")
    except analysis.AnalysisError as exc:
        print(f"gamma unavailable ({exc}) final_R {final_r:.12g}")
    return 0


def cmd_fit(args) -> int:
    if args.spec_file:
        with open(args.spec_file) as fh:
            raw = json.load(fh)
        specs = [
            graph.GraphSpec(d["family"], d["n"], seed=d["seed"], params=d["params"])
            for d in raw
        ]
    elif args.auto:
        specs = analysis.default_corpus_specs(
            args.auto, seed=args.seed, n_range=(args.n_min, args.n_max)
        )
    else:
        raise analysis.AnalysisError("need --spec-file or --auto")
    corpus = analysis.build_corpus(specs, args.runs, seed=args.seed, workers=args.workers)
    if not corpus:
        raise analysis.AnalysisError("every corpus graph failed to generate")
    analysis.write_corpus_csv(corpus, args.out_corpus)
    model = analysis.fit_model(corpus)
    with open(args.out_model, "w", encoding="ascii") as fh:
        fh.write(model.to_json() + "\n")
    print(f"corpus {len(corpus)} r2 {model.r2:.12g} "
          f"a {model.a:.12g} b {model.b:.12g} c {model.c:.12g} d {model.d:.12g}")
    return 0


def cmd_predict(args) -> int:
    g = _load_graph(args.graph)
    with open(args.model) as fh:
        model = analysis.RateModel.from_json(fh.read())
    averages = metrics.graph_averages(g)
    gamma_est = max(model.gamma(averages), engine.GAMMA_MIN)
    t_pred = args.r / gamma_est
    summary = {
        "r": args.r,
        "gamma_est": gamma_est,
        "t_pred": t_pred,
        "clamped": model.gamma(averages) < engine.GAMMA_MIN,
        "mean_degree": averages.mean_degree,
        "mean_clustering": averages.mean_clustering,
        "mean_efficiency": averages.mean_efficiency,
    }
    with open(args.out, "w", encoding="ascii") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    if args.per_node:
        deg, clu, eff = metrics.all_node_metrics(g)
        preds = engine.predict_time(deg, clu, eff, args.r, model)
        with open(args.per_node, "w", encoding="ascii") as fh:
            fh.write("node,t_pred\n")
            for v in range(g.n):
                fh.write(f"{v},{preds[v]:.12g}\n")
    print(f"gamma_est {gamma_est:.12g} t_pred {t_pred:.12g}")
    return 0


def cmd_detect(args) -> int:
    g = _load_graph(args.graph)
    values = _draw_values(args, g.n)
    states = engine.init_states(g, values, np.full(g.n, 3.0))
    cfg = engine.SimConfig(
        mode="async",
        horizon=args.horizon,
        seed=args.seed,
        sample_interval=args.sample_interval,
        snapshots=True,
    )
    p = spectral.uniform_neighbor_probabilities(g)
    trace = engine.run_async(g, p, states, cfg)
    alpha = trace.alpha
    accuracy = trace.accuracy()
    if args.mode == "alarm":
        _detect_alarm(args, trace, values, alpha, accuracy)
    else:
        _detect_outlier(args, trace, values, alpha)
    return 0


def _detect_alarm(args, trace, values, alpha, accuracy) -> None:
    marks = {}
    for level in (1, 2, 3):
        hit = trace.time_to_accuracy(level)
        marks[f"t_at_R{level}"] = hit
    rows = []
    final = None
    for k in range(trace.t.shape[0]):
        outcome = analysis.alarm_classify(values, trace.snapshots[k, 0], alpha, args.threshold)
        rows.append((trace.t[k], accuracy[k], outcome))
        final = outcome
    with open(args.curve, "w", encoding="ascii") as fh:
        fh.write("t,R,error_rate,tp,fp,tn,fn\n")
        for t, acc, o in rows:
            fh.write(f"{t:.12g},{acc:.12g},{o.error_rate:.12g},"
                     f"{o.true_positive},{o.false_positive},{o.true_negative},{o.false_negative}\n")
    report = {
        "mode": "alarm",
        "threshold": args.threshold,
        "final": {
            "true_positive": final.true_positive,
            "false_positive": final.false_positive,
            "true_negative": final.true_negative,
            "false_negative": final.false_negative,
            "error_rate": final.error_rate,
        },
        **marks,
    }
    with open(args.out, "w", encoding="ascii") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"final_error_rate {final.error_rate:.12g}")


def _detect_outlier(args, trace, values, alpha) -> None:
    sigma0 = args.sigma0 if args.sigma0 is not None else float(np.std(values))
    if args.gamma is not None:
        gamma = args.gamma
    else:
        gamma = analysis.gamma_fit(trace, through_origin=True).gamma
    truth = np.abs(values - alpha) > args.threshold * sigma0
    rows = []
    for k in range(trace.t.shape[0]):
        flagged = analysis.outlier_detect(
            values, trace.snapshots[k, 0], sigma0, gamma, float(trace.t[k]), args.threshold
        )
        rows.append((trace.t[k], int(flagged.sum()), int((flagged & truth).sum()),
                     int((flagged & ~truth).sum())))
    with open(args.curve, "w", encoding="ascii") as fh:
        fh.write("t,flagged,detected_true,false_flags\n")
        for t, fl, dt, ff in rows:
            fh.write(f"{t:.12g},{fl},{dt},{ff}\n")
    report = {
        "mode": "outlier",
        "m": args.threshold,
        "sigma0": sigma0,
        "gamma": gamma,
        "true_outliers": int(truth.sum()),
        "detected_at_end": rows[-1][2],
        "all_detected": bool(rows[-1][2] == int(truth.sum())),
    }
    with open(args.out, "w", encoding="ascii") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(f"true_outliers {report['true_outliers']} detected {report['detected_at_end']}")


if __name__ == "__main__":
    raise SystemExit(main())
