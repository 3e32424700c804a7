"""Command-line surface: fit, simulate, summarize, plot, replicate-study."""

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .model import PriorConfig
from .multiplex import MultiplexFormatError, load_multiplex, save_multiplex
from .plots import plot_g_frequencies, plot_latent_views, plot_metric_boxes
from .postprocess import map_reference, summarize_trace
from .sampler import MCMCConfig, align_to_reference, run_chain
from .simulate import SCENARIOS, ScenarioSpec, generate, load_truth, save_truth
from .traceio import TraceWriter, concatenate_traces, read_trace

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _out_root():
    return Path(os.environ.get("ILPCM_OUT_ROOT", "."))


def _digest_file(path):
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def _versions():
    import scipy
    import sklearn

    from . import __version__

    return {
        "ilpcm": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "scikit-learn": sklearn.__version__,
    }


def _write_manifest(out_dir, command, config, seed, inputs, artifacts, started):
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {str(p): _digest_file(p) for p in inputs},
        "artifacts": [str(a) for a in artifacts],
        "timing": {"started_unix": started, "wall_seconds": time.time() - started},
        "versions": _versions(),
    }
    path = Path(out_dir) / "run.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def _chain_seeds(seed, chains):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(chains)]


def _mcmc_from_args(args, p):
    return MCMCConfig(
        iterations=args.iters,
        burn_in=args.burnin,
        thin=args.thin,
        seed=args.seed,
        procrustes_threshold=args.procrustes_threshold,
        procrustes_mode=args.procrustes_mode,
        p=p,
        alpha_ref_override=args.alpha_ref,
    )


def _pool_chains(traces):
    """Concatenate chains after independently aligning every chain's draws to
    the first chain's reference configuration."""
    if len(traces) == 1:
        return traces[0]
    ref = map_reference(traces[0])
    for tr in traces:
        for t in range(len(tr)):
            tr.Z[t] = align_to_reference(tr.Z[t], ref)
    return concatenate_traces(traces)


def _write_summary(out_dir, trace, truth):
    summary, psm = summarize_trace(trace, truth=truth)
    spath = Path(out_dir) / "summary.json"
    spath.write_text(json.dumps(summary, indent=2))
    ppath = Path(out_dir) / "psm.csv"
    np.savetxt(ppath, psm.matrix, delimiter=",", fmt="%.17g")
    return spath, ppath, summary


def cmd_fit(args):
    started = time.time()
    data_path = Path(args.data)
    if not data_path.exists():
        raise FileNotFoundError(f"no such file: {data_path}")
    mx = load_multiplex(data_path)
    if args.config:
        cfg = PriorConfig.from_json(args.config, n=mx.n, p=args.p)
    else:
        cfg = PriorConfig.defaults(mx.n, p=args.p)
    truth = load_truth(args.truth) if args.truth else None

    out_dir = Path(args.out) if args.out else _out_root() / f"fit_{data_path.stem}_s{args.seed}"
    out_dir.mkdir(parents=True, exist_ok=True)

    traces = []
    seeds = _chain_seeds(args.seed, args.chains)
    for c in range(args.chains):
        mc = _mcmc_from_args(args, cfg.p)
        mc.seed = seeds[c]
        chain_dir = out_dir / f"chain_{c + 1}"
        writer = TraceWriter(chain_dir, mx.K, mx.names())
        traces.append(run_chain(mx, cfg, mc, writer=writer))

    pooled = _pool_chains(traces)
    spath, ppath, _ = _write_summary(out_dir, pooled, truth)
    data_copy = out_dir / "data.json"
    save_multiplex(mx, data_copy)

    inputs = [data_path] + ([Path(args.truth)] if args.truth else []) + ([Path(args.config)] if args.config else [])
    artifacts = [spath, ppath, data_copy] + [out_dir / f"chain_{c + 1}" for c in range(args.chains)]
    _write_manifest(
        out_dir, "fit",
        {"prior": cfg.to_dict(), "mcmc": _mcmc_from_args(args, cfg.p).to_dict(), "chains": args.chains},
        args.seed, inputs, artifacts, started,
    )
    print(out_dir)
    return EXIT_OK


def cmd_simulate(args):
    started = time.time()
    out_dir = Path(args.out) if args.out else _out_root() / f"sim_{args.scenario}_n{args.n}_K{args.K}_G{args.G}_s{args.seed}"
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = _chain_seeds(args.seed, args.reps)
    artifacts = []
    for r in range(args.reps):
        spec = ScenarioSpec(scenario=args.scenario, n=args.n, K=args.K, G=args.G, seed=seeds[r], p=args.p)
        mx, gt = generate(spec)
        rep_dir = out_dir / f"rep_{r + 1:02d}"
        rep_dir.mkdir(parents=True, exist_ok=True)
        save_multiplex(mx, rep_dir / "multiplex.json")
        save_truth(gt, rep_dir / "truth.json")
        artifacts.append(rep_dir)
    _write_manifest(
        out_dir, "simulate",
        {"scenario": args.scenario, "n": args.n, "K": args.K, "G": args.G, "reps": args.reps, "p": args.p},
        args.seed, [], artifacts, started,
    )
    print(out_dir)
    return EXIT_OK


def _read_run_traces(run_dir):
    run_dir = Path(run_dir)
    if not run_dir.exists():
        raise FileNotFoundError(f"no such run directory: {run_dir}")
    chain_dirs = sorted(run_dir.glob("chain_*"))
    if not chain_dirs:
        raise FileNotFoundError(f"run directory lacks traces: no chain_* folders under {run_dir}")
    return [read_trace(d) for d in chain_dirs]


def cmd_summarize(args):
    started = time.time()
    run_dir = Path(args.run_dir)
    traces = _read_run_traces(run_dir)
    truth = load_truth(args.truth) if args.truth else None
    pooled = _pool_chains(traces)
    spath, ppath, _ = _write_summary(run_dir, pooled, truth)
    _write_manifest(
        run_dir / "summarize" if args.separate_manifest else run_dir,
        "summarize", {"truth": bool(truth)}, pooled.meta.get("seed"),
        [args.truth] if args.truth else [], [spath, ppath], started,
    )
    print(spath)
    return EXIT_OK


def cmd_plot(args):
    run_dir = Path(args.run_dir)
    spath = run_dir / "summary.json"
    if not spath.exists():
        raise FileNotFoundError(f"missing summary: {spath} (run `ilpcm summarize` first)")
    summary = json.loads(spath.read_text())
    data_path = run_dir / "data.json"
    if not data_path.exists():
        raise FileNotFoundError(f"missing dataset copy: {data_path}")
    mx = load_multiplex(data_path)
    coords = np.asarray(summary["mean_coordinates"])
    partition = np.asarray(summary["partition"]) - 1

    covariates = None
    if args.metadata:
        meta_path = Path(args.metadata)
        if not meta_path.exists():
            raise FileNotFoundError(f"no such file: {meta_path}")
        cov = {}
        with open(meta_path, newline="") as fh:
            for row in csv.DictReader(fh):
                cov[row["node"]] = row["category"]
        try:
            covariates = [cov[name] for name in mx.names()]
        except KeyError as e:
            raise MultiplexFormatError(f"metadata file lacks a category for node {e}") from e

    fig_dir = run_dir / "figures"
    paths = plot_latent_views(mx, coords, partition, fig_dir, covariates=covariates)
    g_traces = [read_trace(d).G for d in sorted(run_dir.glob("chain_*"))]
    if g_traces:
        paths.append(plot_g_frequencies(np.concatenate(g_traces), fig_dir / "g_frequencies.svg"))
    if "procrustes_draws_vs_truth" in summary:
        paths.append(plot_metric_boxes(
            {"ARI": summary["ari_draws_vs_truth"], "Procrustes": summary["procrustes_draws_vs_truth"]},
            fig_dir / "metrics_vs_truth.svg",
        ))
    for p in paths:
        print(p)
    return EXIT_OK


def _replicate_one(scenario, n, K, G, rep_seed, iters, burnin, thin, p, workdir):
    spec = ScenarioSpec(scenario=scenario, n=n, K=K, G=G, seed=rep_seed, p=p)
    mx, gt = generate(spec)
    cfg = PriorConfig.defaults(mx.n, p=p)
    mc = MCMCConfig(iterations=iters, burn_in=burnin, thin=thin, seed=rep_seed, p=p)
    trace = run_chain(mx, cfg, mc)
    truth = {k: np.asarray(v) for k, v in gt.to_dict().items()}
    summary, _ = summarize_trace(trace, truth=truth)
    return {
        "scenario": scenario, "n": n, "K": K, "G": G, "seed": rep_seed,
        "ari": summary["ari_vs_truth"],
        "procrustes": summary["procrustes_vs_truth"],
        "G_hat": summary["G_hat"],
    }


def cmd_replicate_study(args):
    started = time.time()
    if args.full:
        scenarios = list(SCENARIOS)
        settings = [(25, 3), (50, 5)]
        g_values = [2, 3, 4]
        iters, burnin = 60000, 10000
    else:
        scenarios = args.scenarios.split(",")
        settings = [tuple(int(v) for v in s.split("x")) for s in args.settings.split(",")]
        g_values = [int(v) for v in args.G.split(",")]
        iters, burnin = args.iters, args.burnin
    for s in scenarios:
        if s not in SCENARIOS:
            raise ValueError(f"unknown scenario {s!r}")

    out_dir = Path(args.out) if args.out else _out_root() / "replicate_study"
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = []
    for scenario in scenarios:
        for (n, K) in settings:
            for G in g_values:
                seeds = _chain_seeds(args.seed + hash((scenario, n, K, G)) % 10000, args.reps)
                for r in range(args.reps):
                    jobs.append((scenario, n, K, G, seeds[r]))

    if args.jobs > 1:
        from joblib import Parallel, delayed

        rows = Parallel(n_jobs=args.jobs)(
            delayed(_replicate_one)(sc, n, K, G, sd, iters, burnin, args.thin, args.p, out_dir)
            for (sc, n, K, G, sd) in jobs
        )
    else:
        rows = [_replicate_one(sc, n, K, G, sd, iters, burnin, args.thin, args.p, out_dir) for (sc, n, K, G, sd) in jobs]

    metrics_path = out_dir / "metrics.csv"
    with open(metrics_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["scenario", "n", "K", "G", "seed", "ari", "procrustes", "G_hat"])
        writer.writeheader()
        writer.writerows(rows)

    agg = {}
    for scenario in scenarios:
        sub_ari = [r["ari"] for r in rows if r["scenario"] == scenario]
        sub_pro = [r["procrustes"] for r in rows if r["scenario"] == scenario]
        agg[scenario] = {
            "median_ari": float(np.median(sub_ari)),
            "median_procrustes": float(np.median(sub_pro)),
            "g_hat_counts": {str(g): sum(1 for r in rows if r["scenario"] == scenario and r["G_hat"] == g)
                             for g in sorted({r["G_hat"] for r in rows if r["scenario"] == scenario})},
        }
        plot_metric_boxes(
            {"ARI": sub_ari, "Procrustes": sub_pro},
            out_dir / f"metrics_{scenario}.svg",
        )
    (out_dir / "study.json").write_text(json.dumps(agg, indent=2))
    _write_manifest(
        out_dir, "replicate-study",
        {"scenarios": scenarios, "settings": settings, "G": g_values, "reps": args.reps,
         "iters": iters, "burnin": burnin, "thin": args.thin, "p": args.p, "full": args.full},
        args.seed, [], [metrics_path, out_dir / "study.json"], started,
    )
    print(out_dir)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="ilpcm", description="Latent position cluster model for multiplex networks")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_fit_flags(sp):
        sp.add_argument("--iters", type=int, default=60000)
        sp.add_argument("--burnin", type=int, default=10000)
        sp.add_argument("--thin", type=int, default=10)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--p", type=int, default=2)
        sp.add_argument("--alpha-ref", dest="alpha_ref", type=float, default=None)
        sp.add_argument("--procrustes-threshold", dest="procrustes_threshold", type=float, default=0.9)
        sp.add_argument("--procrustes-mode", dest="procrustes_mode", choices=["reject_below", "reject_above"], default="reject_below")

    p_fit = sub.add_parser("fit", help="fit the model to a multiplex")
    p_fit.add_argument("data")
    p_fit.add_argument("--config", default=None, help="prior configuration JSON")
    p_fit.add_argument("--out", default=None)
    p_fit.add_argument("--chains", type=int, default=1)
    p_fit.add_argument("--truth", default=None, help="ground-truth JSON (simulation mode)")
    add_fit_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="generate synthetic multiplex datasets")
    p_sim.add_argument("--scenario", choices=list(SCENARIOS), required=True)
    p_sim.add_argument("--n", type=int, default=25)
    p_sim.add_argument("--K", type=int, default=3)
    p_sim.add_argument("--G", type=int, default=2)
    p_sim.add_argument("--reps", type=int, default=1)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--p", type=int, default=2)
    p_sim.add_argument("--out", default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_sum = sub.add_parser("summarize", help="(re)run post-processing on a run directory")
    p_sum.add_argument("run_dir")
    p_sum.add_argument("--truth", default=None)
    p_sum.add_argument("--separate-manifest", action="store_true", dest="separate_manifest",
                       help=argparse.SUPPRESS)
    p_sum.set_defaults(func=cmd_summarize)

    p_plot = sub.add_parser("plot", help="emit SVG figures for a run directory")
    p_plot.add_argument("run_dir")
    p_plot.add_argument("--metadata", default=None, help="CSV with node,category columns for point shapes")
    p_plot.set_defaults(func=cmd_plot)

    p_rep = sub.add_parser("replicate-study", help="drive the simulation-study grid")
    p_rep.add_argument("--scenarios", default="I")
    p_rep.add_argument("--settings", default="25x3", help="comma-separated nxK settings")
    p_rep.add_argument("--G", default="2")
    p_rep.add_argument("--reps", type=int, default=10)
    p_rep.add_argument("--iters", type=int, default=20000)
    p_rep.add_argument("--burnin", type=int, default=5000)
    p_rep.add_argument("--thin", type=int, default=10)
    p_rep.add_argument("--p", type=int, default=2)
    p_rep.add_argument("--seed", type=int, default=0)
    p_rep.add_argument("--jobs", type=int, default=1)
    p_rep.add_argument("--full", action="store_true", help="paper-scale grid (long-running)")
    p_rep.add_argument("--out", default=None)
    p_rep.set_defaults(func=cmd_replicate_study)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (MultiplexFormatError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (FloatingPointError, RuntimeError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
