"""Command-line entry point: ``accel-eval {run,compare,sequential,oracle,validate-config}``.

Exit status: 0 success, 2 configuration error, 3 pipeline error,
4 oracle non-convergence.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from . import artifacts, pipeline
from .config import load_config
from .estimate import default_checkpoints
from .exceptions import ConfigError, OracleError, PipelineError
from .scenarios import toy_oracle_probability

EXIT_OK, EXIT_CONFIG, EXIT_PIPELINE, EXIT_ORACLE = 0, 2, 3, 4


def _resolve(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(
        seed=args.seed,
        samples=args.samples,
        confidence=args.confidence,
        crude_samples=args.crude_samples,
        rounds=getattr(args, "rounds", None),
        components=getattr(args, "components", None),
    )


def _write_run(result, cfg, out):
    """Trace, summary and model for one AE run; returns the written paths."""
    est = result.estimate
    summary = {
        "scenario": cfg.scenario.name,
        "seed": cfg.pipeline.seed,
        "components": cfg.pipeline.components,
        "round": result.round_index,
        "training_size": int(result.train_x.shape[0]),
        "training_critical": int((result.train_y == 1).sum()),
        "train_recall": artifacts._num(result.train_recall),
        "em_iterations": result.model.feature_fit.info.iterations,
        "em_converged": result.model.feature_fit.info.converged,
        **artifacts.estimate_summary(est, cfg.pipeline.confidence),
        "config": cfg.to_dict(),
    }
    model = artifacts.model_to_dict(result.model, result.fmap, cfg)
    return [
        artifacts.atomic_write(out / "trace.csv", artifacts.trace_text(est, cfg)),
        artifacts.atomic_write(out / "summary.json", artifacts.dumps(summary)),
        artifacts.atomic_write(out / "model.json", artifacts.dumps(model)),
    ]


def _finish(cfg, out, written, timings):
    artifacts.atomic_write(out / "manifest.json", artifacts.dumps(artifacts.manifest(cfg, written)))
    # wall time varies run to run, so it stays out of the hashed artifacts
    doc = {"seed": cfg.pipeline.seed, "wall_time_s": {k: round(v, 3) for k, v in timings.items()}}
    artifacts.atomic_write(out / "timing.json", artifacts.dumps(doc))


def _report(label, est):
    w = est.rel_half_width
    print(f"{label}: p_hat={est.p_hat:.6g} rel_half_width={w:.4g} n={est.n_samples} hits={est.hit_count}")


def cmd_run(cfg, out):
    out = Path(out)
    t0 = time.perf_counter()
    result = pipeline.run_pipeline(cfg)
    elapsed = time.perf_counter() - t0
    written = _write_run(result, cfg, out)
    _finish(cfg, out, written, {"run": elapsed})
    _report(f"AE K={cfg.pipeline.components}", result.estimate)
    return result


def cmd_compare(cfg, mixtures, out):
    """AE at each mixture count plus crude MC, on shared checkpoints."""
    out = Path(out)
    p = cfg.pipeline
    crude_n = p.crude_samples or p.samples
    grid = default_checkpoints(max(p.samples, crude_n))
    runs = {}
    written = []
    rows = []
    timings = {}
    for k in mixtures:
        sub = cfg.with_overrides(components=k)
        cps = [c for c in grid if c <= p.samples]
        t0 = time.perf_counter()
        result = pipeline.run_pipeline(sub, checkpoints=cps)
        timings[f"ae_k{k}"] = time.perf_counter() - t0
        label = f"ae_k{k}"
        runs[label] = result.estimate
        written += _write_run(result, sub, out / label)
        rows.append({"label": label, "components": k,
                     **artifacts.estimate_summary(result.estimate, p.confidence)})
        _report(f"AE K={k}", result.estimate)
    t0 = time.perf_counter()
    crude = pipeline.run_crude(cfg, crude_n, checkpoints=[c for c in grid if c <= crude_n])
    timings["crude"] = time.perf_counter() - t0
    runs["crude"] = crude
    written.append(artifacts.atomic_write(out / "crude" / "trace.csv", artifacts.trace_text(crude, cfg)))
    rows.append({"label": "crude", "components": None, **artifacts.estimate_summary(crude, p.confidence)})
    _report("crude MC", crude)

    written.append(artifacts.atomic_write(out / "compare.csv", artifacts.wide_trace_text(runs, cfg)))
    report = {"scenario": cfg.scenario.name, "seed": p.seed, "methods": rows, "config": cfg.to_dict()}
    written.append(artifacts.atomic_write(out / "compare_summary.json", artifacts.dumps(report)))
    _finish(cfg, out, written, timings)
    return runs


def cmd_sequential(cfg, out):
    out = Path(out)
    if cfg.pipeline.rounds == 0:
        return [cmd_run(cfg, out)]
    t0 = time.perf_counter()
    results = pipeline.run_sequential(cfg)
    elapsed = time.perf_counter() - t0
    written = []
    rows = []
    for r in results:
        written += _write_run(r, cfg, out / f"round_{r.round_index}")
        rows.append({"round": r.round_index, "training_size": int(r.train_x.shape[0]),
                     "train_recall": artifacts._num(r.train_recall),
                     **artifacts.estimate_summary(r.estimate, cfg.pipeline.confidence)})
        _report(f"round {r.round_index}", r.estimate)
    report = {"scenario": cfg.scenario.name, "seed": cfg.pipeline.seed, "rounds": rows,
              "pooled": False, "config": cfg.to_dict()}
    written.append(artifacts.atomic_write(out / "sequential_summary.json", artifacts.dumps(report)))
    _finish(cfg, out, written, {"sequential": elapsed})
    return results


def cmd_oracle(cfg, cells, out=None):
    if cfg.scenario.kind != "toy":
        raise ConfigError("scenario.kind", "the quadrature oracle exists only for the toy scenario")
    value = toy_oracle_probability(cells, radius_scale=cfg.scenario.radius_scale)
    print(f"{cfg.scenario.name}: P = {value!r}")
    if out is not None:
        doc = {"scenario": cfg.scenario.name, "radius_scale": cfg.scenario.radius_scale,
               "cells_per_axis": cells, "probability": value, "seed": cfg.pipeline.seed}
        artifacts.atomic_write(Path(out) / "oracle.json", artifacts.dumps(doc))
    return value


def _int(text):
    # range checks happen in config validation so errors name the field
    try:
        val = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    return val


def _mixture_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="accel-eval", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, out=True):
        p.add_argument("--config", default="toy",
                       help="built-in preset (toy, toy-inflated, lane-change), TOML file or run manifest")
        p.add_argument("--seed", type=_int)
        p.add_argument("--samples", type=_int, help="importance-sampling draws")
        p.add_argument("--confidence", type=float)
        p.add_argument("--crude-samples", type=_int)
        if out:
            p.add_argument("--out", default="out", help="output directory")

    p_run = sub.add_parser("run", help="one accelerated-evaluation pass")
    common(p_run)
    p_run.add_argument("--components", "-K", type=_int, help="mixture count K")

    p_cmp = sub.add_parser("compare", help="AE at several K against crude Monte Carlo")
    common(p_cmp)
    p_cmp.add_argument("--mixtures", type=_mixture_list, help="comma-separated K values (default: config K)")

    p_seq = sub.add_parser("sequential", help="AE with sequential training-set refinement")
    common(p_seq)
    p_seq.add_argument("--rounds", type=_int)

    p_or = sub.add_parser("oracle", help="toy quadrature probability")
    p_or.add_argument("--config", default="toy")
    p_or.add_argument("--cells", type=_int, default=100, help="initial cells per axis")
    p_or.add_argument("--out", default=None)

    p_val = sub.add_parser("validate-config", help="parse a config and print it resolved")
    p_val.add_argument("--config", default="toy")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "validate-config":
            cfg = load_config(args.config)
            print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
            return EXIT_OK
        if args.verb == "oracle":
            if args.cells < 100:
                raise ConfigError("--cells", "must be >= 100")
            cmd_oracle(load_config(args.config), args.cells, args.out)
            return EXIT_OK
        cfg = _resolve(args)
        if args.verb == "run":
            cmd_run(cfg, args.out)
        elif args.verb == "compare":
            mixtures = args.mixtures or [cfg.pipeline.components]
            for k in mixtures:  # reject a bad K before any run starts
                cfg.with_overrides(components=k)
            cmd_compare(cfg, mixtures, args.out)
        else:
            cmd_sequential(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print(f"pipeline error in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return EXIT_PIPELINE
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
