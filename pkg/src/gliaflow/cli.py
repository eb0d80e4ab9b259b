"""Command-line interface: run, sweep, plot.

Exit codes: 0 on success, 1 for I/O problems (unreadable config file,
missing trace), 2 for validation problems (bad config values, unknown or
duplicate keys, missing trace columns).  Validation prints every violation,
not just the first.

Config resolution order, later wins: built-in defaults, --config file,
GLIAFLOW_* environment variables, --set key=value flags, then the dedicated
flags (--model, --seed, --t-max, --n-neurons).

Output files are written atomically (temp file in the same directory, then
rename), so a crashed or killed run never leaves a half-written CSV behind.
"""

import argparse
import dataclasses
import json
import multiprocessing
import os
import sys
import time

import numpy as np

from . import config as cfgmod
from . import engine, plots

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2


def _atomic_write(path: str, write_fn) -> None:
    tmp = path + ".tmp"
    write_fn(tmp)
    os.replace(tmp, path)


def _write_text(path: str, text: str) -> None:
    def _w(p):
        with open(p, "w") as fh:
            fh.write(text)
    _atomic_write(path, _w)


def _parse_set_args(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ValueError(f"--set expects key=value, got {pair!r}")
        key, _, val = pair.partition("=")
        out[key.strip()] = cfgmod.parse_value(val)
    return out


def _resolve_config(args) -> cfgmod.SimConfig:
    """Defaults -> file -> environment -> --set -> dedicated flags.
    Raises ValueError (bad value), KeyError (unknown key), OSError (file)."""
    cfg = cfgmod.SimConfig()
    if getattr(args, "config", None):
        cfgmod.apply_overrides(cfg, cfgmod.load_config_file(args.config))
    cfgmod.apply_overrides(cfg, cfgmod.env_overrides())
    cfgmod.apply_overrides(cfg, _parse_set_args(getattr(args, "set", None)))
    if getattr(args, "model", None) is not None:
        cfg.model = args.model
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "t_max", None) is not None:
        cfg.t_max = args.t_max
    if getattr(args, "n_neurons", None) is not None:
        cfg.n_neurons = args.n_neurons
    return cfg


def _config_or_exit(args):
    """Returns (config, None) or (None, exit code)."""
    try:
        cfg = _resolve_config(args)
    except OSError as e:
        print(f"error: cannot read config file: {e}", file=sys.stderr)
        return None, EXIT_IO
    except KeyError as e:
        print(f"config error: unknown key {e.args[0]!r}", file=sys.stderr)
        return None, EXIT_INVALID
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return None, EXIT_INVALID
    return cfg, None


def _validate_or_fail(cfg) -> int | None:
    errors, warnings = cfgmod.validate_config(cfg)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return None


def _write_manifest(out_dir: str, payload: dict, files: list, t0: float) -> None:
    payload["files"] = files + ["manifest.json"]
    payload["duration_s"] = round(time.monotonic() - t0, 3)
    _write_text(os.path.join(out_dir, "manifest.json"),
                json.dumps(payload, indent=2, sort_keys=True) + "\n")


# -- run ----------------------------------------------------------------------

def cmd_run(args) -> int:
    t0 = time.monotonic()
    cfg, rc = _config_or_exit(args)
    if rc is not None:
        return rc
    rc = _validate_or_fail(cfg)
    if rc is not None:
        return rc

    os.makedirs(args.out, exist_ok=True)
    trace = engine.run_config(cfg)
    summary = engine.summarize(trace, cfg)

    files = ["trace.csv", "summary.json", "config.txt"]
    _atomic_write(os.path.join(args.out, "trace.csv"), trace.to_csv)
    _atomic_write(os.path.join(args.out, "summary.json"),
                  lambda p: engine.write_summary(summary, p))
    _write_text(os.path.join(args.out, "config.txt"), cfgmod.dump_config(cfg))
    if cfg.model != cfgmod.MODEL_A:
        _atomic_write(os.path.join(args.out, "plasticity.csv"),
                      trace.plasticity_csv)
        files.append("plasticity.csv")
    _write_manifest(args.out, {
        "command": "run",
        "config_path": args.config,
        "config_hash": summary["config_hash"],
        "model": cfg.model,
        "seed": cfg.seed,
        "out_dir": args.out,
    }, files, t0)
    print(f"run complete: model={cfg.model} seed={cfg.seed} "
          f"t_max={cfg.t_max} out={args.out}")
    return EXIT_OK


# -- sweep --------------------------------------------------------------------

def _parse_axis(text: str) -> tuple[str, np.ndarray]:
    """--param key=lo:hi:steps -> (key, values)."""
    if "=" not in text:
        raise ValueError(f"--param expects key=lo:hi:steps, got {text!r}")
    key, _, spec = text.partition("=")
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"--param expects key=lo:hi:steps, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    steps = int(parts[2])
    if steps < 1:
        raise ValueError(f"--param {key}: steps must be >= 1, got {steps}")
    values = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    return key.strip(), values


def _run_cell(packed):
    """Pool worker: run one (cell, seed) config; returns its summary."""
    index, cfg = packed
    trace = engine.run_config(cfg)
    return index, engine.summarize(trace, cfg)

SWEEP_SUMMARY_FIELDS = [
    "config_hash", "firing_frac_mean", "firing_frac_last100_mean",
    "firing_frac_final", "cycle_period", "cycle_onset", "cmp_mean",
    "cmp_q25", "cmp_q75", "incompatible_frac", "mean_abs_weight_final",
]


def _sweep_csv(axes, cells, summaries) -> str:
    keys = [k for k, _ in axes]
    lines = [",".join(keys + ["seed"] + SWEEP_SUMMARY_FIELDS)]
    for (values, seed), summary in zip(cells, summaries):
        parts = ["%.17g" % v for v in values] + [str(seed)]
        for name in SWEEP_SUMMARY_FIELDS:
            v = summary.get(name)
            if v is None:
                parts.append("")
            elif isinstance(v, str):
                parts.append(v)
            elif isinstance(v, (int, np.integer)):
                parts.append(str(int(v)))
            else:
                parts.append("%.17g" % v)
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"


def _copy_config(base: cfgmod.SimConfig) -> cfgmod.SimConfig:
    blocks = {b: dataclasses.replace(getattr(base, b))
              for b in ("synapse", "noise", "neuron", "capillary",
                        "astro", "plasticity")}
    return dataclasses.replace(base, **blocks)


def cmd_sweep(args) -> int:
    t0 = time.monotonic()
    base, rc = _config_or_exit(args)
    if rc is not None:
        return rc

    known = cfgmod.valid_keys()
    sweepable = sorted(known - {"model", "seed"})
    axes = []
    seen = set()
    try:
        for spec in args.param or []:
            key, values = _parse_axis(spec)
            if key in seen:
                print(f"config error: duplicate sweep key {key!r}", file=sys.stderr)
                return EXIT_INVALID
            if key not in known or key in ("model", "seed"):
                print(f"config error: unknown sweep key {key!r}; valid keys: "
                      + ", ".join(sweepable), file=sys.stderr)
                return EXIT_INVALID
            seen.add(key)
            axes.append((key, values))
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_INVALID
    if not axes:
        print("config error: sweep needs at least one --param axis", file=sys.stderr)
        return EXIT_INVALID
    if args.seeds < 1:
        print(f"config error: --seeds must be >= 1, got {args.seeds}", file=sys.stderr)
        return EXIT_INVALID

    # the Cartesian product of axis values, each crossed with every seed
    grids = np.meshgrid(*[v for _, v in axes], indexing="ij")
    combos = np.stack([g.ravel() for g in grids], axis=1)
    seeds = [args.base_seed + s for s in range(args.seeds)]

    cells = []
    configs = []
    for values in combos:
        for seed in seeds:
            cfg = _copy_config(base)
            try:
                for (key, _), v in zip(axes, values):
                    cfgmod.set_key(cfg, key, float(v))
            except ValueError as e:
                print(f"config error: {e}", file=sys.stderr)
                return EXIT_INVALID
            cfg.seed = seed
            rc = _validate_or_fail(cfg)
            if rc is not None:
                return rc
            cells.append((values, seed))
            configs.append(cfg)

    jobs = list(enumerate(configs))
    if args.workers > 1:
        with multiprocessing.Pool(args.workers) as pool:
            results = pool.map(_run_cell, jobs)
    else:
        results = [_run_cell(job) for job in jobs]
    results.sort(key=lambda r: r[0])
    summaries = [summary for _, summary in results]

    os.makedirs(args.out, exist_ok=True)
    _write_text(os.path.join(args.out, "sweep.csv"),
                _sweep_csv(axes, cells, summaries))
    _write_manifest(args.out, {
        "command": "sweep",
        "config_path": args.config,
        "config_hash": cfgmod.config_hash(base),
        "model": base.model,
        "axes": {k: [float(x) for x in v] for k, v in axes},
        "seeds": seeds,
        "n_runs": len(configs),
        "out_dir": args.out,
    }, ["sweep.csv"], t0)
    print(f"sweep complete: {len(configs)} runs "
          f"({len(combos)} cells x {len(seeds)} seeds) out={args.out}")
    return EXIT_OK


# -- plot ---------------------------------------------------------------------

def cmd_plot(args) -> int:
    paths = args.trace
    if args.figure in ("2", "3") and len(paths) != 1:
        print(f"error: figure {args.figure} takes exactly one --trace",
              file=sys.stderr)
        return EXIT_INVALID
    if len(paths) > 2:
        print("error: at most two --trace files are supported", file=sys.stderr)
        return EXIT_INVALID
    for path in paths:
        if not os.path.exists(path):
            print(f"error: trace file not found: {path}", file=sys.stderr)
            return EXIT_IO
    traces = [plots.load_trace(path) for path in paths]
    try:
        plots.FIGURES[args.figure](traces, args.out)
    except KeyError as e:
        print(f"error: trace is missing column {e.args[0]!r} "
              f"required by figure {args.figure}", file=sys.stderr)
        return EXIT_INVALID
    print(f"wrote {args.out}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file of 'key = value' lines")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--model", choices=cfgmod.MODELS)
    p.add_argument("--seed", type=int)
    p.add_argument("--t-max", type=int, dest="t_max")
    p.add_argument("--n-neurons", type=int, dest="n_neurons")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gliaflow",
        description="Coupled neuron-capillary and neuron-astrocyte "
                    "network simulations.")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one configuration")
    _add_config_args(p_run)
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid of runs over parameter axes")
    _add_config_args(p_sweep)
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--param", action="append", metavar="KEY=LO:HI:STEPS",
                         help="sweep axis (repeatable)")
    p_sweep.add_argument("--seeds", type=int, default=1,
                         help="seeds per cell (base-seed + 0..k-1)")
    p_sweep.add_argument("--base-seed", type=int, default=0, dest="base_seed")
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="parallel worker processes")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_plot = sub.add_parser("plot", help="render a figure from trace CSVs")
    p_plot.add_argument("--trace", action="append", required=True,
                        help="trace CSV (repeatable; figure 5 accepts a "
                             "pure/coupled pair)")
    p_plot.add_argument("--figure", choices=sorted(plots.FIGURES), required=True)
    p_plot.add_argument("--out", required=True, help="output image path")
    p_plot.set_defaults(fn=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
