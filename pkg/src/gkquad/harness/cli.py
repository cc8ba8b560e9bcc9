"""Command-line entry point ``gkquad``.

Subcommands::

    gkquad run        --config FILE | --preset NAME  --out DIR  [--set key=value ...]
    gkquad compress   --input functional.csv --n N --out DIR [kernel options]
    gkquad uq         --params params.csv --outputs outputs.csv --n N [N ...] --out DIR
    gkquad synth-uq   --out DIR [--N 2000 --S 50 --seed 0 --scale 10]
    gkquad plotdata   --run-dir DIR

``compress``, ``uq`` and ``synth-uq`` also read ``--config FILE`` (a JSON
object keyed by the long option names); explicit flags take precedence.

Exit codes: 0 success, 2 configuration or input error, 3 numerical
breakdown, 4 I/O or data-format error.  On failure a JSON error record is
printed to stderr and, when an output directory is known, written to
``error.json`` there.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import io
from ..errors import ConfigError, DataFormatError, GkquadError, NumericalBreakdownError
from ..functionals import DiscreteFunctional
from ..greedy import SelectionRule, compress, worst_case_error
from ..kernels import KernelSpec, PointSet
from .config import PRESETS, apply_override, load_config, parse_config, preset
from .experiment import run_experiment
from .plotdata import emit_plot_data
from .uq import DEFAULT_SYNTH_SCALE, UqDataset, summary_rows, synthetic_uq, uq_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BREAKDOWN = 3
EXIT_IO = 4

# defaults for the option-driven subcommands; None means required
_DEFAULTS = {
    "compress": {"input": None, "n": None, "out": None, "family": "MaternQuadratic", "gamma": 1.0,
                 "tau": None, "rule": "FOverP", "seed": None, "precision": "extended"},
    "uq": {"params": None, "outputs": None, "n": None, "out": None, "family": "MaternQuadratic",
           "gamma": 0.5, "tau": None, "rule": "FOverP", "seed": None, "precision": "double"},
    "synth-uq": {"out": None, "N": 2000, "S": 50, "seed": 0, "scale": DEFAULT_SYNTH_SCALE},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gkquad", description="Greedy kernel quadrature experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a greedy vs. uniform experiment")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="JSON experiment config")
    src.add_argument("--preset", choices=PRESETS, help="built-in desk-scale experiment")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field, e.g. term.max_n=200 (repeatable)")

    p = sub.add_parser("compress", help="compress a weighted point set to n nodes")
    p.add_argument("--config", type=Path)
    p.add_argument("--input", type=Path, help="CSV with header x1,...,xd,weight")
    p.add_argument("--n", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--family", choices=["MaternQuadratic", "Gaussian"])
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--rule", choices=[r.value for r in SelectionRule])
    p.add_argument("--seed", type=int, help="seed that produced the input, echoed in outputs")
    p.add_argument("--precision", choices=["extended", "double"],
                   help="accumulation of the change of basis (default extended)")

    p = sub.add_parser("uq", help="compress the mean of a UQ dataset")
    p.add_argument("--config", type=Path)
    p.add_argument("--params", type=Path, help="CSV with header t1,t2,t3")
    p.add_argument("--outputs", type=Path, help="CSV with header c1,...,cS")
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--out", type=Path)
    p.add_argument("--family", choices=["MaternQuadratic", "Gaussian"])
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--rule", choices=[r.value for r in SelectionRule])
    p.add_argument("--seed", type=int, help="seed that produced the dataset, echoed in outputs")
    p.add_argument("--precision", choices=["extended", "double"],
                   help="accumulation of the change of basis (default double)")

    p = sub.add_parser("synth-uq", help="write a seeded synthetic UQ dataset")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--N", type=int)
    p.add_argument("--S", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--scale", type=float)

    p = sub.add_parser("plotdata", help="(re)build plotdata.csv from a run directory")
    p.add_argument("--run-dir", type=Path, required=True)
    p.add_argument("--out", type=Path, help="output file (default RUN_DIR/plotdata.csv)")
    return parser


def _options(command, args) -> dict:
    opts = dict(_DEFAULTS[command])
    if args.config is not None:
        try:
            with open(args.config) as fh:
                extra = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {args.config} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(extra, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(extra) - set(opts)
        if unknown:
            raise ConfigError(f"unknown options in {args.config}: {sorted(unknown)}")
        base = args.config.parent
        for k, v in extra.items():
            if k in ("input", "params", "outputs", "out") and v is not None and not Path(v).is_absolute():
                v = base / v
            opts[k] = v
    for k in opts:
        v = getattr(args, k, None)
        if v is not None:
            opts[k] = v
    missing = [k for k, v in opts.items() if v is None and k not in ("tau", "seed")]
    if missing:
        raise ConfigError(f"missing required options: {', '.join('--' + m for m in missing)}")
    return opts


def _cmd_run(args):
    if args.config is not None:
        config = load_config(args.config, args.overrides)
    else:
        d = preset(args.preset)
        for o in args.overrides:
            apply_override(d, o)
        config = parse_config(d)
    summary = run_experiment(config, args.out)
    print(json.dumps({k: summary[k] for k in ("status", "n", "wce", "c_G", "greedy_slope", "seed")}))


def _cmd_compress(args):
    o = _options("compress", args)
    coords, weights = io.read_weighted(o["input"])
    L = DiscreteFunctional(PointSet(coords), weights)
    kernel = KernelSpec(o["family"], float(o["gamma"]), L.dim, o["tau"])
    rule = SelectionRule(o["rule"])
    result = compress(L, kernel, int(o["n"]), rule, coeff_precision=o["precision"])
    out = Path(o["out"])
    io.write_trace(out / "trace.csv", result.trace)
    io.write_rule(out / "rule.csv", result)
    io.write_rule_summary(out / "rule.json", result, kernel, rule, o["seed"],
                          extra={"wce_recomputed": worst_case_error(result, L, kernel), "input_nodes": len(L)})
    print(json.dumps({"status": result.status.value, "n": result.n, "wce": result.wce, "seed": o["seed"]}))


def _cmd_uq(args):
    o = _options("uq", args)
    params = io.read_matrix(o["params"], "t")
    outputs = io.read_matrix(o["outputs"], "c")
    dataset = UqDataset(params, outputs)
    kernel = KernelSpec(o["family"], float(o["gamma"]), params.shape[1], o["tau"])
    ns = o["n"] if isinstance(o["n"], list) else [o["n"]]
    results = uq_sweep(dataset, kernel, ns, SelectionRule(o["rule"]), o["precision"])
    out = Path(o["out"])
    io.write_table(out / "uq.csv", ["n", "E_mu", "E_sigma", "clamped"], summary_rows(results))
    io.write_json(out / "uq.json", {
        "N": dataset.N, "S": dataset.S, "seed": o["seed"], "kernel": kernel.to_dict(), "rule": o["rule"],
        "requested_n": sorted(set(int(n) for n in ns)),
        "results": [{"n": r.n, "E_mu": r.E_mu, "E_sigma": r.E_sigma, "clamped": r.clamped} for r in results],
    })
    print(json.dumps([{"n": r.n, "E_mu": r.E_mu, "E_sigma": r.E_sigma} for r in results]))


def _cmd_synth(args):
    o = _options("synth-uq", args)
    ds = synthetic_uq(int(o["N"]), int(o["S"]), int(o["seed"]), float(o["scale"]))
    out = Path(o["out"])
    io.write_matrix(out / "params.csv", "t", ds.params)
    io.write_matrix(out / "outputs.csv", "c", ds.outputs)
    io.write_json(out / "dataset.json", {"N": ds.N, "S": ds.S, "seed": int(o["seed"]), "scale": float(o["scale"])})
    print(json.dumps({"N": ds.N, "S": ds.S, "seed": int(o["seed"])}))


def _cmd_plotdata(args):
    path = emit_plot_data(args.run_dir, args.out)
    print(json.dumps({"plotdata": str(path)}))


_COMMANDS = {"run": _cmd_run, "compress": _cmd_compress, "uq": _cmd_uq, "synth-uq": _cmd_synth,
             "plotdata": _cmd_plotdata}


def _exit_code(exc) -> int:
    if isinstance(exc, NumericalBreakdownError):
        return EXIT_BREAKDOWN
    if isinstance(exc, (DataFormatError, OSError)):
        return EXIT_IO
    return EXIT_CONFIG


def _report(exc, out_dir):
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": _exit_code(exc)}
    text = json.dumps(record)
    print(text, file=sys.stderr)
    if out_dir is not None:
        try:
            io.write_json(Path(out_dir) / "error.json", record)
        except OSError:
            pass


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (GkquadError, OSError) as exc:
        _report(exc, getattr(args, "out", None) or getattr(args, "run_dir", None))
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
