"""Command-line front end: ``codedptycho <subcommand> --config PATH``.

Exit status is 0 on success, 1 for invalid configuration or inputs and 2 for
numerical failures.
"""
import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import scipy.fft

from . import analysis, fileio
from ._validation import ConvergenceError, DimensionError, ParameterError
from .experiments import (
    ExperimentConfig,
    build_operator,
    reconstruct,
    relative_error,
    run_angle_sweep,
    run_nsr_sweep,
    run_q_sweep,
    run_rho_sweep,
)
from .phantom import make_rpp
from .solvers import ap_fixed_point_test, run

logger = logging.getLogger("codedptycho")

SUBCOMMANDS = {
    "simulate": "synthesize an RPP object and its modulus data",
    "reconstruct": "simulate (or load) data and run DR followed by AP",
    "gamma": "compute the spectral gap gamma at the true object",
    "bound-check": "certify the q-dependent lower bound on gamma",
    "twin-check": "verify the Fresnel twin image gives identical q=2 data",
    "rho-sweep": "final RE/RR over a grid of Fresnel parameters",
    "q-sweep": "RE traces over a list of q values",
    "noise-sweep": "final RE over a list of target NSR values",
    "angle-sweep": "RE traces over object angle ranges",
}


class ConfigError(ParameterError):
    pass


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def config_help():
    lines = ["config keys (JSON, defaults shown; noise and sweep may be null):"]
    for key, value in _flatten(ExperimentConfig.defaults()):
        lines.append(f"  {key} = {json.dumps(value)}")
    lines += ["  noise.nsr_target = 0.0", "  noise.seed = 0",
              "  sweep.parameter = \"rho\"", "  sweep.values = null", "  sweep.repeats = 1"]
    return "\n".join(dict.fromkeys(lines))


def apply_override(data, item):
    """Set ``a.b=value`` in a nested dict; value is parsed as JSON if possible."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value", item)
    path, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = path.split(".")
    node = data
    for k in keys[:-1]:
        if node.get(k) is None:
            node[k] = {}
        node = node[k]
        if not isinstance(node, dict):
            raise ConfigError(f"override path {path!r} crosses a non-object", path)
    node[keys[-1]] = value


def load_config(path, overrides=(), seed=None):
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found", "config") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}", "config") from None
    for item in overrides:
        apply_override(data, item)
    if seed is not None:
        data["seed"] = seed
    return ExperimentConfig.from_dict(data)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _true_object_and_operator(cfg):
    op = build_operator(cfg.n, cfg.scheme.q, cfg.scheme.overlap, cfg.mask)
    return make_rpp(cfg.object), op


def cmd_simulate(cfg, out, args):
    f, op = _true_object_and_operator(cfg)
    b = op.measure(f, cfg.noise)
    fileio.write_image(out / "f.cpty", f)
    fileio.write_image(out / "mask.cpty", op.mask)
    fileio.write_stack(out / "data.stk", b)
    if args.dump:
        fileio.write_stack(out / "field.stk", op.forward(f))


def cmd_reconstruct(cfg, out, args):
    if args.data:
        f, op = _true_object_and_operator(cfg)
        b = fileio.read_stack(args.data)
        if np.iscomplexobj(b) or b.shape != op.data_shape:
            raise DimensionError(f"data file must hold modulus blocks of shape {op.data_shape}")
        x_hat, trace = run(op, b, cfg.solver, f_true=f)
        res = {"x_hat": x_hat, "trace": trace, "f": f, "b": b, "op": op}
        res["re"] = relative_error(f, x_hat)
        res["rr"] = float(trace.rr[-1])
    else:
        res = reconstruct(cfg)
    fileio.atomic_write(out / "trace.csv", res["trace"].to_csv())
    summary = {
        "re": res["re"],
        "rr": res["rr"],
        "iterations": len(res["trace"]),
        "fixed_point": ap_fixed_point_test(res["op"], res["b"], res["x_hat"]),
    }
    fileio.write_json(out / "summary.json", summary)
    if args.dump:
        fileio.write_image(out / "f.cpty", res["f"])
        fileio.write_image(out / "f_hat.cpty", res["x_hat"])


def cmd_gamma(cfg, out, args):
    f, op = _true_object_and_operator(cfg)
    method = cfg.analysis.method
    if method == "auto":
        entries = int(np.prod(op.data_shape)) * 2 * cfg.n**2
        method = "dense" if entries <= analysis.MAX_DENSE_ENTRIES else "power"
    if method == "dense":
        report = analysis.compute_gamma_dense(op, f)
    else:
        report = analysis.compute_gamma_power(op, f, cfg.analysis.max_iters, cfg.analysis.tol)
    fileio.write_json(out / "spectral.json", report.to_dict())


def cmd_bound_check(cfg, out, args):
    f, op = _true_object_and_operator(cfg)
    cert = analysis.certify_rate_bound(op, f)
    fileio.write_json(out / "certificate.json", cert.to_dict())


def cmd_twin_check(cfg, out, args):
    if cfg.mask.kind != "fresnel":
        raise ParameterError("twin-check needs mask.kind = \"fresnel\"", "mask.kind")
    if not float(cfg.mask.rho).is_integer():
        raise ParameterError(
            f"twin-check needs an integer Fresnel parameter (mask.rho = {cfg.mask.rho}); "
            "the twin symmetry only holds for integer rho",
            "mask.rho",
        )
    if cfg.scheme.q != 2:
        raise ParameterError("twin-check needs scheme.q = 2", "scheme.q")
    f, op = _true_object_and_operator(cfg)
    sym = analysis.fresnel_h_symmetry(op.mask, cfg.mask.rho)
    twin = analysis.twin_image(f, op.mask, cfg.mask.rho)
    b, b_twin = op.measure(f), op.measure(twin)
    result = {
        "twin_sign": sym["twin_sign"],
        "symmetry_residual": sym["symmetry_residual"],
        "data_mismatch": float(np.linalg.norm(b_twin - b) / np.linalg.norm(b)),
        "re_twin": relative_error(f, twin),
    }
    fileio.write_json(out / "twin.json", result)
    if args.dump:
        fileio.write_image(out / "f.cpty", f)
        fileio.write_image(out / "twin.cpty", twin)


def _sweep_command(func, name):
    def command(cfg, out, args):
        header, rows, results = func(cfg, jobs=args.jobs)
        fileio.atomic_write(out / f"{name}.csv", _csv_text(header, rows))
        if args.dump:
            for i, r in enumerate(results):
                if "f" in r:
                    fileio.write_image(out / f"point{i:03d}_f.cpty", r["f"])
                    fileio.write_image(out / f"point{i:03d}_f_hat.cpty", r["x_hat"])
    return command


COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "gamma": cmd_gamma,
    "bound-check": cmd_bound_check,
    "twin-check": cmd_twin_check,
    "rho-sweep": _sweep_command(run_rho_sweep, "rho_sweep"),
    "q-sweep": _sweep_command(run_q_sweep, "q_sweep"),
    "noise-sweep": _sweep_command(run_nsr_sweep, "noise_sweep"),
    "angle-sweep": _sweep_command(run_angle_sweep, "angle_sweep"),
}


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="codedptycho", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)
    for name, summary in SUBCOMMANDS.items():
        sp = subs.add_parser(
            name,
            help=summary,
            description=summary,
            epilog=config_help(),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        sp.add_argument("--config", required=True, help="experiment config (JSON, version 1)")
        sp.add_argument("--out", help="output directory (default: config out_dir)")
        sp.add_argument("--jobs", type=_positive_int, default=None,
                        help="parallel workers (default: $PTYCHO_JOBS or 1)")
        sp.add_argument("--dump", action="store_true", help="also write CPTY0001 object dumps")
        sp.add_argument("--seed", type=int, default=None, help="master seed override")
        if name == "reconstruct":
            sp.add_argument("--data", help="CPTYSTK1 modulus data to reconstruct instead of simulating")
        sp.add_argument("overrides", nargs="*", metavar="KEY=VALUE",
                        help="dotted-path config overrides, e.g. scheme.q=4")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    if args.jobs is None:
        env = os.environ.get("PTYCHO_JOBS")
        try:
            args.jobs = max(1, int(env)) if env else 1
        except ValueError:
            print(f"error: PTYCHO_JOBS={env!r} is not an integer", file=sys.stderr)
            return 1
    try:
        cfg = load_config(args.config, args.overrides, args.seed)
        out = Path(args.out if args.out else cfg.out_dir)
        fileio.write_json(out / "config.json", cfg.to_dict())
        with scipy.fft.set_workers(args.jobs):
            COMMANDS[args.command](cfg, out, args)
    except (ParameterError, DimensionError, ValueError) as exc:
        field = getattr(exc, "field", None)
        prefix = f"invalid {field}: " if field else "error: "
        print(prefix + str(exc), file=sys.stderr)
        return 1
    except (ConvergenceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
