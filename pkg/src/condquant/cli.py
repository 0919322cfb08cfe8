"""``condquant`` command line: train, quantize, eval-oracle, surface.

Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

import condquant
from condquant.experiment import ExperimentSpec, SpecError
from condquant.net import FORMAT_VERSION, CheckpointError, format_float
from condquant.oracle import QuantileFunction, quantile_quantizer
from condquant.trainer import NonFiniteLossError, load_checkpoint, train

logger = logging.getLogger("condquant")

MANIFEST_VERSION = 1
EXIT_IO, EXIT_INVALID, EXIT_NUMERIC = 1, 2, 3


class UsageError(ValueError):
    pass


def _fail(code: int, message: str) -> int:
    print(f"condquant: error: {message}", file=sys.stderr)
    return code


def _csv(rows) -> str:
    return "".join(",".join(str(v) if isinstance(v, (int, str)) else format_float(v) for v in row) + "\n"
                   for row in rows)


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _resolve_seed(cli_seed, spec: ExperimentSpec) -> int:
    if cli_seed is not None:
        return cli_seed
    if "seed" in spec.train:
        return spec.train["seed"]
    env = os.environ.get("CONDQUANT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SpecError(f"CONDQUANT_SEED must be an integer, got {env!r}") from None
    return 0


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=np.float64)
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}") from None


def _parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise UsageError(f"grid must look like min:max:count, got {text!r}") from None
    if len(parts) != 3 or count < 1 or (count > 1 and not hi > lo):
        raise UsageError(f"invalid grid {text!r}")
    return np.array([lo]) if count == 1 else np.linspace(lo, hi, count)


def _load_net(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read checkpoint '{path}': {exc.strerror or exc}") from exc
    try:
        net, _ = load_checkpoint(text)
    except (CheckpointError, ValueError, KeyError, TypeError) as exc:
        raise OSError(f"unreadable checkpoint '{path}': {exc}") from exc
    return net


def cmd_train(args) -> int:
    try:
        spec = ExperimentSpec.load(args.spec)
        seed = _resolve_seed(args.seed, spec)
        config, arch, sampler = spec.resolve(seed)
    except SpecError as exc:
        return _fail(EXIT_INVALID, f"invalid spec: {exc}")
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read spec: {exc}")
    out = Path(args.out or spec.output_dir or Path("runs") / spec.name)
    logger.info("training %s for %d iterations (seed %d) into %s", spec.name, config.max_iterations, seed, out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        net, report = train(config, arch, sampler, out_dir=out, write_timing=args.timing)
        manifest = {
            "manifest_version": MANIFEST_VERSION,
            "checkpoint_format_version": FORMAT_VERSION,
            "code_version": condquant.__version__,
            "seed": seed,
            "spec": spec.to_dict(),
            "train_config": config.to_dict(),
            "n_params": arch.n_params,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except NonFiniteLossError as exc:
        return _fail(EXIT_NUMERIC, f"{exc} (iteration {exc.iteration})")
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    logger.info("final logged loss %.6g", report.losses[-1][1])
    return 0


def cmd_quantize(args) -> int:
    try:
        net = _load_net(args.checkpoint)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    n_x, n_y = net.arch.input_dim, net.arch.n_y
    try:
        xs = [_parse_vector(v) for v in args.x]
    except UsageError as exc:
        return _fail(EXIT_INVALID, str(exc))
    for x in xs:
        if x.shape != (n_x,):
            return _fail(EXIT_INVALID, f"--x has {x.size} values but the model expects n_x={n_x}")
    header = [f"x_{i + 1}" for i in range(n_x)] + ["q_index"] + [f"y_{i + 1}" for i in range(n_y)]
    rows = [header]
    for x in xs:
        for q, point in enumerate(net.forward(x)):
            rows.append([*x, q, *point])
    try:
        _emit(_csv(rows), args.out)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    return 0


def _oracle_law(name: str, params_text: str | None):
    defaults = {"normal": "0,1", "uniform": "-0.5,0.5"}
    values = _parse_vector(params_text or defaults[name])
    if values.size != 2:
        raise UsageError(f"--law-params for {name} takes two values")
    if name == "normal":
        shift, std = values
        if not std > 0:
            raise UsageError("normal law needs a positive scale")
        return lambda x, Q: quantile_quantizer(QuantileFunction.normal(x + shift, std), Q)
    low, high = values
    if not high > low:
        raise UsageError("uniform law needs low < high")
    return lambda x, Q: quantile_quantizer(QuantileFunction.uniform(x + low, x + high), Q)


def cmd_eval_oracle(args) -> int:
    try:
        net = _load_net(args.checkpoint)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    if (net.arch.input_dim, net.arch.n_y) != (1, 1):
        return _fail(EXIT_INVALID, f"eval-oracle needs a 1D model, got n_x={net.arch.input_dim}, n_y={net.arch.n_y}")
    try:
        grid = _parse_range(args.grid)
        oracle = _oracle_law(args.law, args.law_params)
    except UsageError as exc:
        return _fail(EXIT_INVALID, str(exc))
    Q = net.arch.Q
    rows, errors = [["x", "q_index", "y_net", "y_oracle", "abs_err"]], []
    for x in grid:
        y_net = np.sort(net.forward([x])[:, 0])
        y_ref = oracle(x, Q)
        for q in range(Q):
            err = abs(y_net[q] - y_ref[q])
            errors.append(err)
            rows.append([x, q, y_net[q], y_ref[q], err])
    try:
        _emit(_csv(rows), args.out)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    print(f"max_abs_err={format_float(max(errors))} mean_abs_err={format_float(float(np.mean(errors)))}")
    return 0


def cmd_surface(args) -> int:
    try:
        net = _load_net(args.checkpoint)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    if net.arch.input_dim != 2:
        return _fail(EXIT_INVALID, f"surface needs n_x=2, got n_x={net.arch.input_dim}")
    try:
        ranges = args.grid.split(",")
        if len(ranges) != 2:
            raise UsageError(f"--grid needs two ranges, got {args.grid!r}")
        g1, g2 = (_parse_range(r) for r in ranges)
    except UsageError as exc:
        return _fail(EXIT_INVALID, str(exc))
    xs = np.array([(a, b) for a in g1 for b in g2])
    points = net.forward_batch(xs)
    rows = [["x_1", "x_2", "q_index", "dim_index", "value"]]
    for x, pts in zip(xs, points):
        for q, point in enumerate(pts):
            for d, value in enumerate(point):
                rows.append([x[0], x[1], q, d, value])
    try:
        _emit(_csv(rows), args.out)
    except OSError as exc:
        return _fail(EXIT_IO, str(exc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="condquant", description="Conditional measure quantization")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a quantizer network from an experiment spec")
    p.add_argument("spec", help="YAML experiment spec")
    p.add_argument("--seed", type=int, default=None, help="overrides train.seed and CONDQUANT_SEED")
    p.add_argument("--out", default=None, help="output directory (default: spec output_dir or runs/<name>)")
    p.add_argument("--timing", action="store_true", help="also write per-iteration wall times to timing.csv")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("quantize", help="quantizer points for given conditions")
    p.add_argument("checkpoint")
    p.add_argument("--x", action="append", required=True, help="condition 'v1,v2,...'; repeatable")
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("eval-oracle", help="compare a 1D model with the quantile quantizer")
    p.add_argument("checkpoint")
    p.add_argument("--law", choices=["normal", "uniform"], default="normal",
                   help="conditional law family located at x")
    p.add_argument("--law-params", default=None,
                   help="normal: 'shift,scale' for N(x+shift, scale^2) (default 0,1); "
                        "uniform: 'low,high' for U(x+low, x+high) (default -0.5,0.5)")
    p.add_argument("--grid", required=True, help="x_min:x_max:count")
    p.add_argument("--out", default="eval_oracle.csv", help="CSV path")
    p.set_defaults(func=cmd_eval_oracle)

    p = sub.add_parser("surface", help="sample the quantizer map on a 2D grid of conditions")
    p.add_argument("checkpoint")
    p.add_argument("--grid", required=True, help="'x1_min:x1_max:n1,x2_min:x2_max:n2'")
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=cmd_surface)
    return parser


VALUE_FLAGS = ("--x", "--grid", "--law-params")


def _join_values(argv: list[str]) -> list[str]:
    # lets "--grid -1:1:21" through; argparse would read "-1:1:21" as a flag
    out, i = [], 0
    while i < len(argv):
        if argv[i] in VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
