"""Command-line front end.

Subcommands dispatch to the library; reports are JSON or CSV and carry
the resolved scientific configuration plus the package version, so a
report file documents its own experiment. Execution knobs (threads,
output path, checkpoint path) are omitted from the echo: reruns of the
same experiment produce byte-identical reports regardless of worker
count or resume state.

Configuration may also come from a plain `key=value` file via
--config; explicit flags win over the file. Thread count resolution:
--threads flag, then the ECINV_THREADS environment variable, then the
machine's CPU count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Any, Callable

from . import __version__, constants, ec, family
from .arithfn import builtin
from .numtheory import log_integral, mult_fn

EXECUTION_KNOBS = {"threads", "out", "checkpoint", "config", "format"}


@dataclass
class Report:
    config: dict[str, Any]
    header: list[str]
    rows: list[list[Any]]


def _num(x: float) -> str:
    return repr(float(x))


def _grid(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s]
    except ValueError:
        raise ValueError(f"bad grid {text!r}; expected comma-separated numbers") from None


def _threads(cfg: dict[str, Any]) -> int:
    if cfg.get("threads") is not None:
        return int(cfg["threads"])
    env = os.environ.get("ECINV_THREADS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def _emit(report: Report, fmt: str, out: str | None) -> None:
    if fmt == "csv":
        lines = [f"# version={__version__}"]
        for key in sorted(report.config):
            lines.append(f"# {key}={report.config[key]}")
        lines.append(",".join(report.header))
        for row in report.rows:
            lines.append(",".join(_num(v) if isinstance(v, float) else str(v) for v in row))
        text = "\n".join(lines) + "\n"
    else:
        results = [dict(zip(report.header, row)) for row in report.rows]
        text = (
            json.dumps(
                {"version": __version__, "config": report.config, "results": results},
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _public_config(cfg: dict[str, Any]) -> dict[str, Any]:
    return {
        k: v for k, v in cfg.items() if k not in EXECUTION_KNOBS and v is not None and k != "cmd"
    }


def _cmd_constants(cfg: dict[str, Any]) -> Report:
    spec = cfg["function"]
    trunc_d = int(cfg.get("trunc_d") or constants.DEFAULT_P)
    trunc_p = int(cfg.get("trunc_p") or constants.DEFAULT_P)
    method = cfg.get("method") or "auto"
    if spec == "koblitz":
        cv = constants.koblitz_constant(trunc_p)
        name = "koblitz"
    elif spec.startswith("moment:"):
        k = int(spec.split(":", 1)[1])
        cv = constants.moment_constant(k, trunc_d)
        name = spec
    else:
        af = builtin(spec)
        if method == "euler":
            cv = constants.c0_euler(af, trunc_p)
        elif method in ("series", "auto"):
            cv = constants.c0_series(af, trunc_d)
        else:
            raise ValueError(f"unknown method {method!r}")
        name = f"c0({spec})"
    return Report(
        _public_config(cfg),
        ["name", "value", "tail_bound", "truncation", "method"],
        [[name, cv.value, cv.tail_bound, cv.truncation, cv.method]],
    )


def _cmd_structure(cfg: dict[str, Any]) -> Report:
    p, a, b = int(cfg["p"]), int(cfg["a"]), int(cfg["b"])
    curve = ec.make_curve(ec.PrimeField(p), a, b)
    gs = ec.group_structure(curve, seed=int(cfg.get("seed") or 0))
    return Report(
        _public_config(cfg),
        ["p", "a", "b", "N", "i", "e", "trace"],
        [[p, a, b, gs.N, gs.i, gs.e, gs.trace]],
    )


def _cmd_howe(cfg: dict[str, Any]) -> Report:
    p, d = int(cfg["p"]), int(cfg["d"])
    variant = cfg.get("variant") or "all"
    count = family.howe_count(p, d, variant)
    if (p - 1) % d == 0:
        main = p * (p - 1) / (d * mult_fn("psi", d) * mult_fn("phi", d))
    else:
        main = 0.0
    deviation = abs(count - main) / p**1.5
    return Report(
        _public_config(cfg),
        ["p", "d", "variant", "count", "main_term", "deviation"],
        [[p, d, variant, count, main, deviation]],
    )


def _cmd_main_term(cfg: dict[str, Any]) -> Report:
    grid = _grid(cfg["x_grid"]) if cfg.get("x_grid") else [float(cfg["x"])]
    rows = family.compare_main_term(
        grid,
        cfg["function"],
        threads=_threads(cfg),
        checkpoint=cfg.get("checkpoint"),
        trunc_d=int(cfg["trunc_d"]) if cfg.get("trunc_d") else None,
    )
    return Report(
        _public_config(cfg),
        ["x", "main_term", "c0_li", "rel_err"],
        [list(r) for r in rows],
    )


def _cmd_moments(cfg: dict[str, Any]) -> Report:
    x = float(cfg["x"])
    k = int(cfg["k"])
    value = family.moment_sum(x, k, threads=_threads(cfg), checkpoint=cfg.get("checkpoint"))
    ck = constants.moment_constant(k) if k >= 1 else None
    comparator = ck.value * log_integral(x ** (k + 1)) if ck else float("nan")
    rel = abs(value - comparator) / comparator if ck else float("nan")
    return Report(
        _public_config(cfg),
        ["x", "k", "moment_sum", "comparator", "rel_err"],
        [[x, k, value, comparator, rel]],
    )


def _cmd_sample_box(cfg: dict[str, Any]) -> Report:
    box = family.BoxSpec(int(cfg["A"]), int(cfg["B"]))
    rep = family.sample_box_average(
        box,
        float(cfg["x"]),
        int(cfg["n"]),
        int(cfg.get("seed") or 0),
        cfg["function"],
        threads=_threads(cfg),
    )
    return Report(
        _public_config(cfg),
        ["estimate", "std_error", "n_samples", "seed"],
        [[rep.estimate, rep.std_error, rep.n_samples, rep.seed]],
    )


def _cmd_variance(cfg: dict[str, Any]) -> Report:
    box = family.BoxSpec(int(cfg["A"]), int(cfg["B"]))
    grid = _grid(cfg["x_grid"]) if cfg.get("x_grid") else [float(cfg["x"])]
    rows = []
    for x in grid:
        var, ratio = family.variance_experiment(
            box,
            x,
            int(cfg["m"]),
            cfg["function"],
            int(cfg.get("seed") or 0),
            threads=_threads(cfg),
        )
        rows.append([x, var, ratio])
    return Report(
        _public_config(cfg), ["x", "sample_variance", "normalized_ratio"], rows
    )


def _cmd_koblitz_census(cfg: dict[str, Any]) -> Report:
    x = float(cfg["x"])
    value = family.prime_order_census(x, threads=_threads(cfg), checkpoint=cfg.get("checkpoint"))
    kb = constants.koblitz_constant(int(cfg.get("trunc_p") or constants.DEFAULT_P))
    comparator = kb.value * x / math.log(x) ** 2
    return Report(
        _public_config(cfg),
        ["x", "census", "comparator", "ratio"],
        [[x, value, comparator, value / comparator]],
    )


_HANDLERS: dict[str, Callable[[dict[str, Any]], Report]] = {
    "constants": _cmd_constants,
    "structure": _cmd_structure,
    "howe": _cmd_howe,
    "main-term": _cmd_main_term,
    "moments": _cmd_moments,
    "sample-box": _cmd_sample_box,
    "variance": _cmd_variance,
    "koblitz-census": _cmd_koblitz_census,
}

# flag name -> (required subcommands, help)
_FLAGS: dict[str, tuple[set[str], str]] = {
    "function": (
        {"constants", "main-term", "sample-box", "variance"},
        "builtin spec, e.g. cyclicity, tau, power_neg:2 (constants also: koblitz, moment:k)",
    ),
    "p": ({"structure", "howe"}, "prime modulus"),
    "a": ({"structure"}, "curve coefficient a"),
    "b": ({"structure"}, "curve coefficient b"),
    "d": ({"howe"}, "torsion level"),
    "variant": (set(), "howe census domain: all | units"),
    "x": ({"moments", "sample-box", "koblitz-census"}, "prime range bound"),
    "x_grid": (set(), "comma-separated ascending x values"),
    "k": ({"moments"}, "moment exponent (0..4)"),
    "A": ({"sample-box", "variance"}, "box half-width for a"),
    "B": ({"sample-box", "variance"}, "box half-width for b"),
    "n": ({"sample-box"}, "Monte-Carlo sample count"),
    "m": ({"variance"}, "number of sampled curves (>= 2)"),
    "seed": (set(), "64-bit RNG seed (default 0)"),
    "trunc_d": (set(), "series truncation D"),
    "trunc_p": (set(), "Euler-product prime cutoff P"),
    "method": (set(), "constants method: series | euler"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecinv",
        description="Elliptic-curve group-structure invariants averaged over families",
    )
    parser.add_argument("--version", action="version", version=f"ecinv {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)
    per_cmd_flags = {
        "constants": ["function", "trunc_d", "trunc_p", "method"],
        "structure": ["p", "a", "b", "seed"],
        "howe": ["p", "d", "variant"],
        "main-term": ["function", "x", "x_grid", "trunc_d"],
        "moments": ["x", "k"],
        "sample-box": ["function", "A", "B", "x", "n", "seed"],
        "variance": ["function", "A", "B", "x", "x_grid", "m", "seed"],
        "koblitz-census": ["x", "trunc_p"],
    }
    for cmd, flags in per_cmd_flags.items():
        sp = sub.add_parser(cmd, help=_HANDLERS[cmd].__doc__)
        for name in flags:
            _, help_text = _FLAGS[name]
            sp.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, help=help_text)
        sp.add_argument("--config", default=None, help="key=value configuration file")
        sp.add_argument("--format", default=None, choices=["json", "csv"], help="report format")
        sp.add_argument("--out", default=None, help="write the report to a file")
        sp.add_argument("--threads", default=None, help="worker processes")
        if cmd in ("main-term", "moments", "koblitz-census"):
            sp.add_argument("--checkpoint", default=None, help="per-prime resume file (CSV)")
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict[str, Any]:
    cfg = dict(vars(args))
    if cfg.get("config"):
        from_file = _read_config_file(cfg["config"])
        for key, value in from_file.items():
            if cfg.get(key) is None:
                cfg[key] = value
    missing = [
        name
        for name, (required_by, _) in _FLAGS.items()
        if args.cmd in required_by and cfg.get(name) is None
    ]
    if args.cmd in ("main-term", "variance") and cfg.get("x") is None and cfg.get("x_grid") is None:
        missing.append("x (or --x-grid)")
    if missing:
        parser.error(f"{args.cmd}: missing required value(s): {', '.join('--' + m for m in missing)}")
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _resolve(args, parser)
    try:
        report = _HANDLERS[args.cmd](cfg)
        _emit(report, cfg.get("format") or "json", cfg.get("out"))
        return 0
    except (ValueError, ArithmeticError, ec.Uncertified, OSError) as exc:
        print(f"ecinv {args.cmd}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
