"""Command-line front end.

Every command writes one main file (CSV or JSON) and, for CSV output, a JSON
sidecar ``<out>.json`` with the summary and the full configuration. Output is
a pure function of the arguments, so reruns are byte-identical.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .specfun import DomainError

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2
COMMANDS = ("reach", "limits", "asymptotics", "kernel-check", "sup", "mc")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: int | None = None
    d: int = 2
    seed: int = 0
    trials: int = 1_000_000
    grid: float | None = None
    depth: int = 24
    x_max: float = 200.0
    levels: tuple[float, ...] = (0.9, 0.95, 0.99)
    n_list: tuple[int, ...] = tuple(2**k for k in range(5, 13))
    output_path: str | None = None
    format: str = "csv"
    extra: dict = field(default_factory=dict)

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("output_path")
        return out


def _g(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _header(config: RunConfig) -> list[str]:
    return [
        f"# sphreach {__version__}",
        f"# command: {config.command}",
        f"# seed: {config.seed}",
        "# config: " + json.dumps(_jsonable(config.echo()), sort_keys=True),
    ]


def _write_outputs(config: RunConfig, columns: list[str], rows, summary: dict):
    path = config.output_path or f"{config.command}.{config.format}"
    meta = {"version": __version__, "seed": config.seed, "config": config.echo()}
    if config.format == "json":
        doc = {"meta": meta, "summary": summary, "columns": columns, "rows": [list(r) for r in rows]}
        with open(path, "w") as fh:
            json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(_header(config)) + "\n")
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(v if isinstance(v, str) else _g(v) for v in r) + "\n")
    with open(path + ".json", "w") as fh:
        json.dump(_jsonable({"meta": meta, "summary": summary}), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- commands

def cmd_reach(config: RunConfig) -> int:
    from .reach import critical_radius

    if config.n is None or config.n < 1:
        raise UsageError("reach needs --n >= 1")
    lin = int(config.grid) if config.grid else 100_000
    prof = critical_radius(config.n, config.d, linear_points=lin)
    rows = zip(prof.theta_grid, prof.values)
    _write_outputs(config, ["theta", "r"], rows, prof.summary())
    return EXIT_OK


def cmd_limits(config: RunConfig) -> int:
    from .reach import (SQRT_HALF, _grid_inf, limit_function_f, limit_function_g,
                        limit_function_h)

    step = config.grid or 1e-3
    if config.x_max <= 0 or step <= 0:
        raise UsageError("--x-max and --grid must be positive")
    xs = np.arange(0.0, config.x_max + 0.5 * step, step)
    f, g, h = limit_function_f(xs, config.d), limit_function_g(xs), limit_function_h(xs)
    inf_f = _grid_inf(lambda t: limit_function_f(t, config.d), config.x_max, step)
    inf_g = _grid_inf(limit_function_g, config.x_max, step)
    inf_h = _grid_inf(limit_function_h, config.x_max, step)
    summary = {
        "f0": float(f[0]), "g0": float(g[0]), "h0": float(h[0]),
        "inf_f": inf_f[0], "argmin_f": inf_f[1],
        "inf_g": inf_g[0], "argmin_g": inf_g[1],
        "inf_h": inf_h[0], "argmin_h": inf_h[1],
        "bound_mixed": min(inf_f[0], SQRT_HALF),
        "bound_fixed": min(inf_g[0], inf_h[0], SQRT_HALF),
    }
    summary["mixed_ge_fixed"] = summary["bound_mixed"] >= summary["bound_fixed"]
    _write_outputs(config, ["x", "f", "g", "h"], zip(xs, f, g, h), summary)
    return EXIT_OK


def cmd_asymptotics(config: RunConfig) -> int:
    from .asymptotics import default_reports

    if not config.n_list:
        raise UsageError("asymptotics needs a non-empty --n-list")
    if any(b <= a for a, b in zip(config.n_list, config.n_list[1:])) or min(config.n_list) < 2:
        raise UsageError("--n-list must be strictly increasing integers >= 2")
    reports = default_reports(config.n_list)
    rows, summary = [], {}
    for rep in reports:
        for row in rep.rows():
            rows.append((row["regime"], str(row["n"]), rep.window[0], rep.window[1],
                         row["max_error"], row["fitted_rate"]))
        key = rep.regime.value if rep.d is None else f"{rep.regime.value}[d={rep.d}]"
        errs = rep.max_errors
        summary[key] = {"fitted_rate": rep.fitted_rate,
                        "strictly_decreasing": all(b < a for a, b in zip(errs, errs[1:]))}
    _write_outputs(config, ["regime", "n", "window_lo", "window_hi", "max_error", "fitted_rate"], rows, summary)
    return EXIT_OK


def cmd_kernel_check(config: RunConfig) -> int:
    from .embedding import tangent_frames
    from .kernel import kernel_by_basis_sum, kernel_closed_form, metric_scale
    from .randfield import _rng

    n_max = config.n if config.n is not None else 30
    if n_max < 1:
        raise UsageError("kernel-check needs --n >= 1")
    pairs = int(config.extra.get("pairs", 100))
    rng = _rng(config.seed, 0)
    pts = rng.standard_normal((2 * pairs, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    rows = []
    worst_kernel = worst_metric = 0.0
    for n in range(1, n_max + 1):
        err = max(abs(kernel_by_basis_sum(n, pts[2 * i], pts[2 * i + 1])
                      - kernel_closed_form(n, pts[2 * i], pts[2 * i + 1])) for i in range(pairs))
        t1, t2, _, _ = tangent_frames(n, pts[:pairs])
        sq = np.concatenate([np.sum(t1 * t1, axis=1), np.sum(t2 * t2, axis=1)])
        exact = metric_scale(n, 2)
        rel = float(np.max(np.abs(sq - exact)) / exact)
        worst_kernel, worst_metric = max(worst_kernel, err), max(worst_metric, rel)
        rows.append((str(n), err, float(sq.mean()), exact, rel))
    summary = {"max_kernel_error": worst_kernel, "max_metric_rel_error": worst_metric, "pairs": pairs}
    _write_outputs(config, ["n", "kernel_max_abs_error", "metric_numeric", "metric_exact", "metric_rel_error"],
                   rows, summary)
    return EXIT_OK


def _mc_rows(config: RunConfig, with_exact: bool):
    from .randfield import GridConfig, field_scale, mc_exceedence_levels
    from .tube import InvalidQueryError, exceedence_probability, field_bound, make_query

    if config.n is None or config.n < 0:
        raise UsageError(f"{config.command} needs --n >= 0")
    if not config.levels:
        raise UsageError("need at least one level")
    vs = np.asarray(config.levels, dtype=float)
    if with_exact and config.d != 2:
        us = vs * field_bound(config.n, config.d)
        mc = None
    else:
        if config.d != 2:
            raise UsageError("simulation is available for d = 2 only")
        grid = GridConfig(base_points=int(config.grid) if config.grid else 2000, depth=config.depth)
        us = vs * field_scale(config.n)
        mc = mc_exceedence_levels(config.n, us, config.trials, config.seed, grid)
    rows, summary_rows = [], []
    for k, (u, v) in enumerate(zip(us, vs)):
        row = [u, v]
        info = {"u": float(u), "v": float(v)}
        if mc is not None:
            est = mc[k]
            row += [est.lower, est.upper, est.std_error]
            info.update(mc_lower=est.lower, mc_upper=est.upper, std_error=est.std_error)
        else:
            row += [math.nan] * 3
        if with_exact:
            try:
                q = make_query(config.n, config.d, v=float(v))
            except DomainError:
                exact, valid = math.nan, False
            else:
                valid = q.valid
                try:
                    exact = exceedence_probability(q)
                except InvalidQueryError:
                    exact = math.nan
            row += [exact, "true" if valid else "false"]
            info.update(exact=exact, valid=valid)
            if mc is not None and valid:
                info["within_bracket_3se"] = mc[k].brackets(exact)
        rows.append(row)
        summary_rows.append(info)
    return rows, summary_rows


def cmd_sup(config: RunConfig) -> int:
    rows, summary = _mc_rows(config, with_exact=True)
    _write_outputs(config, ["u", "v", "mc_lower", "mc_upper", "std_error", "exact", "valid"], rows,
                   {"levels": summary, "grid_base_points": int(config.grid or 2000), "depth": config.depth})
    return EXIT_OK


def cmd_mc(config: RunConfig) -> int:
    rows, summary = _mc_rows(config, with_exact=False)
    _write_outputs(config, ["u", "v", "mc_lower", "mc_upper", "std_error"], rows,
                   {"levels": summary, "grid_base_points": int(config.grid or 2000), "depth": config.depth})
    return EXIT_OK


HANDLERS = {
    "reach": cmd_reach,
    "limits": cmd_limits,
    "asymptotics": cmd_asymptotics,
    "kernel-check": cmd_kernel_check,
    "sup": cmd_sup,
    "mc": cmd_mc,
}


# ---------------------------------------------------------------- parsing

def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphreach", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sphreach {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_n=False):
        sp.add_argument("--n", type=int, required=need_n, help="degree cutoff")
        sp.add_argument("--d", type=int, default=2, help="sphere dimension (default 2)")
        sp.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")
        sp.add_argument("--out", dest="output_path", default=None, help="output path (default <command>.<format>)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("reach", help="critical-radius profile and partial infima")
    common(sp, need_n=True)
    sp.add_argument("--grid", type=float, default=None, help="linear grid points (default 100000)")

    sp = sub.add_parser("limits", help="rescaled limit curves f, g, h on [0, x_max]")
    common(sp)
    sp.add_argument("--x-max", type=float, default=200.0)
    sp.add_argument("--grid", type=float, default=None, help="x step (default 1e-3)")

    sp = sub.add_parser("asymptotics", help="Hilb, Darboux, Mehler-Heine and derivative error tables")
    common(sp)
    sp.add_argument("--n-list", type=_int_list, default=tuple(2**k for k in range(5, 13)),
                    help="comma-separated degrees (default 32,...,4096)")

    sp = sub.add_parser("kernel-check", help="basis-sum kernel and pull-back metric checks on S^2")
    common(sp)
    sp.add_argument("--trials", type=int, default=100, help="random pairs per degree (default 100)")

    for name, text in (("sup", "tube-formula probability next to the Monte Carlo bracket"),
                       ("mc", "Monte Carlo exceedence bracket only")):
        sp = sub.add_parser(name, help=text)
        common(sp, need_n=True)
        sp.add_argument("--trials", type=int, default=1_000_000)
        sp.add_argument("--grid", type=float, default=None, help="Fibonacci base grid size (default 2000)")
        sp.add_argument("--depth", type=int, default=24, help="refinement rounds (default 24)")
        sp.add_argument("--v", dest="levels", type=_float_list, default=(0.9, 0.95, 0.99),
                        help="comma-separated normalised levels v = u sqrt(s_d/pi_n^d)")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    kw = {k: v for k, v in vars(ns).items() if v is not None}
    extra = {}
    if ns.command == "kernel-check":
        extra["pairs"] = kw.pop("trials")
    return RunConfig(extra=extra, **kw)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    config = config_from_args(ns)
    from .reach import NumericalInstabilityError

    try:
        return HANDLERS[config.command](config)
    except (UsageError, DomainError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalInstabilityError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
