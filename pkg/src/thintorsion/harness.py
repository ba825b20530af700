"""Experiment driver and command-line front end.

``sweep`` runs the series against the finite-difference reference over a
range of ``eps`` and produces plot-ready CSV rows.  ``cli_main`` wires the
library up as the ``thintorsion`` command.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import fields as F
from .expansion import DomainError, build_expansion, eval_u
from .extrema import max_series, numeric_max
from .geometry import BUILTINS, ProfileError, builtin, load_profile
from .rigidity import QuadratureError, torsion_series, torsion_series_direct
from .solvers import (SolverError, l2_relative_error, solve_fd, torsion_from_grid,
                      wos_exit_time)

__all__ = ["SweepRow", "sweep", "rows_to_csv", "rows_from_csv", "parse_epsilons",
           "resolve_profile", "cli_main"]


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    order_N: int
    l2_rel_err: float
    torsion_rel_err: float
    max_rel_err: float
    fd_resolution: int
    runtime_ms: int


SWEEP_HEADER = tuple(f.name for f in fields(SweepRow))


def resolve_profile(name):
    """A builtin profile by name, or a profile config file."""
    if name in BUILTINS or name == "disc":
        return builtin(name)
    path = Path(name)
    if path.is_file():
        return load_profile(path)
    raise ProfileError(f"{name!r} is neither a builtin profile "
                       f"({', '.join(sorted(BUILTINS) + ['disc'])}) nor a readable file")


def parse_epsilons(text):
    """``a:b:step`` (inclusive), a comma list, or a single value."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"epsilon range must be a:b:step, got {text!r}")
        a, b, step = (float(v) for v in parts)
        if not step > 0 or b < a:
            raise ValueError(f"bad epsilon range {text!r}")
        count = int(math.floor((b - a) / step + 1e-9))
        return [round(a + k * step, 12) for k in range(count + 1)]
    return [float(v) for v in text.split(",")]


def _check_epsilons(epsilons):
    eps = [float(e) for e in epsilons]
    if any(not 0 < e <= 1 for e in eps):
        raise ValueError("sweep epsilons must lie in (0, 1]")
    if any(b <= a for a, b in zip(eps, eps[1:])):
        raise ValueError("sweep epsilons must be strictly increasing")
    return eps


def _sweep_row(profile, series, torsion, eps, order, resolution, timing):
    start = time.perf_counter()
    grid = solve_fd(profile, eps, resolution)
    l2 = l2_relative_error(series, grid)
    t_fd = torsion_from_grid(grid)
    t_err = abs(torsion(eps) - t_fd) / t_fd
    try:
        _, _, peak = numeric_max(series, eps)
        grid_max = float(grid.values.max())
        m_err = abs(peak - grid_max) / grid_max
    except ArithmeticError as exc:
        warnings.warn(f"eps={eps}: no numeric maximum ({exc})", RuntimeWarning, stacklevel=3)
        m_err = float("nan")
    ms = int(round(1000 * (time.perf_counter() - start))) if timing else 0
    return SweepRow(eps, order, l2, t_err, m_err, resolution, ms)


def sweep(profile, epsilons, order=3, resolution=512, timing=False):
    """Relative errors of the ``order``-term series against FD, per ``eps``.

    The torsion error uses the rigidity series truncated to ``order``
    terms.  A failing row is kept with NaN errors and a warning.
    ``runtime_ms`` is only measured when ``timing`` is set, so that the
    output is reproducible by default.
    """
    eps_list = _check_epsilons(epsilons)
    rows = []
    if not eps_list:
        return rows
    series = build_expansion(profile, order)
    coeffs = torsion_series(profile)
    torsion = lambda e: coeffs(e, terms=min(order, 3))  # noqa: E731
    for eps in eps_list:
        try:
            rows.append(_sweep_row(profile, series, torsion, eps, order, resolution, timing))
        except (ArithmeticError, SolverError, ValueError, QuadratureError) as exc:
            warnings.warn(f"eps={eps}: row failed ({exc})", RuntimeWarning, stacklevel=2)
            nan = float("nan")
            rows.append(SweepRow(eps, order, nan, nan, nan, resolution, 0))
    return rows


def rows_to_csv(rows):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in asdict(r).values()])
    return out.getvalue()


def rows_from_csv(text):
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SWEEP_HEADER:
        raise ValueError("not a sweep file: unexpected header")
    cast = {f.name: int if f.type == "int" else float for f in fields(SweepRow)}
    return [SweepRow(**{k: cast[k](row[k]) for k in SWEEP_HEADER}) for row in reader]


# command line ----------------------------------------------------------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _common(p, eps_default="0.5"):
    p.add_argument("--profile", default="folium", help="builtin name or config file")
    p.add_argument("--order", type=int, default=3, help="number of series terms N")
    p.add_argument("--epsilon", default=eps_default, help="value, list, or a:b:step")
    p.add_argument("--grid", type=int, default=512, help="FD resolution")
    p.add_argument("--samples", type=int, default=100_000, help="walk-on-spheres samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write here instead of standard output")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _build_parser():
    parser = _Parser(prog="thintorsion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("expand", help="coefficient table, or u at given points")
    _common(p)
    p.add_argument("--at", action="append", default=[], metavar="X,XI",
                   help="evaluate u at (x', xi); repeatable")
    p = sub.add_parser("max", help="expansion of the maximum and maximizer")
    _common(p)
    p = sub.add_parser("torsion", help="rigidity coefficients by both routes")
    _common(p)
    p = sub.add_parser("solve-fd", help="finite-difference reference solution")
    _common(p)
    p = sub.add_parser("solve-wos", help="walk-on-spheres estimate at a point")
    _common(p)
    p.add_argument("--start", default=None, help="comma-separated physical point")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--shell", type=float, default=None)
    p = sub.add_parser("sweep", help="series errors against FD over eps")
    _common(p, eps_default="0.1:1.0:0.1")
    p.add_argument("--timing", action="store_true", help="record wall-clock runtime_ms")
    return parser


def _single_eps(args):
    eps = parse_epsilons(args.epsilon)
    if len(eps) != 1:
        raise _UsageError(f"{args.command} needs a single --epsilon value")
    return eps[0]


def _record_text(record, fmt):
    if fmt == "json":
        return json.dumps(record, indent=2) + "\n"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    flat = {k: ";".join(repr(x) for x in v) if isinstance(v, list) else v
            for k, v in record.items()}
    writer.writerow(flat.keys())
    writer.writerow([repr(v) if isinstance(v, float) else v for v in flat.values()])
    return out.getvalue()


def _table_text(header, rows, fmt):
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([repr(v) if isinstance(v, float) else v for v in r] for r in rows)
    return out.getvalue()


def _cmd_expand(args, profile):
    series = build_expansion(profile, args.order)
    if args.at:
        eps = _single_eps(args)
        pts = []
        for item in args.at:
            try:
                vals = [float(v) for v in item.split(",")]
            except ValueError:
                raise _UsageError(f"--at expects numbers, got {item!r}") from None
            if len(vals) != profile.dim + 1:
                raise _UsageError(f"--at needs {profile.dim + 1} numbers (x', xi)")
            pts.append(vals)
        pts = np.array(pts)
        u = eval_u(series, pts[:, :-1], pts[:, -1], eps)
        rows = [[*p.tolist(), eps, float(v)] for p, v in zip(pts, np.atleast_1d(u))]
        header = [f"x{k + 1}" for k in range(profile.dim)] + ["xi", "epsilon", "u"]
        return _table_text(header, rows, args.format)
    if profile.dim != 1:
        raise _UsageError("the coefficient table is printed for 1D cross-sections; use --at")
    lo, hi = profile.omega.lower[0], profile.omega.upper[0]
    xs = lo + (hi - lo) * np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    rows = []
    for j in range(1, series.order + 1):
        for i, a in enumerate(series.coefficients[j - 1]):
            vals = np.atleast_1d(a(xs.reshape(-1, 1)))
            rows.extend([2 * j, i, float(x), float(v)] for x, v in zip(xs, vals))
    return _table_text(["term", "i", "x", "alpha"], rows, args.format)


def _cmd_max(args, profile):
    ms = max_series(profile)
    return _record_text({"profile": profile.name, "x_bar": ms.jet.x_bar.tolist(),
                         "H0": float(ms.jet.H0), "c2": ms.c2, "c4": ms.c4,
                         "xm2": ms.xm2.tolist(), "xi_n2": ms.xi_n2}, args.format)


def _cmd_torsion(args, profile):
    a = torsion_series(profile)
    b = torsion_series_direct(profile)
    delta = max(abs(x - y) for x, y in zip(a.as_tuple(), b.as_tuple()))
    return _record_text({"profile": profile.name, "c3": a.c3, "c5": a.c5, "c7": a.c7,
                         "dual_path_delta": delta,
                         "quadrature_error_estimate": a.quadrature_error_estimate}, args.format)


def _cmd_solve_fd(args, profile):
    eps = _single_eps(args)
    grid = solve_fd(profile, eps, args.grid)
    if args.format == "csv":
        return grid.to_csv()
    return _record_text({"profile": profile.name, "epsilon": eps, "resolution": grid.resolution,
                         "max_value": float(grid.values.max()),
                         "torsion": torsion_from_grid(grid), "residual": grid.residual},
                        "json")


def _cmd_solve_wos(args, profile):
    eps = _single_eps(args)
    if args.start is None:
        from .extrema import find_peak

        x_bar = find_peak(profile)
        start = np.append(x_bar, 0.5 * eps * float(profile.d(x_bar)))
    else:
        try:
            start = np.array([float(v) for v in args.start.split(",")])
        except ValueError:
            raise _UsageError(f"--start expects numbers, got {args.start!r}") from None
    est = wos_exit_time(profile, eps, start, samples=args.samples, seed=args.seed,
                        shell=args.shell, workers=args.workers)
    record = {"profile": profile.name, "epsilon": eps, "start": start.tolist()}
    record.update(asdict(est))
    return _record_text(record, args.format)


def _cmd_sweep(args, profile):
    try:
        eps = parse_epsilons(args.epsilon)
        _check_epsilons(eps)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    rows = sweep(profile, eps, order=args.order, resolution=args.grid, timing=args.timing)
    if args.format == "json":
        return json.dumps([asdict(r) for r in rows], indent=2) + "\n"
    return rows_to_csv(rows)


_COMMANDS = {"expand": _cmd_expand, "max": _cmd_max, "torsion": _cmd_torsion,
             "solve-fd": _cmd_solve_fd, "solve-wos": _cmd_solve_wos, "sweep": _cmd_sweep}


def cli_main(argv=None):
    """Run the command line; returns 0 (ok), 1 (usage error) or 2 (numeric failure)."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.order < 1:
            raise _UsageError("--order must be at least 1")
        profile = resolve_profile(args.profile)
        text = _COMMANDS[args.command](args, profile)
    except SystemExit as exc:  # --help
        return 0 if not exc.code else 1
    except (_UsageError, ProfileError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, SolverError, QuadratureError, F.StencilError,
            np.linalg.LinAlgError, ValueError, NotImplementedError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main():  # console-script entry point
    sys.exit(cli_main())
