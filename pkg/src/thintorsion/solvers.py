"""Reference solvers for the torsion problem on the physical thin domain.

:func:`solve_fd` is a finite-difference solver for planar domains with a
Shortley-Weller treatment of the curved boundary.  :func:`wos_exit_time`
estimates the expected exit time of Brownian motion (which equals the
torsion function) by walk-on-spheres, in any dimension for which a
boundary distance is available.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.spatial import cKDTree

from .expansion import eval_u
from .geometry import peak_height

__all__ = [
    "SolverError",
    "GridSolution",
    "solve_fd",
    "torsion_from_grid",
    "l2_relative_error",
    "WosEstimate",
    "wos_exit_time",
    "boundary_distance",
]

_BISECTION_STEPS = 48  # hx * 2**-48 is well below 1e-12


class SolverError(RuntimeError):
    """The reference solver could not produce a trustworthy answer."""


@dataclass(frozen=True)
class GridSolution:
    """Nodal FD solution; ``values[k, i]`` sits at ``(x[i], y[k])``.

    ``lower``/``upper`` hold the boundary heights ``-eps h_minus`` and
    ``eps h_plus`` at every grid column; nodes outside the domain carry 0.
    """

    profile: object = field(repr=False)
    epsilon: float
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    residual: float = 0.0
    boundary_treatment: str = "shortley-weller"

    @property
    def spacing(self):
        return float(self.x[1] - self.x[0]), float(self.y[1] - self.y[0])

    @property
    def resolution(self):
        return self.x.size - 1

    def node_value(self, x, y):
        """Value at the grid node nearest to ``(x, y)``; the point must be a node."""
        hx, hy = self.spacing
        i = int(round((x - self.x[0]) / hx))
        k = int(round((y - self.y[0]) / hy))
        if not (0 <= i < self.x.size and 0 <= k < self.y.size) or \
                abs(self.x[i] - x) > 1e-9 * hx or abs(self.y[k] - y) > 1e-9 * hy:
            raise ValueError(f"({x}, {y}) is not a grid node")
        return float(self.values[k, i])

    def to_csv(self, path=None):
        """Interior nodes as ``x,y,value`` rows; returns the text when no path is given."""
        kk, ii = np.nonzero(self.mask)
        rows = np.column_stack([self.x[ii], self.y[kk], self.values[kk, ii]])
        lines = ["x,y,value"] + [f"{a!r},{b!r},{c!r}" for a, b, c in rows.tolist()]
        text = "\n".join(lines) + "\n"
        if path is None:
            return text
        Path(path).write_text(text)
        return None


def _column_bounds(profile, eps, xs):
    lo, hi = profile.omega.lower[0], profile.omega.upper[0]
    inside = (xs > lo) & (xs < hi)
    xc = np.clip(xs, lo, hi)
    with np.errstate(invalid="ignore", divide="ignore"):
        hm = np.asarray(profile.h_minus(xc), dtype=float)
        hp = np.asarray(profile.h_plus(xc), dtype=float)
    return inside, -eps * hm, eps * hp


def _x_legs(profile, eps, x0, y0, direction, hx):
    """Distance from each ``(x0, y0)`` to the boundary along ``direction * e_x``."""
    a = np.zeros_like(x0)
    b = np.full_like(x0, hx)
    for _ in range(_BISECTION_STEPS):
        m = 0.5 * (a + b)
        ok, low, up = _column_bounds(profile, eps, x0 + direction * m)
        ok &= (y0 > low) & (y0 < up)
        a = np.where(ok, m, a)
        b = np.where(ok, b, m)
    return 0.5 * (a + b)


def solve_fd(profile, epsilon, resolution=512, rtol=1e-10):
    """Solve ``-lap u = 2`` on the planar thin domain with zero boundary data.

    The bounding box of the domain is cut into ``resolution`` cells in each
    direction.  Interior nodes next to the boundary use shortened stencil
    legs; horizontal crossings are located by bisection, vertical ones
    directly from the heights.

    Raises
    ------
    SolverError
        Too few interior columns, or the sparse solve misses ``rtol``.
    """
    if profile.dim != 1:
        raise NotImplementedError("the finite-difference solver handles planar domains only")
    if resolution < 32:
        raise ValueError("resolution must be at least 32")
    eps = float(epsilon)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    lo, hi = profile.omega.lower[0], profile.omega.upper[0]
    n = int(resolution)
    x = np.linspace(lo, hi, n + 1)
    inside_col, low, up = _column_bounds(profile, eps, x)
    low = np.where(inside_col, low, 0.0)
    up = np.where(inside_col, up, 0.0)
    ylo, yhi = float(low.min()), float(up.max())
    if not yhi > ylo:
        raise SolverError("domain has no thickness on this grid")
    y = np.linspace(ylo, yhi, n + 1)
    hx, hy = x[1] - x[0], y[1] - y[0]

    mask = inside_col[None, :] & (y[:, None] > low[None, :]) & (y[:, None] < up[None, :])
    if np.count_nonzero(mask.any(axis=0)) < 10:
        raise SolverError(f"fewer than 10 interior grid columns at resolution {n}; "
                          "increase the resolution")
    kk, ii = np.nonzero(mask)
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[kk, ii] = np.arange(kk.size)
    floor = 1e-9

    def neighbour(dk, di):
        k2, i2 = kk + dk, ii + di
        valid = (k2 >= 0) & (k2 <= n) & (i2 >= 0) & (i2 <= n)
        out = np.full(kk.size, -1, dtype=np.int64)
        out[valid] = index[k2[valid], i2[valid]]
        return out

    nbr = {"E": neighbour(0, 1), "W": neighbour(0, -1), "N": neighbour(1, 0), "S": neighbour(-1, 0)}
    legs = {key: np.full(kk.size, hx if key in "EW" else hy) for key in nbr}
    for key, direction in (("E", 1.0), ("W", -1.0)):
        cut = nbr[key] < 0
        legs[key][cut] = _x_legs(profile, eps, x[ii[cut]], y[kk[cut]], direction, hx)
    cut = nbr["N"] < 0
    legs["N"][cut] = up[ii[cut]] - y[kk[cut]]
    cut = nbr["S"] < 0
    legs["S"][cut] = y[kk[cut]] - low[ii[cut]]
    for key, h in (("E", hx), ("W", hx), ("N", hy), ("S", hy)):
        np.maximum(legs[key], floor * h, out=legs[key])

    rows, cols, vals = [np.arange(kk.size)], [np.arange(kk.size)], []
    diag = 2.0 / (legs["E"] * legs["W"]) + 2.0 / (legs["N"] * legs["S"])
    vals.append(diag)
    for key, opposite in (("E", "W"), ("W", "E"), ("N", "S"), ("S", "N")):
        has = nbr[key] >= 0
        rows.append(np.nonzero(has)[0])
        cols.append(nbr[key][has])
        vals.append(-2.0 / (legs[key][has] * (legs[key][has] + legs[opposite][has])))
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(kk.size, kk.size))
    b = np.full(kk.size, 2.0)
    u = spsolve(A.tocsc(), b)
    residual = float(np.linalg.norm(A @ u - b) / np.linalg.norm(b))
    if not residual <= rtol:
        raise SolverError(f"linear solve reached relative residual {residual:.3g} > {rtol:.3g}")
    values = np.zeros(mask.shape)
    values[kk, ii] = u
    return GridSolution(profile, eps, x, y, values, mask, low, up, residual)


def _grid_integral(grid, values):
    """Column trapezoid in ``y`` (with the zero boundary values at the cut
    legs), then trapezoid in ``x`` with zero at the ends of the section."""
    mask = grid.mask
    hx, hy = grid.spacing
    has = mask.any(axis=0)
    if not has.any():
        return 0.0
    v = np.where(mask, values, 0.0)
    first = np.argmax(mask, axis=0)
    last = mask.shape[0] - 1 - np.argmax(mask[::-1], axis=0)
    cols = np.arange(mask.shape[1])
    vf, vl = v[first, cols], v[last, cols]
    leg_s = grid.y[first] - grid.lower
    leg_n = grid.upper - grid.y[last]
    column = hy * (v.sum(axis=0) - 0.5 * (vf + vl)) + 0.5 * (leg_s * vf + leg_n * vl)
    return float(hx * np.sum(np.where(has, column, 0.0)))


def torsion_from_grid(grid):
    """Integral of the grid solution over the domain."""
    return _grid_integral(grid, grid.values)


def l2_relative_error(series, grid):
    """``||u_series - u_grid|| / ||u_grid||`` in L2 over the physical domain.

    The series is evaluated at the interior grid nodes in the rescaled
    variable ``xi = y / eps``; both norms use the grid quadrature.
    """
    if series.profile is not grid.profile and series.profile != grid.profile:
        raise ValueError("series and grid solution belong to different profiles")
    kk, ii = np.nonzero(grid.mask)
    approx = np.zeros_like(grid.values)
    if kk.size:
        approx[kk, ii] = eval_u(series, grid.x[ii], grid.y[kk] / grid.epsilon, grid.epsilon)
    num = _grid_integral(grid, (approx - grid.values) ** 2)
    den = _grid_integral(grid, grid.values ** 2)
    if den == 0:
        raise ValueError("grid solution vanishes identically")
    return float(np.sqrt(num / den))


# walk on spheres ---------------------------------------------------------------

@dataclass(frozen=True)
class WosEstimate:
    mean: float
    std_error: float
    samples: int
    shell_width: float
    seed: int
    workers: int = 1


class _PolylineDistance:
    """Lower bound on the distance to the boundary of a planar thin domain.

    The boundary curves are replaced by a fine polyline, parametrized so
    that square-root behaviour at the ends of the section is resolved.  The
    bound subtracts half the longest segment (nearest-midpoint search) and
    a sagitta margin for the polyline-vs-curve gap.
    """

    def __init__(self, profile, eps, max_segment=None):
        lo, hi = profile.omega.lower[0], profile.omega.upper[0]
        if max_segment is None:
            max_segment = 1e-4 * max(hi - lo, eps)
        s = np.linspace(0.0, 1.0, 4001)

        def curve(s, sign):
            xs = lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * s))
            _, low, up = _column_bounds(profile, eps, xs)
            return np.column_stack([xs, up if sign > 0 else low])

        pieces, margin = [], 0.0
        for sign in (1, -1):
            pts = curve(s, sign)
            seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            splits = np.maximum(1, np.ceil(seg / max_segment).astype(int))
            # refine every segment uniformly in the parameter
            fine = np.concatenate([s[j] + (s[j + 1] - s[j]) * np.arange(m) / m
                                   for j, m in enumerate(splits)] + [[1.0]])
            pts = curve(fine, sign)
            mids = curve(0.5 * (fine[:-1] + fine[1:]), sign)
            a, b = pts[:-1], pts[1:]
            ab = b - a
            t = np.clip(np.einsum("ij,ij->i", mids - a, ab) / np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300), 0, 1)
            sag = np.linalg.norm(mids - (a + t[:, None] * ab), axis=1)
            margin = max(margin, 2.0 * float(np.nanmax(sag)))
            pieces.append(pts)
        upper, lower = pieces
        # close the outline with the end segments (vertical if H > 0 there)
        outline = np.concatenate([lower, upper[::-1], lower[:1]])
        a, b = outline[:-1], outline[1:]
        seg = np.linalg.norm(b - a, axis=1)
        keep = seg > 0
        a, b = a[keep], b[keep]
        long = np.linalg.norm(b - a, axis=1) > max_segment
        if long.any():  # end caps: subdivide them too
            extra = []
            for p, q in zip(a[long], b[long]):
                m = int(np.ceil(np.linalg.norm(q - p) / max_segment))
                w = np.arange(m + 1)[:, None] / m
                extra.append(p + w * (q - p))
            short = [np.stack([a[~long], b[~long]], axis=1)]
            short += [np.stack([e[:-1], e[1:]], axis=1) for e in extra]
            segs = np.concatenate(short)
            a, b = segs[:, 0], segs[:, 1]
        self._half = 0.5 * float(np.max(np.linalg.norm(b - a, axis=1)))
        self._margin = margin
        self._tree = cKDTree(0.5 * (a + b))

    def __call__(self, points, eps=None):
        dist, _ = self._tree.query(points)
        return np.maximum(dist - self._half - self._margin, 0.0)


def boundary_distance(profile, epsilon):
    """Callable ``points -> lower bound on the distance to the boundary``."""
    if profile.distance is not None:
        return lambda pts: profile.distance(pts, epsilon)
    if profile.dim == 1:
        return _PolylineDistance(profile, epsilon)
    raise SolverError(f"no boundary distance available for profile {profile.name!r}")


def _walk_chunk(distance, start, count, shell, seed_seq, max_steps):
    rng = np.random.default_rng(seed_seq)
    dim = start.size
    pos = np.tile(start, (count, 1))
    total = np.zeros(count)
    active = np.arange(count)
    for _ in range(max_steps):
        if active.size == 0:
            break
        r = distance(pos[active])
        live = r >= shell
        active, r = active[live], r[live]
        total[active] += r * r / dim
        step = rng.standard_normal((active.size, dim))
        step /= np.linalg.norm(step, axis=1)[:, None]
        pos[active] += r[:, None] * step
    else:
        if active.size:
            raise SolverError(f"{active.size} walks did not reach the shell in {max_steps} steps")
    return total


def wos_exit_time(profile, epsilon, start, samples=100_000, seed=0, shell=None,
                  workers=1, max_steps=100_000):
    """Walk-on-spheres estimate of the torsion function at ``start``.

    Each walk jumps to a uniform point on the largest inscribed sphere it
    can certify and adds ``r^2 / n``, the mean exit time from that sphere.
    Walks stop once ``r < shell``.  Samples are split into ``workers``
    chunks, each with its own child of ``SeedSequence(seed)``; the result
    depends only on ``seed`` and ``workers``.
    """
    eps = float(epsilon)
    start = np.asarray(start, dtype=float).reshape(-1)
    if start.size != profile.dim + 1:
        raise ValueError(f"start must have {profile.dim + 1} coordinates")
    if not profile.at(eps).contains(start[None, :])[0]:
        raise ValueError(f"start {start.tolist()} is not inside the domain")
    distance = boundary_distance(profile, eps)
    if shell is None:
        scale = max(profile.omega.diameter, eps * sum(peak_height(profile)))
        shell = 1e-5 * scale
    workers = max(1, int(workers))
    sizes = [samples // workers + (1 if w < samples % workers else 0) for w in range(workers)]
    seeds = np.random.SeedSequence(seed).spawn(workers)
    jobs = [(distance, start, c, shell, s, max_steps) for c, s in zip(sizes, seeds) if c > 0]
    if workers == 1:
        parts = [_walk_chunk(*job) for job in jobs]
    else:
        with concurrent.futures.ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _walk_chunk(*job), jobs))
    times = np.concatenate(parts)
    std = float(np.std(times, ddof=1)) if times.size > 1 else 0.0
    return WosEstimate(float(np.mean(times)), float(std / np.sqrt(times.size)), int(times.size),
                       float(shell), int(seed), workers)

