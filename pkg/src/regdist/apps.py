"""Applications: exact zero-set functions and level-set approximations.

Raising a distance-equivalent f to the power p+1 gives a function that
extends by zero across W to a C^p function, p-flat on W; level sets
H_t = f^{-1}(t) converge to W in the Hausdorff metric as t -> 0.  Both
claims are checked numerically: flatness by log-log exponent fits along an
approach sequence, convergence by a table of Hausdorff distances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.spatial import cKDTree

from .certificates import RegularFunction
from .errors import EmptyContour, EmptyLevelSet, NonPositiveF
from .geometry import (ScalarField, as_points, fd_partial_batch,
                       hausdorff_distance, multi_index_enumerate,
                       multi_index_factorial, multi_index_order, sub_indices)
from .report import CertificateReport


# ---------------------------------------------------------------------------
# zero-set function h = f^(p+1)
# ---------------------------------------------------------------------------

def _power_compositions(alpha, parts):
    """Ordered tuples (b_1..b_parts) of multi-indices, zeros allowed, summing
    to alpha."""
    if parts == 1:
        return [(tuple(alpha),)]
    out = []
    for beta in sub_indices(alpha):
        rest = tuple(a - b for a, b in zip(alpha, beta))
        for tail in _power_compositions(rest, parts - 1):
            out.append((tuple(beta),) + tail)
    return out


def zero_set_function(f: RegularFunction, p: int) -> ScalarField:
    """h = f^(p+1) off W and exactly 0 on W (decided by the W oracle within
    its covering radius); derivatives off W come from the multinomial power
    expansion over f's own derivative rule."""
    W = f.cert.W
    n = f.n
    power = p + 1

    def value(pts):
        pts = as_points(pts, n)
        d = np.asarray(W.eval(pts), dtype=float).reshape(pts.shape[:-1])
        off = d > W.covering_radius
        fv = np.asarray(f.field._value(pts), dtype=float)
        if np.any(off & (fv <= 0.0)):
            bad = pts[off & (fv <= 0.0)][0]
            raise NonPositiveF(f"f is not positive off W at {bad.tolist()}")
        return np.where(off, fv ** power, 0.0)

    def derivative(pts, alpha):
        pts = as_points(pts, n)
        d = np.asarray(W.eval(pts), dtype=float).reshape(pts.shape[:-1])
        off = d > W.covering_radius
        if multi_index_order(alpha) == 0:
            return value(pts)
        total = np.zeros(pts.shape[:-1])
        fa = multi_index_factorial(tuple(alpha))
        cache = {}
        for combo in _power_compositions(tuple(alpha), power):
            coeff = fa
            term = np.ones(pts.shape[:-1])
            for beta in combo:
                coeff /= multi_index_factorial(beta)
                if beta not in cache:
                    cache[beta] = np.asarray(
                        f.field.derivative(pts, beta), dtype=float)
                term = term * cache[beta]
            total = total + coeff * term
        return np.where(off, total, 0.0)

    h = ScalarField(n, value, derivative=derivative, name=f"({f.name})^{power}")
    h.base_function = f
    h.flat_order = p
    return h


def flatness_check(h: ScalarField, W, p: int, approach_grid,
                   stage="flatness") -> CertificateReport:
    """Fit the decay exponent of |D^a h| against d(., W) along an approach
    sequence; pass when the fitted exponent reaches p+1-|a| up to 0.1.

    Probes are finite differences with the distance-scaled step, so stencils
    shrink with the approach (h is globally defined, so crossing W is fine).
    """
    pts = as_points(approach_grid, h.n).reshape(-1, h.n)
    d = np.asarray(W.eval(pts), dtype=float).reshape(len(pts))
    rep = CertificateReport()
    steps = np.maximum(1e-6, 1e-3 * d)
    exponents = {}
    for alpha in multi_index_enumerate(h.n, p):
        order = multi_index_order(alpha)
        if order == 0:
            vals = np.abs(np.asarray(h.value(pts), dtype=float).reshape(len(pts)))
        elif h.derivative_kind == "exact":
            vals = np.abs(np.asarray(h.derivative(pts, alpha), dtype=float).reshape(len(pts)))
        else:
            vals = np.abs(fd_partial_batch(h, pts, alpha, steps))
        good = vals > 1e-280
        target = p + 1 - order
        if np.sum(good) < 3:
            # derivative is numerically zero along the approach: flat already
            rep.add(stage, f"flatness_exponent|alpha={tuple(alpha)}",
                    "identically-zero", 0.1, 0.0)
            exponents[tuple(alpha)] = math.inf
            continue
        slope = float(np.polyfit(np.log(d[good]), np.log(vals[good]), 1)[0])
        exponents[tuple(alpha)] = slope
        rep.add(stage, f"flatness_exponent|alpha={tuple(alpha)}",
                f"target={target}", 0.1, max(0.0, target - slope))
    rep.extras["exponents"] = exponents
    return rep


# ---------------------------------------------------------------------------
# level-set extraction
# ---------------------------------------------------------------------------

@dataclass
class LevelSet:
    t: float
    points: np.ndarray
    tolerance: float
    resolution: int
    segments: list = dfield(default_factory=list)


def _bisect_to_level(f, a, b, fa, fb, t, tol, iters=80):
    """Bisection along the segment [a, b] for f = t, to |f - t| <= tol."""
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = float(f.value(mid)) - t
        if abs(fm) <= tol:
            return mid
        if (fm < 0.0) == (fa < 0.0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return 0.5 * (a + b)


def level_set_extract(f, t: float, bbox, resolution: int,
                      tol: float = 1e-9) -> LevelSet:
    """Points on f^{-1}(t): root bracketing on the line, marching squares
    with per-edge bisection refinement in the plane."""
    field = f.field if isinstance(f, RegularFunction) else f
    if t <= 0:
        raise ValueError("level must be positive")
    if field.n == 1:
        lo, hi = bbox[0], bbox[1]
        xs = np.linspace(lo, hi, resolution)
        vals = np.asarray(field.value(xs[:, None]), dtype=float).reshape(-1) - t
        pts = []
        for i in range(len(xs) - 1):
            if vals[i] == 0.0:
                pts.append([xs[i]])
            elif vals[i] * vals[i + 1] < 0.0:
                root = _bisect_to_level(field, np.array([xs[i]]), np.array([xs[i + 1]]),
                                        vals[i], vals[i + 1], t, tol)
                pts.append([float(root[0])])
        if not pts:
            raise EmptyLevelSet(f"no crossing of level {t:g} in {bbox}")
        return LevelSet(t, np.asarray(pts), tol, resolution)
    if field.n != 2:
        raise ValueError("level sets are provided for 1 and 2 dimensions only")

    x0, x1, y0, y1 = bbox
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    grid_pts = np.stack([xx, yy], axis=-1)
    vals = np.asarray(field.value(grid_pts), dtype=float) - t

    points: list[np.ndarray] = []
    edge_cache: dict[tuple, int] = {}
    segments: list[tuple[int, int]] = []

    def edge_point(i0, j0, i1, j1):
        key = (i0, j0, i1, j1)
        if key in edge_cache:
            return edge_cache[key]
        a = grid_pts[i0, j0]
        b = grid_pts[i1, j1]
        root = _bisect_to_level(field, a, b, vals[i0, j0], vals[i1, j1], t, tol)
        edge_cache[key] = len(points)
        points.append(root)
        return edge_cache[key]

    # marching squares: corner order (i,j), (i+1,j), (i+1,j+1), (i,j+1)
    for i in range(resolution - 1):
        sign_col = vals[i] < 0
        sign_col2 = vals[i + 1] < 0
        for j in range(resolution - 1):
            c = (int(sign_col[j]) | (int(sign_col2[j]) << 1)
                 | (int(sign_col2[j + 1]) << 2) | (int(sign_col[j + 1]) << 3))
            if c in (0, 15):
                continue
            crossings = []
            if (c & 1) != ((c >> 1) & 1):
                crossings.append(edge_point(i, j, i + 1, j))
            if ((c >> 1) & 1) != ((c >> 2) & 1):
                crossings.append(edge_point(i + 1, j, i + 1, j + 1))
            if ((c >> 3) & 1) != ((c >> 2) & 1):
                crossings.append(edge_point(i, j + 1, i + 1, j + 1))
            if (c & 1) != ((c >> 3) & 1):
                crossings.append(edge_point(i, j, i, j + 1))
            if len(crossings) == 2:
                segments.append((crossings[0], crossings[1]))
            elif len(crossings) == 4:
                # saddle: pair edges arbitrarily (points are what matter)
                segments.append((crossings[0], crossings[1]))
                segments.append((crossings[2], crossings[3]))
    if not points:
        raise EmptyLevelSet(f"no crossing of level {t:g} in {bbox}")
    return LevelSet(t, np.asarray(points), tol, resolution, segments)


# ---------------------------------------------------------------------------
# Hausdorff convergence of level sets
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceTable:
    rows: list                    # (t, hausdorff, resolution, n_points)
    pitch: float
    verdict: str
    warnings: list = dfield(default_factory=list)


def hausdorff_convergence(f, w_samples, t_list, bbox, resolution: int,
                          A: float = 1.0) -> ConvergenceTable:
    """d_H(H_t, W) per level, sorted by decreasing t; `converging` when the
    sequence is non-increasing within 10% noise and the last entry is below
    A * t_last plus sampling slack."""
    t_list = sorted((float(t) for t in t_list), reverse=True)
    if any(t <= 0 for t in t_list):
        raise ValueError("levels must be positive")
    w_samples = np.atleast_2d(np.asarray(w_samples, dtype=float))
    spans = [bbox[1] - bbox[0]] if len(bbox) == 2 else [bbox[1] - bbox[0], bbox[3] - bbox[2]]
    pitch = max(spans) / max(resolution - 1, 1)
    rows, warnings = [], []
    prev_count = None
    for t in t_list:
        ls = level_set_extract(f, t, bbox, resolution)
        dh = hausdorff_distance(ls.points, w_samples)
        rows.append((t, dh, resolution, len(ls.points)))
        if prev_count is not None and prev_count > 0:
            jump = abs(len(ls.points) - prev_count) / prev_count
            if jump > 0.5:
                warnings.append(
                    f"level-set point count jumped {jump:.0%} between t="
                    f"{rows[-2][0]:g} and t={t:g}; possible critical level")
        prev_count = len(ls.points)
    non_increasing = all(rows[i + 1][1] <= rows[i][1] * 1.10
                         for i in range(len(rows) - 1))
    final_ok = rows[-1][1] <= A * rows[-1][0] + 2.0 * pitch
    verdict = "converging" if (non_increasing and final_ok) else "inconclusive"
    return ConvergenceTable(rows, pitch, verdict, warnings)


# ---------------------------------------------------------------------------
# offset-boundary diagnostic
# ---------------------------------------------------------------------------

def lambda_eps(w_samples, eps: float, bbox, resolution: int) -> float:
    """sup over W samples of the distance to the boundary of the open
    eps-offset {x : d(x, W) < eps}, extracted by marching squares on the
    sampled distance field; tends to 0 with eps for nowhere dense W."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    w_samples = np.atleast_2d(np.asarray(w_samples, dtype=float))
    if w_samples.shape[1] != 2:
        raise ValueError("the offset diagnostic is provided in the plane only")
    from .geometry import PointSetOracle
    oracle = PointSetOracle(w_samples, "W")
    field = ScalarField(2, lambda pts: oracle.eval(pts), name="dW")
    try:
        contour = level_set_extract(field, eps, bbox, resolution)
    except EmptyLevelSet as exc:
        raise EmptyContour(str(exc)) from exc
    tree = cKDTree(contour.points)
    d, _ = tree.query(w_samples)
    return float(d.max())
