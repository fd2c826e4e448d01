"""Multi-index calculus, scalar fields, distance oracles, and the G_eta predicate.

Conventions used throughout the package:

* points are numpy arrays of shape ``(..., n)``; for ``n == 1`` plain scalars
  and arrays of any shape are accepted and treated elementwise;
* a distance oracle evaluates an upper estimate ``eval(x)`` of the true
  distance ``d(x, S)`` with ``eval(x) - covering_radius <= d(x, S) <= eval(x)``
  (analytic primitives have covering radius 0 and are exact);
* ``d(x, empty set) = +inf``.
"""
from __future__ import annotations

import math
from enum import Enum
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySet, OnTargetSet, StencilOutsideDomain

INF = math.inf


# ---------------------------------------------------------------------------
# multi-indices
# ---------------------------------------------------------------------------

def multi_index_order(alpha) -> int:
    return int(sum(alpha))


def multi_index_enumerate(n: int, p: int) -> list[tuple[int, ...]]:
    """All multi-indices alpha in N^n with |alpha| <= p, graded lex order.

    Within each grade the plain tuple (lexicographic) order is used, so for
    (n=2, p=1) the result is [(0,0), (0,1), (1,0)].
    """
    if n < 1:
        raise ValueError("ambient dimension must be >= 1")
    if p < 0:
        raise ValueError("order must be >= 0")
    out: list[tuple[int, ...]] = []
    for grade in range(p + 1):
        out.extend(sorted(_compositions(grade, n)))
    return out


def _compositions(total: int, length: int):
    """All tuples of `length` non-negative ints summing to `total`."""
    if length == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, length - 1):
            yield (head,) + tail


def sub_indices(alpha):
    """All beta <= alpha componentwise (including 0 and alpha itself)."""
    ranges = [range(a + 1) for a in alpha]
    return [tuple(b) for b in product(*ranges)]


@lru_cache(maxsize=None)
def multi_index_factorial(alpha) -> float:
    out = 1.0
    for a in alpha:
        out *= math.factorial(a)
    return out


@lru_cache(maxsize=None)
def multi_index_binomial(alpha, beta) -> float:
    out = 1.0
    for a, b in zip(alpha, beta):
        out *= math.comb(a, b)
    return out


# ---------------------------------------------------------------------------
# point handling
# ---------------------------------------------------------------------------

def as_points(x, n: int) -> np.ndarray:
    """Coerce x to an array of shape (..., n)."""
    arr = np.asarray(x, dtype=float)
    if n == 1:
        if arr.ndim == 0 or arr.shape[-1] != 1:
            arr = arr[..., None]
        return arr
    if arr.ndim == 0 or arr.shape[-1] != n:
        raise ValueError(f"expected points of dimension {n}, got shape {arr.shape}")
    return arr


def _squeeze_values(vals: np.ndarray):
    if vals.ndim == 0:
        return float(vals)
    return vals


# ---------------------------------------------------------------------------
# scalar fields
# ---------------------------------------------------------------------------

class ScalarField:
    """A real map on R^n with queryable derivatives.

    ``value`` broadcasts over batches of points.  ``derivative`` returns
    D^alpha f(x), using the exact rule when one was supplied and an iterated
    central difference otherwise; the zero multi-index returns the value.
    """

    def __init__(self, n, value, derivative=None, domain=None, step_hint=None,
                 name=""):
        self.n = int(n)
        self._value = value
        self._derivative = derivative
        self.domain = domain
        self.step_hint = step_hint
        self.name = name

    @property
    def derivative_kind(self) -> str:
        return "exact" if self._derivative is not None else "finite-difference"

    def value(self, x):
        pts = as_points(x, self.n)
        return _squeeze_values(np.asarray(self._value(pts), dtype=float))

    __call__ = value

    def derivative(self, x, alpha):
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.n:
            raise ValueError("multi-index length must equal the ambient dimension")
        if multi_index_order(alpha) == 0:
            return self.value(x)
        if self._derivative is not None:
            pts = as_points(x, self.n)
            return _squeeze_values(np.asarray(self._derivative(pts, alpha), dtype=float))
        return fd_partial(self, x, alpha, self._step_at(x))

    def _step_at(self, x):
        if self.step_hint is not None:
            return self.step_hint(x)
        return 1e-6


def field_from_oracle(oracle, name="distance") -> ScalarField:
    """Wrap a distance oracle as a scalar field (finite-difference derivatives)."""
    return ScalarField(oracle.n, lambda pts: oracle.eval(pts), name=name,
                       step_hint=fd_step_policy(oracle))


def fd_step_policy(w_oracle):
    """Per-point step max(1e-6, 1e-3 * d(x, W)), so stencils never cross W."""

    def hint(x):
        d = w_oracle.eval(x)
        d = np.min(d) if np.ndim(d) else float(d)
        if not math.isfinite(d):
            return 1e-3
        return max(1e-6, 1e-3 * float(d))

    return hint


def fd_partial(f: ScalarField, x, alpha, base_step: float):
    """Iterated per-axis central difference estimate of D^alpha f(x).

    Axis i of order a uses the stencil offsets (a/2 - k) * step with binomial
    weights, which is exact on quadratics per axis and on products of
    per-axis quadratics for mixed indices.
    """
    alpha = tuple(int(a) for a in alpha)
    order = multi_index_order(alpha)
    if order < 1:
        raise ValueError("fd_partial needs |alpha| >= 1")
    h = float(base_step)
    if h <= 0.0:
        raise ValueError("step must be positive")
    pts = as_points(x, f.n)

    offsets = [np.zeros(f.n)]
    weights = [1.0]
    for axis, a in enumerate(alpha):
        if a == 0:
            continue
        new_offsets, new_weights = [], []
        axis_off = [(a / 2.0 - k) * h for k in range(a + 1)]
        axis_w = [((-1) ** k) * math.comb(a, k) for k in range(a + 1)]
        for off, w in zip(offsets, weights):
            for ao, aw in zip(axis_off, axis_w):
                shifted = off.copy()
                shifted[axis] += ao
                new_offsets.append(shifted)
                new_weights.append(w * aw)
        offsets, weights = new_offsets, new_weights

    stencil = np.stack(offsets)                      # (S, n)
    sample_pts = pts[..., None, :] + stencil          # (..., S, n)
    if f.domain is not None:
        ok = np.asarray(f.domain(sample_pts))
        if not np.all(ok):
            raise StencilOutsideDomain(
                f"stencil of radius {order * h:g} leaves the domain near {np.asarray(x)}")
    vals = np.asarray(f._value(sample_pts), dtype=float)
    est = np.tensordot(vals, np.asarray(weights), axes=([-1], [0])) / h ** order
    return _squeeze_values(np.asarray(est))


def fd_partial_batch(f: ScalarField, pts, alpha, steps):
    """fd_partial over a batch of points with per-point steps; (N,) result."""
    alpha = tuple(int(a) for a in alpha)
    order = multi_index_order(alpha)
    if order < 1:
        raise ValueError("fd_partial_batch needs |alpha| >= 1")
    pts = as_points(pts, f.n)
    steps = np.broadcast_to(np.asarray(steps, dtype=float), pts.shape[:-1])

    offsets = [np.zeros(f.n)]
    weights = [1.0]
    for axis, a in enumerate(alpha):
        if a == 0:
            continue
        new_offsets, new_weights = [], []
        for off, w in zip(offsets, weights):
            for k in range(a + 1):
                shifted = off.copy()
                shifted[axis] += a / 2.0 - k
                new_offsets.append(shifted)
                new_weights.append(w * ((-1) ** k) * math.comb(a, k))
        offsets, weights = new_offsets, new_weights

    stencil = np.stack(offsets)                                  # (S, n)
    sample_pts = pts[..., None, :] + steps[..., None, None] * stencil
    if f.domain is not None:
        ok = np.asarray(f.domain(sample_pts))
        if not np.all(ok):
            raise StencilOutsideDomain("batched stencil leaves the domain")
    vals = np.asarray(f._value(sample_pts), dtype=float)
    est = np.tensordot(vals, np.asarray(weights), axes=([-1], [0]))
    return est / steps ** order


# ---------------------------------------------------------------------------
# distance oracles
# ---------------------------------------------------------------------------

class DistanceOracle:
    """Evaluates an upper estimate of d(x, target) with a known error bound."""

    def __init__(self, n: int, covering_radius: float = 0.0, target: str = ""):
        self.n = int(n)
        self.covering_radius = float(covering_radius)
        self.target = target

    def eval(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(x)

    def _pts(self, x):
        return as_points(x, self.n)


class EmptySetOracle(DistanceOracle):
    """d(x, empty set) = +inf, comparing greater than any finite scalar."""

    def __init__(self, n):
        super().__init__(n, 0.0, "empty")

    def eval(self, x):
        pts = self._pts(x)
        out = np.full(pts.shape[:-1], INF)
        return _squeeze_values(out)


class PointSetOracle(DistanceOracle):
    """Exact distance to a finite point set."""

    def __init__(self, points, target="points"):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        super().__init__(pts.shape[1], 0.0, target)
        self.points = pts
        self._tree = cKDTree(pts)

    def eval(self, x):
        pts = self._pts(x)
        d, _ = self._tree.query(pts.reshape(-1, self.n))
        return _squeeze_values(d.reshape(pts.shape[:-1]))


class CloudOracle(DistanceOracle):
    """Distance to a sampled set; the covering radius bounds the underestimate.

    The samples lie on the target set, so eval(x) = d(x, samples) satisfies
    eval - covering_radius <= d(x, S) <= eval.
    """

    def __init__(self, points, covering_radius, target="cloud"):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        super().__init__(pts.shape[1], covering_radius, target)
        self.points = pts
        self._tree = cKDTree(pts)

    def eval(self, x):
        pts = self._pts(x)
        d, _ = self._tree.query(pts.reshape(-1, self.n))
        return _squeeze_values(d.reshape(pts.shape[:-1]))


class RaySegmentOracle(DistanceOracle):
    """Exact distance to {anchor + t*direction : t_lo <= t <= t_hi}.

    Covers segments, rays (t_hi = inf) and full lines (both infinite).
    """

    def __init__(self, anchor, direction, t_lo=0.0, t_hi=INF, target="ray"):
        anchor = np.asarray(anchor, dtype=float)
        direction = np.asarray(direction, dtype=float)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            raise ValueError("direction must be nonzero")
        super().__init__(anchor.shape[0], 0.0, target)
        self.anchor = anchor
        self.direction = direction / norm
        self.t_lo = float(t_lo)
        self.t_hi = float(t_hi)

    def eval(self, x):
        pts = self._pts(x)
        rel = pts - self.anchor
        t = np.tensordot(rel, self.direction, axes=([-1], [0]))
        t = np.clip(t, self.t_lo, self.t_hi)
        proj = self.anchor + t[..., None] * self.direction
        d = np.linalg.norm(pts - proj, axis=-1)
        return _squeeze_values(d)


class CircleOracle(DistanceOracle):
    """Exact distance to a circle of radius r centered at c (n = 2)."""

    def __init__(self, center, radius, target="circle"):
        center = np.asarray(center, dtype=float)
        super().__init__(center.shape[0], 0.0, target)
        self.center = center
        self.radius = float(radius)

    def eval(self, x):
        pts = self._pts(x)
        d = np.abs(np.linalg.norm(pts - self.center, axis=-1) - self.radius)
        return _squeeze_values(d)


class UnionOracle(DistanceOracle):
    """min of member distances; covering radius is the max of the members'."""

    def __init__(self, members, target="union"):
        members = list(members)
        if not members:
            raise EmptySet("union of zero oracles")
        super().__init__(members[0].n,
                         max(m.covering_radius for m in members), target)
        self.members = members

    def eval(self, x):
        pts = self._pts(x)
        vals = np.stack([np.asarray(m.eval(pts), dtype=float).reshape(pts.shape[:-1])
                         for m in self.members])
        return _squeeze_values(np.min(vals, axis=0))


class FuncOracle(DistanceOracle):
    """Distance oracle backed by an arbitrary vectorized function."""

    def __init__(self, n, fn, covering_radius=0.0, target="func"):
        super().__init__(n, covering_radius, target)
        self._fn = fn

    def eval(self, x):
        pts = self._pts(x)
        return _squeeze_values(np.asarray(self._fn(pts), dtype=float))


# ---------------------------------------------------------------------------
# relative neighborhoods  G_eta(Z, W) = {x off W : d(x,Z) < eta * d(x,W)}
# ---------------------------------------------------------------------------

class Verdict(str, Enum):
    IN = "in"
    OUT = "out"
    AMBIGUOUS = "margin-ambiguous"


def g_eta_contains(Z: DistanceOracle, W: DistanceOracle, eta: float, x) -> Verdict:
    """Three-valued membership of x in G_eta(Z, W), sound under oracle error.

    `in` and `out` hold for the true distances whenever the oracle bounds do;
    anything in between is reported as margin-ambiguous rather than resolved.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    dw = float(W.eval(x))
    if dw <= W.covering_radius:
        raise OnTargetSet(f"point {np.asarray(x)} is on W up to oracle error")
    dz = float(Z.eval(x))
    if dz + Z.covering_radius < eta * (dw - W.covering_radius):
        return Verdict.IN
    if dz - Z.covering_radius >= eta * (dw + W.covering_radius):
        return Verdict.OUT
    return Verdict.AMBIGUOUS


def g_eta_contains_many(Z, W, eta, pts) -> np.ndarray:
    """Vectorized verdicts: +1 in, -1 out, 0 ambiguous. Raises on-W points."""
    pts = as_points(pts, W.n)
    dw = np.asarray(W.eval(pts), dtype=float).reshape(pts.shape[:-1])
    if np.any(dw <= W.covering_radius):
        raise OnTargetSet("grid touches W up to oracle error")
    dz = np.asarray(Z.eval(pts), dtype=float).reshape(pts.shape[:-1])
    out = np.zeros(dw.shape, dtype=int)
    out[dz + Z.covering_radius < eta * (dw - W.covering_radius)] = 1
    out[dz - Z.covering_radius >= eta * (dw + W.covering_radius)] = -1
    return out


def g_eta_compose_bound(eps: float, eta: float) -> float:
    """Scale at which an eps-neighborhood of an eta-neighborhood is absorbed:
    G_eps(G_eta(Z, W), W) is contained in G_{eps + eta + eps*eta}(Z, W)."""
    if eps <= 0 or eta <= 0:
        raise ValueError("scales must be positive")
    return eps + eta + eps * eta


# ---------------------------------------------------------------------------
# Hausdorff distance between finite point sets
# ---------------------------------------------------------------------------

def hausdorff_distance(A, B) -> float:
    """Exact Hausdorff distance max(sup_A d(.,B), sup_B d(.,A)); symmetric."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.size == 0 or B.size == 0:
        raise EmptySet("hausdorff_distance needs non-empty sets")
    ta, tb = cKDTree(A), cKDTree(B)
    d_ab = tb.query(A)[0].max()
    d_ba = ta.query(B)[0].max()
    return float(max(d_ab, d_ba))


# ---------------------------------------------------------------------------
# deterministic grids
# ---------------------------------------------------------------------------

def log_grid_1d(lo: float, hi: float, count: int, signs=(-1.0, 1.0)) -> np.ndarray:
    """Log-spaced magnitudes in [lo, hi] mirrored over the given signs; (N, 1)."""
    per_side = max(1, count // len(signs))
    mags = np.geomspace(lo, hi, per_side)
    vals = np.concatenate([s * mags for s in signs])
    return np.sort(vals)[:, None]


def linear_grid_2d(bbox, resolution: int, jitter_seed=None) -> np.ndarray:
    """Row-major (N, 2) grid over bbox = (x0, x1, y0, y1)."""
    x0, x1, y0, y1 = bbox
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    if jitter_seed is not None:
        rng = np.random.default_rng(jitter_seed)
        pitch = min((x1 - x0), (y1 - y0)) / max(resolution - 1, 1)
        pts = pts + rng.uniform(-0.25, 0.25, pts.shape) * pitch
    return pts


def off_w_filter(pts, W: DistanceOracle, collar: float) -> np.ndarray:
    """Drop points with d(., W) <= collar (oracle margin included)."""
    pts = as_points(pts, W.n)
    d = np.asarray(W.eval(pts), dtype=float).reshape(pts.shape[:-1])
    return pts[d > collar + W.covering_radius]
