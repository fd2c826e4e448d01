"""Exact set algebra for the two structured scene families.

1-D scenes use unions of open intervals; conical 2-D scenes (every primitive
a ray or sector through the origin) use unions of angular arcs and rays.
Both support exact distance evaluation, membership, boolean difference and
the relative-neighborhood operation G_eta(Z, W), so the carving pipeline can
run on closed-form sets instead of raw point clouds.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import EmptySet
from .geometry import FuncOracle, as_points

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# 1-D interval unions
# ---------------------------------------------------------------------------

class IntervalUnion:
    """Disjoint union of open intervals on the line (endpoints may be inf)."""

    def __init__(self, intervals):
        ivs = [(float(a), float(b)) for a, b in intervals if a < b]
        ivs.sort()
        merged: list[tuple[float, float]] = []
        for a, b in ivs:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        self.intervals = merged

    @property
    def n(self) -> int:
        return 1

    def is_empty(self) -> bool:
        return not self.intervals

    def distance(self, pts) -> np.ndarray:
        pts = as_points(pts, 1)[..., 0]
        if not self.intervals:
            return np.full(np.shape(pts), math.inf)
        d = np.full(np.shape(pts), math.inf)
        for a, b in self.intervals:
            da = np.zeros_like(d)
            if math.isfinite(a):
                da = np.maximum(da, a - pts)
            if math.isfinite(b):
                da = np.maximum(da, pts - b)
            d = np.minimum(d, da)
        return d

    def contains(self, pts) -> np.ndarray:
        pts = as_points(pts, 1)[..., 0]
        inside = np.zeros(np.shape(pts), dtype=bool)
        for a, b in self.intervals:
            inside |= (pts > a) & (pts < b)
        return inside

    def minus(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        for a, b in self.intervals:
            pieces = [(a, b)]
            for c, d in other.intervals:
                nxt = []
                for lo, hi in pieces:
                    if d <= lo or c >= hi:
                        nxt.append((lo, hi))
                    else:
                        if c > lo:
                            nxt.append((lo, c))
                        if d < hi:
                            nxt.append((d, hi))
                pieces = nxt
            out.extend(pieces)
        return IntervalUnion(out)

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(self.intervals + other.intervals)

    def finite_endpoints(self) -> list[float]:
        out = []
        for a, b in self.intervals:
            if math.isfinite(a):
                out.append(a)
            if math.isfinite(b):
                out.append(b)
        return sorted(set(out))

    def oracle(self, name="interval-union") -> FuncOracle:
        return FuncOracle(1, lambda pts: self.distance(pts), 0.0, name)

    def g_eta(self, w_distance, eta: float, span: float = 1e6) -> "IntervalUnion":
        """The open set {x : d(x, self) < eta * d_W(x)} as an interval union.

        Boundary points solve d(x,self) = eta*d_W(x); both sides are piecewise
        linear in our scenes, so scanning between breakpoints plus bisection
        recovers the endpoints to full precision.
        """
        if self.is_empty():
            return IntervalUnion([])

        def h(x):
            return self.distance(x) - eta * np.asarray(w_distance(np.asarray(x)[..., None]))

        knots = set(self.finite_endpoints())
        lo = min([a for a, _ in self.intervals if math.isfinite(a)] + [-1.0])
        hi = max([b for _, b in self.intervals if math.isfinite(b)] + [1.0])
        lo, hi = min(lo, -span), max(hi, span)
        xs = np.unique(np.concatenate([
            np.linspace(lo, hi, 20001), np.array(sorted(knots), dtype=float)]))
        vals = h(xs)
        inside = vals < 0.0
        out = []
        start = None
        for i, flag in enumerate(inside):
            if flag and start is None:
                start = i
            if (not flag or i == len(inside) - 1) and start is not None:
                end = i if not flag else i + 1
                a = xs[start] if start == 0 else _bisect_1d(h, xs[start - 1], xs[start])
                b = xs[end - 1] if end == len(xs) else _bisect_1d(h, xs[end - 1], xs[end])
                if start == 0 and inside[0]:
                    a = -math.inf
                if end == len(xs) and inside[-1]:
                    b = math.inf
                out.append((a, b))
                start = None
        return IntervalUnion(out)

    def sample_points(self, w_distance, per_interval=64, span=100.0) -> np.ndarray:
        """Deterministic samples of the set, denser toward finite endpoints."""
        pts = []
        for a, b in self.intervals:
            a_ = a if math.isfinite(a) else min(-span, b - span)
            b_ = b if math.isfinite(b) else max(span, a + span)
            inner = np.linspace(a_, b_, per_interval + 2)[1:-1]
            pts.append(inner)
        if not pts:
            raise EmptySet("cannot sample an empty interval union")
        return np.concatenate(pts)[:, None]

    def __repr__(self):
        return f"IntervalUnion({self.intervals})"


def _bisect_1d(h, lo, hi, iters=90):
    flo = float(np.asarray(h(np.array([lo]))).reshape(-1)[0])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = float(np.asarray(h(np.array([mid]))).reshape(-1)[0])
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# conical 2-D sector unions
# ---------------------------------------------------------------------------

def _wrap(theta):
    """Wrap angles to (-pi, pi]."""
    out = np.mod(np.asarray(theta) + math.pi, TWO_PI) - math.pi
    return np.where(out == -math.pi, math.pi, out)


def _ang_dist(a, b):
    """Absolute angular distance in [0, pi]."""
    d = np.abs(np.mod(np.asarray(a) - b + math.pi, TWO_PI) - math.pi)
    return d


class SectorUnion:
    """Union of open angular sectors and single rays, all cones from 0.

    ``arcs`` are (lo, hi) angle pairs with lo < hi (radians, not wrapped:
    an arc may straddle pi by using hi > pi); ``rays`` are single angles.
    Distances are exact: for a cone C and x = (r, theta),
    d(x, C) = r * d(unit(theta), C).
    """

    def __init__(self, arcs=(), rays=()):
        self.arcs = [(float(lo), float(hi)) for lo, hi in arcs if hi > lo]
        self.rays = [float(a) for a in rays]

    @property
    def n(self) -> int:
        return 2

    def is_empty(self) -> bool:
        return not self.arcs and not self.rays

    # -- angular geometry ---------------------------------------------------

    def _edge_angles(self):
        out = list(self.rays)
        for lo, hi in self.arcs:
            out.extend([lo, hi])
        return out

    def unit_distance(self, theta) -> np.ndarray:
        """Distance from the unit-circle point at angle theta to the cone."""
        theta = np.asarray(theta, dtype=float)
        if self.is_empty():
            return np.full(theta.shape, math.inf)
        d = np.full(theta.shape, math.inf)
        for lo, hi in self.arcs:
            span_mid = 0.5 * (lo + hi)
            half = 0.5 * (hi - lo)
            inside = _ang_dist(theta, span_mid) <= half
            d = np.where(inside, 0.0, d)
        for a in self._edge_angles():
            delta = _ang_dist(theta, a)
            ray_d = np.where(delta <= 0.5 * math.pi, np.sin(delta), 1.0)
            d = np.minimum(d, ray_d)
        return d

    def distance(self, pts) -> np.ndarray:
        pts = as_points(pts, 2)
        r = np.linalg.norm(pts, axis=-1)
        theta = np.arctan2(pts[..., 1], pts[..., 0])
        return r * self.unit_distance(theta)

    def contains(self, pts) -> np.ndarray:
        pts = as_points(pts, 2)
        r = np.linalg.norm(pts, axis=-1)
        theta = np.arctan2(pts[..., 1], pts[..., 0])
        inside = np.zeros(theta.shape, dtype=bool)
        for lo, hi in self.arcs:
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            inside |= _ang_dist(theta, mid) < half
        return inside & (r > 0)

    # -- set operations ------------------------------------------------------

    def minus(self, other: "SectorUnion") -> "SectorUnion":
        """Angular difference; only arcs are carved (rays of self survive
        unless they fall inside an open arc of other)."""
        arcs = [(lo, hi) for lo, hi in self.arcs]
        for olo, ohi in other.arcs:
            nxt = []
            for lo, hi in arcs:
                pieces = _arc_minus((lo, hi), (olo, ohi))
                nxt.extend(pieces)
            arcs = nxt
        rays = []
        for a in self.rays:
            covered = any(_arc_contains_angle(arc, a) for arc in other.arcs)
            if not covered:
                rays.append(a)
        return SectorUnion(arcs, rays)

    def union(self, other: "SectorUnion") -> "SectorUnion":
        return SectorUnion(self.arcs + other.arcs, self.rays + other.rays)

    def oracle(self, name="sector-union") -> FuncOracle:
        return FuncOracle(2, lambda pts: self.distance(pts), 0.0, name)

    def g_eta(self, w: "SectorUnion", eta: float) -> "SectorUnion":
        """G_eta(self, W) for a conical W: an angular scan plus bisection.

        Homogeneity reduces membership to h(theta) = d_self(theta) -
        eta * d_W(theta) < 0 on the unit circle.
        """

        def h(theta):
            return self.unit_distance(theta) - eta * w.unit_distance(theta)

        thetas = np.linspace(-math.pi, math.pi, 40001)
        extra = np.asarray(self._edge_angles() + w._edge_angles(), dtype=float)
        thetas = np.unique(np.concatenate([thetas, _wrap(extra)]))
        vals = h(thetas)
        inside = vals < 0.0
        arcs = []
        # scan contiguous negative stretches, refine ends by bisection
        i = 0
        m = len(thetas)
        while i < m:
            if not inside[i]:
                i += 1
                continue
            j = i
            while j + 1 < m and inside[j + 1]:
                j += 1
            lo = thetas[i] if i == 0 else _bisect_angle(h, thetas[i - 1], thetas[i])
            hi = thetas[j] if j == m - 1 else _bisect_angle(h, thetas[j], thetas[j + 1])
            arcs.append((lo, hi))
            i = j + 1
        # merge a stretch that wraps across +-pi
        if len(arcs) >= 2 and arcs[0][0] <= -math.pi + 1e-12 and arcs[-1][1] >= math.pi - 1e-12:
            first, last = arcs[0], arcs[-1]
            arcs = arcs[1:-1] + [(last[0], first[1] + TWO_PI)]
        return SectorUnion(arcs)

    def boundary_angles(self) -> list[float]:
        """Angles of the boundary rays of the arcs (wrapped), plus bare rays."""
        out = [_wrap(a) for a in self._edge_angles()]
        return sorted({round(float(a), 15) for a in out})

    def sample_points(self, radii, per_arc=48) -> np.ndarray:
        """Deterministic samples: interior angles x the given radii."""
        angles = []
        for lo, hi in self.arcs:
            angles.append(np.linspace(lo, hi, per_arc + 2)[1:-1])
        for a in self.rays:
            angles.append(np.array([a]))
        if not angles:
            raise EmptySet("cannot sample an empty sector union")
        angles = np.concatenate(angles)
        radii = np.asarray(radii, dtype=float)
        th, rr = np.meshgrid(angles, radii)
        pts = np.stack([rr * np.cos(th), rr * np.sin(th)], axis=-1)
        return pts.reshape(-1, 2)

    def __repr__(self):
        return f"SectorUnion(arcs={self.arcs}, rays={self.rays})"


def _arc_contains_angle(arc, angle) -> bool:
    lo, hi = arc
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return bool(_ang_dist(angle, mid) < half)


def _arc_minus(arc, cut):
    """Difference of angular intervals, handling the wrapped representation."""
    lo, hi = arc
    pieces = []
    # normalize the cut into the frame of [lo, hi] (try shifted copies)
    for shift in (-TWO_PI, 0.0, TWO_PI):
        c0, c1 = cut[0] + shift, cut[1] + shift
        if c1 <= lo or c0 >= hi:
            continue
        if c0 > lo:
            pieces.append((lo, c0))
        if c1 < hi:
            pieces.append((c1, hi))
        break
    else:
        pieces.append((lo, hi))
    return [p for p in pieces if p[1] > p[0]]


def _bisect_angle(h, lo, hi, iters=80):
    flo = float(np.asarray(h(np.array([lo]))).reshape(-1)[0])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = float(np.asarray(h(np.array([mid]))).reshape(-1)[0])
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)
