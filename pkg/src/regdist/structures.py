"""Exact set-algebra backends per scene family, plus canonical builders.

Three families are supported end to end:

* 1-D scenes whose W is a finite point set (interval unions);
* conical plane scenes where W and all strata are cones from the origin
  (sector unions);
* plane scenes whose strata are separated by W itself (a polynomial-graph
  curve), where relative neighborhoods provably never cross W, verified by
  sampling before they are used.
"""
from __future__ import annotations

import math

import numpy as np

from .bump import BumpTarget, target_graph_cell, target_point, target_region
from .cells import (Cell, Stratification, graph_cell_1d, open_band_cell,
                    open_interval_cell, poly_field)
from .errors import UnsupportedScene
from .geometry import PointSetOracle, RaySegmentOracle, as_points
from .regions import IntervalUnion, SectorUnion


class Line1DStructure:
    """Scenes on the line whose W is a finite point set."""

    def __init__(self, w_points):
        self.w_points = np.sort(np.asarray(w_points, dtype=float).reshape(-1))

    def w_distance(self, pts):
        x = np.asarray(pts)[..., 0]
        return np.min(np.abs(x[..., None] - self.w_points), axis=-1)

    def cell_desc(self, cell: Cell) -> IntervalUnion:
        lo, hi = cell.interval()
        return IntervalUnion([(lo, hi)])

    def g_eta(self, desc: IntervalUnion, eta: float) -> IntervalUnion:
        return desc.g_eta(self.w_distance, eta)

    def region_target(self, desc: IntervalUnion, w_oracle, name) -> BumpTarget:
        boundary = []
        for e in desc.finite_endpoints():
            pt = np.array([e])
            if float(w_oracle.eval(pt)) > 1e-12 + w_oracle.covering_radius:
                boundary.append(target_point(pt, name=f"{name}-end"))
        return target_region(desc.oracle(name), desc.contains, boundary,
                             dim=1, name=name)

    def sample_desc(self, desc: IntervalUnion, num=96, span=100.0):
        return desc.sample_points(self.w_distance, per_interval=num, span=span)


class ConicalStructure:
    """Plane scenes where W and every stratum are cones from the origin."""

    def __init__(self, w_sector: SectorUnion):
        self.w = w_sector
        self.radii = np.geomspace(1e-3, 50.0, 9)

    def w_distance(self, pts):
        return self.w.distance(pts)

    def cell_desc(self, cell: Cell) -> SectorUnion:
        if cell.kind == "graph":
            coeffs = getattr(cell.phi[0], "coeffs", None)
            if coeffs is None or coeffs.size > 2 or (coeffs.size > 0 and coeffs[0] != 0.0):
                raise UnsupportedScene(
                    f"stratum {cell.name} is not a ray through the origin")
            slope = float(coeffs[1]) if coeffs.size > 1 else 0.0
            lo, hi = cell.base_interval()
            angles = []
            if hi > 0:
                angles.append(math.atan2(slope, 1.0))
            if lo < 0:
                angles.append(math.atan2(-slope, -1.0))
            angles = [self._ambient_angle(cell, a) for a in angles]
            return SectorUnion(rays=angles)
        # open cell: scan membership on the unit circle, bisect the edges
        thetas = np.linspace(-math.pi, math.pi, 40001)
        circle = np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)
        inside = np.asarray(cell.contains(circle), dtype=bool)
        arcs = []
        i, m = 0, len(thetas)
        while i < m:
            if not inside[i]:
                i += 1
                continue
            j = i
            while j + 1 < m and inside[j + 1]:
                j += 1
            lo = thetas[i] if i == 0 else self._refine_edge(cell, thetas[i - 1], thetas[i])
            hi = thetas[j] if j == m - 1 else self._refine_edge(cell, thetas[j], thetas[j + 1])
            arcs.append((lo, hi))
            i = j + 1
        if len(arcs) >= 2 and arcs[0][0] <= -math.pi + 1e-12 and arcs[-1][1] >= math.pi - 1e-12:
            first, last = arcs[0], arcs[-1]
            arcs = arcs[1:-1] + [(last[0], first[1] + 2.0 * math.pi)]
        if not arcs:
            raise UnsupportedScene(f"stratum {cell.name} misses the unit circle")
        return SectorUnion(arcs)

    @staticmethod
    def _ambient_angle(cell: Cell, cell_angle: float) -> float:
        dir_y = np.array([math.cos(cell_angle), math.sin(cell_angle)])
        dir_x = cell.ambient_coords(dir_y)
        return math.atan2(dir_x[1], dir_x[0])

    @staticmethod
    def _refine_edge(cell, t_out, t_in, iters=60):
        for _ in range(iters):
            mid = 0.5 * (t_out + t_in)
            pt = np.array([math.cos(mid), math.sin(mid)])
            if bool(cell.contains(pt)):
                t_in = mid
            else:
                t_out = mid
        return 0.5 * (t_out + t_in)

    def g_eta(self, desc: SectorUnion, eta: float) -> SectorUnion:
        return desc.g_eta(self.w, eta)

    def ray_cell(self, angle: float, name) -> Cell:
        """A through-origin ray as a graph cell, permuted so the slope is <= 1."""
        c, s = math.cos(angle), math.sin(angle)
        if abs(c) >= abs(s):
            slope = s / c
            lo, hi = (0.0, math.inf) if c > 0 else (-math.inf, 0.0)
            perm = (0, 1)
        else:
            slope = c / s
            lo, hi = (0.0, math.inf) if s > 0 else (-math.inf, 0.0)
            perm = (1, 0)
        phi = poly_field([0.0, slope], name=f"{name}-slope")
        return graph_cell_1d(phi, lo, hi, abs(slope), n=2, permutation=perm,
                             name=name)

    def region_target(self, desc: SectorUnion, w_oracle, name) -> BumpTarget:
        boundary = []
        for k, a in enumerate(desc.boundary_angles()):
            unit = np.array([math.cos(a), math.sin(a)])
            if float(self.w.unit_distance(np.array([a]))[()] if np.ndim(
                    self.w.unit_distance(np.array([a]))) else
                    self.w.unit_distance(np.array([a]))) <= 1e-12:
                continue
            if float(w_oracle.eval(unit)) <= 1e-12 + w_oracle.covering_radius:
                continue
            boundary.append(target_graph_cell(self.ray_cell(a, f"{name}-edge{k}")))
        return target_region(desc.oracle(name), desc.contains, boundary,
                             dim=2, name=name)

    def sample_desc(self, desc: SectorUnion, num=48, radii=None):
        radii = self.radii if radii is None else radii
        return desc.sample_points(radii, per_arc=num)


class CellRegion:
    """A stratum reused as its own carved core, valid when relative
    neighborhoods provably stay inside the stratum (checked by sampling)."""

    def __init__(self, cell: Cell, structure: "DisjointStructure"):
        self.cell = cell
        self.structure = structure
        self.contains = cell.contains
        self._oracle = cell.to_oracle()

    def distance(self, pts):
        return np.asarray(self._oracle.eval(pts), dtype=float)

    def oracle(self, name=None):
        return self._oracle

    def minus(self, other: "CellRegion") -> "CellRegion":
        self.structure.verify_disjoint(other, self)
        return self

    def sample(self):
        return self.structure.cell_samples(self.cell)


class DisjointStructure:
    """Plane scenes whose open strata touch only across W (curve complements).

    g_eta returns the core itself after verifying that no sample of any other
    stratum falls in the requested neighborhood; if the scene does not have
    that separation the pipeline refuses instead of guessing.
    """

    def __init__(self, w_oracle, cells, span=30.0):
        self.w_oracle = w_oracle
        self.cells = list(cells)
        self.span = span
        self._samples = {}

    def w_distance(self, pts):
        return np.asarray(self.w_oracle.eval(pts), dtype=float)

    def cell_samples(self, cell: Cell):
        if cell.name not in self._samples:
            ts = np.linspace(-self.span, self.span, 61)
            offs = np.geomspace(1e-3, self.span, 12)
            pts = []
            lo_f, hi_f = cell.psi1, cell.psi2
            for t in ts:
                base_pt = np.array([[t]])
                lo_v = cell._bound_values(lo_f, base_pt, -math.inf)
                hi_v = cell._bound_values(hi_f, base_pt, math.inf)
                lo_v = float(np.min(lo_v)) if np.ndim(lo_v) else float(lo_v)
                hi_v = float(np.max(hi_v)) if np.ndim(hi_v) else float(hi_v)
                for o in offs:
                    if math.isfinite(lo_v):
                        pts.append(cell.ambient_coords(np.array([t, lo_v + o])))
                    if math.isfinite(hi_v):
                        pts.append(cell.ambient_coords(np.array([t, hi_v - o])))
            pts = np.asarray(pts)
            pts = pts[np.asarray(cell.contains(pts), dtype=bool)]
            self._samples[cell.name] = pts
        return self._samples[cell.name]

    def cell_desc(self, cell: Cell) -> CellRegion:
        if cell.kind != "open":
            raise UnsupportedScene(
                "separated-strata scenes support open strata only")
        return CellRegion(cell, self)

    def g_eta(self, desc: CellRegion, eta: float) -> CellRegion:
        for other in self.cells:
            if other.name == desc.cell.name:
                continue
            pts = self.cell_samples(other)
            if len(pts) == 0:
                continue
            d_z = desc.distance(pts)
            d_w = self.w_distance(pts)
            if np.any(d_z < eta * d_w):
                raise UnsupportedScene(
                    f"neighborhood of {desc.cell.name} reaches {other.name}; "
                    "the scene is not W-separated")
        return desc

    def verify_disjoint(self, grown: CellRegion, core: CellRegion):
        pts = self.cell_samples(core.cell)
        if len(pts) and np.any(np.asarray(grown.contains(pts), dtype=bool)):
            raise UnsupportedScene(
                f"strata {core.cell.name} and {grown.cell.name} overlap")

    def region_target(self, desc: CellRegion, w_oracle, name) -> BumpTarget:
        # the off-W boundary must be empty for this family; verify by sampling
        boundary_pts = desc.cell.boundary_oracle()
        probe = self.cell_samples(desc.cell)
        if len(probe):
            d_b = np.asarray(boundary_pts.eval(probe), dtype=float)
            near = probe[d_b < 1e-2]
            if len(near):
                d_w = self.w_distance(near)
                if np.any(d_w > 1e-2 + self.w_oracle.covering_radius + 1e-9):
                    raise UnsupportedScene(
                        f"stratum {desc.cell.name} has boundary off W")
        return target_region(desc.oracle(name), desc.contains, [], dim=2,
                             name=name)

    def sample_desc(self, desc: CellRegion, num=None):
        return desc.sample()


# ---------------------------------------------------------------------------
# canonical builders
# ---------------------------------------------------------------------------

def strat_points_complement_1d(points, name="points-1d") -> Stratification:
    """Complement of a finite point set on the line: the open gaps."""
    pts = np.sort(np.asarray(points, dtype=float).reshape(-1))
    W = PointSetOracle(pts[:, None], target="W")
    bounds = [-math.inf] + list(pts) + [math.inf]
    cells = [open_interval_cell(bounds[i], bounds[i + 1], name=f"c{i + 1}")
             for i in range(len(bounds) - 1)]
    return Stratification(W, cells, structure=Line1DStructure(pts), name=name)


def strat_half_line_scene(name="half-line") -> Stratification:
    """W = closed negative x-axis; strata: positive x-axis graph cell and the
    two open half-planes."""
    W = RaySegmentOracle([0.0, 0.0], [-1.0, 0.0], 0.0, math.inf, target="W")
    ray = graph_cell_1d(poly_field([0.0], "zero"), 0.0, math.inf, 0.0,
                        n=2, name="c1")
    upper = open_band_cell(-math.inf, math.inf, 0.0, math.inf, name="c2")
    lower = open_band_cell(-math.inf, math.inf, -math.inf, 0.0, name="c3")
    structure = ConicalStructure(SectorUnion(rays=[math.pi]))
    return Stratification(W, [ray, upper, lower], structure=structure, name=name)


def strat_graph_curve_complement(coeffs, lipschitz_M=None, span=30.0,
                                 name="curve-complement") -> Stratification:
    """W = a polynomial graph curve; strata: the open regions above and below."""
    coeffs = np.asarray(coeffs, dtype=float)
    curve_phi = poly_field(coeffs, "curve")
    w_cell = graph_cell_1d(curve_phi, -math.inf, math.inf,
                           _poly_slope_bound(coeffs, span), n=2, name="Wcurve")
    W = w_cell.to_oracle(samples=8192, span=span)
    W.target = "W"
    if lipschitz_M is None:
        lipschitz_M = _poly_slope_bound(coeffs, span)
    above = open_band_cell(-math.inf, math.inf, curve_phi, math.inf,
                           lipschitz_M=lipschitz_M, name="c1")
    below = open_band_cell(-math.inf, math.inf, -math.inf, curve_phi,
                           lipschitz_M=lipschitz_M, name="c2")
    cells = [above, below]
    structure = DisjointStructure(W, cells, span=span)
    return Stratification(W, cells, structure=structure, name=name)


def _poly_slope_bound(coeffs, span) -> float:
    d = np.polynomial.polynomial.polyder(np.asarray(coeffs, dtype=float))
    ts = np.linspace(-span, span, 4001)
    if d.size == 0:
        return 0.0
    return float(np.abs(np.polynomial.polynomial.polyval(ts, d)).max()) * 1.01
