"""Lipschitz cells (open or graph form), stratifications, and their validators.

A cell lives in permuted coordinates y = x[perm]: an open cell stacks an
interval tower bounded by fields psi1 < psi2, a graph cell is
{(u, phi(u)) : u in T} for an open base T and a Lipschitz map phi.  Cells are
trusted inputs; validators probe the derivative envelopes
|D^a psi(u)| <= M * d(u, dT)^(1-|a|) numerically and fit the observed
constant rather than certify it globally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import EmptyGrid, EmptyStratification, NegativeLipschitz
from .geometry import (DistanceOracle, EmptySetOracle, FuncOracle,
                       PointSetOracle, RaySegmentOracle, ScalarField,
                       UnionOracle, as_points, fd_partial_batch,
                       multi_index_enumerate, multi_index_order)
from .report import CertificateReport

INF = math.inf


def lip_to_L(M: float) -> float:
    """Slope constant L = 1 / sqrt(1 + M^2) in (0, 1] of a Lipschitz-M graph."""
    if M < 0:
        raise NegativeLipschitz(f"Lipschitz constant {M} < 0")
    return math.sqrt(1.0 / (1.0 + M * M))


def poly_field(coeffs, name="poly") -> ScalarField:
    """1-variable polynomial field with exact derivatives of every order."""
    coeffs = np.asarray(coeffs, dtype=float)

    def val(pts):
        return np.polynomial.polynomial.polyval(np.asarray(pts)[..., 0], coeffs)

    def deriv(pts, alpha):
        c = coeffs
        for _ in range(alpha[0]):
            c = np.polynomial.polynomial.polyder(c)
        return np.polynomial.polynomial.polyval(np.asarray(pts)[..., 0], c)

    f = ScalarField(1, val, derivative=deriv, name=name)
    f.coeffs = coeffs
    return f


@dataclass
class Cell:
    """One stratum: an open cell or the graph of a map over one."""

    n: int
    m: int
    kind: str                     # "open" | "graph"
    permutation: tuple            # y_i = x[perm[i]]
    lipschitz_M: float = 0.0
    base: "Cell | None" = None    # open cell one dimension down (None for 1-D)
    psi1: object = None           # float (incl +-inf) or ScalarField
    psi2: object = None
    phi: tuple = ()               # graph components, ScalarFields on the base
    name: str = ""

    def __post_init__(self):
        if self.lipschitz_M < 0:
            raise NegativeLipschitz(self.name)
        if self.kind == "graph" and self.m >= self.n:
            raise ValueError("graph cells need dim m < n")
        if self.permutation is None:
            self.permutation = tuple(range(self.n))
        self.permutation = tuple(self.permutation)

    @property
    def L(self) -> float:
        return lip_to_L(self.lipschitz_M)

    @property
    def dim(self) -> int:
        return self.m

    # -- coordinates ---------------------------------------------------------

    def cell_coords(self, pts):
        pts = as_points(pts, self.n)
        return pts[..., list(self.permutation)]

    def ambient_coords(self, ys):
        ys = np.asarray(ys, dtype=float)
        out = np.empty_like(ys)
        for i, j in enumerate(self.permutation):
            out[..., j] = ys[..., i]
        return out

    # -- interval towers -------------------------------------------------------

    def interval(self):
        """(lo, hi) for a 1-D open cell with constant bounds."""
        if self.kind != "open" or self.m != 1 or self.base is not None:
            raise ValueError("not a 1-D open interval cell")
        return float(self.psi1), float(self.psi2)

    def base_interval(self):
        if self.kind == "graph":
            return self.base.interval()
        raise ValueError("base_interval is for graph cells")

    def base_boundary_distance(self, u):
        """d(u, boundary of the base interval); inf when it is the whole line."""
        lo, hi = self.base_interval() if self.kind == "graph" else self.interval()
        u = np.asarray(u, dtype=float)
        d = np.full(u.shape, INF)
        if math.isfinite(lo):
            d = np.minimum(d, np.abs(u - lo))
        if math.isfinite(hi):
            d = np.minimum(d, np.abs(hi - u))
        return d

    def base_contains(self, u):
        lo, hi = self.base_interval()
        u = np.asarray(u, dtype=float)
        return (u > lo) & (u < hi)

    # -- evaluation ------------------------------------------------------------

    def phi_values(self, u):
        """Graph map values at base points u (shape (...,) -> (..., n-m))."""
        u = np.asarray(u, dtype=float)
        cols = [np.asarray(comp.value(u[..., None]), dtype=float) for comp in self.phi]
        return np.stack([np.broadcast_to(c, u.shape) for c in cols], axis=-1)

    def graph_points(self, u):
        """Ambient points (u, phi(u)) for base parameters u (m = 1)."""
        u = np.asarray(u, dtype=float)
        ys = np.concatenate([u[..., None], self.phi_values(u)], axis=-1)
        return self.ambient_coords(ys)

    def contains(self, pts):
        """Open membership (graph cells always report False: measure zero)."""
        if self.kind != "open":
            return np.zeros(as_points(pts, self.n).shape[:-1], dtype=bool)
        ys = self.cell_coords(pts)
        if self.n == 1:
            lo, hi = self.interval()
            return (ys[..., 0] > lo) & (ys[..., 0] < hi)
        inside = self.base.contains(ys[..., :-1]) if self.base is not None else True
        last = ys[..., -1]
        lo = self._bound_values(self.psi1, ys[..., :-1], -INF)
        hi = self._bound_values(self.psi2, ys[..., :-1], INF)
        return inside & (last > lo) & (last < hi)

    @staticmethod
    def _bound_values(bound, base_pts, default):
        if bound is None:
            return default
        if isinstance(bound, ScalarField):
            return np.asarray(bound.value(base_pts), dtype=float)
        return float(bound)

    # -- oracles ---------------------------------------------------------------

    def to_oracle(self, samples=4096, span=100.0) -> DistanceOracle:
        """Distance oracle for the cell as a point set (exact when affine)."""
        if self.kind == "graph":
            return self._graph_oracle(samples, span)
        return self._open_oracle(samples, span)

    def _graph_oracle(self, samples, span):
        lo, hi = self.base_interval()
        degree_le_1 = all(getattr(c, "coeffs", np.array([0.0, 0.0, 1.0])).size <= 2
                          for c in self.phi)
        if degree_le_1 and self.n - self.m == 1:
            c = getattr(self.phi[0], "coeffs", np.array([0.0]))
            c0 = float(c[0]) if c.size > 0 else 0.0
            c1 = float(c[1]) if c.size > 1 else 0.0
            anchor_y = np.zeros(self.n)
            anchor_y[0], anchor_y[1] = 0.0, c0
            dir_y = np.zeros(self.n)
            dir_y[0], dir_y[1] = 1.0, c1
            scale = math.sqrt(1.0 + c1 * c1)
            t_lo = lo * scale if math.isfinite(lo) else -INF
            t_hi = hi * scale if math.isfinite(hi) else INF
            return RaySegmentOracle(self.ambient_coords(anchor_y),
                                    self.ambient_coords(dir_y), t_lo, t_hi,
                                    target=f"cell:{self.name}")
        lo_ = lo if math.isfinite(lo) else -span
        hi_ = hi if math.isfinite(hi) else span
        u = np.linspace(lo_, hi_, samples)
        pts = self.graph_points(u)
        gaps = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
        from .geometry import CloudOracle
        return CloudOracle(pts, covering_radius=0.5 * float(gaps.max()),
                           target=f"cell:{self.name}")

    def _open_oracle(self, samples, span):
        if self.n == 1:
            lo, hi = self.interval()

            def dist(pts):
                x = np.asarray(pts)[..., 0]
                d = np.zeros(x.shape)
                if math.isfinite(lo):
                    d = np.maximum(d, lo - x)
                if math.isfinite(hi):
                    d = np.maximum(d, x - hi)
                return d

            return FuncOracle(1, dist, 0.0, f"cell:{self.name}")
        if (not isinstance(self.psi1, ScalarField)
                and not isinstance(self.psi2, ScalarField)):
            # product of intervals in cell coordinates: exact box distance
            lo_b, hi_b = self.base.interval()
            lo2 = self._bound_values(self.psi1, None, -INF)
            hi2 = self._bound_values(self.psi2, None, INF)

            def dist(pts):
                ys = self.cell_coords(pts)
                d1 = np.zeros(ys.shape[:-1])
                if math.isfinite(lo_b):
                    d1 = np.maximum(d1, lo_b - ys[..., 0])
                if math.isfinite(hi_b):
                    d1 = np.maximum(d1, ys[..., 0] - hi_b)
                d2 = np.zeros(ys.shape[:-1])
                if math.isfinite(lo2):
                    d2 = np.maximum(d2, lo2 - ys[..., 1])
                if math.isfinite(hi2):
                    d2 = np.maximum(d2, ys[..., 1] - hi2)
                return np.sqrt(d1 * d1 + d2 * d2)

            return FuncOracle(self.n, dist, 0.0, f"cell:{self.name}")
        # curved bound: inside -> 0, else distance to the sampled boundary
        boundary = self.boundary_oracle(samples, span)

        def dist(pts):
            inside = self.contains(pts)
            d = np.asarray(boundary.eval(pts), dtype=float)
            return np.where(inside, 0.0, d)

        return FuncOracle(self.n, dist, boundary.covering_radius, f"cell:{self.name}")

    def boundary_oracle(self, samples=4096, span=100.0) -> DistanceOracle:
        """Oracle for the topological boundary (closure minus the cell)."""
        if self.kind == "graph":
            pts = [self.graph_points(np.array([t]))[0]
                   for t in self.base_interval() if math.isfinite(t)]
            return PointSetOracle(np.array(pts), f"d{self.name}") if pts \
                else EmptySetOracle(self.n)
        if self.n == 1:
            lo, hi = self.interval()
            pts = [[t] for t in (lo, hi) if math.isfinite(t)]
            return PointSetOracle(np.array(pts), f"d{self.name}") if pts \
                else EmptySetOracle(self.n)
        members = []
        lo_b, hi_b = self.base.interval()
        for bound in (self.psi1, self.psi2):
            if isinstance(bound, ScalarField):
                graph = Cell(self.n, self.n - 1, "graph", self.permutation,
                             lipschitz_M=self.lipschitz_M, base=self.base,
                             phi=(bound,), name=f"{self.name}-edge")
                members.append(graph.to_oracle(samples, span))
            elif bound is not None and math.isfinite(float(bound)):
                anchor_y = np.array([0.0, float(bound)])
                dir_y = np.array([1.0, 0.0])
                members.append(RaySegmentOracle(
                    self.ambient_coords(anchor_y), self.ambient_coords(dir_y),
                    lo_b if math.isfinite(lo_b) else -INF,
                    hi_b if math.isfinite(hi_b) else INF,
                    target=f"d{self.name}"))
        for t in (lo_b, hi_b):
            if math.isfinite(t):
                lo2 = self._bound_values(self.psi1, np.array([[t]]), -INF)
                hi2 = self._bound_values(self.psi2, np.array([[t]]), INF)
                lo2 = float(np.min(lo2)) if np.ndim(lo2) else float(lo2)
                hi2 = float(np.max(hi2)) if np.ndim(hi2) else float(hi2)
                anchor_y = np.array([t, 0.0])
                dir_y = np.array([0.0, 1.0])
                members.append(RaySegmentOracle(
                    self.ambient_coords(anchor_y), self.ambient_coords(dir_y),
                    lo2 if math.isfinite(lo2) else -INF,
                    hi2 if math.isfinite(hi2) else INF,
                    target=f"d{self.name}-side"))
        return UnionOracle(members, f"d{self.name}") if members \
            else EmptySetOracle(self.n)

    def boundary_points_off_w(self, w_oracle, tol=1e-9):
        """Finite boundary vertices not on W (graph-cell recursion anchors)."""
        pts = []
        if self.kind == "graph":
            for t in self.base_interval():
                if math.isfinite(t):
                    pts.append(self.graph_points(np.array([t]))[0])
        elif self.n == 1:
            pts = [np.array([t]) for t in self.interval() if math.isfinite(t)]
        out = []
        for pt in pts:
            if float(w_oracle.eval(pt)) > tol + w_oracle.covering_radius:
                out.append(pt)
        return out


# ---------------------------------------------------------------------------
# constructors for the common shapes
# ---------------------------------------------------------------------------

def open_interval_cell(lo, hi, name="") -> Cell:
    return Cell(1, 1, "open", (0,), psi1=float(lo), psi2=float(hi), name=name)


def graph_cell_1d(phi: ScalarField, lo, hi, lipschitz_M, n=2,
                  permutation=None, name="") -> Cell:
    base = open_interval_cell(lo, hi, name=f"{name}-base")
    return Cell(n, 1, "graph", permutation or tuple(range(n)),
                lipschitz_M=lipschitz_M, base=base, phi=(phi,), name=name)


def open_band_cell(lo_b, hi_b, psi1, psi2, lipschitz_M=0.0, n=2,
                   permutation=None, name="") -> Cell:
    base = open_interval_cell(lo_b, hi_b, name=f"{name}-base")
    return Cell(n, n, "open", permutation or tuple(range(n)),
                lipschitz_M=lipschitz_M, base=base, psi1=psi1, psi2=psi2,
                name=name)


# ---------------------------------------------------------------------------
# validators
# ---------------------------------------------------------------------------

def _bound_fields(cell: Cell):
    if cell.kind == "graph":
        return list(cell.phi)
    out = []
    for bound in (cell.psi1, cell.psi2):
        if isinstance(bound, ScalarField):
            out.append(bound)
    return out


def validate_cell(cell: Cell, p: int, grid, stage="validate_cell") -> CertificateReport:
    """Probe the derivative envelopes of the bounding/graph maps on a base grid.

    Order-1 derivatives are checked against the declared Lipschitz constant
    (they must not exceed it); higher orders have no declared constant and
    are fitted.  The report carries the fitted envelope constant in
    extras['fitted_M'].
    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise EmptyGrid(cell.name)
    report = CertificateReport()
    fields = _bound_fields(cell)

    if cell.kind == "open" and cell.n == 1:
        lo, hi = cell.interval()
        report.add(stage, "interval_nonempty", cell.name, 0.0,
                   0.0 if lo < hi else 1.0)
        report.extras["fitted_M"] = 0.0
        return report

    if cell.kind == "graph" or cell.base is not None:
        lo, hi = cell.base_interval() if cell.kind == "graph" else cell.interval() \
            if cell.n == 1 else cell.base.interval()
        if np.any(grid <= lo) or np.any(grid >= hi):
            raise ValueError("grid must lie inside the cell's base domain")

    d_bound = cell.base_boundary_distance(grid) if cell.kind == "graph" else \
        cell.base.base_boundary_distance(grid) if cell.base is not None else \
        np.full(grid.shape, INF)
    steps = np.maximum(1e-9, 1e-3 * np.where(np.isfinite(d_bound), d_bound, 1.0))
    fitted = 0.0
    for f in fields:
        for alpha in multi_index_enumerate(1, p):
            order = multi_index_order(alpha)
            if order == 0:
                continue
            if f.derivative_kind == "exact":
                obs = np.abs(np.asarray(f.derivative(grid[:, None], alpha), dtype=float))
            else:
                obs = np.abs(fd_partial_batch(f, grid[:, None], alpha, steps))
            envelope = d_bound ** (1 - order)
            ratios = np.where(envelope > 0, obs / np.where(envelope > 0, envelope, 1.0), np.inf)
            ratios = np.where(np.isfinite(envelope), ratios, np.where(obs > 1e-9, np.inf, 0.0))
            worst = int(np.nanargmax(ratios))
            fitted = max(fitted, float(ratios[worst]))
            if order == 1:
                report.add(stage, f"lipschitz_envelope|{f.name}",
                           f"u={grid[worst]:.6g}", cell.lipschitz_M,
                           float(obs[worst]),
                           margin=5e-3 * max(cell.lipschitz_M, 1e-12))
            else:
                report.add(stage, f"fitted_envelope|{f.name}|alpha={alpha}",
                           f"u={grid[worst]:.6g}", max(float(ratios[worst]), 1e-300),
                           float(ratios[worst]) * (1.0 if np.isfinite(envelope[worst]) else 1.0))
        # sampled increments against the declared Lipschitz constant
        us = np.sort(grid)
        vals = np.asarray(f.value(us[:, None]), dtype=float)
        inc = np.abs(np.diff(vals))
        du = np.diff(us)
        quotient = np.where(du > 0, inc / np.where(du > 0, du, 1.0), 0.0)
        worst = int(np.argmax(quotient))
        report.add(stage, f"lipschitz_increments|{f.name}",
                   f"u=[{us[worst]:.6g},{us[worst + 1]:.6g}]",
                   cell.lipschitz_M, float(quotient[worst]),
                   margin=5e-3 * max(cell.lipschitz_M, 1e-12))

    if cell.kind == "open" and cell.n > 1:
        lo_v = cell._bound_values(cell.psi1, grid[:, None], -INF)
        hi_v = cell._bound_values(cell.psi2, grid[:, None], INF)
        gap = np.min(np.asarray(hi_v) - np.asarray(lo_v))
        report.add(stage, "psi1_lt_psi2", cell.name, 0.0, 0.0 if gap > 0 else 1.0)

    report.extras["fitted_M"] = max(fitted, cell.lipschitz_M)
    return report


def cell_distance_envelope_check(cell: Cell, z_oracle: DistanceOracle, x,
                                 stage="envelope") -> CertificateReport:
    """Verify the graph-distance sandwich L|w - phi(u)| <= d(x, Z) <= |w - phi(u)|
    at x in the slab, and d(x, Z) >= L d(x, dZ) outside it."""
    report = CertificateReport()
    x = as_points(x, cell.n).reshape(cell.n)
    ys = cell.cell_coords(x)
    u, w = ys[:cell.m], ys[cell.m:]
    cr = z_oracle.covering_radius
    d = float(z_oracle.eval(x))
    if bool(np.all(cell.base_contains(u))):
        gap = float(np.linalg.norm(w - cell.phi_values(u[0])[..., :]))
        # lower half: L*gap <= d  (phrased: L*gap - d <= 0)
        report.add(stage, "sandwich_lower", f"x={x.tolist()}", 0.0,
                   max(0.0, cell.L * gap - d), margin=cr + 1e-9 * (1 + abs(gap)))
        # upper half: d <= gap
        report.add(stage, "sandwich_upper", f"x={x.tolist()}", gap, d,
                   margin=cr + 1e-9 * (1 + abs(gap)))
    else:
        db = float(cell.boundary_oracle().eval(x))
        report.add(stage, "boundary_escape", f"x={x.tolist()}", 0.0,
                   max(0.0, cell.L * db - d), margin=cr + 1e-9 * (1 + abs(db)))
    return report


def graph_compose_g(cell: Cell, g: ScalarField, p: int, grid,
                    stage="graph_compose") -> tuple[ScalarField, CertificateReport]:
    """Compose u -> g(u, phi(u)) and fit its derivative envelope on the grid.

    The composed field evaluates exactly; derivative queries fall back to
    finite differences (flagged by derivative_kind), so the report records
    approximate probes.  extras['fitted_B'] is the observed envelope constant
    max |D^a comp| * d(u, dT)^(|a|-1).
    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise EmptyGrid(cell.name)

    def value(pts):
        u = np.asarray(pts)[..., 0]
        return np.asarray(g.value(cell.graph_points(u)), dtype=float)

    lo, hi = cell.base_interval()
    composed = ScalarField(
        1, value, name=f"{g.name}|{cell.name}",
        domain=lambda pts: (np.asarray(pts)[..., 0] > lo) & (np.asarray(pts)[..., 0] < hi))

    report = CertificateReport()
    d_bound = cell.base_boundary_distance(grid)
    steps = np.maximum(1e-9, 1e-3 * np.where(np.isfinite(d_bound), d_bound, 1.0))
    fitted = 0.0
    for alpha in multi_index_enumerate(1, p):
        order = multi_index_order(alpha)
        if order == 0:
            continue
        obs = np.abs(fd_partial_batch(composed, grid[:, None], alpha, steps))
        envelope = np.where(np.isfinite(d_bound), d_bound, 1.0) ** (1 - order)
        ratios = obs / envelope
        worst = int(np.argmax(ratios))
        fitted = max(fitted, float(ratios[worst]))
        report.add(stage, f"fitted_envelope|alpha={alpha}",
                   f"u={grid[worst]:.6g}", max(float(ratios[worst]), 1e-300),
                   float(ratios[worst]))
    report.extras["fitted_B"] = fitted
    return composed, report


# ---------------------------------------------------------------------------
# stratifications
# ---------------------------------------------------------------------------

@dataclass
class Stratification:
    """A validated-by-sampling decomposition of the complement of W."""

    W: DistanceOracle
    cells: list
    structure: object = None       # optional exact set-algebra backend
    name: str = ""
    extras: dict = dfield(default_factory=dict)

    @property
    def n(self) -> int:
        return self.W.n

    @property
    def dims(self) -> list[int]:
        return [c.dim for c in self.cells]

    def sorted_by_dim(self) -> "Stratification":
        order = sorted(range(len(self.cells)), key=lambda i: self.cells[i].dim)
        return Stratification(self.W, [self.cells[i] for i in order],
                              structure=self.structure, name=self.name,
                              extras=self.extras)

    def cell_named(self, name: str):
        for c in self.cells:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_stratification(strat: Stratification, p: int, grid,
                            stage="validate_stratification",
                            cell_grids=None) -> CertificateReport:
    """Coverage, disjointness, boundary condition, dimension ordering, and
    per-cell envelope validation on ambient sample points off W."""
    if not strat.cells:
        raise EmptyStratification(strat.name)
    pts = as_points(grid, strat.n).reshape(-1, strat.n)
    if pts.size == 0:
        raise EmptyGrid(strat.name)
    report = CertificateReport()

    dims = strat.dims
    ordered = all(dims[i] <= dims[i + 1] for i in range(len(dims) - 1))
    report.add(stage, "dimension_ordering" + ("" if ordered else "_warning"),
               f"dims={dims}", 1.0, 1.0 if ordered else 0.0, margin=1.0)

    d_w = np.asarray(strat.W.eval(pts), dtype=float).reshape(len(pts))
    tol = 1e-9 * (1.0 + np.linalg.norm(pts, axis=-1))
    inside_counts = np.zeros(len(pts), dtype=int)
    near_lower = np.zeros(len(pts), dtype=bool)
    for c in strat.cells:
        if c.kind == "open":
            inside_counts += np.asarray(c.contains(pts), dtype=int)
        else:
            d_c = np.asarray(c.to_oracle().eval(pts), dtype=float).reshape(len(pts))
            near_lower |= d_c <= tol + c.to_oracle().covering_radius
    covered = (inside_counts == 1) | ((inside_counts == 0) & near_lower)
    n_gap = int(np.sum(~covered & (inside_counts == 0)))
    n_overlap = int(np.sum(inside_counts > 1))
    report.add(stage, "coverage", f"{len(pts)} samples", 0.0, float(n_gap))
    report.add(stage, "disjointness", f"{len(pts)} samples", 0.0, float(n_overlap))

    # boundary condition: sampled boundary points off W must sit on strata of
    # strictly lower dimension
    for c in strat.cells:
        for bp in c.boundary_points_off_w(strat.W):
            ok = False
            for other in strat.cells:
                if other.dim >= c.dim:
                    continue
                d_o = float(other.to_oracle().eval(bp))
                if d_o <= 1e-9 * (1 + np.linalg.norm(bp)) + other.to_oracle().covering_radius:
                    ok = True
                    break
            report.add(stage, f"boundary_in_lower_strata|{c.name}",
                       f"x={np.asarray(bp).tolist()}", 0.0, 0.0 if ok else 1.0)

    for c in strat.cells:
        if cell_grids and c.name in cell_grids:
            base_grid = cell_grids[c.name]
        else:
            base_grid = _default_base_grid(c)
        if base_grid is not None:
            report.extend(validate_cell(c, p, base_grid,
                                        stage=f"validate_cell|{c.name}"))
        else:
            report.extend(validate_cell(c, p, np.array([0.0]),
                                        stage=f"validate_cell|{c.name}")
                          if c.kind == "open" and c.n == 1 else CertificateReport())
    return report


def _default_base_grid(cell: Cell):
    try:
        if cell.kind == "graph":
            lo, hi = cell.base_interval()
        elif cell.n == 1:
            return None
        else:
            lo, hi = cell.base.interval()
    except ValueError:
        return None
    lo_ = lo if math.isfinite(lo) else -50.0
    hi_ = hi if math.isfinite(hi) else 50.0
    pad = 1e-3 * (hi_ - lo_)
    return np.linspace(lo_ + pad, hi_ - pad, 101)
