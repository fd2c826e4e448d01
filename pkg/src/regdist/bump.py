"""Smooth bumps with controlled plateau and support, and partitions of unity.

A bump for a set Z relative to W is an order-0 certified function with
``psi == 1`` on G_rho(Z, W) and support inside G_eta(Z, W).  Bumps are built
by induction on the dimension of Z: points get shaped radial plateaus, graph
cells get the squared-transverse-ratio formula blended with a recursive bump
for the off-W part of their boundary, open regions are indicators glued by
the boundary bump, and unions go through 1 - P(sum psi_i).  Certificate
constants flow through the product/reciprocal/composition calculus, so every
bump carries a sound envelope constant; plateau and support are then checked
by sampling, not assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .certificates import (PlateauField, RegularFunction, RegularityCertificate,
                           cert_compose, cert_product, cert_reciprocal,
                           composition_bound, smoothstep_P)
from .cells import Cell, graph_compose_g, validate_cell
from .errors import (CoverageGap, EtaTooLarge, MixedReference, OnW,
                     RecursionBase)
from .geometry import (DistanceOracle, EmptySetOracle, PointSetOracle,
                       ScalarField, UnionOracle, as_points,
                       g_eta_contains_many, multi_index_enumerate,
                       multi_index_factorial, multi_index_order)
from .report import CertificateReport


# ---------------------------------------------------------------------------
# targets: how callers present the set Z
# ---------------------------------------------------------------------------

@dataclass
class BumpTarget:
    """A set Z presented in a bump-able form.

    kinds: "point" (a single point off W), "cell" (a graph cell), "region"
    (an open set given by a membership predicate whose off-W boundary is a
    list of lower-dimensional targets), "union" (a finite union of targets).
    """

    kind: str
    oracle: DistanceOracle
    name: str = ""
    point: np.ndarray | None = None
    cell: Cell | None = None
    contains: object = None
    boundary: tuple = ()
    parts: tuple = ()
    dim: int = 0


def target_point(z, name="pt") -> BumpTarget:
    z = np.asarray(z, dtype=float)
    return BumpTarget("point", PointSetOracle(z[None, :], name), name=name,
                      point=z, dim=0)


def target_graph_cell(cell: Cell, name=None) -> BumpTarget:
    return BumpTarget("cell", cell.to_oracle(), name=name or cell.name,
                      cell=cell, dim=cell.dim)


def target_region(oracle, contains, boundary, dim, name="region") -> BumpTarget:
    return BumpTarget("region", oracle, name=name, contains=contains,
                      boundary=tuple(boundary), dim=dim)


def target_open_cell(cell: Cell, w_oracle, name=None) -> BumpTarget:
    """Open cell as a region target; boundary = finite off-W vertices."""
    boundary = tuple(target_point(bp, name=f"{cell.name}-bp")
                     for bp in cell.boundary_points_off_w(w_oracle))
    return BumpTarget("region", cell.to_oracle(), name=name or cell.name,
                      contains=cell.contains, boundary=boundary, dim=cell.dim)


def target_union(parts, name="union") -> BumpTarget:
    parts = tuple(parts)
    return BumpTarget("union", UnionOracle([t.oracle for t in parts], name),
                      name=name, parts=parts,
                      dim=max(t.dim for t in parts))


# ---------------------------------------------------------------------------
# bump constants and bump functions
# ---------------------------------------------------------------------------

@dataclass
class BumpConstants:
    """The constant pack of one graph-cell bump (others fill what applies).

    eta: support scale; eta_prime in (0, eta): support of the recursive
    boundary bump; rho_prime in (0, eta_prime): its plateau; delta in (0, L):
    slab-escape scale; gamma: squared-ratio cap; rho in (0, eta): plateau of
    the output.
    """

    eta: float
    rho: float
    eta_prime: float | None = None
    rho_prime: float | None = None
    delta: float | None = None
    gamma: float | None = None
    L: float | None = None

    def check_rows(self, stage="bump_constants") -> CertificateReport:
        """The strict inequalities the constants must satisfy (with the 0.9
        safety margins they were built with)."""
        rep = CertificateReport()

        def lt(check, lhs, rhs):
            rep.add(stage, check, "", rhs, lhs)  # pass iff lhs <= rhs

        lt("rho_positive", 0.0, self.rho)
        lt("rho_lt_eta", self.rho, self.eta)
        if self.L is not None:
            lt("eta_lt_L", self.eta, self.L)
        if self.eta_prime is not None:
            lt("eta_prime_lt_eta", self.eta_prime, self.eta)
        if self.rho_prime is not None and self.eta_prime is not None:
            lt("rho_prime_lt_eta_prime", self.rho_prime, self.eta_prime)
        if self.delta is not None and self.L is not None:
            lt("delta_lt_L", self.delta, self.L)
        if self.gamma is not None and self.rho_prime is not None and self.delta is not None:
            cap = 3.0 * (self.rho_prime * self.delta) ** 2 / (
                2.0 * (1.0 + self.rho_prime * self.delta) ** 2)
            lt("gamma_cap", self.gamma, cap)
            lt("gamma_positive", 0.0, self.gamma)
        if self.rho_prime is not None and self.delta is not None:
            lt("rho_lt_rho_prime_delta", self.rho, self.rho_prime * self.delta)
        if self.gamma is not None and self.L is not None:
            slab = self.L * math.sqrt(self.gamma) / (math.sqrt(3.0) + math.sqrt(self.gamma))
            lt("rho_slab_cap", self.rho, slab)
        return rep


@dataclass
class BumpFunction:
    """A plateau/support bump with its certificate and construction data."""

    rf: RegularFunction
    z_oracle: DistanceOracle
    w_oracle: DistanceOracle
    constants: BumpConstants
    plateau_rho: float
    support_eta: float
    lam: "BumpFunction | None" = None
    boundary_oracle: DistanceOracle | None = None
    name: str = ""

    def value(self, x):
        return self.rf.field.value(x)

    __call__ = value

    @property
    def cert(self):
        return self.rf.cert

    def plateau_support_report(self, grid, stage="bump") -> CertificateReport:
        """Sampled check: psi = 1 on in-verdicts for G_rho, psi = 0 on
        out-verdicts for G_eta, and 0 <= psi <= 1 everywhere."""
        pts = as_points(grid, self.w_oracle.n).reshape(-1, self.w_oracle.n)
        rep = CertificateReport()
        vals = np.asarray(self.rf.field.value(pts), dtype=float).reshape(len(pts))
        rep.add(stage, "range_low", f"{len(pts)} samples", 0.0,
                max(0.0, float(-vals.min())), margin=1e-12)
        rep.add(stage, "range_high", f"{len(pts)} samples", 1.0,
                float(vals.max()), margin=1e-12)
        verd_rho = g_eta_contains_many(self.z_oracle, self.w_oracle,
                                       self.plateau_rho, pts)
        on_plateau = verd_rho == 1
        if np.any(on_plateau):
            err = float(np.abs(vals[on_plateau] - 1.0).max())
            rep.add(stage, "plateau_one", f"{int(on_plateau.sum())} samples",
                    0.0, err, margin=1e-12)
        verd_eta = g_eta_contains_many(self.z_oracle, self.w_oracle,
                                       self.support_eta, pts)
        outside = verd_eta == -1
        if np.any(outside):
            err = float(np.abs(vals[outside]).max())
            rep.add(stage, "support_zero", f"{int(outside.sum())} samples",
                    0.0, err, margin=1e-12)
        return rep


def _const_one_rf(w_oracle, n, p) -> RegularFunction:
    fld = ScalarField(n, lambda pts: np.ones(np.asarray(pts).shape[:-1]), name="one")
    cert = RegularityCertificate(w_oracle, 0, p, 1e-12, sup_bound=1.0, lower_bound=1.0)
    return RegularFunction(fld, cert, name="one")


# ---------------------------------------------------------------------------
# point bumps
# ---------------------------------------------------------------------------

def _norm_derivative_coeff(alpha) -> float:
    """N with |D^alpha |y|| <= N * |y|^(1-|alpha|), via h(s)=sqrt(s), s=|y|^2:
    the outer derivatives obey |h^(m)(s)| <= c_m s^(1/2-m) and the inner
    quadratic contributes a factor 2 per block of order <= 2."""
    def outer(m):
        c = 1.0
        for j in range(m):
            c *= abs(0.5 - j)
        return c

    def inner(beta):
        return 2.0 if multi_index_order(beta) <= 2 else 0.0

    return composition_bound(alpha, outer, inner)


def bump_point(z, w_oracle: DistanceOracle, eta: float, p: int,
               name=None) -> BumpFunction:
    """Radial plateau around an off-W point: 1 - P of an affine radius map.

    Plateau ball radius r = (rho/(1-rho)) d(z, W) with rho = eta/4 (halved
    until r < R), outer radius R = 0.9 (eta/(1+eta)) d(z, W); these keep
    G_rho({z},W) inside the plateau ball and the support ball inside
    G_eta({z},W).
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    z = np.asarray(z, dtype=float)
    n = w_oracle.n
    dz = float(w_oracle.eval(z))
    if dz <= w_oracle.covering_radius:
        raise OnW(f"bump center {z.tolist()} lies on W")
    R = 0.9 * (eta / (1.0 + eta)) * dz
    rho = eta / 4.0
    r = (rho / (1.0 - rho)) * dz if rho < 1.0 else math.inf
    while not (r < 0.999 * R):
        rho *= 0.5
        r = (rho / (1.0 - rho)) * dz

    P = smoothstep_P(p)

    def value(pts):
        t = np.linalg.norm(np.asarray(pts) - z, axis=-1)
        arg = 1.0 / 3.0 + (R - t) / (3.0 * (R - r))
        return 1.0 - P._eval(arg[..., None])

    # envelope constant on the annulus r <= |x-z| <= R, pushed to d(x, W);
    # the inner radial powers |x-z|^(m-|alpha|) maximize at radius r
    band = 3.0 * (R - r)
    sups = P.sup_bounds(p)
    M = 1e-12
    for alpha in multi_index_enumerate(n, p):
        order = multi_index_order(alpha)
        if order == 0:
            continue
        bound_alpha = 0.0
        for m in range(1, order + 1):
            term = composition_bound(
                alpha,
                lambda mm, m=m: (sups[m] / band ** m) if mm == m else 0.0,
                lambda beta: _norm_derivative_coeff(beta))
            bound_alpha += term * r ** (m - order)
        M = max(M, bound_alpha * (dz + R) ** order)

    fld = ScalarField(n, value, name=name or "point-bump")
    cert = RegularityCertificate(w_oracle, 0, p, M, sup_bound=1.0)
    rf = RegularFunction(fld, cert, name=fld.name)
    consts = BumpConstants(eta=eta, rho=rho)
    return BumpFunction(rf, PointSetOracle(z[None, :], "z"), w_oracle, consts,
                        plateau_rho=rho, support_eta=eta,
                        boundary_oracle=EmptySetOracle(n),
                        name=fld.name)


# ---------------------------------------------------------------------------
# graph-cell bumps
# ---------------------------------------------------------------------------

def _fit_cell_constants(cell: Cell, w_oracle, p: int, grid_size=201):
    """Observed envelope constants for phi and the composed boundary distance
    g(u) = d((u, phi(u)), W) on a log-biased base grid."""
    lo, hi = cell.base_interval()
    lo_ = lo if math.isfinite(lo) else -50.0
    hi_ = hi if math.isfinite(hi) else 50.0
    if math.isfinite(lo) and not math.isfinite(hi):
        grid = lo + np.geomspace(1e-6, hi_ - lo, grid_size)
    elif math.isfinite(hi) and not math.isfinite(lo):
        grid = hi - np.geomspace(1e-6, hi - lo_, grid_size)
    elif math.isfinite(lo) and math.isfinite(hi):
        pad = 1e-6 * (hi - lo)
        grid = np.linspace(lo + pad, hi - pad, grid_size)
    else:
        grid = np.linspace(lo_, hi_, grid_size)
    rep_phi = validate_cell(cell, p, grid, stage="bump_fit_phi")
    from .geometry import field_from_oracle
    g_field = field_from_oracle(w_oracle, name="dW")
    composed, rep_g = graph_compose_g(cell, g_field, p, grid, stage="bump_fit_g")
    c_phi = max(rep_phi.extras["fitted_M"], 1e-9)
    c_g = max(rep_g.extras["fitted_B"], 1e-9)
    return c_phi, c_g, composed


def bump_cell(cell: Cell, w_oracle: DistanceOracle, eta: float, p: int,
              context=None, envelope_constants=None, name=None) -> BumpFunction:
    """Bump for a graph cell: transverse squared-ratio plateau blended with a
    recursive bump for the off-W boundary.

    Constant selection (each strict choice takes a 0.9 safety factor):
    delta = L/2, gamma = 0.9 * 3 (rho' delta)^2 / (2 (1 + rho' delta)^2),
    rho = 0.9 * min(rho' delta, L sqrt(gamma) / (sqrt(3) + sqrt(gamma))).
    """
    if cell.kind != "graph":
        raise ValueError("bump_cell needs a graph cell")
    L = cell.L
    if not (0 < eta < L):
        raise EtaTooLarge(f"eta={eta} must lie in (0, L={L})")
    n, m, p = cell.n, cell.m, int(p)

    boundary_pts = cell.boundary_points_off_w(w_oracle)
    eta_prime = eta / 2.0
    if boundary_pts:
        subs = []
        for bp in boundary_pts:
            sub = bump_point(bp, w_oracle, eta_prime, p)
            if sub.rf.cert.p != p:
                raise RecursionBase("sub-bump order mismatch")
            subs.append(sub)
        lam = bump_union(subs, p) if len(subs) > 1 else subs[0]
        assert all(s.z_oracle.n == n for s in subs)
        rho_prime = lam.plateau_rho
        z_prime_oracle = lam.z_oracle
    else:
        lam = None
        rho_prime = 0.9 * eta_prime
        z_prime_oracle = EmptySetOracle(n)

    delta = L / 2.0
    gamma = 0.9 * 3.0 * (rho_prime * delta) ** 2 / (2.0 * (1.0 + rho_prime * delta) ** 2)
    rho = 0.9 * min(rho_prime * delta,
                    L * math.sqrt(gamma) / (math.sqrt(3.0) + math.sqrt(gamma)))

    if envelope_constants is None:
        c_phi, c_g, g_cell = _fit_cell_constants(cell, w_oracle, p)
    else:
        c_phi, c_g = envelope_constants
        _, _, g_cell = _fit_cell_constants(cell, w_oracle, p)

    P = smoothstep_P(p)
    lo, hi = cell.base_interval()
    if math.isfinite(lo) and math.isfinite(hi):
        mid = 0.5 * (lo + hi)
    elif math.isfinite(lo):
        mid = lo + 1.0
    elif math.isfinite(hi):
        mid = hi - 1.0
    else:
        mid = 0.0

    def value(pts):
        ys = cell.cell_coords(pts)
        u, w = ys[..., 0], ys[..., 1:]
        in_base = (u > lo) & (u < hi)
        safe_u = np.where(in_base, u, mid)
        phi_u = cell.phi_values(safe_u)
        gap2 = np.sum((w - phi_u) ** 2, axis=-1)
        g_vals = np.asarray(g_cell.value(safe_u[..., None]), dtype=float)
        arg = gap2 / (gamma * g_vals ** 2)
        lam_v = np.asarray(lam.rf.field._value(pts), dtype=float) if lam is not None else 0.0
        formula = (1.0 - lam_v) * P._eval(arg[..., None]) + lam_v
        off = lam_v if lam is not None else np.zeros_like(formula)
        return np.where(in_base, formula, off)

    # --- certificate, assembled through the combinator calculus -------------
    c_min = min(rho_prime * (1.0 - delta / L), 1.0 - eta / L)
    scale = (L * c_min) ** (1 - p) if p > 1 else 1.0
    M_diff = 1.0 + c_phi * scale
    A_diff = eta / L
    M_g = c_g * scale
    A_g, a_g = 1.0 + eta / L, 1.0 - eta / L

    def diff_field(j):
        def val(pts):
            ys = cell.cell_coords(pts)
            u = np.clip(ys[..., 0], lo, hi)
            return ys[..., m + j] - cell.phi_values(u)[..., j]
        return ScalarField(n, val, name=f"w{j}-phi{j}")

    g_amb = ScalarField(
        n, lambda pts: np.asarray(
            g_cell.value(np.clip(cell.cell_coords(pts)[..., 0], lo, hi)[..., None]),
            dtype=float),
        name="g-on-slab")
    g_rf = RegularFunction(
        g_amb, RegularityCertificate(w_oracle, 1, p, M_g, sup_bound=A_g,
                                     lower_bound=a_g), name="g")
    inv_g = cert_reciprocal(g_rf)
    sq_parts = []
    for j in range(n - m):
        diff_rf = RegularFunction(
            diff_field(j),
            RegularityCertificate(w_oracle, 1, p, M_diff, sup_bound=A_diff),
            name=f"diff{j}")
        ratio = cert_product(diff_rf, inv_g)
        sq_parts.append(cert_product(ratio, ratio))
    M_R = sum(part.cert.M for part in sq_parts) / gamma
    A_R = sum(part.cert.sup_bound for part in sq_parts) / gamma
    R_field = ScalarField(
        n, lambda pts: sum(np.asarray(part.field._value(pts), dtype=float)
                           for part in sq_parts) / gamma, name="sq-ratio")
    R_rf = RegularFunction(
        R_field, RegularityCertificate(w_oracle, 0, p, M_R, sup_bound=A_R),
        range_interval=(0.0, A_R), name="sq-ratio")
    PR = cert_compose(P, R_rf)
    one_minus_lam = _const_one_rf(w_oracle, n, p) if lam is None else \
        RegularFunction(
            ScalarField(n, lambda pts: 1.0 - np.asarray(
                lam.rf.field._value(pts), dtype=float), name="1-lam"),
            RegularityCertificate(w_oracle, 0, p, lam.rf.cert.M, sup_bound=1.0),
            name="1-lam")
    prod = cert_product(one_minus_lam, PR)
    M_lam = lam.rf.cert.M if lam is not None else 0.0
    M_psi = prod.cert.M + M_lam

    fld = ScalarField(n, value, name=name or f"bump:{cell.name}")
    cert = RegularityCertificate(w_oracle, 0, p, M_psi, sup_bound=1.0)
    rf = RegularFunction(fld, cert, name=fld.name)
    consts = BumpConstants(eta=eta, rho=rho, eta_prime=eta_prime,
                           rho_prime=rho_prime, delta=delta, gamma=gamma, L=L)
    out = BumpFunction(rf, cell.to_oracle(), w_oracle, consts, plateau_rho=rho,
                       support_eta=eta, lam=lam,
                       boundary_oracle=cell.boundary_oracle(), name=fld.name)
    out.z_prime_oracle = z_prime_oracle
    out.cell = cell
    return out


def h_region_contains(bump: BumpFunction, pts) -> np.ndarray:
    """Membership in H = {d(x,Z) > delta d(x, dZ)} union G_rho'(Z', W), the
    region where the graph-cell bump agrees with its boundary blend."""
    pts = as_points(pts, bump.w_oracle.n).reshape(-1, bump.w_oracle.n)
    dz = np.asarray(bump.z_oracle.eval(pts), dtype=float).reshape(len(pts))
    db = np.asarray(bump.boundary_oracle.eval(pts), dtype=float).reshape(len(pts))
    inside = dz > bump.constants.delta * db
    zp = getattr(bump, "z_prime_oracle", None)
    if zp is not None and not isinstance(zp, EmptySetOracle):
        dzp = np.asarray(zp.eval(pts), dtype=float).reshape(len(pts))
        dw = np.asarray(bump.w_oracle.eval(pts), dtype=float).reshape(len(pts))
        inside |= dzp < bump.constants.rho_prime * dw
    return inside


# ---------------------------------------------------------------------------
# open-region bumps and unions
# ---------------------------------------------------------------------------

def bump_open_region(target: BumpTarget, w_oracle: DistanceOracle, eta: float,
                     p: int, name=None) -> BumpFunction:
    """Indicator of an open set glued by the bump of its off-W boundary."""
    if target.kind != "region":
        raise ValueError("bump_open_region needs a region target")
    subs = [build_bump(bt, w_oracle, eta, p) for bt in target.boundary]
    for bt in target.boundary:
        if bt.dim >= target.dim:
            raise RecursionBase(
                f"boundary part {bt.name} has dimension {bt.dim} >= {target.dim}")
    if subs:
        lam = bump_union(subs, p) if len(subs) > 1 else subs[0]
        rho = lam.plateau_rho
        M_psi = lam.rf.cert.M
    else:
        lam = None
        rho = 0.9 * eta
        M_psi = 1e-12

    contains = target.contains

    def value(pts):
        inside = np.asarray(contains(pts), dtype=bool)
        lam_v = np.asarray(lam.rf.field._value(pts), dtype=float) if lam is not None \
            else np.zeros(inside.shape)
        return np.where(inside, 1.0, lam_v)

    n = w_oracle.n
    fld = ScalarField(n, value, name=name or f"bump:{target.name}")
    cert = RegularityCertificate(w_oracle, 0, p, M_psi, sup_bound=1.0)
    rf = RegularFunction(fld, cert, name=fld.name)
    consts = BumpConstants(eta=eta, rho=rho)
    return BumpFunction(rf, target.oracle, w_oracle, consts, plateau_rho=rho,
                        support_eta=eta, lam=lam, name=fld.name)


def bump_open_cell(cell: Cell, w_oracle: DistanceOracle, eta: float, p: int,
                   name=None) -> BumpFunction:
    return bump_open_region(target_open_cell(cell, w_oracle), w_oracle, eta, p,
                            name=name)


def bump_union(bumps, p: int, name="union-bump") -> BumpFunction:
    """1 - P(sum psi_i): plateau at the smallest member plateau, support at
    the common eta."""
    bumps = list(bumps)
    if not bumps:
        raise ValueError("union of zero bumps")
    w = bumps[0].w_oracle
    eta = bumps[0].support_eta
    for b in bumps[1:]:
        if b.w_oracle is not w:
            raise MixedReference("bumps reference different W oracles")
        if abs(b.support_eta - eta) > 1e-12 * max(eta, 1.0):
            raise MixedReference("bumps have different support scales")
        if b.rf.cert.p != bumps[0].rf.cert.p:
            raise MixedReference("bumps have different orders")
    P = smoothstep_P(p)
    n = w.n

    def inner_value(pts):
        return sum(np.asarray(b.rf.field._value(pts), dtype=float) for b in bumps)

    def value(pts):
        return 1.0 - P._eval(inner_value(pts)[..., None])

    M_sum = sum(b.rf.cert.M for b in bumps)
    inner_rf = RegularFunction(
        ScalarField(n, inner_value, name="sum-psi"),
        RegularityCertificate(w, 0, p, M_sum, sup_bound=float(len(bumps))),
        range_interval=(0.0, float(len(bumps))), name="sum-psi")
    composed = cert_compose(P, inner_rf)

    fld = ScalarField(n, value, name=name)
    cert = RegularityCertificate(w, 0, p, composed.cert.M, sup_bound=1.0)
    rf = RegularFunction(fld, cert, name=name)
    rho = min(b.plateau_rho for b in bumps)
    consts = BumpConstants(eta=eta, rho=rho)
    z_oracle = UnionOracle([b.z_oracle for b in bumps], "union")
    return BumpFunction(rf, z_oracle, w, consts, plateau_rho=rho,
                        support_eta=eta, name=name)


def build_bump(target: BumpTarget, w_oracle, eta, p) -> BumpFunction:
    if target.kind == "point":
        return bump_point(target.point, w_oracle, eta, p, name=f"bump:{target.name}")
    if target.kind == "cell":
        return bump_cell(target.cell, w_oracle, eta, p, name=f"bump:{target.name}")
    if target.kind == "region":
        return bump_open_region(target, w_oracle, eta, p, name=f"bump:{target.name}")
    if target.kind == "union":
        subs = [build_bump(t, w_oracle, eta, p) for t in target.parts]
        return bump_union(subs, p, name=f"bump:{target.name}")
    raise ValueError(f"unknown target kind {target.kind}")


# ---------------------------------------------------------------------------
# partition of unity
# ---------------------------------------------------------------------------

@dataclass
class Partition:
    """omega_i = psi_i / sum_j psi_j over a covering, with certificates."""

    omegas: list
    bumps: list
    report: CertificateReport
    eta: float

    def __iter__(self):
        return iter(self.omegas)

    def __len__(self):
        return len(self.omegas)

    def weights(self, pts):
        """All omega values in one pass; shape (s, N)."""
        pts = as_points(pts, self.bumps[0].w_oracle.n)
        vals = np.stack([np.asarray(b.rf.field._value(pts), dtype=float)
                         for b in self.bumps])
        return vals / np.sum(vals, axis=0)


def partition_of_unity(covering, w_oracle: DistanceOracle, eta: float, p: int,
                       check_grid=None, floor=0.5) -> Partition:
    """Build bumps for the covering sets and normalize them.

    The denominator sum psi_j must stay above the positivity floor on the
    check grid (plateaus give >= 1 where the covering is exact; 0.5 tolerates
    margin-ambiguous boundary samples); a violation raises CoverageGap.
    """
    bumps = [build_bump(t, w_oracle, eta, p) for t in covering]
    report = CertificateReport()
    report.extras["support_eta"] = eta

    if check_grid is not None:
        pts = as_points(check_grid, w_oracle.n).reshape(-1, w_oracle.n)
        total = sum(np.asarray(b.rf.field._value(pts), dtype=float).reshape(len(pts))
                    for b in bumps)
        worst = int(np.argmin(total))
        report.add("partition", "denominator_floor", f"x={pts[worst].tolist()}",
                   -floor, -float(total[worst]))
        if total[worst] < floor:
            raise CoverageGap(
                f"sum of plateaus is {total[worst]:.3g} < {floor} at {pts[worst].tolist()}")

    n = w_oracle.n
    s = len(bumps)
    M_sum = sum(b.rf.cert.M for b in bumps)

    def den_value(pts):
        return sum(np.asarray(b.rf.field._value(pts), dtype=float) for b in bumps)

    den_rf = RegularFunction(
        ScalarField(n, den_value, name="sum-psi"),
        RegularityCertificate(w_oracle, 0, p, max(M_sum, 1e-12),
                              sup_bound=float(s), lower_bound=floor),
        name="sum-psi")
    inv = cert_reciprocal(den_rf)
    omegas = []
    for i, b in enumerate(bumps):
        om = cert_product(b.rf, inv)
        # the quotient of a member by the full sum lies in [0, 1]
        om = om.with_cert(sup_bound=1.0)
        om.name = f"omega_{i}"
        om.field.name = om.name
        om.range_interval = (0.0, 1.0)
        omegas.append(om)

    if check_grid is not None:
        pts = as_points(check_grid, w_oracle.n).reshape(-1, w_oracle.n)
        vals = np.stack([np.asarray(b.rf.field._value(pts), dtype=float).reshape(len(pts))
                         for b in bumps])
        weights = vals / np.sum(vals, axis=0)
        err = float(np.abs(weights.sum(axis=0) - 1.0).max())
        report.add("partition", "weights_sum_to_one", f"{len(pts)} samples",
                   0.0, err, margin=1e-12)
        report.add("partition", "weights_in_unit_interval", f"{len(pts)} samples",
                   0.0, max(0.0, float(weights.max()) - 1.0,
                            float(-weights.min())), margin=1e-12)
        for i, (b, tgt) in enumerate(zip(bumps, covering)):
            pos = vals[i] > 0.0
            if not np.any(pos):
                continue
            verd = g_eta_contains_many(tgt.oracle, w_oracle, eta, pts[pos])
            n_out = int(np.sum(verd == -1))
            report.add("partition", f"support_in_G_eta|omega_{i}",
                       f"{int(pos.sum())} samples", 0.0, float(n_out))
    return Partition(omegas, bumps, report, eta)
