"""Approximation pipeline: constant schedule, carved sets, local approximants,
and assembly of a distance-equivalent function with a derivative certificate.

Given a dimension-ordered stratification of the complement of W and a
Lipschitz g vanishing on W, the pipeline carves per-stratum cores Z_i, grows
nested relative neighborhoods U_i that cover the complement, builds a smooth
partition subordinate to them, and glues per-stratum approximants f_i into
f = sum f_i omega_i with |f - g| <= kappa d(., W).

Exact set algebra is available for two structured families (1-D interval
scenes and conical 2-D scenes); otherwise carved sets are materialized as
filtered point clouds and the partition stage is unavailable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .bump import Partition, partition_of_unity
from .cells import Cell, Stratification, graph_compose_g
from .certificates import (RegularFunction, RegularityCertificate,
                           leibniz_constant)
from .errors import (ContainmentViolation, CoverageGap, InfeasibleSchedule,
                     LipschitzViolation, SupportLeak, UnsupportedScene)
from .geometry import (DistanceOracle, ScalarField, UnionOracle, as_points,
                       fd_partial_batch, field_from_oracle,
                       g_eta_contains_many, multi_index_enumerate,
                       multi_index_order)
from .regions import IntervalUnion, SectorUnion
from .report import CertificateReport


# ---------------------------------------------------------------------------
# the constant schedule
# ---------------------------------------------------------------------------

@dataclass
class ConstantSchedule:
    """theta, per-stratum (delta_i, eta_i), the eps matrix, and the final eta.

    All the strict "choose so small that" steps are resolved by closed forms
    with a 0.9 multiplicative margin, so a schedule is reproducible from
    (stratification, A, kappa) alone.
    """

    theta: float
    delta: list
    eta: list
    eps: np.ndarray          # eps[i, j], j <= i
    eta_final: float
    A: float
    kappa: float
    L: list
    dims: list
    open_flags: list

    @property
    def s(self) -> int:
        return len(self.delta)

    def validate(self) -> "ConstantSchedule":
        s = self.s
        vals = [self.theta, self.eta_final] + list(self.delta) + list(self.eta)
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise InfeasibleSchedule("non-positive or non-finite constant")
        chain = [self.theta]
        for i in range(s):
            chain += [self.delta[i], self.eta[i]]
        if not all(chain[k] > chain[k + 1] for k in range(len(chain) - 1)):
            raise InfeasibleSchedule(f"interleaving chain violated: {chain}")
        if self.theta >= 1.0:
            raise InfeasibleSchedule("theta must stay below 1")
        for i in range(s):
            if self.A * self.theta / self.L[i] >= self.kappa:
                raise InfeasibleSchedule("theta too large for the target accuracy")
        for i in range(s):
            for j in range(i + 1):
                if not (0.0 < self.eps[i, j] < self.delta[j]):
                    raise InfeasibleSchedule(f"eps[{i},{j}] out of (0, delta_{j})")
        for i in range(1, s):
            if not self.open_flags[i]:
                denom = self.eta[i - 1] - self.delta[i] * (self.eta[i - 1] + 1.0)
                if denom <= 0 or self.delta[i] / denom >= self.L[i]:
                    raise InfeasibleSchedule(f"slab-escape constraint fails at {i}")
        return self

    def rows(self, stage="schedule") -> CertificateReport:
        rep = CertificateReport()
        chain = [("theta", self.theta)]
        for i in range(self.s):
            chain += [(f"delta_{i + 1}", self.delta[i]), (f"eta_{i + 1}", self.eta[i])]
        for (na, va), (nb, vb) in zip(chain[1:], chain[:-1]):
            rep.add(stage, f"{na}_lt_{nb}", "", vb, va)
        for i in range(self.s):
            for j in range(i + 1):
                rep.add(stage, f"eps_{i + 1}{j + 1}_lt_delta_{j + 1}", "",
                        self.delta[j], self.eps[i, j])
        rep.add(stage, "eta_final_positive", "", self.eta_final, 0.0)
        return rep

    def serialize(self) -> list[tuple[str, float]]:
        out = [("theta", self.theta), ("eta_final", self.eta_final),
               ("A", self.A), ("kappa", self.kappa)]
        for i in range(self.s):
            out += [(f"delta_{i + 1}", self.delta[i]),
                    (f"eta_{i + 1}", self.eta[i]),
                    (f"L_{i + 1}", self.L[i])]
        for i in range(self.s):
            for j in range(i + 1):
                out.append((f"eps_{i + 1}{j + 1}", float(self.eps[i, j])))
        return out


def schedule_constants(strat: Stratification, A: float, kappa: float) -> ConstantSchedule:
    """Deterministic schedule: every strict existence step is the closed-form
    midpoint/0.9-margin choice, so the whole pipeline is reproducible."""
    if A <= 0 or kappa <= 0:
        raise ValueError("A and kappa must be positive")
    cells = strat.cells
    dims = [c.dim for c in cells]
    if dims != sorted(dims):
        raise InfeasibleSchedule("stratification must be dimension-ordered")
    s = len(cells)
    L = [1.0 if c.dim == strat.n else c.L for c in cells]
    open_flags = [c.dim == strat.n for c in cells]

    theta = 0.9 * min(1.0, kappa * min(L) / A)
    delta = [0.9 * min(theta, L[0])]
    eta = [delta[0] / 2.0]
    eps = np.zeros((s, s))
    eps[0, 0] = eta[0]
    for i in range(1, s):
        prev = eta[i - 1]
        if open_flags[i]:
            d_i = 0.9 * prev / (1.0 + prev)
        else:
            d_i = 0.9 * min(prev / (1.0 + prev),
                            L[i] * prev / (1.0 + L[i] * (prev + 1.0)))
        delta.append(d_i)
        cap = d_i
        for j in range(i):
            cap = min(cap, (delta[j] - eps[i - 1, j]) / (1.0 + eps[i - 1, j]))
        eta.append(0.9 * cap)
        for j in range(i):
            eps[i, j] = eps[i - 1, j] + eta[i] * (1.0 + eps[i - 1, j])
        eps[i, i] = eta[i]

    cap = math.inf
    for j in range(s):
        cap = min(cap, (delta[j] - eps[s - 1, j]) / (1.0 + eps[s - 1, j]))
    eta_final = 0.9 * cap

    return ConstantSchedule(theta, delta, eta, eps, eta_final, A, kappa, L,
                            dims, open_flags).validate()


# ---------------------------------------------------------------------------
# carving
# ---------------------------------------------------------------------------

@dataclass
class CarvedSets:
    """Per-stratum cores Z_i and their nested neighborhoods U_i."""

    strat: Stratification
    schedule: ConstantSchedule
    z_descs: list | None
    u_descs: list | None
    z_oracles: list
    u_oracles: list
    z_clouds: list
    cloud_radii: list
    targets: list | None

    @property
    def s(self):
        return len(self.z_oracles)


def _materialize_cloud(strat, desc, num=64):
    pts = strat.structure.sample_desc(desc)
    if isinstance(desc, IntervalUnion) and len(pts) > 1:
        return pts, 0.5 * float(np.max(np.diff(np.sort(pts[:, 0]))))
    return pts, 0.05


def carve_sets(strat: Stratification, schedule: ConstantSchedule,
               check_grid=None, cloud_samples=64) -> CarvedSets:
    """Z_1 = C_1; each later core is its stratum minus the nested
    neighborhoods of the earlier cores; U_i is the fully nested neighborhood.

    With a structure backend the sets are exact region descriptors (clouds are
    still materialized for reporting); without one the cores are point clouds
    filtered by three-valued membership, margin-ambiguous samples kept.
    """
    s = len(strat.cells)
    structure = strat.structure
    if structure is None:
        return _carve_clouds(strat, schedule, cloud_samples)

    z_descs, nests = [], []
    for i, cell in enumerate(strat.cells):
        d_i = structure.cell_desc(cell)
        z_i = d_i
        for nest in nests:
            z_i = z_i.minus(nest)
        z_descs.append(z_i)
        nests = [structure.g_eta(nest, schedule.eta[i]) for nest in nests]
        nests.append(structure.g_eta(z_i, schedule.eta[i]))
    u_descs = nests

    z_oracles = [d.oracle(f"Z_{i + 1}") for i, d in enumerate(z_descs)]
    u_oracles = [d.oracle(f"U_{i + 1}") for i, d in enumerate(u_descs)]
    clouds, radii = [], []
    for d in z_descs:
        pts, cr = _materialize_cloud(strat, d, cloud_samples)
        clouds.append(pts)
        radii.append(cr)
    targets = [structure.region_target(u, strat.W, f"U_{i + 1}")
               for i, u in enumerate(u_descs)]

    if check_grid is not None:
        pts = as_points(check_grid, strat.n).reshape(-1, strat.n)
        covered = np.zeros(len(pts), dtype=bool)
        for u in u_descs:
            covered |= np.asarray(u.contains(pts), dtype=bool)
        if not np.all(covered):
            bad = pts[~covered][0]
            raise CoverageGap(f"point {bad.tolist()} lies in no U_i")

    return CarvedSets(strat, schedule, z_descs, u_descs, z_oracles, u_oracles,
                      clouds, radii, targets)


def _carve_clouds(strat, schedule, cloud_samples):
    """Cloud-only carving: per-stratum samples filtered by nested verdicts."""
    from .geometry import CloudOracle

    s = len(strat.cells)
    clouds, radii, z_oracles = [], [], []
    nest_oracles: list[list[DistanceOracle]] = []
    for i, cell in enumerate(strat.cells):
        oracle = cell.to_oracle()
        if hasattr(oracle, "points"):
            pts = oracle.points
            cr = oracle.covering_radius
        else:
            samples = getattr(cell, "sample_points", None)
            if samples is None:
                grid = np.linspace(-50, 50, cloud_samples)
                if cell.kind == "graph":
                    lo, hi = cell.base_interval()
                    grid = np.linspace(max(lo, -50) + 1e-6, min(hi, 50) - 1e-6,
                                       cloud_samples)
                    pts = cell.graph_points(grid)
                else:
                    xx, yy = np.meshgrid(grid, grid)
                    cand = np.stack([xx.ravel(), yy.ravel()], -1) if cell.n == 2 \
                        else grid[:, None]
                    pts = cand[np.asarray(cell.contains(cand), dtype=bool)]
                cr = float(100.0 / cloud_samples)
            else:
                pts, cr = samples()
        keep = np.ones(len(pts), dtype=bool)
        for chain in nest_oracles:
            inner = chain[-1]
            verd = g_eta_contains_many(inner, strat.W, schedule.eta[i - 1], pts)
            keep &= verd != 1      # drop only certain members; ambiguous kept
        pts = pts[keep]
        cloud = CloudOracle(pts, cr, target=f"Z_{i + 1}") if len(pts) else None
        if cloud is None:
            raise CoverageGap(f"stratum {cell.name} carved away entirely")
        clouds.append(pts)
        radii.append(cr)
        z_oracles.append(cloud)
        # grow every chain by one nesting level (sampled: reuse clouds)
        nest_oracles = [chain + [chain[-1]] for chain in nest_oracles]
        nest_oracles.append([cloud])
    u_oracles = [chain[-1] for chain in nest_oracles]
    return CarvedSets(strat, schedule, None, None, z_oracles, u_oracles,
                      clouds, radii, None)


# ---------------------------------------------------------------------------
# coverage check
# ---------------------------------------------------------------------------

def coverage_check(carved: CarvedSets, schedule: ConstantSchedule, grid,
                   stage="coverage") -> CertificateReport:
    """Covering implication, neighborhood containments, and the schedule chain.

    For each level i and each grid point with d(x, C_1..C_i) < eta_i d(x, W),
    the point must land in one of the nested neighborhoods; samples of each
    U_i must stay inside G_{delta_i}(Z_i); carved-core samples must keep
    d(z, boundary of their stratum) >= eta_i d(z, W).
    """
    strat, s = carved.strat, carved.s
    rep = CertificateReport()
    rep.extend(schedule.rows(stage=f"{stage}|schedule"))

    pts = as_points(grid, strat.n).reshape(-1, strat.n)
    d_w = np.asarray(strat.W.eval(pts), dtype=float).reshape(len(pts))

    cell_oracles = [c.to_oracle() for c in strat.cells]
    for i in range(s):
        union_i = UnionOracle(cell_oracles[:i + 1], f"C1..{i + 1}")
        d_c = np.asarray(union_i.eval(pts), dtype=float).reshape(len(pts))
        hyp = d_c + union_i.covering_radius < schedule.eta[i] * (d_w - strat.W.covering_radius)
        if not np.any(hyp):
            rep.add(stage, f"covering_implication|level={i + 1}", "vacuous", 0.0, 0.0)
            continue
        sel = pts[hyp]
        ok = np.zeros(len(sel), dtype=bool)
        if carved.u_descs is not None:
            # conclusion sets at level i: the nested neighborhoods built so far
            descs = _nested_at_level(carved, schedule, i)
            for dsc in descs:
                ok |= np.asarray(dsc.contains(sel), dtype=bool)
        else:
            for j in range(i + 1):
                verd = g_eta_contains_many(carved.z_oracles[j], strat.W,
                                           schedule.eps[i, j], sel)
                ok |= verd != -1
        rep.add(stage, f"covering_implication|level={i + 1}",
                f"{len(sel)} samples", 0.0, float(np.sum(~ok)))

    for i in range(s):
        if carved.u_descs is not None:
            samples = strat.structure.sample_desc(carved.u_descs[i])
        else:
            samples = carved.z_clouds[i]
        verd = g_eta_contains_many(carved.z_oracles[i], strat.W,
                                   schedule.delta[i], samples)
        rep.add(stage, f"u_inside_G_delta|i={i + 1}", f"{len(samples)} samples",
                0.0, float(np.sum(verd == -1)))

    for i in range(1, s):
        boundary = strat.cells[i].boundary_oracle()
        z_samples = carved.z_clouds[i]
        if len(z_samples) == 0:
            continue
        d_b = np.asarray(boundary.eval(z_samples), dtype=float).reshape(len(z_samples))
        d_wz = np.asarray(strat.W.eval(z_samples), dtype=float).reshape(len(z_samples))
        gap = schedule.eta[i - 1] * d_wz - d_b
        worst = int(np.argmax(gap))
        rep.add(stage, f"core_boundary_clearance|i={i + 1}",
                f"z={z_samples[worst].tolist()}", 0.0,
                max(0.0, float(gap[worst])),
                margin=carved.cloud_radii[i] + strat.W.covering_radius + 1e-9)
    return rep


def _nested_at_level(carved, schedule, i):
    """Rebuild the nested neighborhoods as they stand after level i."""
    structure = carved.strat.structure
    nests = []
    for k in range(i + 1):
        z_k = carved.z_descs[k]
        nest = structure.g_eta(z_k, schedule.eta[k])
        for lvl in range(k + 1, i + 1):
            nest = structure.g_eta(nest, schedule.eta[lvl])
        nests.append(nest)
    return nests


# ---------------------------------------------------------------------------
# local approximants
# ---------------------------------------------------------------------------

@dataclass
class GFunction:
    """The Lipschitz target: a field, its constant, and a name."""

    field: ScalarField
    A: float
    name: str = "g"


def distance_g(w_oracle: DistanceOracle) -> GFunction:
    return GFunction(field_from_oracle(w_oracle, name="dW"), 1.0, "distance")


def capped_distance_g(w_oracle: DistanceOracle, cap: float) -> GFunction:
    fld = field_from_oracle(w_oracle, name="dW")
    value = lambda pts: np.minimum(np.asarray(fld._value(pts), dtype=float), cap)
    return GFunction(ScalarField(w_oracle.n, value, name=f"min(dW,{cap:g})"),
                     1.0, f"capped:{cap:g}")


def check_lipschitz(g: GFunction, pts, tol=1e-7):
    """Sampled increments against the declared constant; hard error beyond."""
    pts = np.asarray(pts, dtype=float)
    a, b = pts[:-1], pts[1:]
    va = np.asarray(g.field.value(a), dtype=float)
    vb = np.asarray(g.field.value(b), dtype=float)
    gaps = np.linalg.norm(b - a, axis=-1)
    good = gaps > 0
    quot = np.abs(vb - va)[good] / gaps[good]
    worst = float(quot.max()) if quot.size else 0.0
    if worst > g.A * (1.0 + tol):
        raise LipschitzViolation(
            f"sampled Lipschitz quotient {worst:.6g} exceeds declared {g.A:g}")
    return worst


@dataclass
class LocalApprox:
    """Per-stratum approximant on G_{delta_i}(Z_i) with its error coefficient."""

    index: int
    rf: RegularFunction
    err_coeff: float
    report: CertificateReport


def local_approx(i: int, strat: Stratification, g: GFunction,
                 schedule: ConstantSchedule, carved: CarvedSets,
                 fit_samples=None) -> LocalApprox:
    """Open strata take g itself; graph strata take the slab projection
    u -> g(u, phi(u)), with the error bound A delta_i / L_i d(., W) checked on
    samples of G_{delta_i}(Z_i)."""
    cell = strat.cells[i]
    p = _schedule_order(schedule)
    rep = CertificateReport()
    stage = f"local_approx|i={i + 1}"

    if carved.z_descs is not None:
        gz = strat.structure.g_eta(carved.z_descs[i], schedule.delta[i])
        samples = strat.structure.sample_desc(gz)
    elif fit_samples is not None:
        samples = fit_samples
    else:
        samples = carved.z_clouds[i]

    d_w = np.asarray(strat.W.eval(samples), dtype=float).reshape(len(samples))

    if cell.dim == strat.n:
        inside = np.asarray(cell.contains(samples), dtype=bool)
        if not np.all(inside):
            raise ContainmentViolation(
                f"sample of G_delta(Z_{i + 1}) outside its open stratum")
        rep.add(stage, "neighborhood_in_stratum", f"{len(samples)} samples",
                0.0, 0.0)
        fitted = _fit_envelope(g.field, samples, d_w, p)
        M = 2.0 * max(fitted, 1e-9)
        fld = ScalarField(strat.n, g.field._value, name=f"f_{i + 1}",
                          step_hint=g.field.step_hint)
        cert = RegularityCertificate(strat.W, 1, p, M, sup_bound=g.A)
        rf = RegularFunction(fld, cert, domain=cell.contains, name=fld.name)
        err_coeff = 0.0   # the approximant is g itself on an open stratum
        rep.add(stage, "error_envelope", f"{len(samples)} samples", 0.0, 0.0)
        rep.extras["fitted_B"] = fitted
        return LocalApprox(i, rf, err_coeff, rep)

    # graph stratum: project onto the graph and compose
    lo, hi = cell.base_interval()
    us = cell.cell_coords(samples)[..., 0]
    in_slab = (us > lo) & (us < hi)
    if not np.all(in_slab):
        raise ContainmentViolation(
            f"sample of G_delta(Z_{i + 1}) outside the slab of {cell.name}")
    rep.add(stage, "neighborhood_in_slab", f"{len(samples)} samples", 0.0, 0.0)

    base_grid = _base_fit_grid(cell)
    composed, comp_rep = graph_compose_g(cell, g.field, p, base_grid,
                                         stage=f"{stage}|compose")
    fitted_B = comp_rep.extras["fitted_B"]
    rep.extend(comp_rep)

    def value(pts):
        u = np.clip(cell.cell_coords(pts)[..., 0], lo, hi)
        return np.asarray(composed.value(u[..., None]), dtype=float)

    fld = ScalarField(strat.n, value, name=f"f_{i + 1}")

    # envelope constant via the slab-clearance chain
    if i == 0:
        c_i = cell.L - schedule.delta[0]
    else:
        E = schedule.eta[i - 1] - schedule.delta[i] * (schedule.eta[i - 1] + 1.0)
        c_i = cell.L * E - schedule.delta[i]
    if c_i <= 0:
        raise InfeasibleSchedule(f"slab clearance non-positive at stratum {i + 1}")
    M = 2.0 * max(fitted_B, 1e-9) * min(c_i, 1.0) ** (1 - p)
    A_sup = g.A * (1.0 + schedule.delta[i] / cell.L)
    cert = RegularityCertificate(strat.W, 1, p, M, sup_bound=A_sup)
    rf = RegularFunction(fld, cert, name=fld.name)

    err_coeff = g.A * schedule.delta[i] / cell.L
    g_vals = np.asarray(g.field.value(samples), dtype=float).reshape(len(samples))
    f_vals = np.asarray(fld.value(samples), dtype=float).reshape(len(samples))
    err = np.abs(f_vals - g_vals) - err_coeff * d_w
    worst = int(np.argmax(err))
    rep.add(stage, "error_envelope", f"x={samples[worst].tolist()}", 0.0,
            max(0.0, float(err[worst])), margin=1e-9 * (1 + err_coeff))
    rep.extras["fitted_B"] = fitted_B
    return LocalApprox(i, rf, err_coeff, rep)


def _schedule_order(schedule) -> int:
    return getattr(schedule, "order_p", 2)


def _fit_envelope(field: ScalarField, pts, d_w, p: int) -> float:
    steps = np.maximum(1e-6, 1e-3 * np.where(np.isfinite(d_w), d_w, 1.0))
    fitted = 0.0
    for alpha in multi_index_enumerate(field.n, p):
        order = multi_index_order(alpha)
        if order == 0:
            continue
        obs = np.abs(fd_partial_batch(field, pts, alpha, steps))
        fitted = max(fitted, float(np.max(obs * d_w ** (order - 1))))
    return fitted


def _base_fit_grid(cell: Cell, size=201):
    lo, hi = cell.base_interval()
    if math.isfinite(lo) and math.isfinite(hi):
        pad = 1e-6 * (hi - lo)
        return np.linspace(lo + pad, hi - pad, size)
    if math.isfinite(lo):
        return lo + np.geomspace(1e-6, 50.0, size)
    if math.isfinite(hi):
        return hi - np.geomspace(1e-6, 50.0, size)
    return np.linspace(-50.0, 50.0, size)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def assemble(locals_: list[LocalApprox], partition: Partition,
             carved: CarvedSets, schedule: ConstantSchedule,
             check_grid=None) -> tuple[RegularFunction, CertificateReport]:
    """f = sum f_i omega_i, evaluated support-first so f_i is only queried
    where its weight is positive; the certificate sums the product bounds."""
    strat = carved.strat
    bumps = partition.bumps
    rep = CertificateReport()
    p = locals_[0].rf.cert.p

    if check_grid is not None:
        pts = as_points(check_grid, strat.n).reshape(-1, strat.n)
        for i, b in enumerate(bumps):
            psi = np.asarray(b.rf.field._value(pts), dtype=float).reshape(len(pts))
            pos = psi > 0.0
            if not np.any(pos):
                continue
            verd = g_eta_contains_many(carved.z_oracles[i], strat.W,
                                       schedule.delta[i], pts[pos])
            leaks = int(np.sum(verd == -1))
            rep.add("assemble", f"support_in_G_delta|i={i + 1}",
                    f"{int(pos.sum())} samples", 0.0, float(leaks))
            if leaks:
                raise SupportLeak(
                    f"omega_{i + 1} positive outside G_delta(Z_{i + 1})")

    fields = [la.rf.field for la in locals_]

    def value(pts):
        pts = np.asarray(pts, dtype=float)
        psi = np.stack([np.asarray(b.rf.field._value(pts), dtype=float)
                        for b in bumps])
        weights = psi / np.sum(psi, axis=0)
        out = np.zeros(pts.shape[:-1])
        for i, fld in enumerate(fields):
            w = weights[i]
            mask = w > 0.0
            if not np.any(mask):
                continue
            fv = np.asarray(fld._value(pts), dtype=float)
            out = out + np.where(mask, w * fv, 0.0)
        return out

    M = 0.0
    for la, om in zip(locals_, partition.omegas):
        M += leibniz_constant(strat.n, p, la.rf.cert.M, la.rf.cert.sup_bound,
                              om.cert.M, om.cert.sup_bound)
    A_sup = max(la.rf.cert.sup_bound for la in locals_)
    kappa = schedule.kappa
    fld = ScalarField(strat.n, value, name="f",
                      step_hint=field_from_oracle(strat.W).step_hint)
    cert = RegularityCertificate(strat.W, 1, p, max(M, 1e-12), sup_bound=A_sup)
    rf = RegularFunction(fld, cert, name="f")
    rep.extras["certificate_M"] = cert.M
    rep.extras["kappa"] = kappa
    return rf, rep


# ---------------------------------------------------------------------------
# the full run
# ---------------------------------------------------------------------------

@dataclass
class PipelineResult:
    f: RegularFunction
    g: GFunction
    schedule: ConstantSchedule
    carved: CarvedSets
    partition: Partition
    locals_: list
    reports: dict
    fitted: dict = dfield(default_factory=dict)


def run_pipeline(strat: Stratification, g: GFunction, p: int, kappa: float,
                 check_grid=None) -> PipelineResult:
    """Schedule, carve, partition, approximate, assemble; reports at each stage."""
    strat = strat.sorted_by_dim()
    if strat.structure is None:
        raise UnsupportedScene(
            "the approximation pipeline needs a structured scene "
            "(1-D intervals or a conical plane scene)")
    schedule = schedule_constants(strat, g.A, kappa)
    schedule.order_p = p
    carved = carve_sets(strat, schedule, check_grid=check_grid)
    partition = partition_of_unity(carved.targets, strat.W, schedule.eta_final,
                                   p, check_grid=check_grid)
    locals_ = [local_approx(i, strat, g, schedule, carved)
               for i in range(len(strat.cells))]
    f, asm_rep = assemble(locals_, partition, carved, schedule,
                          check_grid=check_grid)
    reports = {
        "schedule": schedule.rows(),
        "partition": partition.report,
        "assemble": asm_rep,
    }
    for la in locals_:
        reports[f"local_{la.index + 1}"] = la.report
    return PipelineResult(f, g, schedule, carved, partition, locals_, reports)


def approximation_error_report(result: PipelineResult, grid,
                               stage="approx_error") -> CertificateReport:
    """|f - g| <= kappa d(., W) on the grid."""
    strat = result.carved.strat
    pts = as_points(grid, strat.n).reshape(-1, strat.n)
    d = np.asarray(strat.W.eval(pts), dtype=float).reshape(len(pts))
    fv = np.asarray(result.f.field.value(pts), dtype=float).reshape(len(pts))
    gv = np.asarray(result.g.field.value(pts), dtype=float).reshape(len(pts))
    err = np.abs(fv - gv)
    bound = result.schedule.kappa * d
    worst = int(np.argmax(err - bound))
    rep = CertificateReport()
    rep.add(stage, "kappa_envelope", f"x={pts[worst].tolist()}",
            float(bound[worst]), float(err[worst]),
            margin=1e-9 * (1.0 + float(bound[worst])))
    rep.extras["max_relative_error"] = float(np.max(err / np.maximum(d, 1e-300)))
    return rep


def regularized_distance(strat: Stratification, p: int, kappa: float,
                         check_grid=None, fit_grid=None,
                         refine_grid=None) -> PipelineResult:
    """The pipeline applied to g = d(., W); kappa < 1 keeps f positive and
    distance-equivalent.  The result carries fitted equivalence constants:
    A from max(f/d, d/f) and B from the observed derivative envelope, with a
    refinement drift figure when a doubled grid is supplied."""
    if not (0 < kappa < 1):
        raise ValueError("kappa must lie in (0, 1) for distance equivalence")
    g = distance_g(strat.W)
    result = run_pipeline(strat, g, p, kappa, check_grid=check_grid)
    if fit_grid is not None:
        result.fitted.update(fit_equivalence(result, fit_grid))
        if refine_grid is not None:
            refined = fit_equivalence(result, refine_grid)
            result.fitted["B_refined"] = refined["B"]
            result.fitted["B_drift"] = (
                abs(refined["B"] - result.fitted["B"]) /
                max(result.fitted["B"], 1e-300))
    return result


def fit_equivalence(result: PipelineResult, grid) -> dict:
    """Fitted constants of the two-sided envelope A^-1 d <= f <= A d and the
    derivative envelope |D^a f| <= B d^(1-|a|)."""
    strat = result.carved.strat
    pts = as_points(grid, strat.n).reshape(-1, strat.n)
    d = np.asarray(strat.W.eval(pts), dtype=float).reshape(len(pts))
    fv = np.asarray(result.f.field.value(pts), dtype=float).reshape(len(pts))
    if np.any(fv <= 0):
        bad = pts[fv <= 0][0]
        raise ContainmentViolation(f"f is not positive at {bad.tolist()}")
    A_fit = float(max(np.max(fv / d), np.max(d / fv)))
    p = result.f.cert.p
    steps = np.maximum(1e-6, 1e-3 * d)
    B_fit = 0.0
    for alpha in multi_index_enumerate(strat.n, p):
        order = multi_index_order(alpha)
        if order == 0:
            continue
        obs = np.abs(fd_partial_batch(result.f.field, pts, alpha, steps))
        B_fit = max(B_fit, float(np.max(obs * d ** (order - 1))))
    return {"A": A_fit, "B": B_fit}
