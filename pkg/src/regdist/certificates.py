"""Derivative-bound certificates and the calculus that combines them.

A certificate for f relative to a closed set W asserts
``|D^alpha f(x)| <= M * d(x, W)^(k - |alpha|)`` for ``1 <= |alpha| <= p``,
optionally with a sup bound ``|f| <= A d^k`` and a lower bound
``a d^k <= |f|``.  Products, reciprocals and compositions carry certificates
whose constants are computed from the explicit Leibniz / Faa di Bruno
expansions, never fitted, so they are sound by construction; ``cert_verify``
is an independent finite-difference check, not the source of the constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (CertificateMismatch, MissingLowerBound, MissingSupBound,
                     UnboundedInner, ZeroDenominatorDetected)
from .geometry import (DistanceOracle, ScalarField, as_points, fd_partial_batch,
                       multi_index_binomial, multi_index_enumerate,
                       multi_index_factorial, multi_index_order, sub_indices)
from .report import CertificateReport


# ---------------------------------------------------------------------------
# plateau function P: 1 below 1/3, 0 above 2/3, C^p in between
# ---------------------------------------------------------------------------

def _hermite_smoothstep_coeffs(p: int) -> np.ndarray:
    """Coefficients (ascending) of the degree 2p+1 smoothstep S with
    S(0)=0, S(1)=1 and p vanishing derivatives at both ends."""
    coeffs = np.zeros(2 * p + 2)
    for k in range(p + 1):
        c = ((-1) ** k) * math.comb(p + k, k) * math.comb(2 * p + 1, p - k)
        coeffs[p + 1 + k] = c
    return coeffs


class PlateauField(ScalarField):
    """C^p plateau: P(t) = 1 for t <= 1/3, 0 for t >= 2/3, reversed Hermite
    smoothstep of degree 2p+1 in s = 3t - 1 on the middle third."""

    def __init__(self, p: int):
        if p < 1:
            raise ValueError("order must be >= 1")
        self.p = int(p)
        self._s_coeffs = _hermite_smoothstep_coeffs(p)
        self._d_coeffs = {0: self._s_coeffs}
        super().__init__(1, self._eval, derivative=self._eval_derivative,
                         name=f"plateau_p{p}")

    def _coeffs_m(self, m: int) -> np.ndarray:
        if m not in self._d_coeffs:
            self._d_coeffs[m] = np.polynomial.polynomial.polyder(self._coeffs_m(m - 1))
        return self._d_coeffs[m]

    def _eval(self, pts):
        t = np.asarray(pts)[..., 0]
        s = 3.0 * t - 1.0
        mid = 1.0 - np.polynomial.polynomial.polyval(s, self._s_coeffs)
        return np.where(t <= 1.0 / 3.0, 1.0, np.where(t >= 2.0 / 3.0, 0.0, mid))

    def _eval_derivative(self, pts, alpha):
        m = alpha[0]
        t = np.asarray(pts)[..., 0]
        s = 3.0 * t - 1.0
        inner = -(3.0 ** m) * np.polynomial.polynomial.polyval(s, self._coeffs_m(m))
        out = np.where((t > 1.0 / 3.0) & (t < 2.0 / 3.0), inner, 0.0)
        return out

    def derivative_sup(self, m: int) -> float:
        """Exact sup of |P^(m)| over R (attained on the middle third)."""
        if m == 0:
            return 1.0
        cm = self._coeffs_m(m)
        crit = [0.0, 1.0]
        dcm = np.polynomial.polynomial.polyder(cm)
        if len(dcm) > 1 or (len(dcm) == 1 and dcm[0] != 0.0):
            roots = np.polynomial.polynomial.polyroots(dcm)
            crit += [float(r.real) for r in roots
                     if abs(r.imag) < 1e-12 and -1e-12 <= r.real <= 1 + 1e-12]
        vals = np.abs(np.polynomial.polynomial.polyval(np.asarray(crit), cm))
        return float((3.0 ** m) * vals.max())

    def sup_bounds(self, up_to: int) -> dict[int, float]:
        return {m: self.derivative_sup(m) for m in range(up_to + 1)}


def smoothstep_P(p: int) -> PlateauField:
    return PlateauField(p)


# ---------------------------------------------------------------------------
# combinatorial kernels for the expansion constants
# ---------------------------------------------------------------------------

# constant arithmetic runs in extended precision: the expansion constants of
# deeply nested bumps overflow float64 while remaining perfectly meaningful
LONG = np.longdouble


def _ordered_tuple_sum(alpha, m, weight):
    """Sum over ordered m-tuples of nonzero multi-indices (b_1..b_m) with
    b_1 + ... + b_m = alpha of prod_i weight(b_i)."""
    cache: dict[tuple, object] = {}

    def rec(rem, mm):
        key = (rem, mm)
        if key in cache:
            return cache[key]
        if mm == 0:
            return LONG(1.0) if multi_index_order(rem) == 0 else LONG(0.0)
        total = LONG(0.0)
        for beta in sub_indices(rem):
            if multi_index_order(beta) == 0:
                continue
            wb = LONG(weight(beta))
            if wb == 0.0:
                continue
            tail = rec(tuple(r - b for r, b in zip(rem, beta)), mm - 1)
            if tail:
                total += wb * tail
        cache[key] = total
        return total

    return rec(tuple(alpha), m)


def as_plain_float(x):
    """Demote to a builtin float when it fits; keep extended precision otherwise."""
    if abs(x) <= 1.6e308:
        return float(x)
    return LONG(x)


def composition_bound(alpha, outer_bounds, inner_coeff):
    """Faa di Bruno majorant for |D^alpha (Phi o f)|:

    alpha! * sum_m outer_bounds(m) * sum_{ordered tuples} prod inner_coeff(b_i)/b_i!

    where |Phi^(m)| <= outer_bounds(m) on the range of f and
    |D^beta f| <= inner_coeff(beta) * d^(s - |beta|) with a uniform shift s
    (the d-power bookkeeping is the caller's).
    """
    order = multi_index_order(alpha)
    total = LONG(0.0)
    for m in range(1, order + 1):
        om = LONG(outer_bounds(m))
        if om == 0.0:
            continue
        t = _ordered_tuple_sum(
            alpha, m, lambda b: inner_coeff(b) / multi_index_factorial(b))
        total += om * t
    return as_plain_float(multi_index_factorial(alpha) * total)


def leibniz_constant(n, p, Mf, Af, Mg, Ag) -> float:
    """Max over 1 <= |alpha| <= p of the Leibniz majorant for a product of
    certified factors, with order-0 factors bounded by the sup constants."""

    def coeff(M, A, beta):
        return LONG(A) if multi_index_order(beta) == 0 else LONG(M)

    worst = LONG(0.0)
    for alpha in multi_index_enumerate(n, p):
        if multi_index_order(alpha) == 0:
            continue
        s = LONG(0.0)
        for beta in sub_indices(alpha):
            rem = tuple(a - b for a, b in zip(alpha, beta))
            s += (LONG(multi_index_binomial(alpha, beta))
                  * coeff(Mf, Af, beta) * coeff(Mg, Ag, rem))
        worst = max(worst, s)
    return as_plain_float(worst)


def reciprocal_constant(n, p, M, a):
    """Max over alpha of the expansion bound for D^alpha (1/f) when
    a d^k <= |f| and |D^beta f| <= M d^(k-|beta|)."""
    worst = LONG(0.0)
    for alpha in multi_index_enumerate(n, p):
        order = multi_index_order(alpha)
        if order == 0:
            continue
        b = composition_bound(
            alpha,
            lambda m: math.factorial(m) * LONG(a) ** (-(m + 1)),
            lambda beta: M)
        worst = max(worst, LONG(b))
    return as_plain_float(worst)


def compose_constant(n, p, M, phi_bounds):
    """Max over alpha of the expansion bound for D^alpha (Phi o f) when f is
    order-0 certified with constant M and |Phi^(m)| <= phi_bounds[m]."""
    worst = LONG(0.0)
    for alpha in multi_index_enumerate(n, p):
        if multi_index_order(alpha) == 0:
            continue
        b = composition_bound(alpha, lambda m: phi_bounds[m], lambda beta: M)
        worst = max(worst, LONG(b))
    return as_plain_float(worst)


# ---------------------------------------------------------------------------
# certificates and certified functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityCertificate:
    """(reference set, exponent k, order p, constant M) plus optional
    sup/lower envelope constants."""

    W: DistanceOracle
    k: int
    p: int
    M: float
    sup_bound: float | None = None
    lower_bound: float | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("certificate order must be >= 1")
        if self.M <= 0:
            raise ValueError("certificate constant must be positive")
        if (self.sup_bound is not None and self.lower_bound is not None
                and self.lower_bound > self.sup_bound + 1e-15):
            raise ValueError("lower envelope exceeds the sup envelope")

    def derivative_bound(self, d, order):
        return self.M * np.asarray(d, dtype=float) ** (self.k - order)


@dataclass
class RegularFunction:
    """A scalar field on a region disjoint from W, with a certificate."""

    field: ScalarField
    cert: RegularityCertificate
    domain: object = None          # optional predicate pts -> bool array
    range_interval: tuple | None = None
    name: str = ""

    @property
    def n(self):
        return self.field.n

    def value(self, x):
        return self.field.value(x)

    __call__ = value

    def with_cert(self, **changes) -> "RegularFunction":
        return replace(self, cert=replace(self.cert, **changes))


def _check_compatible(f: RegularFunction, g: RegularFunction):
    if f.cert.W is not g.cert.W:
        raise CertificateMismatch("certificates refer to different W oracles")
    if f.cert.p != g.cert.p:
        raise CertificateMismatch("certificates have different orders")


def _intersect_domains(f, g):
    if f.domain is None:
        return g.domain
    if g.domain is None:
        return f.domain
    return lambda pts: np.logical_and(f.domain(pts), g.domain(pts))


def cert_product(f: RegularFunction, g: RegularFunction) -> RegularFunction:
    """Pointwise product; exponent k+l, constant by the Leibniz expansion."""
    _check_compatible(f, g)
    if f.cert.sup_bound is None or g.cert.sup_bound is None:
        raise MissingSupBound("product certificates need sup bounds on both factors")
    n, p = f.n, f.cert.p
    M = leibniz_constant(n, p, f.cert.M, f.cert.sup_bound, g.cert.M, g.cert.sup_bound)
    lower = None
    if f.cert.lower_bound is not None and g.cert.lower_bound is not None:
        lower = f.cert.lower_bound * g.cert.lower_bound
    value = lambda pts: f.field._value(pts) * g.field._value(pts)
    fld = ScalarField(n, value, name=f"({f.name})*({g.name})",
                      domain=_intersect_domains(f, g),
                      step_hint=f.field.step_hint or g.field.step_hint)
    cert = RegularityCertificate(f.cert.W, f.cert.k + g.cert.k, p, max(M, 1e-300),
                                 sup_bound=f.cert.sup_bound * g.cert.sup_bound,
                                 lower_bound=lower)
    return RegularFunction(fld, cert, domain=fld.domain,
                           name=f"{f.name}*{g.name}")


def cert_reciprocal(f: RegularFunction, probe_grid=None) -> RegularFunction:
    """1/f; exponent -k, constant from the reciprocal expansion using the
    lower envelope.  An optional probe grid hard-fails on envelope violations."""
    if f.cert.lower_bound is None or f.cert.lower_bound <= 0:
        raise MissingLowerBound("reciprocal needs a positive lower envelope")
    n, p = f.n, f.cert.p
    a = f.cert.lower_bound
    if probe_grid is not None:
        pts = as_points(probe_grid, n)
        vals = np.abs(np.asarray(f.field._value(pts), dtype=float))
        d = np.asarray(f.cert.W.eval(pts), dtype=float).reshape(vals.shape)
        floor = a * d ** f.cert.k
        bad = vals < floor * (1.0 - 1e-9)
        if np.any(bad):
            raise ZeroDenominatorDetected(
                f"|f| fell below its certified lower envelope at {pts[bad][0]}")
    M = reciprocal_constant(n, p, f.cert.M, a)
    sup = 1.0 / a
    lower = None if f.cert.sup_bound is None else 1.0 / f.cert.sup_bound
    value = lambda pts: 1.0 / np.asarray(f.field._value(pts), dtype=float)
    fld = ScalarField(n, value, name=f"1/({f.name})", domain=f.domain,
                      step_hint=f.field.step_hint)
    cert = RegularityCertificate(f.cert.W, -f.cert.k, p, max(M, 1e-300),
                                 sup_bound=sup, lower_bound=lower)
    return RegularFunction(fld, cert, domain=f.domain, name=f"1/{f.name}")


def _probe_phi_bounds(phi: ScalarField, lo, hi, p, samples=4096) -> dict[int, float]:
    ts = np.linspace(lo, hi, samples)
    out = {}
    for m in range(p + 1):
        alpha = (m,)
        vals = np.abs(np.asarray(phi.derivative(ts[:, None], alpha), dtype=float)) \
            if m else np.abs(np.asarray(phi.value(ts[:, None]), dtype=float))
        out[m] = float(vals.max()) * (1.0 + 1e-6)
    return out


def cert_compose(phi: ScalarField, f: RegularFunction,
                 phi_bounds: dict[int, float] | None = None) -> RegularFunction:
    """Phi o f for a bounded order-0 certified f; exponent stays 0.

    Bounds on |Phi^(m)| over the closure of f's range are taken from
    `phi_bounds` when given, from the plateau field's exact sups when phi is
    one, and otherwise probed on f's declared range interval.
    """
    if f.cert.k != 0 or f.cert.sup_bound is None:
        raise UnboundedInner("composition needs a k=0 inner with a sup bound")
    n, p = f.n, f.cert.p
    if phi_bounds is None:
        if isinstance(phi, PlateauField):
            phi_bounds = phi.sup_bounds(p)
        else:
            lo, hi = f.range_interval if f.range_interval is not None else (
                -f.cert.sup_bound, f.cert.sup_bound)
            phi_bounds = _probe_phi_bounds(phi, lo, hi, p)
    M = compose_constant(n, p, f.cert.M, phi_bounds)
    value = lambda pts: phi._value(
        np.asarray(f.field._value(pts), dtype=float)[..., None])
    fld = ScalarField(n, value, name=f"{phi.name}o{f.name}", domain=f.domain,
                      step_hint=f.field.step_hint)
    cert = RegularityCertificate(f.cert.W, 0, p, max(M, 1e-300),
                                 sup_bound=phi_bounds[0])
    return RegularFunction(fld, cert, domain=f.domain,
                           name=f"{phi.name}o{f.name}")


# ---------------------------------------------------------------------------
# independent verification
# ---------------------------------------------------------------------------

def cert_verify(rf: RegularFunction, grid, stage="cert_verify",
                use_exact=False, rel_margin=5e-3) -> CertificateReport:
    """Probe every |alpha| in 1..p on the grid and compare against the
    certified envelope M d^(k-|alpha|); sup/lower rows when bounds exist.

    Probes are finite differences with step max(1e-6, 1e-3 d(x, W)) unless
    `use_exact` asks for the field's own derivative rule.  Margins cover the
    finite-difference truncation, not the certificate.
    """
    cert = rf.cert
    pts = as_points(grid, rf.n)
    pts = pts.reshape(-1, rf.n)
    d = np.asarray(cert.W.eval(pts), dtype=float).reshape(len(pts))
    report = CertificateReport()
    steps = np.maximum(1e-6, 1e-3 * np.where(np.isfinite(d), d, 1.0))

    for alpha in multi_index_enumerate(rf.n, cert.p):
        order = multi_index_order(alpha)
        if order == 0:
            continue
        if use_exact and rf.field.derivative_kind == "exact":
            obs = np.abs(np.asarray(rf.field._derivative(pts, alpha), dtype=float))
        else:
            obs = np.abs(fd_partial_batch(rf.field, pts, alpha, steps))
        claimed = cert.derivative_bound(d, order)
        ratio = np.where(claimed > 0, obs / np.where(claimed > 0, claimed, 1.0), np.inf)
        worst = int(np.argmax(ratio))
        report.add(stage, f"derivative_envelope|alpha={alpha}",
                   f"x={pts[worst].tolist()}", claimed[worst], obs[worst],
                   margin=rel_margin * abs(claimed[worst]) + 1e-12)

    vals = np.abs(np.asarray(rf.field._value(pts), dtype=float).reshape(len(pts)))
    if cert.sup_bound is not None:
        claimed = cert.sup_bound * d ** cert.k
        worst = int(np.argmax(vals - claimed))
        report.add(stage, "sup_envelope", f"x={pts[worst].tolist()}",
                   claimed[worst], vals[worst],
                   margin=1e-9 * abs(claimed[worst]) + 1e-12)
    if cert.lower_bound is not None:
        floor = cert.lower_bound * d ** cert.k
        worst = int(np.argmax(floor - vals))
        # lower bound phrased as: floor - |f| <= 0
        report.add(stage, "lower_envelope", f"x={pts[worst].tolist()}",
                   0.0, max(0.0, float(floor[worst] - vals[worst])),
                   margin=1e-9 * abs(floor[worst]) + 1e-12)
    return report
