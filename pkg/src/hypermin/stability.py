"""Jacobi operator discretization and spectral stability analysis.

The operator L = Delta + (|A|^2 - 2) on a chart rectangle is discretized
with divergence-form 5-point finite differences (metric coefficients at
half nodes) and lumped mass, giving a symmetric generalized eigenproblem
A phi = lambda B phi whose eigenvalues approximate those of -L with
Dirichlet boundary.  Rotationally symmetric charts use periodic coupling
in the second coordinate instead of Dirichlet walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .diffgeo import fundamental_forms
from .lorentz import GeometryError
from .surfaces import BallCatenoid, Helicoid, SurfaceChart

AMBIENT_RICCI = -2.0          # Ric(e3) in the curvature -1 space form
MARGINAL_BAND = 1e-4          # |lambda1| below this is reported as marginal
RESIDUAL_TOL = 1e-8

# Default exhaustion and critical-search settings (all overridable).
DEFAULT_SCHEDULE_KS = tuple(range(1, 9))
DEFAULT_SCHEDULE_SPACING = 0.05
DEFAULT_CRITICAL_DOMAIN = (-6.0, 6.0, -6.0, 6.0)
DEFAULT_CRITICAL_SPACING = 0.04
# Catenoid-side schedule: neck-coordinate half-widths with t = abar + w^2.
DEFAULT_CATENOID_WS = (0.8, 1.1, 1.4, 1.7, 2.0, 2.3)
DEFAULT_CATENOID_SPACING = (0.02, 2.0 * math.pi / 96)


class SolverError(RuntimeError):
    """Eigen-solver failed to converge."""


@dataclass(frozen=True)
class Domain:
    u0: float
    u1: float
    v0: float
    v1: float

    def __post_init__(self):
        if not (self.u1 > self.u0 and self.v1 > self.v0):
            raise GeometryError(f"degenerate domain {self}")

    @classmethod
    def square(cls, k):
        return cls(-k, k, -k, k)

    def contains(self, other: "Domain") -> bool:
        return (self.u0 <= other.u0 and self.u1 >= other.u1
                and self.v0 <= other.v0 and self.v1 >= other.v1)


@dataclass
class SpectrumReport:
    """First Dirichlet eigenvalue of -L on a domain, with diagnostics."""

    lambda1: float
    residual: float
    domain: Domain
    nu: int
    nv: int
    v_periodic: bool
    ground_state_one_signed: bool
    negative_count: int | None = None
    lambda1_extrapolated: float | None = None

    @property
    def marginal(self) -> bool:
        return abs(self.lambda1) < MARGINAL_BAND

    @property
    def classification(self) -> str:
        if self.marginal:
            return "marginal"
        return "stable" if self.lambda1 > 0 else "unstable"


class JacobiProblem:
    """Discretized Jacobi eigenproblem on a parameter rectangle.

    ``fields(U, V)`` must return (E, F, G, q) arrays; q is the zeroth-order
    coefficient of L (q = |A|^2 - 2 for minimal charts in H^3).
    """

    def __init__(self, fields, domain: Domain, nu: int, nv: int,
                 v_periodic: bool = False):
        if nu < 1 or nv < 1:
            raise GeometryError("grid must have at least one interior node per axis")
        self.fields = fields
        self.domain = domain
        self.nu = int(nu)
        self.nv = int(nv)
        self.v_periodic = bool(v_periodic)

    @classmethod
    def from_chart(cls, chart: SurfaceChart, domain: Domain, nu: int, nv: int,
                   v_periodic: bool = False) -> "JacobiProblem":
        def fields(U, V):
            f = fundamental_forms(chart, U, V)
            # F vanishes identically for the supported charts; the bound
            # absorbs cancellation round-off in large-coordinate products
            if np.max(np.abs(f.F) / np.sqrt(f.E * f.G)) > 1e-6:
                raise GeometryError("chart metric is not orthogonal (F != 0)")
            q = f.normA2 + AMBIENT_RICCI
            return f.E, f.F, f.G, q
        return cls(fields, domain, nu, nv, v_periodic=v_periodic)

    @classmethod
    def flat(cls, domain: Domain, nu: int, nv: int, q=None) -> "JacobiProblem":
        """Euclidean metric with an optional potential; test oracle."""
        def fields(U, V):
            one = np.ones_like(U)
            qv = np.zeros_like(U) if q is None else np.asarray(q(U, V), dtype=float)
            return one, np.zeros_like(U), one, qv
        return cls(fields, domain, nu, nv)

    @classmethod
    def from_spacing(cls, chart, domain: Domain, spacing, v_periodic=False):
        hu, hv = (spacing, spacing) if np.isscalar(spacing) else spacing
        nu = max(1, round((domain.u1 - domain.u0) / hu) - 1)
        if v_periodic:
            nv = max(3, round((domain.v1 - domain.v0) / hv))
        else:
            nv = max(1, round((domain.v1 - domain.v0) / hv) - 1)
        return cls.from_chart(chart, domain, nu, nv, v_periodic=v_periodic)

    # -- assembly ---------------------------------------------------------

    def grids(self):
        d = self.domain
        du = (d.u1 - d.u0) / (self.nu + 1)
        if self.v_periodic:
            dv = (d.v1 - d.v0) / self.nv
            v_nodes = d.v0 + dv * np.arange(self.nv)
        else:
            dv = (d.v1 - d.v0) / (self.nv + 1)
            v_nodes = d.v0 + dv * np.arange(1, self.nv + 1)
        u_nodes = d.u0 + du * np.arange(1, self.nu + 1)
        return u_nodes, v_nodes, du, dv

    def assemble(self):
        """Return (A, B): stiffness-plus-potential and lumped mass matrices."""
        u, v, du, dv = self.grids()
        nu, nv = self.nu, self.nv
        d = self.domain

        U, V = np.meshgrid(u, v, indexing="ij")
        E, F, G, q = self.fields(U, V)
        if not (np.all(np.isfinite(E)) and np.all(np.isfinite(G))
                and np.all(np.isfinite(q))):
            raise GeometryError("nonfinite metric or potential on domain")
        sg = np.sqrt(E * G - F ** 2)
        b = (sg * du * dv).ravel()

        # u-edges at half nodes: coefficient sqrt(g) g^{uu} = G / sqrt(EG - F^2)
        ue = d.u0 + du * (np.arange(nu + 1) + 0.5)
        Ue, Ve = np.meshgrid(ue, v, indexing="ij")
        Ee, Fe, Ge, _ = self.fields(Ue, Ve)
        wu = (dv / du) * Ge / np.sqrt(Ee * Ge - Fe ** 2)

        # v-edges
        if self.v_periodic:
            ve = d.v0 + dv * (np.arange(nv) + 0.5)
        else:
            ve = d.v0 + dv * (np.arange(nv + 1) + 0.5)
        Ue, Ve = np.meshgrid(u, ve, indexing="ij")
        Ee, Fe, Ge, _ = self.fields(Ue, Ve)
        wv = (du / dv) * Ee / np.sqrt(Ee * Ge - Fe ** 2)

        n = nu * nv
        idx = np.arange(n).reshape(nu, nv)
        diag = np.zeros((nu, nv))
        rows, cols, vals = [], [], []

        # interior u-edges couple (i, j) and (i+1, j); boundary edges only
        # add to the diagonal (Dirichlet elimination)
        inner = wu[1:nu, :]
        diag[:-1, :] += inner
        diag[1:, :] += inner
        diag[0, :] += wu[0, :]
        diag[-1, :] += wu[nu, :]
        rows.append(idx[:-1, :].ravel())
        cols.append(idx[1:, :].ravel())
        vals.append(-inner.ravel())

        if self.v_periodic:
            diag += wv
            diag += np.roll(wv, 1, axis=1)
            rows.append(idx.ravel())
            cols.append(np.roll(idx, -1, axis=1).ravel())
            vals.append(-wv.ravel())
        else:
            inner = wv[:, 1:nv]
            diag[:, :-1] += inner
            diag[:, 1:] += inner
            diag[:, 0] += wv[:, 0]
            diag[:, -1] += wv[:, nv]
            rows.append(idx[:, :-1].ravel())
            cols.append(idx[:, 1:].ravel())
            vals.append(-inner.ravel())

        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        off = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
        A = (sp.diags(diag.ravel() - q.ravel() * b) + off + off.T).tocsc()
        B = sp.diags(b).tocsc()
        return A, B


def _gershgorin_floor(A, B):
    absA = abs(A)
    row = np.asarray(absA.sum(axis=1)).ravel()
    dia = A.diagonal()
    b = B.diagonal()
    # dia - (off-diagonal absolute row sum), scaled by the lumped mass
    return float(np.min((dia - (row - np.abs(dia))) / b))


def lambda1(problem: JacobiProblem, maxiter=None) -> SpectrumReport:
    """Smallest eigenvalue of (A, B) by shift-and-invert Lanczos iteration.

    The shift sits below the Gershgorin floor of B^{-1}A, so the eigenvalue
    nearest the shift is the smallest one; the starting vector is fixed for
    bit-reproducible runs.
    """
    A, B = problem.assemble()
    n = A.shape[0]
    if n < 8:
        rb = 1.0 / np.sqrt(B.diagonal())
        S = (A.multiply(rb[:, None]).multiply(rb[None, :])).toarray()
        w, vv = np.linalg.eigh(0.5 * (S + S.T))
        vals, vecs = w[:1], (vv[:, :1] * rb[:, None])
    else:
        sigma = _gershgorin_floor(A, B)
        sigma -= 0.1 * (1.0 + abs(sigma))
        v0 = np.ones(n)
        try:
            vals, vecs = spla.eigsh(A, k=1, M=B, sigma=sigma, which="LM",
                                    v0=v0, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"eigensolver did not converge: {exc}") from exc
    lam = float(vals[0])
    phi = vecs[:, 0]
    r = A @ phi - lam * (B @ phi)
    residual = float(np.linalg.norm(r) / ((1.0 + abs(lam)) * np.linalg.norm(B @ phi)))
    if residual > RESIDUAL_TOL:
        raise SolverError(f"eigenpair residual {residual:.2e} above {RESIDUAL_TOL:.0e}")
    peak = phi[np.argmax(np.abs(phi))]
    phi = phi * np.sign(peak)
    one_signed = bool(np.all(phi >= -1e-10 * np.max(np.abs(phi))))
    return SpectrumReport(lambda1=lam, residual=residual, domain=problem.domain,
                          nu=problem.nu, nv=problem.nv,
                          v_periodic=problem.v_periodic,
                          ground_state_one_signed=one_signed)


def lambda1_refined(problem: JacobiProblem) -> SpectrumReport:
    """lambda1 with Richardson extrapolation over grids h and h/2."""
    coarse = lambda1(problem)
    fine = JacobiProblem(problem.fields, problem.domain,
                         2 * problem.nu + 1,
                         2 * problem.nv if problem.v_periodic else 2 * problem.nv + 1,
                         v_periodic=problem.v_periodic)
    rep = lambda1(fine)
    rep.lambda1_extrapolated = rep.lambda1 + (rep.lambda1 - coarse.lambda1) / 3.0
    return rep


def _inertia_ldl(S: np.ndarray) -> int:
    """Negative-eigenvalue count via a symmetric indefinite factorization."""
    _, D, _ = scipy.linalg.ldl(S)
    count = 0
    i = 0
    n = D.shape[0]
    while i < n:
        if i + 1 < n and abs(D[i + 1, i]) > 0:
            blk = D[i:i + 2, i:i + 2]
            tr = blk[0, 0] + blk[1, 1]
            det = blk[0, 0] * blk[1, 1] - blk[0, 1] * blk[1, 0]
            if det < 0:
                count += 1            # one eigenvalue of each sign
            elif tr < 0:
                count += 2
            i += 2
        else:
            if D[i, i] < 0:
                count += 1
            i += 1
    return count


DENSE_INERTIA_LIMIT = 1700


def morse_index(problem: JacobiProblem) -> int:
    """Number of negative eigenvalues of (A, B) on the domain.

    B is diagonal SPD, so the inertia of B^{-1/2} A B^{-1/2} gives the
    count (Sylvester).  Small systems use a dense LDL^T factorization;
    large ones count eigenvalues below a shift under the spectrum bottom.
    """
    A, B = problem.assemble()
    n = A.shape[0]
    rb = 1.0 / np.sqrt(B.diagonal())
    if n <= DENSE_INERTIA_LIMIT:
        S = (A.multiply(rb[:, None]).multiply(rb[None, :])).toarray()
        S = 0.5 * (S + S.T)
        return _inertia_ldl(S)
    S = sp.diags(rb) @ A @ sp.diags(rb)
    rep = lambda1(problem)
    if rep.lambda1 >= 0:
        return 0
    sigma = rep.lambda1 - max(1.0, 0.1 * abs(rep.lambda1))
    k = 8
    v0 = np.ones(n)
    while True:
        try:
            vals = spla.eigsh(S, k=k, sigma=sigma, which="LM", v0=v0,
                              return_eigenvectors=False)
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"index solve did not converge: {exc}") from exc
        neg = int(np.sum(vals < 0))
        if neg < k or k >= min(64, n - 2):
            return neg
        k = min(2 * k, n - 2)


@dataclass
class ExhaustionResult:
    reports: list
    limit_estimate: float | None
    fit_residual: float | None
    crossing_index: int | None       # first report with lambda1 < 0

    @property
    def classification(self) -> str:
        lams = [r.lambda1 for r in self.reports]
        if min(lams) < -MARGINAL_BAND:
            return "unstable"
        if min(lams) > MARGINAL_BAND:
            return "stable"
        return "marginal"


def exhaustion(chart: SurfaceChart, domains, spacing,
               v_periodic=False, with_index=False) -> ExhaustionResult:
    """Solve lambda1 along a nested domain schedule with fixed spacing.

    Checks strict monotone decrease (domain monotonicity of the first
    eigenvalue) and fits an Aitken limit to the tail of the sequence.
    """
    domains = list(domains)
    for small, big in zip(domains, domains[1:]):
        if not big.contains(small):
            raise GeometryError("domain schedule is not nested")
    reports = []
    for dom in domains:
        prob = JacobiProblem.from_spacing(chart, dom, spacing, v_periodic=v_periodic)
        rep = lambda1(prob)
        if with_index:
            rep.negative_count = morse_index(prob)
        reports.append(rep)
    lams = [r.lambda1 for r in reports]
    limit = fit_res = None
    if len(lams) >= 3:
        l1, l2, l3 = lams[-3:]
        den = l1 - 2.0 * l2 + l3
        if abs(den) > 1e-15:
            limit = l3 - (l3 - l2) ** 2 / den
            if len(lams) >= 4:
                # residual of the geometric-tail model against one more point
                ratio = (l3 - l2) / (l2 - l1) if l2 != l1 else 0.0
                pred = l2 + (l2 - lams[-4]) * ratio
                fit_res = abs(pred - l3)
    crossing = next((i for i, l in enumerate(lams) if l < 0), None)
    return ExhaustionResult(reports, limit, fit_res, crossing)


def square_schedule(ks=DEFAULT_SCHEDULE_KS):
    return [Domain.square(float(k)) for k in ks]


def catenoid_schedule(ws=DEFAULT_CATENOID_WS):
    return [Domain(-w, w, 0.0, 2.0 * math.pi) for w in ws]


@dataclass
class CriticalSearchResult:
    value: float
    bracket: tuple
    tol: float
    trace: list = field(default_factory=list)   # (param, lambda1) pairs


def _bisect_sign_change(f, lo, hi, tol, increasing: bool):
    """Bisection of the zero crossing of a monotone-sign map f."""
    flo, fhi = f(lo), f(hi)
    trace = [(lo, flo), (hi, fhi)]
    want_lo_neg = increasing
    if (flo < 0) == (fhi < 0):
        raise GeometryError(
            f"invalid bracket: f({lo}) = {flo:.4g} and f({hi}) = {fhi:.4g} "
            "have the same sign")
    if want_lo_neg != (flo < 0):
        raise GeometryError("bracket endpoints have reversed signs")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        trace.append((mid, fm))
        if (fm < 0) == want_lo_neg:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), trace


def critical_pitch(domain: Domain = None, spacing=DEFAULT_CRITICAL_SPACING,
                   bracket=(1.0, 4.0), tol=1e-3) -> CriticalSearchResult:
    """Bisection on the helicoid pitch for the lambda1 = 0 crossing."""
    if domain is None:
        domain = Domain(*DEFAULT_CRITICAL_DOMAIN)

    def f(a):
        prob = JacobiProblem.from_spacing(Helicoid(a), domain, spacing)
        return lambda1(prob).lambda1

    lo, hi = bracket
    # lambda1 decreases in a: stable at lo, unstable at hi
    value, trace = _bisect_sign_change(f, lo, hi, tol, increasing=False)
    return CriticalSearchResult(value, (lo, hi), tol, trace)


def critical_neck(spacing=DEFAULT_CATENOID_SPACING, w_half=2.0,
                  bracket=(0.3, 0.8), tol=1e-3) -> CriticalSearchResult:
    """Bisection on the catenoid neck parameter for the stability boundary."""
    domain = Domain(-w_half, w_half, 0.0, 2.0 * math.pi)

    def f(abar):
        chart = BallCatenoid(abar, w_max=w_half + 0.5)
        prob = JacobiProblem.from_spacing(chart, domain, spacing, v_periodic=True)
        return lambda1(prob).lambda1

    lo, hi = bracket
    # lambda1 increases in abar: unstable below the critical neck
    value, trace = _bisect_sign_change(f, lo, hi, tol, increasing=True)
    return CriticalSearchResult(value, (lo, hi), tol, trace)


@dataclass
class ConjugacyReport:
    a: float
    abar: float
    helicoid: ExhaustionResult
    catenoid: ExhaustionResult

    @property
    def agree(self) -> bool:
        return self.helicoid.classification == self.catenoid.classification


def conjugacy_crosscheck(a: float,
                         helicoid_ks=DEFAULT_SCHEDULE_KS,
                         helicoid_spacing=DEFAULT_SCHEDULE_SPACING,
                         catenoid_ws=DEFAULT_CATENOID_WS,
                         catenoid_spacing=DEFAULT_CATENOID_SPACING) -> ConjugacyReport:
    """Compare stability of the helicoid H_a and its conjugate catenoid.

    For a > 1 the conjugate surface is the spherical catenoid with neck
    parameter abar = arcoth(a); both sides are classified by their own
    exhaustion sequence and the classifications are expected to agree.
    """
    if a <= 1.0:
        raise GeometryError(f"conjugate catenoid comparison needs a > 1, got {a}")
    abar = 0.5 * math.log((a + 1.0) / (a - 1.0))
    heli = exhaustion(Helicoid(a), square_schedule(helicoid_ks), helicoid_spacing)
    chart = BallCatenoid(abar, w_max=max(catenoid_ws) + 0.5)
    cat = exhaustion(chart, catenoid_schedule(catenoid_ws), catenoid_spacing,
                     v_periodic=True)
    return ConjugacyReport(a, abar, heli, cat)
