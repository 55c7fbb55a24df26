"""Fundamental forms, mean curvature, |A|^2 and the conjugate-form rotation.

All extrinsic quantities are computed ambiently in L^4: the first form from
Minkowski dots of the first partials, the unit normal as the (spacelike)
Minkowski cross product of {x, x_u, x_v}, and b_ij = <x_ij, n>.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .lorentz import GeometryError, minkowski_dot
from .surfaces import SurfaceChart

# Regularity floor for EG - F^2 and tolerance for "minimal" assertions.
DEGENERACY_TOL = 1e-14
MINIMAL_TOL_ANALYTIC = 1e-6
MINIMAL_TOL_FD = 1e-4


@dataclass
class FundamentalForms:
    """First (E, F, G) and second (b11, b12, b22) fundamental forms.

    Fields may be scalars or arrays over a parameter grid.
    """

    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    b11: np.ndarray
    b12: np.ndarray
    b22: np.ndarray

    @property
    def det1(self):
        return self.E * self.G - self.F ** 2

    @property
    def mean_curvature(self):
        return (self.G * self.b11 - 2.0 * self.F * self.b12
                + self.E * self.b22) / self.det1

    @property
    def normA2(self):
        """|A|^2 = tr(S^2) for the shape operator S = I^{-1} II."""
        d = self.det1
        # S in mixed form; tr(S^2) written out for 2x2 symmetric II
        s11 = (self.G * self.b11 - self.F * self.b12) / d
        s12 = (self.G * self.b12 - self.F * self.b22) / d
        s21 = (self.E * self.b12 - self.F * self.b11) / d
        s22 = (self.E * self.b22 - self.F * self.b12) / d
        return s11 * s11 + 2.0 * s12 * s21 + s22 * s22


def _minkowski_cross(a, b, c):
    """Vector Minkowski-orthogonal to a, b, c (cofactor expansion)."""
    rows = np.stack([a, b, c], axis=-2)

    def minor(k):
        cols = [j for j in range(4) if j != k]
        m = rows[..., cols]
        return (m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
                - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
                + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0]))

    d = np.stack([minor(0), -minor(1), minor(2), -minor(3)], axis=-1)
    # Euclidean-orthogonal cofactor vector -> flip time component
    d[..., 0] = -d[..., 0]
    return d


def unit_normal(x, xu, xv):
    """Deterministic spacelike unit normal to the tangent space at x.

    Sign convention: the first component (in coordinate order) whose
    magnitude exceeds 1e-10 of the largest is made positive.
    """
    n = _minkowski_cross(x, xu, xv)
    nn = minkowski_dot(n, n)
    if np.any(nn <= DEGENERACY_TOL):
        raise GeometryError("degenerate or lightlike normal candidate")
    n = n / np.sqrt(nn)[..., None]
    mag = np.max(np.abs(n), axis=-1, keepdims=True)
    significant = np.abs(n) > 1e-10 * mag
    first = np.argmax(significant, axis=-1)
    lead = np.take_along_axis(n, first[..., None], axis=-1)[..., 0]
    return n * np.sign(lead)[..., None]


def fundamental_forms(chart: SurfaceChart, u, v) -> FundamentalForms:
    """Evaluate both fundamental forms of a chart at (u, v) (vectorized)."""
    x, xu, xv, xuu, xuv, xvv = chart.partials(u, v)
    E = minkowski_dot(xu, xu)
    F = minkowski_dot(xu, xv)
    G = minkowski_dot(xv, xv)
    if np.any(E * G - F ** 2 <= DEGENERACY_TOL):
        raise GeometryError("degenerate metric: EG - F^2 below tolerance")
    n = unit_normal(x, xu, xv)
    return FundamentalForms(E=E, F=F, G=G,
                            b11=minkowski_dot(xuu, n),
                            b12=minkowski_dot(xuv, n),
                            b22=minkowski_dot(xvv, n))


def conjugate_forms(base: FundamentalForms, theta: float,
                    tol: float = 1e-9) -> FundamentalForms:
    """Associate-family rotation of the second form; theta = pi/2 conjugates.

    Requires isothermal, trace-free input (E = G, F = 0, b22 = -b11).
    The pair (b11, b12) rotates rigidly, so b11^2 + b12^2 is preserved and
    the first form is untouched; theta = 0 is the identity.
    """
    scale = np.max(np.abs(base.E)) + np.max(np.abs(base.G))
    dEG = np.max(np.abs(base.E - base.G))
    dF = np.max(np.abs(base.F))
    if dEG > tol * scale or dF > tol * scale:
        raise GeometryError(
            f"conjugation needs isothermal forms: |E-G| = {dEG:.3e}, |F| = {dF:.3e}")
    btrace = np.max(np.abs(base.b11 + base.b22))
    if btrace > tol * (np.max(np.abs(base.b11)) + scale):
        raise GeometryError(f"conjugation needs trace-free II: |b11+b22| = {btrace:.3e}")
    c, s = np.cos(theta), np.sin(theta)
    psi_re = base.b11 * c + base.b12 * s
    psi_im = base.b12 * c - base.b11 * s
    return replace(base, b11=psi_re, b12=psi_im, b22=-psi_re)


class IsothermalStrip:
    """Isothermal reparametrization of a chart with metric diag(1, G(u)).

    New coordinates (sigma, t): sigma(u) = int_0^u dw / sqrt(G(w)), t = v.
    In them E = G = G(u(sigma)) and F = 0.
    """

    def __init__(self, chart: SurfaceChart, u_range, n=2000, tol=1e-10):
        self.chart = chart
        u0, u1 = u_range
        probe_u = np.linspace(u0, u1, 7)
        f = fundamental_forms(chart, probe_u, np.full_like(probe_u, 0.3))
        g = fundamental_forms(chart, probe_u, np.full_like(probe_u, -0.7))
        if (np.max(np.abs(f.E - 1.0)) > 1e-8 or np.max(np.abs(f.F)) > 1e-8
                or np.max(np.abs(f.G - g.G)) > 1e-8):
            raise GeometryError(
                "isothermal reparametrization supports metrics diag(1, G(u)) only")
        lo = min(u0, 0.0)
        hi = max(u1, 0.0)
        u = np.linspace(lo, hi, n + 1)
        integrand = lambda w: 1.0 / np.sqrt(self._G(w))
        inc = [quad(integrand, u[i], u[i + 1], epsabs=tol, epsrel=0.0)[0]
               for i in range(n)]
        sig = np.concatenate([[0.0], np.cumsum(inc)])
        sig -= np.interp(0.0, u, sig)
        self._u_nodes = u
        self._sig_nodes = sig
        self._sigma_of_u = PchipInterpolator(u, sig)
        self._u_of_sigma = PchipInterpolator(sig, u)

    def _G(self, u):
        uu = np.atleast_1d(np.asarray(u, float))
        f = fundamental_forms(self.chart, uu, np.zeros_like(uu))
        return float(f.G[0])

    def sigma_of_u(self, u):
        return self._sigma_of_u(np.asarray(u, dtype=float))

    def u_of_sigma(self, sigma):
        return self._u_of_sigma(np.asarray(sigma, dtype=float))

    def forms_at(self, u, v) -> FundamentalForms:
        """Forms transported to (sigma, t) coordinates at the point (u, v).

        Chain rule with jacobian diag(du/dsigma, 1) = diag(sqrt(G), 1).
        """
        base = fundamental_forms(self.chart, u, v)
        rt = np.sqrt(base.G)
        return FundamentalForms(E=base.G, F=base.F * rt, G=base.G,
                                b11=base.b11 * base.G,
                                b12=base.b12 * rt,
                                b22=base.b22)
