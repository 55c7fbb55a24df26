"""Parametrized charts for helicoids and catenoids in the hyperboloid model.

Every chart maps (u, v) parameter pairs to points of the unit hyperboloid
in L^4.  First partial derivatives are analytic; second partials fall back
to central differences of the analytic first partials where no closed form
is worth carrying around.

Profile functions that require quadrature (the catenoid phi(s) integrals
and the ball-catenoid generating curve) are integrated once at construction
with QUADPACK and cached as monotone cubic interpolants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .lorentz import GeometryError, minkowski_dot

# Central-difference step for second partials, scaled by parameter size.
FD_STEP = 1e-5


def _fd_scale(u, v):
    return np.maximum(1.0, np.maximum(np.abs(u), np.abs(v)))


class SurfaceChart:
    """Base chart: point(u, v) plus derivative access.

    Subclasses implement ``point`` and ``jet1`` (point with first partials).
    ``partials`` adds second partials, by central differences of the
    analytic first partials unless the subclass overrides ``jet2``.
    """

    fd_step = FD_STEP

    def point(self, u, v):
        raise NotImplementedError

    def jet1(self, u, v):
        raise NotImplementedError

    def jet2(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        x, xu, xv = self.jet1(u, v)
        h = (self.fd_step * _fd_scale(u, v))[..., None]
        hu = h[..., 0]
        _, xu_p, xv_p = self.jet1(u + hu, v)
        _, xu_m, xv_m = self.jet1(u - hu, v)
        xuu = (xu_p - xu_m) / (2 * h)
        xuv_a = (xv_p - xv_m) / (2 * h)
        _, xu_p, xv_p = self.jet1(u, v + hu)
        _, xu_m, xv_m = self.jet1(u, v - hu)
        xvv = (xv_p - xv_m) / (2 * h)
        xuv_b = (xu_p - xu_m) / (2 * h)
        xuv = 0.5 * (xuv_a + xuv_b)
        return x, xu, xv, xuu, xuv, xvv

    def partials(self, u, v):
        """Return (x, xu, xv, xuu, xuv, xvv) as arrays with trailing axis 4."""
        return self.jet2(np.asarray(u, dtype=float), np.asarray(v, dtype=float))

    def check_on_hyperboloid(self, u, v, tol):
        x = self.point(u, v)
        err = np.max(np.abs(minkowski_dot(x, x) + 1.0))
        if err > tol:
            raise GeometryError(f"chart leaves the hyperboloid: {err:.3e} > {tol:.1e}")
        return err


class Helicoid(SurfaceChart):
    """Helicoid of pitch a >= 0; a = 0 is a totally geodesic plane.

    x(u, v) = (cosh u cosh v, cosh u sinh v, sinh u cos(av), sinh u sin(av)).
    All partials are closed-form.
    """

    # Closed forms obtained by direct differentiation of the chart:
    # first fundamental form diag(1, cosh^2 u + a^2 sinh^2 u),
    # second form b11 = b22 = 0, b12 = -a / sqrt(G),
    # hence |A|^2 = 2 a^2 / G^2.

    def __init__(self, a: float):
        if a < 0:
            raise GeometryError(f"helicoid pitch must be >= 0, got {a}")
        self.a = float(a)

    def point(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        a = self.a
        cu, su = np.cosh(u), np.sinh(u)
        return np.stack([cu * np.cosh(v), cu * np.sinh(v),
                         su * np.cos(a * v), su * np.sin(a * v)], axis=-1)

    def jet1(self, u, v):
        x, xu, xv, *_ = self.jet2(u, v)
        return x, xu, xv

    def jet2(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        a = self.a
        cu, su = np.cosh(u), np.sinh(u)
        cv, sv = np.cosh(v), np.sinh(v)
        c, s = np.cos(a * v), np.sin(a * v)
        x = np.stack([cu * cv, cu * sv, su * c, su * s], axis=-1)
        xu = np.stack([su * cv, su * sv, cu * c, cu * s], axis=-1)
        xv = np.stack([cu * sv, cu * cv, -a * su * s, a * su * c], axis=-1)
        xuu = x
        xuv = np.stack([su * sv, su * cv, -a * cu * s, a * cu * c], axis=-1)
        xvv = np.stack([cu * cv, cu * sv, -a * a * su * c, -a * a * su * s], axis=-1)
        return x, xu, xv, xuu, xuv, xvv

    def metric_G(self, u):
        u = np.asarray(u, dtype=float)
        return np.cosh(u) ** 2 + self.a ** 2 * np.sinh(u) ** 2


@dataclass
class ProfileCurve:
    """Sampled profile of a catenoid generating curve.

    ``values`` holds the integrated function (phi for spherical/hyperbolic,
    x4 for parabolic) at ``s``; the interpolant is monotone cubic and odd.
    """

    s: np.ndarray
    values: np.ndarray
    tol: float

    def __post_init__(self):
        self._interp = PchipInterpolator(self.s, self.values)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(np.abs(s) > self.s[-1] + 1e-12):
            raise GeometryError(
                f"|s| = {np.max(np.abs(s)):.4g} beyond profile range {self.s[-1]:.4g}")
        return np.sign(s) * self._interp(np.abs(s))


def _integrate_profile(integrand, s_max, tol, n_min=800):
    """Cumulative integral of an even positive integrand from 0, on [0, s_max].

    The node density bounds the interpolation error of the cached monotone
    cubic; it must stay small enough that finite differences of the chart
    (and hence the discrete mean curvature) are not polluted.
    """
    n = max(n_min, int(320 * s_max))
    s = np.linspace(0.0, s_max, n + 1)
    inc = np.empty(n)
    eps = tol / n
    for i in range(n):
        val, err = quad(integrand, s[i], s[i + 1], epsabs=eps, epsrel=0.0)
        if err > 10 * eps:
            raise GeometryError(
                f"quadrature failed on [{s[i]:.6g}, {s[i+1]:.6g}] (err {err:.2e})")
        inc[i] = val
    return s, np.concatenate([[0.0], np.cumsum(inc)])


def spherical_phi_integrand(atilde):
    c = math.sqrt(atilde * atilde - 0.25)

    def f(s):
        ch = atilde * np.cosh(2.0 * s)
        return c / ((ch + 0.5) * np.sqrt(ch - 0.5))

    return f

def hyperbolic_phi_integrand(atilde):
    c = math.sqrt(atilde * atilde - 0.25)

    def f(s):
        ch = atilde * np.cosh(2.0 * s)
        return c / ((ch - 0.5) * np.sqrt(ch + 0.5))

    return f


def parabolic_x4_integrand():
    return lambda s: np.cosh(2.0 * s) ** -1.5


class _CatenoidBase(SurfaceChart):
    """Rotation surface over a profile curve in a pseudo-orthonormal frame."""

    def __init__(self, s_max=6.0, tol=1e-10):
        self.s_max = float(s_max)
        self.tol = float(tol)
        self.profile = self._build_profile()

    def _build_profile(self) -> ProfileCurve:
        raise NotImplementedError


class SphericalCatenoid(_CatenoidBase):
    """Spherical catenoid: rotation about a geodesic axis.

    Generating curve x1(s) = sqrt(atilde cosh 2s - 1/2) in the plane spanned
    by a spacelike direction and the axis plane; chart parameters (s, theta)
    with theta the rotation angle (period 2 pi).
    """

    def __init__(self, atilde: float, s_max=6.0, tol=1e-10):
        if atilde <= 0.5:
            raise GeometryError(f"spherical catenoid needs atilde > 1/2, got {atilde}")
        self.atilde = float(atilde)
        super().__init__(s_max, tol)

    def _build_profile(self):
        s, phi = _integrate_profile(spherical_phi_integrand(self.atilde),
                                    self.s_max, self.tol)
        return ProfileCurve(s, phi, self.tol)

    def _curve(self, s):
        at = self.atilde
        x1 = np.sqrt(at * np.cosh(2.0 * s) - 0.5)
        r = np.sqrt(x1 * x1 + 1.0)
        phi = self.profile(s)
        x3 = r * np.sinh(phi)
        x4 = r * np.cosh(phi)
        d_x1 = at * np.sinh(2.0 * s) / x1
        d_r = x1 * d_x1 / r
        d_phi = spherical_phi_integrand(at)(s)
        d_x3 = d_r * np.sinh(phi) + r * np.cosh(phi) * d_phi
        d_x4 = d_r * np.cosh(phi) + r * np.sinh(phi) * d_phi
        return x1, x3, x4, d_x1, d_x3, d_x4

    def point(self, s, theta):
        return self.jet1(s, theta)[0]

    def jet1(self, s, theta):
        s = np.asarray(s, dtype=float)
        theta = np.asarray(theta, dtype=float)
        x1, x3, x4, d_x1, d_x3, d_x4 = self._curve(s)
        c, sn = np.cos(theta), np.sin(theta)
        z = np.zeros(np.broadcast(s, theta).shape)
        # standard coordinates: timelike component first
        x = np.stack([x4 + z, x1 * c, x1 * sn, x3 + z], axis=-1)
        xs = np.stack([d_x4 + z, d_x1 * c, d_x1 * sn, d_x3 + z], axis=-1)
        xt = np.stack([z, -x1 * sn, x1 * c, z], axis=-1)
        return x, xs, xt


class HyperbolicCatenoid(_CatenoidBase):
    """Hyperbolic catenoid: the rotation group is a family of boosts.

    Chart parameters (s, beta) with beta the boost parameter (unbounded).
    """

    def __init__(self, atilde: float, s_max=6.0, tol=1e-10):
        if atilde <= 0.5:
            raise GeometryError(f"hyperbolic catenoid needs atilde > 1/2, got {atilde}")
        self.atilde = float(atilde)
        super().__init__(s_max, tol)

    def _build_profile(self):
        s, phi = _integrate_profile(hyperbolic_phi_integrand(self.atilde),
                                    self.s_max, self.tol)
        return ProfileCurve(s, phi, self.tol)

    def _curve(self, s):
        at = self.atilde
        x1 = np.sqrt(at * np.cosh(2.0 * s) + 0.5)
        r = np.sqrt(x1 * x1 - 1.0)
        phi = self.profile(s)
        x3 = r * np.sin(phi)
        x4 = r * np.cos(phi)
        d_x1 = at * np.sinh(2.0 * s) / x1
        d_r = x1 * d_x1 / r
        d_phi = hyperbolic_phi_integrand(at)(s)
        d_x3 = d_r * np.sin(phi) + r * np.cos(phi) * d_phi
        d_x4 = d_r * np.cos(phi) - r * np.sin(phi) * d_phi
        return x1, x3, x4, d_x1, d_x3, d_x4

    def point(self, s, beta):
        return self.jet1(s, beta)[0]

    def jet1(self, s, beta):
        s = np.asarray(s, dtype=float)
        beta = np.asarray(beta, dtype=float)
        x1, x3, x4, d_x1, d_x3, d_x4 = self._curve(s)
        cb, sb = np.cosh(beta), np.sinh(beta)
        z = np.zeros(np.broadcast(s, beta).shape)
        x = np.stack([x1 * cb, x1 * sb, x3 + z, x4 + z], axis=-1)
        xs = np.stack([d_x1 * cb, d_x1 * sb, d_x3 + z, d_x4 + z], axis=-1)
        xb = np.stack([x1 * sb, x1 * cb, z, z], axis=-1)
        return x, xs, xb


# Null frame for the parabolic catenoid.  With f1 = (1,0,0,1)/2 and
# f3 = (1,0,0,-1)/2 the products are <f1,f1> = <f3,f3> = 0 and
# <f1,f3> = -1/2, which is the normalization forced by the hyperboloid
# constraint of the stated curve x3 = (1 + x4^2)/x1.
PARABOLIC_FRAME = np.array([
    [0.5, 0.0, 0.0, 0.5],    # f1 (null)
    [0.0, 1.0, 0.0, 0.0],    # f2 (spacelike)
    [0.5, 0.0, 0.0, -0.5],   # f3 (null)
    [0.0, 0.0, 1.0, 0.0],    # f4 (spacelike)
])


class ParabolicCatenoid(_CatenoidBase):
    """Parabolic catenoid: rotation by null (parabolic) isometries.

    Chart parameters (s, w); the orbit map is
    x(s, w) = x1 f1 + (x1 w) f2 + (x3 + x1 w^2) f3 + x4 f4.
    """

    def __init__(self, s_max=6.0, tol=1e-10):
        super().__init__(s_max, tol)

    def _build_profile(self):
        s, x4 = _integrate_profile(parabolic_x4_integrand(), self.s_max, self.tol)
        # the paper's integral I(s); x4 = x1 * I
        return ProfileCurve(s, x4, self.tol)

    def _curve(self, s):
        x1 = np.sqrt(np.cosh(2.0 * s))
        I = self.profile(s)
        x4 = x1 * I
        x3 = (1.0 + x4 * x4) / x1
        d_x1 = np.sinh(2.0 * s) / x1
        d_I = np.cosh(2.0 * s) ** -1.5
        d_x4 = d_x1 * I + x1 * d_I
        d_x3 = (2.0 * x4 * d_x4 * x1 - (1.0 + x4 * x4) * d_x1) / (x1 * x1)
        return x1, x3, x4, d_x1, d_x3, d_x4

    def point(self, s, w):
        return self.jet1(s, w)[0]

    def jet1(self, s, w):
        s = np.asarray(s, dtype=float)
        w = np.asarray(w, dtype=float)
        x1, x3, x4, d_x1, d_x3, d_x4 = self._curve(s)
        f1, f2, f3, f4 = PARABOLIC_FRAME
        def embed(c1, c2, c3, c4):
            return (c1[..., None] * f1 + c2[..., None] * f2
                    + c3[..., None] * f3 + c4[..., None] * f4)
        z = np.zeros(np.broadcast(s, w).shape)
        x = embed(x1 + z, x1 * w, x3 + x1 * w * w, x4 + z)
        xs = embed(d_x1 + z, d_x1 * w, d_x3 + d_x1 * w * w, d_x4 + z)
        xw = embed(z, x1 + z, 2.0 * x1 * w, z)
        return x, xs, xw


def _sinhc(z):
    """sinh(z)/z with the removable singularity handled."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-5
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z * z / 6.0, np.sinh(safe) / safe)


class BallCatenoid(SurfaceChart):
    """Spherical catenoid described by its ball-model generating curve.

    Warped-product coordinates (x, y) about the rotation axis; the curve is
    y = t, x = X(t) with an inverse-square-root singularity at the neck
    t = abar.  The chart parameter w with t = abar + w^2 removes it: X
    becomes a smooth odd function of w covering both branches.
    """

    def __init__(self, abar: float, w_max=3.0, tol=1e-10):
        if abar <= 0:
            raise GeometryError(f"ball catenoid needs abar > 0, got {abar}")
        self.abar = float(abar)
        self.w_max = float(w_max)
        self.tol = float(tol)
        s, vals = _integrate_profile(self._dX_dw, self.w_max, tol)
        self.profile = ProfileCurve(s, vals, tol)

    def _dX_dw(self, w):
        w = np.asarray(w, dtype=float)
        ab = self.abar
        t = ab + w * w
        # sinh^2(2t) - sinh^2(2ab) = sinh(2w^2) sinh(4ab + 2w^2)
        den = np.cosh(t) * np.sqrt(2.0 * _sinhc(2.0 * w * w)
                                   * np.sinh(4.0 * ab + 2.0 * w * w))
        return 2.0 * math.sinh(2.0 * ab) / den

    def X(self, w):
        return self.profile(w)

    def generating_curve(self, n=200):
        """Sampled (t, x_plus, x_minus) rows of the generating curve."""
        w = np.linspace(0.0, self.w_max, n)
        t = self.abar + w * w
        x = self.X(w)
        return np.column_stack([t, x, -x])

    def point(self, w, theta):
        return self.jet1(w, theta)[0]

    def jet1(self, w, theta):
        w = np.asarray(w, dtype=float)
        theta = np.asarray(theta, dtype=float)
        t = self.abar + w * w
        X = self.X(w)
        dX = self._dX_dw(w)
        ct, st = np.cosh(t), np.sinh(t)
        cX, sX = np.cosh(X), np.sinh(X)
        c, sn = np.cos(theta), np.sin(theta)
        z = np.zeros(np.broadcast(w, theta).shape)
        # axis direction e3 (ball first axis), normal circle in (e4, e2)
        x = np.stack([ct * cX + z, st * sn, ct * sX + z, st * c], axis=-1)
        dt = 2.0 * w
        xw = np.stack([dt * st * cX + dX * ct * sX,
                       dt * ct * sn,
                       dt * st * sX + dX * ct * cX,
                       dt * ct * c], axis=-1)
        xth = np.stack([z, st * c, z, -st * sn], axis=-1)
        return x, xw, xth


def conjugate_pitch(chart: SurfaceChart) -> float:
    """Pitch of the helicoid conjugate to a catenoid chart."""
    if isinstance(chart, SphericalCatenoid):
        at = chart.atilde
        return math.sqrt((at + 0.5) / (at - 0.5))
    if isinstance(chart, HyperbolicCatenoid):
        at = chart.atilde
        return math.sqrt((at - 0.5) / (at + 0.5))
    if isinstance(chart, ParabolicCatenoid):
        return 1.0
    if isinstance(chart, BallCatenoid):
        at = spherical_atilde_from_abar(chart.abar)
        return math.sqrt((at + 0.5) / (at - 0.5))
    raise GeometryError(f"no conjugate pitch for {type(chart).__name__}")


def spherical_atilde_from_abar(abar: float) -> float:
    """Neck parameter relation 2 atilde = cosh(2 abar)."""
    if abar <= 0:
        raise GeometryError(f"abar must be > 0, got {abar}")
    return 0.5 * math.cosh(2.0 * abar)
