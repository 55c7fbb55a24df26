"""Lorentzian 4-space primitives and the three models of hyperbolic 3-space.

Points of H^3 live on the upper sheet of the unit hyperboloid in L^4
(signature -,+,+,+).  The Poincare ball and upper half-space models are
reached by fixed stereographic-type projections; all distances are computed
in the hyperboloid model after conversion.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Model membership is validated at construction time, not per operation.
MODEL_TOL = 1e-12


class GeometryError(ValueError):
    """Raised for points that violate their model's defining constraint."""


class Model(Enum):
    HYPERBOLOID = "hyperboloid"
    BALL = "ball"
    UPPER_HALF = "upper-half"


def minkowski_dot(a, b):
    """Inner product of signature (-,+,+,+) on the last axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (-a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
            + a[..., 2] * b[..., 2] + a[..., 3] * b[..., 3])


def _check_hyperboloid(x, tol=MODEL_TOL):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 4:
        raise GeometryError("hyperboloid points need 4 coordinates")
    err = np.abs(minkowski_dot(x, x) + 1.0)
    if np.any(err > tol) or np.any(x[..., 0] < 1.0 - tol):
        raise GeometryError(
            f"point off the unit hyperboloid (max |<x,x>+1| = {np.max(err):.3e})")
    return x


def _check_ball(b):
    b = np.asarray(b, dtype=float)
    if b.shape[-1] != 3:
        raise GeometryError("ball points need 3 coordinates")
    r2 = np.sum(b * b, axis=-1)
    if np.any(r2 >= 1.0):
        raise GeometryError("ball point with x^2 + y^2 + z^2 >= 1")
    return b


def _check_upper_half(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 3:
        raise GeometryError("upper half-space points need (x, y, t)")
    if np.any(p[..., 2] <= 0.0):
        raise GeometryError("upper half-space point with t <= 0")
    return p


def to_ball(x):
    """Hyperboloid -> Poincare ball.

    Coordinate order is (x3, x4, x2)/(1 + x1) so that the ball's first
    axis is the rotation axis of the helicoid family.
    """
    x = _check_hyperboloid(x)
    d = 1.0 + x[..., 0]
    return np.stack([x[..., 2] / d, x[..., 3] / d, x[..., 1] / d], axis=-1)


def from_ball(b):
    """Poincare ball -> hyperboloid (inverse stereographic projection)."""
    b = _check_ball(b)
    r2 = np.sum(b * b, axis=-1)
    f = 2.0 / (1.0 - r2)
    return np.stack([(1.0 + r2) / (1.0 - r2),
                     f * b[..., 2], f * b[..., 0], f * b[..., 1]], axis=-1)


def to_upper_half(x):
    """Hyperboloid -> upper half-space, returned as (x, y, t) with z = x + iy."""
    x = _check_hyperboloid(x)
    d = x[..., 0] - x[..., 1]
    return np.stack([x[..., 2] / d, x[..., 3] / d, 1.0 / d], axis=-1)


def from_upper_half(p):
    """Upper half-space -> hyperboloid."""
    p = _check_upper_half(p)
    px, py, t = p[..., 0], p[..., 1], p[..., 2]
    w = (px * px + py * py) / t
    return np.stack([0.5 * (1.0 / t + t + w), 0.5 * (t + w - 1.0 / t),
                     px / t, py / t], axis=-1)


_VALIDATORS = {
    Model.HYPERBOLOID: _check_hyperboloid,
    Model.BALL: _check_ball,
    Model.UPPER_HALF: _check_upper_half,
}

_TO_HYPERBOLOID = {
    Model.HYPERBOLOID: lambda c: c,
    Model.BALL: from_ball,
    Model.UPPER_HALF: from_upper_half,
}

_FROM_HYPERBOLOID = {
    Model.HYPERBOLOID: lambda c: c,
    Model.BALL: to_ball,
    Model.UPPER_HALF: to_upper_half,
}


@dataclass(frozen=True)
class ModelPoint:
    """A point of H^3 tagged with the model its coordinates refer to."""

    model: Model
    coords: tuple

    def __post_init__(self):
        c = _VALIDATORS[self.model](np.asarray(self.coords, dtype=float))
        object.__setattr__(self, "coords", tuple(float(v) for v in c))

    @classmethod
    def hyperboloid(cls, x1, x2, x3, x4):
        return cls(Model.HYPERBOLOID, (x1, x2, x3, x4))

    @classmethod
    def ball(cls, x, y, z):
        return cls(Model.BALL, (x, y, z))

    @classmethod
    def upper_half(cls, x, y, t):
        return cls(Model.UPPER_HALF, (x, y, t))

    def to(self, model: Model) -> "ModelPoint":
        if model is self.model:
            return self
        x = _TO_HYPERBOLOID[self.model](np.asarray(self.coords))
        return ModelPoint(model, tuple(_FROM_HYPERBOLOID[model](x)))

    def hyperboloid_coords(self) -> np.ndarray:
        return _TO_HYPERBOLOID[self.model](np.asarray(self.coords))


def convert(coords, src: Model, dst: Model):
    """Array-level model conversion on the last axis."""
    if src is dst:
        return _VALIDATORS[src](coords)
    return _FROM_HYPERBOLOID[dst](_TO_HYPERBOLOID[src](coords))


def hyperbolic_distance(p, q):
    """Distance in H^3; accepts ModelPoint or hyperboloid coordinate arrays."""
    if isinstance(p, ModelPoint):
        p = p.hyperboloid_coords()
    else:
        p = _check_hyperboloid(p)
    if isinstance(q, ModelPoint):
        q = q.hyperboloid_coords()
    else:
        q = _check_hyperboloid(q)
    # cosh d = -<p, q>; clip guards round-off just below 1
    c = np.clip(-minkowski_dot(p, q), 1.0, None)
    return np.arccosh(c)
