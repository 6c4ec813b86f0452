"""Scalar displacement fields on planar domains."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from ..errors import DomainError

Box = Tuple[float, float, float, float]  # xmin, xmax, ymin, ymax


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Any vectorised scalar function with a gradient, for level sets and integrands."""

    fn: Callable[[np.ndarray], np.ndarray]
    grad_fn: Callable[[np.ndarray], np.ndarray]

    def value(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def grad(self, x):
        return self.grad_fn(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class SampledField2D:
    """Displacement ``u`` on a box domain, analytic or bilinearly interpolated.

    Points are arrays of shape ``(..., 2)``.  ``lam`` is the gradient
    magnitude at the probe point (the origin after normalisation).
    """

    fn: Callable[[np.ndarray], np.ndarray]
    grad_fn: Callable[[np.ndarray], np.ndarray]
    domain: Box
    lam: float
    kind: str = "analytic"
    slope: Optional[np.ndarray] = None  # constant gradient of affine fields

    def value(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def grad(self, x):
        return self.grad_fn(np.asarray(x, dtype=float))

    @property
    def is_affine(self) -> bool:
        return self.kind == "affine"

    @classmethod
    def affine(cls, lam: float, domain: Box = (-2.5, 2.5, -2.5, 2.5), gradient=None):
        """``u(x) = g . x``; by default ``g = lam * e2``."""
        g = np.array([0.0, lam] if gradient is None else gradient, dtype=float)

        def fn(x):
            return x[..., 0] * g[0] + x[..., 1] * g[1]

        def grad_fn(x):
            return np.broadcast_to(g, np.shape(x)).copy()

        return cls(fn, grad_fn, tuple(map(float, domain)), float(np.hypot(*g)), "affine", g)

    @classmethod
    def analytic(cls, fn, grad_fn, domain: Box, lam: Optional[float] = None):
        lam = float(np.linalg.norm(grad_fn(np.zeros(2)))) if lam is None else float(lam)
        return cls(fn, grad_fn, tuple(map(float, domain)), lam, "analytic")

    @classmethod
    def from_grid(cls, xs, ys, values, lam: Optional[float] = None):
        """Bilinear interpolant of ``values[j, i] = u(xs[i], ys[j])`` on a tensor grid."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        vals = np.asarray(values, dtype=float)
        if vals.shape != (ys.size, xs.size):
            raise DomainError(f"grid values must have shape {(ys.size, xs.size)}, got {vals.shape}")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
            raise DomainError("grid coordinates must be strictly increasing")

        def locate(x):
            px, py = x[..., 0], x[..., 1]
            i = np.clip(np.searchsorted(xs, px, side="right") - 1, 0, xs.size - 2)
            j = np.clip(np.searchsorted(ys, py, side="right") - 1, 0, ys.size - 2)
            hx = xs[i + 1] - xs[i]
            hy = ys[j + 1] - ys[j]
            s = (px - xs[i]) / hx
            t = (py - ys[j]) / hy
            return i, j, s, t, hx, hy

        def fn(x):
            i, j, s, t, _, _ = locate(x)
            v00, v10 = vals[j, i], vals[j, i + 1]
            v01, v11 = vals[j + 1, i], vals[j + 1, i + 1]
            return (1 - s) * (1 - t) * v00 + s * (1 - t) * v10 + (1 - s) * t * v01 + s * t * v11

        def grad_fn(x):
            i, j, s, t, hx, hy = locate(x)
            v00, v10 = vals[j, i], vals[j, i + 1]
            v01, v11 = vals[j + 1, i], vals[j + 1, i + 1]
            gx = ((1 - t) * (v10 - v00) + t * (v11 - v01)) / hx
            gy = ((1 - s) * (v01 - v00) + s * (v11 - v10)) / hy
            return np.stack([gx, gy], axis=-1)

        field = cls(fn, grad_fn, (xs[0], xs[-1], ys[0], ys[-1]), 0.0, "grid")
        if lam is None:
            lam = float(np.linalg.norm(grad_fn(np.zeros(2))))
        object.__setattr__(field, "lam", float(lam))
        return field

    def check_normalized(self, tol: float = 1e-8) -> None:
        """Raise unless ``u(0) = 0`` and ``grad u(0) = lam e2`` (probe point at the origin)."""
        o = np.zeros(2)
        g = self.grad(o)
        if abs(self.value(o)) > tol or abs(g[0]) > tol * max(1, self.lam) or abs(g[1] - self.lam) > tol * max(1, self.lam):
            raise DomainError("field is not normalised: need u(0)=0 and grad u(0) = lam e2")

    def normalized_at(self, x0, domain: Optional[Box] = None) -> "SampledField2D":
        """Translate ``x0`` to the origin and rotate so that the gradient there points along e2."""
        x0 = np.asarray(x0, dtype=float)
        g = self.grad(x0)
        lam = float(np.hypot(*g))
        if lam == 0:
            raise DomainError("gradient vanishes at the probe point")
        # columns of Q map new coordinates to old ones; Q e2 = g/|g|
        n2 = g / lam
        n1 = np.array([n2[1], -n2[0]])
        Q = np.column_stack([n1, n2])
        u0 = float(self.value(x0))
        base = self

        def fn(y):
            return base.value(x0 + y @ Q.T) - u0

        def grad_fn(y):
            return base.grad(x0 + y @ Q.T) @ Q

        if domain is None:
            xmin, xmax, ymin, ymax = self.domain
            rad = min(x0[0] - xmin, xmax - x0[0], x0[1] - ymin, ymax - x0[1]) / np.sqrt(2)
            domain = (-rad, rad, -rad, rad)
        return SampledField2D(fn, grad_fn, domain, lam, "analytic")

    def contains_box(self, box: Box) -> bool:
        """Strict containment of ``box`` in the field's domain."""
        xmin, xmax, ymin, ymax = self.domain
        return box[0] > xmin and box[1] < xmax and box[2] > ymin and box[3] < ymax
