"""The tapering profile, the radial bump built from it, and proof constants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DomainError

_TOL = 1e-12


def _check_radii(r, R):
    if not 0 <= r < R:
        raise DomainError(f"need 0 <= r < R, got r={r}, R={R}")


def profile_k(r: float, R: float) -> float:
    """Constant of the profile equation ``phi'^2 phi = k phi^2``."""
    return 4.0 / (R - r) ** 2


def profile_phi(r: float, R: float, rho, side: str = "right"):
    """Profile ``phi`` and its derivative.

    ``phi = 1`` on ``[0, r]`` and ``(rho - R)^2 / (r - R)^2`` on ``[r, R]``.
    ``phi`` is not differentiable at ``rho = r``; ``side`` picks which
    one-sided derivative is returned there.
    """
    _check_radii(r, R)
    rho_a = np.asarray(rho, dtype=float)
    if np.any(rho_a < -_TOL * R) or np.any(rho_a > R * (1 + _TOL)):
        raise DomainError(f"profile argument outside [0, {R}]")
    rho_c = np.clip(rho_a, 0.0, R)
    d2 = (r - R) ** 2
    outer = rho_c > r if side == "left" else rho_c >= r
    phi = np.where(rho_c <= r, 1.0, (rho_c - R) ** 2 / d2)
    dphi = np.where(outer, 2.0 * (rho_c - R) / d2, 0.0)
    if np.ndim(rho) == 0:
        return float(phi), float(dphi)
    return phi, dphi


def profile_ode_residual(r: float, R: float, rho):
    """``phi'(rho)^2 phi(rho) - k phi(rho)^2`` on ``(r, R)``; vanishes identically."""
    phi, dphi = profile_phi(r, R, rho)
    return dphi**2 * phi - profile_k(r, R) * phi**2


def profile_phi_sq_integral(r: float, R: float) -> float:
    """Closed form of ``int_r^R phi^2``."""
    return (R - r) / 5.0


def radial_bump(r: float, R: float, x):
    """Bump ``a(x) = phi(|x|)`` and its gradient for points ``x`` of shape ``(..., 2)``."""
    x = np.asarray(x, dtype=float)
    rad = np.hypot(x[..., 0], x[..., 1])
    if np.any(rad > R * (1 + _TOL)):
        raise DomainError(f"bump evaluated outside the ball of radius {R}")
    phi, dphi = profile_phi(r, R, np.minimum(rad, R), side="right")
    safe = np.where(rad > 0, rad, 1.0)
    grad = (np.where(rad > r, dphi, 0.0) / safe)[..., None] * x
    return phi, grad


def radial_bump_ext(r: float, R: float, x):
    """Like :func:`radial_bump` but extended by zero outside the ball."""
    x = np.asarray(x, dtype=float)
    rad = np.hypot(x[..., 0], x[..., 1])
    inside = rad <= R
    xin = np.where(inside[..., None], x, 0.0)
    a, g = radial_bump(r, R, xin)
    return np.where(inside, a, 0.0), np.where(inside[..., None], g, 0.0)


def unit_ball_measure(m: int) -> float:
    """Lebesgue measure of the unit ball in R^m (``2`` for ``m = 1``)."""
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


@dataclass(frozen=True)
class ProofConstants:
    """Constants of the non-minimality argument for one probe point.

    ``delta``, ``L`` and ``M`` are measured from the field rather than
    derived; see :func:`yieldlab.competitor.measure_constants`.
    """

    eps: float
    R: float
    lam: float
    r: Optional[float] = None
    delta: Optional[float] = None
    L: Optional[float] = None
    M: Optional[float] = None
    n: int = 2

    def __post_init__(self):
        if not 0 < self.eps < 0.5:
            raise DomainError(f"eps must lie in (0, 1/2), got {self.eps}")
        if self.r is not None:
            _check_radii(self.r, self.R)

    @property
    def omega(self) -> float:
        return unit_ball_measure(self.n - 1)

    @property
    def K_eps_R(self) -> float:
        """Lower bound for the (n-1)-measure of a level set inside the ball."""
        return self.omega * self.R ** (self.n - 1) * (1 - self.eps**2) ** ((self.n - 1) / 2)

    @property
    def K_eps_r_R(self) -> float:
        if self.r is None:
            raise DomainError("K_eps_r_R needs an inner radius")
        return 2.0 / ((self.R - self.r) ** 2 * (self.lam - self.eps) ** 2)

    @property
    def k(self) -> Optional[float]:
        return None if self.r is None else profile_k(self.r, self.R)
