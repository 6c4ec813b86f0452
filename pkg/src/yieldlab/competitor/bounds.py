"""Closed-form estimates of the energy gap for the normalised law ``G'(0) = 1``.

``closed_form_gap_rect`` is an upper bound (rectangles fail), the other three
are lower bounds that certify the constructions for small ``sigma``.
"""
from __future__ import annotations

from typing import Optional

from ..errors import DomainError


def closed_form_gap_rect(S: float, delta: float, alpha: float, lam: float, c2: float) -> float:
    """Upper bound on the gap of the rectangle ``(0, S) x (0, delta)`` for affine ``u = lam x2``."""
    a = 1.0 - alpha
    return -a * lam * delta**2 / 2.0 + c2 * a**2 * lam**2 * delta**3 / 3.0 + c2 * S * a**2 * lam**2 * delta**2


def rect_min_half_width(alpha: float, lam: float, c2: float) -> float:
    """Smallest ``S`` for which the rectangle bound stays positive as ``delta -> 0``."""
    return 1.0 / (2.0 * (1.0 - alpha) * lam * c2)


def closed_form_gap_profile(r: float, R: float, sigma: float, alpha: float, lam: float, c1: float, t_valid: Optional[float] = None) -> float:
    """Lower bound on the gap of the profile region for ``u = lam x2``.

    Uses ``int_r^R phi^2 = (R - r)/5``; positive iff ``sigma`` is below
    :func:`profile_sigma_threshold`.
    """
    if not 0 <= r < R:
        raise DomainError(f"need 0 <= r < R, got r={r}, R={R}")
    if not lam > 1 or not alpha * lam > 1 or not alpha < 1:
        raise DomainError("the profile bound needs lam > 1 and 1/lam < alpha < 1")
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    a = 1.0 - alpha
    if t_valid is not None and a * lam * sigma > t_valid:
        raise DomainError(f"jump amplitude {a * lam * sigma:g} exceeds the validity range {t_valid:g} of c1")
    w = R - r
    return a * lam * sigma**2 * (2.0 * c1 * a * lam - 4.0 * sigma / w**2) * w / 5.0


def profile_sigma_threshold(r: float, R: float, alpha: float, lam: float, c1: float) -> float:
    return c1 * (1.0 - alpha) * lam * (R - r) ** 2 / 2.0


def closed_form_gap_sublevel(sigma: float, alpha: float, c: float, K_eps_R: float, L: float) -> float:
    """Lower bound ``(1 - alpha) sigma^2 [c (1 - alpha) K_eps_R - 2 L]`` for the sublevel region."""
    a = 1.0 - alpha
    return a * sigma**2 * (c * a * K_eps_R - 2.0 * L)


def closed_form_gap_bump(sigma: float, alpha: float, c1: float, K_eps_r_R: float, a2_integral: float) -> float:
    """Leading term ``sigma^2 (1 - alpha)[c1 (1 - alpha) - K sigma] int a^2`` of the bump gap."""
    a = 1.0 - alpha
    return sigma**2 * a * (c1 * a - K_eps_r_R * sigma) * a2_integral
