"""Competitor regions ``V`` and their boundary decomposition.

Each region is stored in column form: ``V = {x1 in [a, b], lower(x1) < x2 <
upper(x1)}`` with breakpoints at every kink of the bounding graphs, plus the
boundary pieces on which the competitor ``w = alpha u`` jumps:

* ``top``: the level piece (``{u = sigma}``, ``{u = sigma a}`` or the graph
  ``x2 = sigma phi(|x1|)``);
* ``lateral``: arcs of ``dB_R`` (sublevel regions only);
* ``bottom``: ``{u = 0}`` (no jump, not charged) or the segment ``x2 = 0`` of
  the profile region (charged with ``G((1 - alpha)|u|)``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from ..errors import DomainError, PreconditionError, RegionError
from ..field2d import ImplicitRegion, ProofConstants, SampledField2D, profile_phi, radial_bump_ext
from ..field2d.quadrature import gauss_panels

SUBLEVEL = "Sublevel"
PROFILE = "Profile2D"
BUMP = "RadialBump"
CASE_TAGS = (SUBLEVEL, PROFILE, BUMP)

_BISECT_ITERS = 80
_ORDER = 8

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Graph:
    """Boundary piece ``x2 = y(x1)`` for ``x1`` between ``breaks[0]`` and ``breaks[-1]``."""

    breaks: Tuple[float, ...]
    y: Fn
    dy: Fn
    charged: bool = True


@dataclass(eq=False)
class CompetitorRegion:
    """Region ``V`` of one construction at level ``sigma``.

    ``alpha`` is not part of the region: the same ``V`` serves every scaling
    factor, and the gap and distance routines take it as an argument.
    """

    case_tag: str
    sigma: float
    u: SampledField2D
    R: float
    r: Optional[float]
    eps: float
    delta: float
    breaks: Tuple[float, ...]
    lower: Fn
    upper: Fn
    top: Graph
    bottom: Optional[Graph]
    lateral: List[Tuple[float, float]] = field(default_factory=list)
    constraints: List[Fn] = field(default_factory=list)
    bbox: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    top_field: Optional[object] = None  # scalar field whose zero set is the top piece
    graded: Tuple[float, ...] = ()  # x1 where a column bound has a square-root endpoint
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def default_h(self) -> float:
        """Default resolution: 1/256 of the region diameter."""
        return 2.0 * self.R / 256.0

    @property
    def implicit(self) -> ImplicitRegion:
        return ImplicitRegion(self.constraints, self.bbox)

    @property
    def constants(self) -> ProofConstants:
        return ProofConstants(eps=self.eps, R=self.R, lam=self.u.lam, r=self.r, delta=self.delta)

    def contains(self, pts) -> np.ndarray:
        return self.implicit.contains(pts)

    def area(self, h: Optional[float] = None) -> float:
        from .gap import volume_integral

        return volume_integral(self, lambda p: np.ones(p.shape[:-1]), h)


# ------------------------------------------------------------------ root finding


def solve_increasing(f: Fn, x1, lo, hi, iters: int = _BISECT_ITERS):
    """Vectorised root of ``f(x1, x2) = 0`` in ``x2``, ``f`` increasing in ``x2``.

    Illinois regula falsi on the bracket ``[lo, hi]`` with a bisection step
    whenever the bracket fails to shrink by half.  Columns without a sign
    change return the nearer endpoint (``lo`` when ``f >= 0`` throughout,
    ``hi`` when ``f <= 0`` throughout).
    """
    x1 = np.asarray(x1, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), x1.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), x1.shape)
    a, b = lo.copy(), hi.copy()

    def ev(x2):
        return f(np.stack([x1, x2], axis=-1))

    fa = ev(a)
    fb = ev(b)
    at_lo = fa >= 0
    at_hi = fb <= 0
    live = ~(at_lo | at_hi)
    side = np.zeros(x1.shape, int)
    width = b - a
    for _ in range(iters):
        if not np.any(live):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            c = b - fb * (b - a) / (fb - fa)
        mid = 0.5 * (a + b)
        bad = ~np.isfinite(c) | (c <= a) | (c >= b)
        c = np.where(bad, mid, c)
        fc = ev(c)
        neg = fc < 0
        # Illinois: halve the stale endpoint value when the same side is kept twice
        fb = np.where(neg & (side == -1), 0.5 * fb, fb)
        fa = np.where(~neg & (side == 1), 0.5 * fa, fa)
        a = np.where(live & neg, c, a)
        fa = np.where(live & neg, fc, fa)
        b = np.where(live & ~neg, c, b)
        fb = np.where(live & ~neg, fc, fb)
        side = np.where(neg, -1, 1)
        new_w = b - a
        # force a bisection when the bracket shrank by less than half
        slow = live & (new_w > 0.5 * width)
        if np.any(slow):
            m = 0.5 * (a + b)
            fm = ev(m)
            mn = fm < 0
            a = np.where(slow & mn, m, a)
            fa = np.where(slow & mn, fm, fa)
            b = np.where(slow & ~mn, m, b)
            fb = np.where(slow & ~mn, fm, fb)
            side = np.where(slow, 0, side)
        width = b - a
        live &= (fc != 0) & (width > 2 * np.spacing(np.maximum(np.abs(a), np.abs(b))))
    out = np.where(np.abs(fa) < np.abs(fb), a, b)
    out = np.where(at_hi, hi, out)
    out = np.where(at_lo, lo, out)
    return out


def _half_chord(R, x1):
    return np.sqrt(np.maximum(R * R - np.asarray(x1, dtype=float) ** 2, 0.0))


def _arc_root(g: Callable[[float], float], a: float, b: float, what: str) -> float:
    ga, gb = g(a), g(b)
    if ga == 0:
        return a
    if gb == 0:
        return b
    if np.sign(ga) == np.sign(gb):
        raise RegionError(f"no crossing of {what} on the boundary circle")
    return brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def _polar(R, th):
    return np.array([R * np.cos(th), R * np.sin(th)])


def _circle_events(fun: Fn, rad: float, n: int = 256) -> List[float]:
    """Angles where ``fun`` changes sign along the circle of radius ``rad``."""
    th = np.linspace(-np.pi / 2, 3 * np.pi / 2, n + 1)
    vals = fun(rad * np.stack([np.cos(th), np.sin(th)], axis=-1))
    scalar = lambda t: float(fun(_polar(rad, t)))  # noqa: E731
    out = []
    for k in range(n):
        if vals[k] == 0:
            out.append(float(th[k]))
        elif vals[k] * vals[k + 1] < 0:
            out.append(brentq(scalar, th[k], th[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    return out


# ------------------------------------------------------------------- measurements


def chord_delta(u: SampledField2D, eps: float, R: float, n: int = 2049) -> float:
    """Vertical margin: min of ``u`` on ``{x2 = eps R}`` and of ``-u`` on ``{x2 = -eps R}`` in ``B_R``."""
    half = R * np.sqrt(1.0 - eps * eps)
    x1 = np.linspace(-half, half, n)
    up = np.stack([x1, np.full(n, eps * R)], axis=-1)
    dn = np.stack([x1, np.full(n, -eps * R)], axis=-1)
    return float(min(np.min(u.value(up)), np.min(-u.value(dn))))


def check_localisation(u: SampledField2D, eps: float, R: float, n_r: int = 33, n_t: int = 128) -> float:
    """Largest sampled ``|grad u - lam e2|`` on ``B_R``; raise if it reaches ``eps``."""
    rad = np.linspace(0.0, R, n_r)
    th = np.linspace(0.0, 2 * np.pi, n_t, endpoint=False)
    P = np.stack([np.outer(rad, np.cos(th)), np.outer(rad, np.sin(th))], axis=-1).reshape(-1, 2)
    dev = np.linalg.norm(u.grad(P) - np.array([0.0, u.lam]), axis=1).max()
    if dev >= eps:
        raise PreconditionError(f"|grad u - lam e2| reaches {dev:.3g} >= eps={eps:g} on B_R")
    return float(dev)


# -------------------------------------------------------------------- builders


def build_region(case_tag: str, u: SampledField2D, params: dict) -> CompetitorRegion:
    """Build the region of ``case_tag`` at level ``params["sigma"]``.

    ``params`` keys: ``sigma``, ``R``, ``r`` (profile and bump), ``eps``
    (default 0.25) and ``delta`` (measured when absent).
    """
    if case_tag not in CASE_TAGS:
        raise RegionError(f"unknown case tag {case_tag!r}")
    sigma = float(params["sigma"])
    R = float(params["R"])
    eps = float(params.get("eps", 0.25))
    r = params.get("r")
    r = None if r is None else float(r)
    if not sigma > 0:
        raise RegionError("sigma must be positive")
    if not R > 0:
        raise RegionError("R must be positive")
    if case_tag != SUBLEVEL and (r is None or not 0 <= r < R):
        raise DomainError(f"need 0 <= r < R, got r={r}, R={R}")
    if case_tag == PROFILE:
        delta = params.get("delta")
        delta = min(1.0, eps * R) if delta is None else float(delta)
    else:
        check_localisation(u, eps, R)
        delta = params.get("delta")
        delta = chord_delta(u, eps, R) if delta is None else float(delta)
    if sigma >= delta:
        raise RegionError(f"sigma too large: sigma={sigma:g} >= delta={delta:g}")
    bbox = (-R, R, 0.0, sigma) if case_tag == PROFILE else (-R, R, -R, R)
    if not u.contains_box(bbox):
        raise RegionError("region touches the boundary of the domain")
    builder = {SUBLEVEL: _sublevel, PROFILE: _profile, BUMP: _bump}[case_tag]
    return builder(u, sigma, R, r, eps, delta, bbox)


def _profile(u, sigma, R, r, eps, delta, bbox):
    breaks = tuple(sorted({-R, -r, 0.0, r, R}))

    def upper(x1):
        return sigma * profile_phi(r, R, np.minimum(np.abs(x1), R))[0]

    def lower(x1):
        return np.zeros_like(np.asarray(x1, dtype=float))

    def dy(x1):
        x1 = np.asarray(x1, dtype=float)
        return sigma * profile_phi(r, R, np.minimum(np.abs(x1), R))[1] * np.sign(x1)

    top = Graph(breaks, upper, dy)
    bottom = Graph(breaks, lower, lower, charged=True)

    def g_top(p):
        return p[..., 1] - sigma * profile_phi(r, R, np.minimum(np.abs(p[..., 0]), R))[0]

    cons = [lambda p: -p[..., 1], g_top, lambda p: np.abs(p[..., 0]) - R]
    return CompetitorRegion(PROFILE, sigma, u, R, r, eps, delta, breaks, lower, upper, top, bottom, [], cons, bbox)


def _sublevel(u, sigma, R, r, eps, delta, bbox):
    def zero(p):
        return u.value(p)

    def level(p):
        return u.value(p) - sigma

    def y_lo(x1):
        c = _half_chord(R, x1)
        return solve_increasing(zero, x1, -c, c)

    def y_sig(x1):
        c = _half_chord(R, x1)
        return solve_increasing(level, x1, -c, c)

    def slope(x1, y):
        g = u.grad(np.stack([x1, y], axis=-1))
        return -g[..., 0] / g[..., 1]

    ur = lambda th: float(u.value(_polar(R, th)))  # noqa: E731
    q = np.pi / 4
    t0r = _arc_root(ur, -q, q, "u = 0")
    tsr = _arc_root(lambda th: ur(th) - sigma, -q, q, "u = sigma")
    t0l = _arc_root(ur, np.pi - q, np.pi + q, "u = 0")
    tsl = _arc_root(lambda th: ur(th) - sigma, np.pi - q, np.pi + q, "u = sigma")
    ev = [R * np.cos(t) for t in (t0r, tsr, t0l, tsl)]
    if t0r < 0 < tsr:
        ev.append(R)
    if tsl < np.pi < t0l:
        ev.append(-R)
    breaks = tuple(sorted(set(float(np.clip(e, -R, R)) for e in ev)))

    top = Graph(
        (R * np.cos(tsl), R * np.cos(tsr)),
        y_sig,
        lambda x1: slope(np.asarray(x1, float), y_sig(x1)),
    )
    bottom = Graph(
        (R * np.cos(t0l), R * np.cos(t0r)),
        y_lo,
        lambda x1: slope(np.asarray(x1, float), y_lo(x1)),
        charged=False,
    )
    cons = [
        lambda p: p[..., 0] ** 2 + p[..., 1] ** 2 - R * R,
        lambda p: -u.value(p),
        lambda p: u.value(p) - sigma,
    ]
    # columns touching the circle at x1 = +-R have square-root ends
    graded = tuple(e for e in (R * np.cos(t0r), R * np.cos(t0l), R, -R) if e in breaks)
    return CompetitorRegion(
        SUBLEVEL, sigma, u, R, r, eps, delta, breaks, y_lo, y_sig, top, bottom,
        [(t0r, tsr), (tsl, t0l)], cons, bbox, graded=graded,
    )


class _BumpLevel:
    """``psi = u - sigma a``: the top of the bump region is ``{psi = 0}``."""

    def __init__(self, u, sigma, r, R):
        self.u, self.sigma, self.r, self.R = u, sigma, r, R

    def value(self, p):
        p = np.asarray(p, dtype=float)
        a, _ = radial_bump_ext(self.r, self.R, p)
        return self.u.value(p) - self.sigma * a

    def grad(self, p):
        p = np.asarray(p, dtype=float)
        _, ga = radial_bump_ext(self.r, self.R, p)
        return self.u.grad(p) - self.sigma * ga


def _bump(u, sigma, R, r, eps, delta, bbox):
    psi = _BumpLevel(u, sigma, r, R)

    def zero(p):
        return u.value(p)

    def y_lo(x1):
        c = _half_chord(R, x1)
        return solve_increasing(zero, x1, -c, c)

    def y_up(x1):
        x1 = np.asarray(x1, dtype=float)
        return solve_increasing(psi.value, x1, y_lo(x1), _half_chord(R, x1))

    def slope_u(x1):
        x1 = np.asarray(x1, dtype=float)
        g = u.grad(np.stack([x1, y_lo(x1)], axis=-1))
        return -g[..., 0] / g[..., 1]

    def slope_psi(x1):
        x1 = np.asarray(x1, dtype=float)
        g = psi.grad(np.stack([x1, y_up(x1)], axis=-1))
        return -g[..., 0] / g[..., 1]

    ur = lambda th: float(u.value(_polar(R, th)))  # noqa: E731
    q = np.pi / 4
    t0r = _arc_root(ur, -q, q, "u = 0")
    t0l = _arc_root(ur, np.pi - q, np.pi + q, "u = 0")
    xa, xb = float(R * np.cos(t0l)), float(R * np.cos(t0r))
    # kinks of the top graph: it meets the plateau circle |x| = r (where a = 1) at u = sigma
    ev = [r * np.cos(t) for t in _circle_events(lambda p: u.value(p) - sigma, r)] if r > 0 else []
    breaks = tuple(sorted(set([xa, xb] + [float(e) for e in ev])))
    top = Graph(breaks, y_up, slope_psi)
    bottom = Graph((xa, xb), y_lo, slope_u, charged=False)
    cons = [
        lambda p: p[..., 0] ** 2 + p[..., 1] ** 2 - R * R,
        lambda p: -u.value(p),
        psi.value,
    ]
    return CompetitorRegion(BUMP, sigma, u, R, r, eps, delta, breaks, y_lo, y_up, top, bottom, [], cons, bbox, psi)


# ----------------------------------------------------------------- constants


def measure_constants(u: SampledField2D, case_tag: str, eps: float, R: float, r: Optional[float] = None, n: int = 16, h=None):
    """Measure ``delta``, ``L`` and ``M`` for ``u`` on ``B_R``.

    ``L`` is the largest sampled ratio ``H^1(dB_R cap V_sigma) / sigma`` and
    ``M`` the largest sampled perimeter ``H^1(dV_sigma)`` (sublevel) or
    ``H^1(S_sigma)`` (bump) over ``sigma`` on an even grid in ``(0, delta)``.
    """
    from .gap import boundary_lengths

    if case_tag == PROFILE:
        delta = min(1.0, eps * R)
    else:
        check_localisation(u, eps, R)
        delta = chord_delta(u, eps, R)
    # lengths of smooth graphs need no fine panels
    h = R / 8.0 if h is None else max(float(h), R / 8.0)
    L, M = 0.0, 0.0
    for k in range(1, n + 1):
        s = delta * k / (n + 1)
        reg = build_region(case_tag, u, {"sigma": s, "R": R, "r": r, "eps": eps, "delta": delta})
        lens = boundary_lengths(reg, h)
        L = max(L, lens["lateral"] / s)
        M = max(M, lens["top"] if case_tag == BUMP else sum(lens.values()))
    return ProofConstants(eps=eps, R=R, lam=u.lam, r=r, delta=delta, L=L, M=M)


def panels(breaks: Sequence[float], h: float, graded: Sequence[float] = ()):
    return gauss_panels(breaks, h, _ORDER, graded)


__all__ = [
    "BUMP",
    "CASE_TAGS",
    "CompetitorRegion",
    "Graph",
    "PROFILE",
    "SUBLEVEL",
    "build_region",
    "check_localisation",
    "chord_delta",
    "measure_constants",
    "solve_increasing",
]
