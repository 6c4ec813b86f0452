"""Bulk and cohesive material laws, the yield strain and the relaxed envelope.

A bulk law ``F`` is a convex, increasing, superlinear energy density of the
strain magnitude with ``F(0) = F'(0) = 0``.  A cohesive law ``G`` is a concave,
nonnegative energy density of the jump amplitude with ``G(0) = 0`` and
``G'(0) > 0``.  The yield strain ``e_M`` solves ``F'(e_M) = G'(0)`` and the
relaxed envelope replaces ``F`` by its tangent line beyond ``e_M``.

Laws are immutable once built; every constructor validates its input on a
fixed geometric grid and raises :class:`LawValidationError` on failure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, LawValidationError, SuperlinearityError

TAU_ROOT = 1e-10
TAU_CONV = 1e-12
TAU_NEG = 1e-6
TAU_INF = 1e-3
VALIDATION_GRID = np.geomspace(1e-8, 10.0, 512)
XI_CAP = 1e12
C_MARGIN = 1e-9

FINITE_NEGATIVE = "FiniteNegative"
INFINITE = "Infinite"

ArrayFn = Callable[[np.ndarray], np.ndarray]


def _as_nonneg(x, what):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"{what} must be >= 0, got {x!r}")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def _fd_check(fn, dfn, pts, what):
    h = 1e-6 * np.maximum(1.0, pts)
    fd = (fn(pts + h) - fn(pts - h)) / (2 * h)
    d = dfn(pts)
    bad = np.abs(fd - d) > 1e-5 * np.maximum(1.0, np.abs(d))
    if np.any(bad):
        x = pts[np.argmax(bad)]
        raise LawValidationError(f"{what}: analytic derivative disagrees with finite differences at {x:g}")


# --------------------------------------------------------------------------- bulk


@dataclass(frozen=True, eq=False)
class BulkLaw:
    """Convex bulk energy density ``F`` with its derivative.

    Parameters
    ----------
    fn, dfn : callable
        Vectorised ``F`` and ``F'`` on nonnegative arrays.
    label : str
        Catalog name, used in reports.
    params : dict
        Law parameters (echoed into configs and reports).
    """

    fn: ArrayFn
    dfn: ArrayFn
    label: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        _validate_bulk(self)

    @classmethod
    def power(cls, p: float) -> "BulkLaw":
        """``F(xi) = xi**p / p`` for ``p > 1``."""
        p = float(p)
        if not p > 1:
            raise LawValidationError(f"power bulk law needs p > 1, got {p}")
        return cls(lambda x: x**p / p, lambda x: x ** (p - 1), label=f"power{p:g}", params={"kind": "power", "p": p})

    def value(self, xi):
        arr = _as_nonneg(xi, "strain")
        return _out(self.fn(arr), xi)

    def deriv(self, xi):
        arr = _as_nonneg(xi, "strain")
        return _out(self.dfn(arr), xi)


def _validate_bulk(law: BulkLaw):
    z = np.zeros(1)
    if abs(law.fn(z)[0]) > 1e-14 or abs(law.dfn(z)[0]) > 1e-14:
        raise LawValidationError(f"{law.label}: F(0) and F'(0) must vanish")
    g = VALIDATION_GRID
    d = law.dfn(g)
    # relative strict increase of F'; an absolute threshold rejects xi^p/p, p > 2, near 0
    if np.any(np.diff(d) <= TAU_CONV * np.abs(d[1:])):
        raise LawValidationError(f"{law.label}: F' is not strictly increasing (F not strictly convex)")
    if np.any(law.fn(g) < 0):
        raise LawValidationError(f"{law.label}: F must be nonnegative")
    big = np.geomspace(1.0, 1e4, 64)
    ratio = law.fn(big) / big
    if np.any(np.diff(ratio) <= 0) or ratio[-1] < 10 * ratio[0]:
        raise LawValidationError(f"{law.label}: F(xi)/xi does not grow (superlinearity proxy failed)")
    _fd_check(law.fn, law.dfn, g[g >= 1e-3], law.label)


def eval_bulk(law: BulkLaw, xi):
    """Evaluate ``F(xi)``; ``xi`` must be nonnegative."""
    return law.value(xi)


# ----------------------------------------------------------------------- cohesive


@dataclass(frozen=True, eq=False)
class CohesiveLaw:
    """Concave cohesive density ``G`` together with its curvature data at 0.

    After construction the instance carries ``slope0 = G'(0)``, the
    ``curvature_class`` (``"FiniteNegative"`` or ``"Infinite"``), the limit of
    ``(G(t) - G'(0) t) / t**2`` (``-inf`` for the infinite class), and for the
    finite class constants ``0 < c1 < c2`` with

        G'(0) t - c2 t**2 < G(t) < G'(0) t - c1 t**2,   0 < t <= t_valid.

    ``c1``/``c2`` refer to the raw law; divide by ``slope0`` for the
    normalised law ``G / G'(0)``.
    """

    fn: ArrayFn
    dfn: ArrayFn
    label: str = "custom"
    params: dict = field(default_factory=dict)
    slope0: float = field(init=False)
    curvature_class: str = field(init=False)
    limit: float = field(init=False)
    c1: Optional[float] = field(init=False, default=None)
    c2: Optional[float] = field(init=False, default=None)
    t_valid: Optional[float] = field(init=False, default=None)

    def __post_init__(self):
        slope0 = float(self.dfn(np.zeros(1))[0])
        object.__setattr__(self, "slope0", slope0)
        _validate_cohesive(self)
        cls, lim, c1, c2, tv = _classify(self)
        object.__setattr__(self, "curvature_class", cls)
        object.__setattr__(self, "limit", lim)
        object.__setattr__(self, "c1", c1)
        object.__setattr__(self, "c2", c2)
        object.__setattr__(self, "t_valid", tv)

    # catalog ---------------------------------------------------------------
    @classmethod
    def exponential(cls, scale: float = 1.0) -> "CohesiveLaw":
        """``G(t) = scale * (1 - exp(-t))``; ``G''(0) = -scale``."""
        s = float(scale)
        return cls(
            lambda t: -s * np.expm1(-t),
            lambda t: s * np.exp(-t),
            label="exp",
            params={"kind": "exp", "scale": s},
        )

    @classmethod
    def parabola(cls, c: float = 0.4, scale: float = 1.0) -> "CohesiveLaw":
        """``G(t) = t - c t**2`` capped at its maximum ``1/(4c)`` from ``t = 1/(2c)`` on."""
        c, s = float(c), float(scale)
        if not c > 0:
            raise LawValidationError(f"parabola law needs c > 0, got {c}")
        cap = 1.0 / (2 * c)

        def fn(t):
            tt = np.minimum(t, cap)
            return s * (tt - c * tt * tt)

        def dfn(t):
            return s * np.maximum(1.0 - 2 * c * t, 0.0)

        return cls(fn, dfn, label="parabola", params={"kind": "parabola", "c": c, "scale": s})

    @classmethod
    def cusp(cls, scale: float = 1.0) -> "CohesiveLaw":
        """``G(t) = t - t**1.5`` capped at ``t = 4/9``; realises ``G''(0+) = -inf``."""
        s = float(scale)
        cap = 4.0 / 9.0

        def fn(t):
            tt = np.minimum(t, cap)
            return s * (tt - tt * np.sqrt(tt))

        def dfn(t):
            return s * np.maximum(1.0 - 1.5 * np.sqrt(t), 0.0)

        return cls(fn, dfn, label="cusp", params={"kind": "cusp", "scale": s})

    # evaluation ------------------------------------------------------------
    def value(self, t):
        arr = _as_nonneg(t, "jump amplitude")
        return _out(self.fn(arr), t)

    def deriv(self, t):
        arr = _as_nonneg(t, "jump amplitude")
        return _out(self.dfn(arr), t)

    @property
    def normalized_c1(self):
        return None if self.c1 is None else self.c1 / self.slope0

    @property
    def normalized_c2(self):
        return None if self.c2 is None else self.c2 / self.slope0


def eval_cohesive(law: CohesiveLaw, t):
    """Evaluate ``G(t)``; ``t`` must be nonnegative."""
    return law.value(t)


def _validate_cohesive(law: CohesiveLaw):
    if abs(law.fn(np.zeros(1))[0]) > 1e-14:
        raise LawValidationError(f"{law.label}: G(0) must vanish")
    if not law.slope0 > 0:
        raise LawValidationError(f"{law.label}: G'(0) must be positive")
    g = VALIDATION_GRID
    v = law.fn(g)
    d = law.dfn(g)
    tol = 1e-14 * law.slope0
    if np.any(v < -tol):
        raise LawValidationError(f"{law.label}: G must be nonnegative")
    if np.any(np.diff(v) < -tol):
        raise LawValidationError(f"{law.label}: G must be nondecreasing")
    if np.any(np.diff(d) > 1e-12 * law.slope0):
        raise LawValidationError(f"{law.label}: G' is not nonincreasing (G not concave)")
    _fd_check(law.fn, law.dfn, g[g >= 1e-4], law.label)


def _ratio(law, t):
    """``(G(t) - G'(0) t) / t**2`` for the normalised law."""
    return (law.fn(t) / law.slope0 - t) / (t * t)


def _classify(law: CohesiveLaw):
    ts = 2.0 ** -np.arange(3, 27)  # 0.125 down to ~1.5e-8
    q = _ratio(law, ts)
    if q.min() < -1.0 / TAU_INF:
        if np.any(np.diff(q[-6:]) >= 0):
            raise LawValidationError(f"{law.label}: curvature ratio is not monotone towards -inf")
        return INFINITE, -np.inf, None, None, None
    tail = q[-8:]
    if tail.max() > -TAU_NEG:
        raise LawValidationError(
            f"{law.label}: condition (G(t) - G'(0) t)/t^2 -> negative limit violated (ratio {tail[-1]:.3g})"
        )
    steps = np.abs(np.diff(tail))
    # cancellation in G(t) - t leaves ~eps/t of noise in the ratio at the smallest t
    noise = 1e-6 * max(1.0, abs(tail[-1]))
    if steps[-1] > 1e-4 * max(1.0, abs(tail[-1])) or steps[-1] > steps[0] + noise:
        raise LawValidationError(f"{law.label}: curvature ratio neither stabilises nor diverges")
    limit = float(tail[-1])
    c1, c2, tv = extract_bounds(law, limit)
    return FINITE_NEGATIVE, limit, c1, c2, tv


def _grid_start(t_valid: float) -> float:
    return min(max(1e-6 * t_valid, 1e-5), 1e-2 * t_valid)


def extract_bounds(law: CohesiveLaw, limit: float):
    """Constants ``c1 < c2`` and radius ``t_valid`` for the two-sided quadratic bound.

    The min/max of ``(G'(0) t - G(t)) / t**2`` over a geometric grid on
    ``(0, t_valid]`` are widened by twice the margin; ``t_valid`` is halved
    until a denser check confirms the strict bound with the margin.
    """
    tv = 1.0 / (2.0 * abs(limit))
    for _ in range(60):
        coarse = np.geomspace(_grid_start(tv), tv, 512)
        p = -_ratio(law, coarse) * law.slope0
        # the quotient tends to -limit at 0, so both constants must bracket it
        c1 = min(float(p.min()), -limit * law.slope0) - 2 * C_MARGIN * law.slope0
        c2 = max(float(p.max()), -limit * law.slope0) + 2 * C_MARGIN * law.slope0
        if c1 > 0 and check_two_sided_bound(law, c1, c2, tv, margin=C_MARGIN * law.slope0):
            return c1, c2, tv
        tv *= 0.5
    raise LawValidationError(f"{law.label}: no two-sided quadratic bound found near 0")


def check_two_sided_bound(law: CohesiveLaw, c1, c2, t_valid, margin=0.0, n=4096) -> bool:
    """True iff ``G'(0)t - c2 t^2 < G(t) < G'(0)t - c1 t^2`` on a dense grid of ``(0, t_valid]``.

    The grid starts where the cancellation error of the quotient (about
    ``eps / t``) drops well below the margin; closer to 0 the bound follows
    from the limit lying strictly between ``c1`` and ``c2``.
    """
    t = np.geomspace(_grid_start(t_valid), t_valid, n)
    p = -_ratio(law, t) * law.slope0
    return bool(np.all(p - c1 > margin) and np.all(c2 - p > margin))


def curvature_class(law: CohesiveLaw):
    """Return ``(class, c1, c2, t_valid)`` for ``law`` (constants are ``None`` when infinite)."""
    return law.curvature_class, law.c1, law.c2, law.t_valid


def effective_c(law: CohesiveLaw, t_max: float, n: int = 4096) -> float:
    """Largest ``c`` with ``G(t) <= G'(0) t - c t**2`` on ``(0, t_max]`` (normalised law).

    For the infinite class this grows without bound as ``t_max -> 0``, which
    is what the sublevel construction exploits.
    """
    t = np.geomspace(1e-9 * t_max, t_max, n)
    return float((-_ratio(law, t)).min())


# ----------------------------------------------------------------------- envelope


def solve_yield_strain(F: BulkLaw, G: CohesiveLaw) -> float:
    """Unique ``e_M`` with ``F'(e_M) = G'(0)``."""
    target = G.slope0
    hi = 1.0
    while F.dfn(np.array([hi]))[0] <= target:
        hi *= 2.0
        if hi > XI_CAP:
            raise SuperlinearityError(f"{F.label}: F' stays below G'(0)={target:g} up to {XI_CAP:g}")
    e = brentq(lambda x: F.dfn(np.array([x]))[0] - target, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    resid = abs(F.dfn(np.array([e]))[0] - target)
    if resid > TAU_ROOT * max(1.0, target):
        raise LawValidationError(f"yield strain residual {resid:.3g} exceeds tolerance")
    return float(e)


@dataclass(frozen=True, eq=False)
class EnvelopeLaw:
    """Relaxed bulk density: ``F`` up to ``e_M``, then the tangent line of slope ``G'(0)``."""

    base: BulkLaw
    e_M: float
    slope: float

    @property
    def f_knee(self) -> float:
        return float(self.base.fn(np.array([self.e_M]))[0])

    def _eval(self, arr):
        below = arr <= self.e_M
        out = np.empty_like(arr)
        out[below] = self.base.fn(arr[below])
        out[~below] = self.f_knee + self.slope * (arr[~below] - self.e_M)
        return out

    def value(self, xi):
        arr = np.atleast_1d(_as_nonneg(xi, "strain"))
        return _out(self._eval(arr).reshape(np.shape(xi)), xi)

    def deriv(self, xi):
        arr = np.atleast_1d(_as_nonneg(xi, "strain"))
        out = np.where(arr <= self.e_M, self.base.dfn(np.minimum(arr, self.e_M)), self.slope)
        return _out(out.reshape(np.shape(xi)), xi)

    __call__ = value


def build_envelope(F: BulkLaw, G: CohesiveLaw) -> EnvelopeLaw:
    e = solve_yield_strain(F, G)
    return EnvelopeLaw(base=F, e_M=e, slope=G.slope0)


# --------------------------------------------------------------------------- JSON


def bulk_from_config(cfg: dict) -> BulkLaw:
    kind = cfg.get("kind")
    if kind == "power":
        if "p" not in cfg:
            raise LawValidationError("bulk.p is required for the power law")
        return BulkLaw.power(cfg["p"])
    raise LawValidationError(f"unknown bulk law kind {kind!r}")


def cohesive_from_config(cfg: dict) -> CohesiveLaw:
    kind = cfg.get("kind")
    scale = cfg.get("scale", 1.0)
    if kind == "exp":
        return CohesiveLaw.exponential(scale)
    if kind == "parabola":
        return CohesiveLaw.parabola(cfg.get("c", 0.4), scale)
    if kind == "cusp":
        return CohesiveLaw.cusp(scale)
    raise LawValidationError(f"unknown cohesive law kind {kind!r}")


def laws_from_config(cfg: dict):
    """Build ``(BulkLaw, CohesiveLaw)`` from ``{"bulk": {...}, "cohesive": {...}}``."""
    if "bulk" not in cfg or "cohesive" not in cfg:
        raise LawValidationError("laws config needs 'bulk' and 'cohesive'")
    return bulk_from_config(cfg["bulk"]), cohesive_from_config(cfg["cohesive"])
