"""Non-minimality certificates: scans over ``(family, alpha, sigma)``.

A certificate is a triple ``(alpha, sigma, V)`` whose competitor ``w = alpha
u`` lowers the energy by more than ``tau_gap`` while staying within BV
distance ``eta`` of ``u``.  Absence of a certificate in a finite scan is an
audit outcome, not a minimality statement.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from ..errors import RegionError
from ..field2d import SampledField2D, profile_k
from ..laws import CohesiveLaw, EnvelopeLaw
from .gap import bv_distance, energy_gap, field_bv_norm, quadrature_nodes
from .regions import BUMP, PROFILE, SUBLEVEL, build_region, chord_delta, measure_constants

ALPHA_GRID = tuple(1.0 - 2.0**-j for j in range(1, 9))
SIGMA_MIN = 1e-4
SIGMA_RATIO = 2.0
ABOVE = "above"
AUDIT = "audit"


@dataclass(frozen=True)
class Family:
    """One construction and its fixed geometry."""

    case_tag: str
    R: float = 2.0
    r: Optional[float] = 1.0

    def params(self, sigma, eps, delta):
        return {"sigma": sigma, "R": self.R, "r": self.r, "eps": eps, "delta": delta}


def default_families(R: float = 2.0, r: float = 1.0):
    """Sublevel, Profile2D, RadialBump: the fixed scan order."""
    return (Family(SUBLEVEL, R, None), Family(PROFILE, R, r), Family(BUMP, R, r))


def tau_gap(alpha: float, lam: float, sigma: float) -> float:
    """Noise floor a certified gap must clear: ``1e-6 (1 - alpha) lam sigma^2``."""
    return 1e-6 * (1.0 - alpha) * lam * sigma**2


def choose_eps(lam: float, e_M: float, mode: str) -> float:
    if mode == AUDIT:
        return 0.25
    return min(0.25, (lam - e_M) / 2.0)


def alpha_candidates(lam: float, eps: float, e_M: float, mode: str, grid: Sequence[float] = ALPHA_GRID) -> List[float]:
    """Decreasing ``alpha`` values; above yield they must satisfy ``alpha (lam - eps) > e_M``."""
    out = [a for a in grid if 0 < a < 1]
    if mode == ABOVE:
        out = [a for a in out if a * (lam - eps) > e_M]
    return sorted(out, reverse=True)


def sigma_candidates(delta: float, sigma_min: float = SIGMA_MIN, ratio: float = SIGMA_RATIO) -> List[float]:
    """Geometric grid ``sigma_min * ratio**k`` strictly below ``delta``."""
    out = []
    k = 0
    while True:
        s = sigma_min * ratio**k
        if s >= delta:
            return out
        out.append(s)
        k += 1


def family_delta(u, fam: Family, eps: float) -> float:
    if fam.case_tag == PROFILE:
        return min(1.0, eps * fam.R)
    return chord_delta(u, eps, fam.R)


# ------------------------------------------------------------------ certificates


def _r12(x):
    if x is None:
        return None
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return float(f"{float(x):.12g}")


@dataclass
class Certificate:
    """Machine-checkable witness of non-minimality."""

    case: str
    alpha: float
    sigma: float
    gap: float
    bv_distance: float
    eta: float
    lam: float
    eps: float
    delta: float
    R: float
    r: Optional[float]
    c1: Optional[float]
    c2: Optional[float]
    curvature_class: str
    tau_gap: float
    h: float
    mode: str = ABOVE
    budget: Optional[float] = None  # (1 - alpha)(||u||_BV + delta M), bump only

    @property
    def k(self) -> Optional[float]:
        return None if self.r is None else profile_k(self.r, self.R)

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "alpha": _r12(self.alpha),
            "sigma": _r12(self.sigma),
            "gap": _r12(self.gap),
            "bv_distance": _r12(self.bv_distance),
            "eta": _r12(self.eta),
            "constants": {
                "r": _r12(self.r),
                "R": _r12(self.R),
                "eps": _r12(self.eps),
                "delta": _r12(self.delta),
                "c1": _r12(self.c1),
                "c2": _r12(self.c2),
                "k": _r12(self.k),
            },
            "lambda": _r12(self.lam),
            "curvature_class": self.curvature_class,
            "tau_gap": _r12(self.tau_gap),
            "h": _r12(self.h),
            "mode": self.mode,
            "budget": _r12(self.budget),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def recompute(self, u, env: EnvelopeLaw, G: CohesiveLaw):
        """Fresh ``(gap, bv_distance)`` from a newly built region."""
        fam = Family(self.case, self.R, self.r)
        reg = build_region(self.case, u, fam.params(self.sigma, self.eps, self.delta))
        gap = energy_gap(u, reg, self.alpha, env, G, self.h).gap
        return gap, bv_distance(u, reg, self.alpha, self.h)

    def revalidate(self, u, env: EnvelopeLaw, G: CohesiveLaw, rtol: float = 1e-12) -> bool:
        """Recompute from scratch and check agreement and both certificate inequalities."""
        gap, bv = self.recompute(u, env, G)
        same = abs(gap - self.gap) <= rtol * abs(self.gap) and abs(bv - self.bv_distance) <= rtol * abs(self.bv_distance)
        return bool(same and gap > self.tau_gap and bv < self.eta)


# ---------------------------------------------------------------------- scanning


@dataclass(frozen=True)
class ScanRow:
    case: str
    lam: float
    alpha: float
    sigma: float
    gap: float
    bv_distance: float
    certified: bool

    def as_csv_row(self) -> dict:
        return {
            "lambda": self.lam,
            "alpha": self.alpha,
            "sigma": self.sigma,
            "gap": self.gap,
            "bv_distance": self.bv_distance,
            "certified": int(self.certified),
        }


@dataclass
class _Plan:
    family: Family
    eps: float
    delta: float
    alphas: List[float]
    sigmas: List[float]
    budget: dict = field(default_factory=dict)


def plan_family(u, env: EnvelopeLaw, fam: Family, eta: float, mode: str, alpha_grid=ALPHA_GRID, sigma_min=SIGMA_MIN, sigmas=None, h=None) -> _Plan:
    """Scan grids of one family; bump ``alpha`` values must also meet the BV budget."""
    lam = u.lam
    eps = choose_eps(lam, env.e_M, mode)
    if not eps > 0:
        return _Plan(fam, eps, 0.0, [], [])
    delta = family_delta(u, fam, eps)
    alphas = alpha_candidates(lam, eps, env.e_M, mode, alpha_grid)
    sig = sigma_candidates(delta, sigma_min) if sigmas is None else [s for s in sigmas if 0 < s < delta]
    plan = _Plan(fam, eps, delta, alphas, sig)
    if fam.case_tag == BUMP and alphas and sig:
        M = measure_constants(u, BUMP, eps, fam.R, fam.r, h=h).M
        norm = field_bv_norm(u)
        plan.budget = {a: (1.0 - a) * (norm + delta * M) for a in alphas}
        plan.alphas = [a for a in alphas if plan.budget[a] < eta]
    return plan


def _pool(workers):
    import os

    n = (os.cpu_count() or 1) if workers == 0 else max(1, int(workers))
    return ThreadPoolExecutor(max_workers=n), n


def scan_family(
    u: SampledField2D,
    env: EnvelopeLaw,
    G: CohesiveLaw,
    fam: Family,
    eta: float = 1.0,
    mode: str = ABOVE,
    h: Optional[float] = None,
    workers: int = 1,
    stop_at_first: bool = True,
    alpha_grid=ALPHA_GRID,
    sigma_min: float = SIGMA_MIN,
    sigmas: Optional[Iterable[float]] = None,
):
    """Evaluate the ``(alpha, sigma)`` grid of one family in scan order.

    Returns ``(rows, certificate)`` where ``certificate`` is the first
    certified candidate (or ``None``).  Work is spread over ``workers``
    threads in ordered chunks, so the result does not depend on timing.
    """
    plan = plan_family(u, env, fam, eta, mode, alpha_grid, sigma_min, sigmas, h)
    cands = [(a, s) for a in plan.alphas for s in plan.sigmas]
    regions = {}

    def region(s):
        if s not in regions:
            try:
                reg = build_region(fam.case_tag, u, fam.params(s, plan.eps, plan.delta))
                quadrature_nodes(reg, h)
            except RegionError:
                reg = None
            regions[s] = reg
        return regions[s]

    def evaluate(cand):
        a, s = cand
        reg = regions[s]
        if reg is None:
            return ScanRow(fam.case_tag, u.lam, a, s, float("nan"), float("nan"), False)
        gap = energy_gap(u, reg, a, env, G, h).gap
        bv = bv_distance(u, reg, a, h)
        ok = gap > tau_gap(a, u.lam, s) and bv < eta
        return ScanRow(fam.case_tag, u.lam, a, s, gap, bv, bool(ok))

    rows: List[ScanRow] = []
    cert = None
    pool, n = _pool(workers)
    with pool:
        for k in range(0, len(cands), n):
            chunk = cands[k : k + n]
            todo = sorted({s for _, s in chunk if s not in regions})
            for s, reg in zip(todo, pool.map(region, todo)):
                regions[s] = reg
            for row in pool.map(evaluate, chunk):
                rows.append(row)
                if row.certified and cert is None:
                    cert = _certificate(row, plan, fam, u, G, eta, h, mode)
            if cert is not None and stop_at_first:
                # keep rows up to the first hit only
                cut = next(i for i, rw in enumerate(rows) if rw.certified)
                rows = rows[: cut + 1]
                break
    return rows, cert


def _certificate(row, plan, fam, u, G, eta, h, mode):
    reg = build_region(fam.case_tag, u, fam.params(row.sigma, plan.eps, plan.delta))
    return Certificate(
        case=fam.case_tag,
        alpha=row.alpha,
        sigma=row.sigma,
        gap=row.gap,
        bv_distance=row.bv_distance,
        eta=eta,
        lam=u.lam,
        eps=plan.eps,
        delta=plan.delta,
        R=fam.R,
        r=fam.r,
        c1=G.c1,
        c2=G.c2,
        curvature_class=G.curvature_class,
        tau_gap=tau_gap(row.alpha, u.lam, row.sigma),
        h=reg.default_h if h is None else float(h),
        mode=mode,
        budget=plan.budget.get(row.alpha),
    )


def search_certificate(
    u: SampledField2D,
    env: EnvelopeLaw,
    G: CohesiveLaw,
    families=None,
    eta: float = 1.0,
    mode: str = ABOVE,
    h: Optional[float] = None,
    workers: int = 1,
    alpha_grid=ALPHA_GRID,
    sigma_min: float = SIGMA_MIN,
) -> Optional[Certificate]:
    """First certificate in the fixed scan order, or ``None``.

    Order: families as given (default Sublevel, Profile2D, RadialBump), then
    decreasing ``alpha``, then increasing ``sigma``.
    """
    if not eta > 0:
        return None
    for fam in default_families() if families is None else families:
        _, cert = scan_family(u, env, G, fam, eta, mode, h, workers, True, alpha_grid, sigma_min)
        if cert is not None:
            return cert
    return None


def largest_certified_sigma(
    u: SampledField2D,
    env: EnvelopeLaw,
    G: CohesiveLaw,
    fam: Family,
    alpha: float,
    sigma_max: float = 0.99,
    h: Optional[float] = None,
    n: int = 48,
) -> float:
    """Largest ``sigma`` below ``sigma_max`` with ``gap > tau_gap`` (root of the first sign change from above)."""
    delta = 1.0 if fam.case_tag == PROFILE else family_delta(u, fam, 0.25)
    sigma_max = min(sigma_max, delta * (1 - 1e-9))

    def excess(s):
        reg = build_region(fam.case_tag, u, fam.params(s, 0.25, delta))
        return energy_gap(u, reg, alpha, env, G, h).gap - tau_gap(alpha, u.lam, s)

    grid = np.geomspace(SIGMA_MIN, sigma_max, n)
    vals = np.array([excess(s) for s in grid])
    pos = np.where(vals > 0)[0]
    if pos.size == 0:
        return 0.0
    i = int(pos[-1])
    if i == n - 1:
        return float(sigma_max)
    return float(brentq(excess, grid[i], grid[i + 1], xtol=1e-12, rtol=1e-12))
