"""Energy gap and BV distance of the competitor ``w = alpha u`` on ``V``.

With ``w = alpha u`` in ``V`` and ``w = u`` outside, ``w`` jumps by
``(1 - alpha)|u|`` across ``dV`` and

    E(u) - E(w) = int_V [Fbar(|grad u|) - Fbar(alpha |grad u|)] dx
                  - int_{dV} G((1 - alpha)|u|) dH^1,
    ||w - u||_BV = (1 - alpha) [int_V |u| + int_V |grad u| + int_{dV} |u| dH^1].

Both are evaluated with the column rules of :mod:`yieldlab.field2d.quadrature`
(composite Gauss panels of width ``h``).  The gap is a second-order remainder
of two first-order terms, so it needs quadrature far beyond the cell rules.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from ..errors import PreconditionError
from ..field2d import extract_level_set, radial_bump, region_integral
from ..field2d.quadrature import gauss_panels
from ..laws import CohesiveLaw, EnvelopeLaw
from .regions import BUMP, PROFILE, SUBLEVEL, CompetitorRegion, build_region, panels

_ORDER = 8


@dataclass
class _Nodes:
    bulk_pts: np.ndarray
    bulk_w: np.ndarray
    bulk_g: np.ndarray
    bulk_absu: np.ndarray
    bnd: dict  # piece -> (points, weights incl. arclength, |u|)


def _graph_nodes(graph, h):
    x, w = panels(graph.breaks, h)
    if x.size == 0:
        return np.zeros((0, 2)), np.zeros(0)
    y = graph.y(x)
    dy = graph.dy(x)
    return np.stack([x, y], axis=-1), w * np.sqrt(1.0 + dy * dy)


def quadrature_nodes(region: CompetitorRegion, h: Optional[float] = None) -> _Nodes:
    """Quadrature nodes of ``V`` and its charged boundary pieces (cached per ``h``)."""
    h = region.default_h if h is None else float(h)
    if h in region._cache:
        return region._cache[h]
    u = region.u
    x1, w1 = panels(region.breaks, h, region.graded)
    lo = region.lower(x1)
    hi = region.upper(x1)
    span = np.maximum(hi - lo, 0.0)
    xg, wg = np.polynomial.legendre.leggauss(_ORDER)
    x2 = lo[:, None] + 0.5 * span[:, None] * (xg[None, :] + 1.0)
    pts = np.stack([np.broadcast_to(x1[:, None], x2.shape), x2], axis=-1).reshape(-1, 2)
    w = (w1[:, None] * 0.5 * span[:, None] * wg[None, :]).ravel()
    g = np.linalg.norm(u.grad(pts), axis=-1)
    bnd = {}
    tp, tw = _graph_nodes(region.top, h)
    bnd["top"] = (tp, tw, np.abs(u.value(tp)), region.top.charged)
    if region.lateral:
        th, wt = [], []
        for a, b in region.lateral:
            t, ww = gauss_panels([a, b], h / region.R, _ORDER)
            th.append(t)
            wt.append(ww * region.R)
        th = np.concatenate(th)
        lp = region.R * np.stack([np.cos(th), np.sin(th)], axis=-1)
        lw = np.concatenate(wt)
    else:
        lp, lw = np.zeros((0, 2)), np.zeros(0)
    bnd["lateral"] = (lp, lw, np.abs(u.value(lp)), True)
    if region.bottom is not None:
        bp, bw = _graph_nodes(region.bottom, h)
        bnd["bottom"] = (bp, bw, np.abs(u.value(bp)), region.bottom.charged)
    nodes = _Nodes(pts, w, g, np.abs(u.value(pts)), bnd)
    region._cache[h] = nodes
    return nodes


def volume_integral(region: CompetitorRegion, f, h: Optional[float] = None) -> float:
    n = quadrature_nodes(region, h)
    return float(np.sum(np.asarray(f(n.bulk_pts), dtype=float) * n.bulk_w))


def boundary_lengths(region: CompetitorRegion, h: Optional[float] = None) -> dict:
    """``H^1`` of each boundary piece (``top``, ``lateral``, ``bottom``)."""
    n = quadrature_nodes(region, h)
    return {k: float(np.sum(v[1])) for k, v in n.bnd.items()}


@dataclass(frozen=True)
class GapResult:
    """``E(u) - E(w)`` and its parts; costs are the cohesive energies of the new jumps."""

    gap: float
    bulk_saving: float
    top_cost: float
    lateral_cost: float
    bottom_cost: float
    alpha: float
    sigma: float

    @property
    def jump_cost(self) -> float:
        return self.top_cost + self.lateral_cost + self.bottom_cost


def _check_alpha(alpha):
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def energy_gap(u, region: CompetitorRegion, alpha: float, env: EnvelopeLaw, G: CohesiveLaw, h: Optional[float] = None) -> GapResult:
    """``E(u) - E(w)`` for ``w = alpha u`` on ``region``; positive means ``w`` is better.

    ``u`` must be the field the region was built on.
    """
    if u is not region.u:
        raise ValueError("region was built on a different field")
    _check_alpha(alpha)
    n = quadrature_nodes(region, h)
    bulk = float(np.sum((env.value(n.bulk_g) - env.value(alpha * n.bulk_g)) * n.bulk_w))
    costs = {}
    for key in ("top", "lateral", "bottom"):
        if key not in n.bnd or not n.bnd[key][3] or n.bnd[key][0].shape[0] == 0:
            costs[key] = 0.0
            continue
        _, w, absu, _ = n.bnd[key]
        costs[key] = float(np.sum(G.value((1.0 - alpha) * absu) * w))
    gap = bulk - costs["top"] - costs["lateral"] - costs["bottom"]
    return GapResult(gap, bulk, costs["top"], costs["lateral"], costs["bottom"], float(alpha), region.sigma)


def bv_distance(u, region: CompetitorRegion, alpha: float, h: Optional[float] = None) -> float:
    """Exact ``||w - u||_BV = (1 - alpha)[int_V |u| + int_V |grad u| + int_dV |u|]``."""
    if u is not region.u:
        raise ValueError("region was built on a different field")
    _check_alpha(alpha)
    n = quadrature_nodes(region, h)
    vol = np.sum(n.bulk_absu * n.bulk_w) + np.sum(n.bulk_g * n.bulk_w)
    surf = sum(float(np.sum(v[2] * v[1])) for v in n.bnd.values())
    return float((1.0 - alpha) * (vol + surf))


@lru_cache(maxsize=64)
def field_bv_norm(u, panel: float = 1.0 / 16.0) -> float:
    """``||u||_BV(Omega) = int |u| + int |grad u|`` over the field's box (Gauss tensor rule)."""
    xmin, xmax, ymin, ymax = u.domain
    bx = [xmin, xmax] + ([0.0] if xmin < 0 < xmax else [])
    by = [ymin, ymax] + ([0.0] if ymin < 0 < ymax else [])
    x, wx = gauss_panels(bx, panel, _ORDER)
    y, wy = gauss_panels(by, panel, _ORDER)
    total = 0.0
    for yi, wyi in zip(y, wy):
        p = np.stack([x, np.full_like(x, yi)], axis=-1)
        total += wyi * float(np.sum((np.abs(u.value(p)) + np.linalg.norm(u.grad(p), axis=-1)) * wx))
    return total


def bv_distance_bound(u, region: CompetitorRegion, alpha: float, h: Optional[float] = None) -> float:
    """Surrogate ``(1 - alpha)[||u||_BV(Omega) + sup_dV |u| * H^1(dV)]`` (an upper bound)."""
    n = quadrature_nodes(region, h)
    sup = max((float(v[2].max()) for v in n.bnd.values() if v[2].size), default=0.0)
    per = sum(float(np.sum(v[1])) for v in n.bnd.values())
    return float((1.0 - alpha) * (field_bv_norm(u) + sup * per))


# ------------------------------------------------------------- divergence identity


def _unit(v):
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(nrm > 0, nrm, 1.0)


def _polyline_flux(u, pts, normals_fn):
    mids = 0.5 * (pts[1:] + pts[:-1])
    lens = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    nu = normals_fn(mids)
    gu = u.grad(mids)
    return float(np.sum(np.sum(_unit(gu) * nu, axis=-1) * u.value(mids) * lens)), mids


def divergence_identity_residual(u, region: CompetitorRegion, h: Optional[float] = None) -> float:
    """``|int_V |grad u| - int_dV (grad u/|grad u| . nu) u dH^1|`` on the cell grid.

    The volume term uses the cut-cell rule and the boundary uses marching
    squares (level pieces) or sampled polylines (arcs and graphs), so this is
    an independent discretisation from :func:`energy_gap`.  Requires
    ``|grad u| > 1`` on the region.
    """
    h = region.default_h if h is None else float(h)
    R, s = region.R, region.sigma
    pad = (region.bbox[0] - h, region.bbox[1] + h, region.bbox[2] - h, region.bbox[3] + h)
    boundary_pts = []
    flux = 0.0
    if region.case_tag == SUBLEVEL:
        top = extract_level_set(u, s, pad, h, ball=R)
        mids, lens, nrm = top.segments()
        flux += float(np.sum(np.sum(_unit(u.grad(mids)) * nrm, axis=-1) * u.value(mids) * lens))
        boundary_pts.append(mids)
        for a, b in region.lateral:
            m = max(2, int(np.ceil((b - a) * R / h)) + 1)
            th = np.linspace(a, b, m)
            pts = R * np.stack([np.cos(th), np.sin(th)], axis=-1)
            f, mids = _polyline_flux(u, pts, _unit)
            flux += f
            boundary_pts.append(mids)
    elif region.case_tag == BUMP:
        top = extract_level_set(region.top_field, 0.0, pad, h, ball=R)
        mids, lens, nrm = top.segments()
        flux += float(np.sum(np.sum(_unit(u.grad(mids)) * nrm, axis=-1) * u.value(mids) * lens))
        boundary_pts.append(mids)
    else:
        xs = _sample_breaks(region.breaks, h)
        top = np.stack([xs, region.top.y(xs)], axis=-1)
        f, mids = _polyline_flux(
            u, top, lambda p: _unit(np.stack([-region.top.dy(p[:, 0]), np.ones(len(p))], axis=-1))
        )
        flux += f
        boundary_pts.append(mids)
        bot = np.stack([xs, np.zeros_like(xs)], axis=-1)
        f, mids = _polyline_flux(u, bot, lambda p: np.tile([0.0, -1.0], (len(p), 1)))
        flux += f
        boundary_pts.append(mids)

    inside = region.implicit
    from ..field2d.quadrature import _cells

    cells = _cells(inside.bbox, h)
    cells = cells[inside.contains(cells)]
    probe = np.concatenate([cells] + [p for p in boundary_pts if p.size])
    if probe.size and np.min(np.linalg.norm(u.grad(probe), axis=-1)) <= 1.0:
        raise PreconditionError("|grad u| <= 1 somewhere on the region; the identity does not apply")
    vol = region_integral(lambda p: np.linalg.norm(u.grad(p), axis=-1), inside, h)
    return abs(vol - flux)


def _sample_breaks(breaks, h):
    out = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        m = max(1, int(np.ceil((b - a) / h)))
        out.append(np.linspace(a, b, m + 1)[:-1])
    out.append(np.array([breaks[-1]]))
    return np.concatenate(out)


# ------------------------------------------------------------------- Case-3 flux


@dataclass
class FluxCheck:
    """Taylor flux bound audit on ``S_sigma`` inside the annulus ``r < |x| < R``.

    ``rows`` holds ``(sigma, n_vertices, min_flux, min_margin, C_sigma)`` where the
    margin is ``flux - (1 - |grad a|^2 sigma^2 / (2 (lam - eps)^2))`` and
    ``C_sigma = max(-margin / sigma^3, 0)``; ``C`` is the largest ``C_sigma``.
    """

    rows: List[tuple] = field(default_factory=list)
    vertices: List[np.ndarray] = field(default_factory=list)
    flux: List[np.ndarray] = field(default_factory=list)
    bound: List[np.ndarray] = field(default_factory=list)

    @property
    def C(self) -> float:
        return max((row[4] for row in self.rows), default=0.0)

    def holds(self) -> bool:
        """Every vertex obeys ``flux >= bound - C sigma^3`` with the measured ``C``."""
        C = self.C
        return all(
            bool(np.all(f >= b - C * row[0] ** 3 - 1e-15))
            for f, b, row in zip(self.flux, self.bound, self.rows)
        )


def case3_flux_check(u, R: float, r: float, sigmas: Sequence[float] = (0.02, 0.04, 0.08), eps: float = 0.25, h: Optional[float] = None) -> FluxCheck:
    """Measure the cubic constant in the Case-3 flux lower bound at level-set vertices."""
    out = FluxCheck()
    lam_eps = u.lam - eps
    for s in sigmas:
        reg = build_region(BUMP, u, {"sigma": s, "R": R, "r": r, "eps": eps})
        hh = reg.default_h if h is None else h
        pad = (-R - hh, R + hh, -R - hh, R + hh)
        curve = extract_level_set(reg.top_field, 0.0, pad, hh, ball=R)
        v = curve.vertices
        rad = np.hypot(v[:, 0], v[:, 1])
        v = v[(rad > r) & (rad < R)]
        _, ga = radial_bump(r, R, v)
        gu = u.grad(v)
        gpsi = gu - s * ga
        flux = np.sum(_unit(gu) * _unit(gpsi), axis=-1)
        bound = 1.0 - np.sum(ga * ga, axis=-1) * s**2 / (2.0 * lam_eps**2)
        margin = flux - bound
        C = float(max(np.max(-margin) / s**3, 0.0)) if margin.size else 0.0
        out.rows.append((float(s), int(v.shape[0]), float(flux.min()) if flux.size else 1.0, float(margin.min()) if margin.size else 0.0, C))
        out.vertices.append(v)
        out.flux.append(flux)
        out.bound.append(bound)
    return out


def bump_a2_integral(region: CompetitorRegion, h: Optional[float] = None) -> float:
    """``int a^2 dH^1`` over ``S_sigma`` inside the annulus ``r < |x| < R``."""
    if region.case_tag != BUMP:
        raise ValueError("only defined for the bump region")
    pts, w, _, _ = quadrature_nodes(region, h).bnd["top"]
    rad = np.hypot(pts[:, 0], pts[:, 1])
    mask = rad > region.r
    a, _ = radial_bump(region.r, region.R, pts[mask])
    return float(np.sum(a * a * w[mask]))


__all__ = [
    "FluxCheck",
    "GapResult",
    "boundary_lengths",
    "bump_a2_integral",
    "bv_distance",
    "bv_distance_bound",
    "case3_flux_check",
    "divergence_identity_residual",
    "energy_gap",
    "field_bv_norm",
    "quadrature_nodes",
    "volume_integral",
    "PROFILE",
]
