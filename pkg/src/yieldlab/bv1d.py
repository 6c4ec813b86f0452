"""One-dimensional BV displacements, their sharp/relaxed energies and the 1D minimiser.

A :class:`DisplacementField1D` lives on a uniform grid of ``(0, l)``.  Between
nodes it is affine, except that a cell may carry one jump, placed at the cell
midpoint.  The Cantor part of the derivative cannot be resolved on a grid and
is carried as a declared scalar mass: ``values`` describe the absolutely
continuous and jump parts only, and the full boundary displacement is
``values[-1] - values[0] + cantor_sign * cantor_mass``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, OracleTooLarge
from .laws import BulkLaw, CohesiveLaw, EnvelopeLaw, build_envelope

MAX_ORACLE_POINTS = 2 * 10**8


@dataclass(frozen=True, eq=False)
class DisplacementField1D:
    l: float
    values: np.ndarray
    jumps: tuple = ()
    cantor_mass: float = 0.0
    cantor_sign: float = 1.0

    def __post_init__(self):
        if not self.l > 0:
            raise DomainError("domain length must be positive")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise DomainError("need at least two grid values")
        if self.cantor_mass < 0:
            raise DomainError("cantor_mass must be nonnegative")
        object.__setattr__(self, "values", vals)
        h = self.l / (vals.size - 1)
        snapped = []
        for pos, amp in self.jumps:
            if not 0 < pos < self.l:
                raise DomainError(f"jump position {pos} outside (0, l)")
            if amp == 0:
                raise DomainError("jump amplitude must be nonzero")
            cell = min(int(pos // h), vals.size - 2)
            snapped.append(((cell + 0.5) * h, float(amp)))
        snapped.sort()
        cells = [int(p // h) for p, _ in snapped]
        if len(set(cells)) != len(cells):
            raise DomainError("at most one jump per grid cell")
        object.__setattr__(self, "jumps", tuple(snapped))

    @property
    def n_cells(self) -> int:
        return self.values.size - 1

    @property
    def h(self) -> float:
        return self.l / self.n_cells

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.l, self.values.size)

    def cell_jumps(self) -> np.ndarray:
        out = np.zeros(self.n_cells)
        for pos, amp in self.jumps:
            out[int(pos // self.h)] = amp
        return out

    @property
    def slopes(self) -> np.ndarray:
        """Absolutely continuous slope in every cell."""
        return (np.diff(self.values) - self.cell_jumps()) / self.h

    def boundary_displacement(self) -> float:
        return float(self.values[-1] - self.values[0] + self.cantor_sign * self.cantor_mass)

    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.slopes)) * self.h + sum(abs(a) for _, a in self.jumps) + self.cantor_mass)

    @classmethod
    def affine(cls, l: float, slope: float, n_cells: int = 64, offset: float = 0.0):
        x = np.linspace(0.0, l, n_cells + 1)
        return cls(l, offset + slope * x)

    @classmethod
    def with_single_jump(cls, l: float, strain: float, jump: float, n_cells: int = 65):
        """Uniform strain plus one jump at ``l/2`` (``n_cells`` odd puts it at a cell midpoint)."""
        x = np.linspace(0.0, l, n_cells + 1)
        vals = strain * x
        jumps = ()
        if jump != 0:
            pos = 0.5 * l
            cell = min(int(pos // (l / n_cells)), n_cells - 1)
            vals = vals + np.where(np.arange(n_cells + 1) > cell, jump, 0.0)
            jumps = ((pos, jump),)
        return cls(l, vals, jumps)


@dataclass(frozen=True)
class EnergyBreakdown:
    bulk: float
    jump: float
    cantor: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.bulk + self.jump + self.cantor)


def _jump_energy(u: DisplacementField1D, G: CohesiveLaw) -> float:
    if not u.jumps:
        return 0.0
    return float(np.sum(G.value(np.abs([a for _, a in u.jumps]))))


def energy_sharp_1d(u: DisplacementField1D, F: BulkLaw, G: CohesiveLaw) -> EnergyBreakdown:
    """Sharp energy ``int F(|u'|) + sum G(|[u]|)``; defined on SBV only."""
    if u.cantor_mass > 0:
        raise DomainError("sharp energy undefined on non-SBV candidate (cantor_mass > 0)")
    bulk = float(np.sum(F.value(np.abs(u.slopes))) * u.h)
    return EnergyBreakdown(bulk, _jump_energy(u, G), 0.0)


def energy_relaxed_1d(u: DisplacementField1D, env: EnvelopeLaw, G: CohesiveLaw) -> EnergyBreakdown:
    """Relaxed energy ``int Fbar(|u'|) + sum G(|[u]|) + G'(0) |D^c u|``."""
    bulk = float(np.sum(env.value(np.abs(u.slopes))) * u.h)
    return EnergyBreakdown(bulk, _jump_energy(u, G), G.slope0 * u.cantor_mass)


def bv_norm_1d(u: DisplacementField1D) -> float:
    """``int |u| dx + |Du|(0, l)``, exact for the piecewise-affine representation."""
    left = u.values[:-1]
    slopes = u.slopes
    jumps = u.cell_jumps()
    # each cell splits at its midpoint; the jump (possibly zero) sits between the halves
    a0, a1 = left, left + slopes * 0.5 * u.h
    b0, b1 = a1 + jumps, a1 + jumps + slopes * 0.5 * u.h
    l1 = _abs_linear_integral(a0, a1, 0.5 * u.h) + _abs_linear_integral(b0, b1, 0.5 * u.h)
    return float(np.sum(l1) + u.total_variation())


def _abs_linear_integral(y0, y1, width):
    """Exact ``int |y|`` of the affine function from ``y0`` to ``y1`` over ``width``."""
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    same = y0 * y1 >= 0
    out = np.empty_like(y0)
    out[same] = 0.5 * width * np.abs(y0[same] + y1[same])
    d = ~same
    denom = np.abs(y0[d]) + np.abs(y1[d])
    out[d] = 0.5 * width * (y0[d] ** 2 + y1[d] ** 2) / denom
    return out


# ------------------------------------------------------------------ minimisation


@dataclass(frozen=True)
class Minimizer1D:
    e_star: float
    s_star: float
    c_star: float
    energy: float
    e_M: float
    field: DisplacementField1D


def _reduced(env: EnvelopeLaw, G: CohesiveLaw, l: float, m: float, n_scan: int):
    """Minimise ``l Fbar(e) + G(m - l e)`` over ``e in [0, m/l]``.

    The objective is a convex plus a concave function of ``e``, so it can have
    several local minima: scan, refine every sampled local minimum, and keep
    the endpoints as candidates.
    """
    if m <= 0:
        return 0.0, 0.0
    emax = m / l

    def f(e):
        e = np.clip(e, 0.0, emax)
        return l * env.value(e) + G.value(np.maximum(m - l * e, 0.0))

    es = np.linspace(0.0, emax, n_scan)
    fs = f(es)
    cands = [0.0, emax]
    interior = np.where((fs[1:-1] <= fs[:-2]) & (fs[1:-1] <= fs[2:]))[0] + 1
    for i in interior:
        lo, hi = es[i - 1], es[i + 1]
        res = minimize_scalar(lambda e: float(f(e)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        e = float(res.x)
        # polish on the stationarity residual when it brackets a sign change
        def resid(x):
            return env.deriv(x) - G.deriv(max(m - l * x, 0.0))

        a, b = max(lo, e - 1e-6), min(hi, e + 1e-6)
        ra, rb = resid(a), resid(b)
        if ra < 0 < rb:
            e = brentq(resid, a, b, xtol=1e-14)
        cands.append(e)
    vals = [float(f(e)) for e in cands]
    k = int(np.argmin(vals))
    return cands[k], vals[k]


def minimize_relaxed_1d(
    F: BulkLaw,
    G: CohesiveLaw,
    l: float,
    t: float,
    n_scan: int = 2049,
    n_cantor: int = 33,
) -> Minimizer1D:
    """Minimise the relaxed 1D energy under ``u(0) = 0``, ``u(l) = t``.

    By Jensen's inequality for the convex envelope and subadditivity of the
    concave ``G`` (``G(0) = 0``), a uniform strain ``e``, one jump ``s`` and a
    Cantor mass ``c`` with ``l e + s + c = t`` suffice.  The Cantor coordinate
    is scanned explicitly rather than set to zero.
    """
    if t < 0:
        raise DomainError("boundary displacement must be >= 0; apply u -> -u first")
    if not l > 0:
        raise DomainError("length must be positive")
    env = build_envelope(F, G)
    if t == 0:
        return Minimizer1D(0.0, 0.0, 0.0, 0.0, env.e_M, DisplacementField1D.with_single_jump(l, 0.0, 0.0))

    def value_at(c):
        e, val = _reduced(env, G, l, t - c, n_scan)
        return e, val + G.slope0 * c

    cs = np.linspace(0.0, t, n_cantor)
    scan = [value_at(c) for c in cs]
    k = int(np.argmin([v for _, v in scan]))
    c_star = float(cs[k])
    e_star, energy = scan[k]
    if k > 0:
        lo, hi = cs[k - 1], cs[min(k + 1, n_cantor - 1)]
        res = minimize_scalar(lambda c: value_at(c)[1], bounds=(lo, hi), method="bounded")
        if res.fun < energy:
            c_star = float(res.x)
            e_star, energy = value_at(c_star)
    s_star = max(t - c_star - l * e_star, 0.0)
    fld = DisplacementField1D.with_single_jump(l, e_star, s_star)
    if c_star > 0:
        fld = DisplacementField1D(fld.l, fld.values, fld.jumps, cantor_mass=c_star)
    return Minimizer1D(float(e_star), float(s_star), c_star, float(energy), env.e_M, fld)


# ------------------------------------------------------------------------ oracle


@dataclass(frozen=True)
class OracleResult:
    energy: float
    strain: float
    jumps: tuple
    cantor: float
    grid_gap: float


def brute_force_oracle_1d(
    F: BulkLaw,
    G: CohesiveLaw,
    l: float,
    t: float,
    K: int = 1,
    resolution: int = 2000,
    cantor_levels: int = 5,
) -> OracleResult:
    """Exhaustive lattice search over uniform strain, up to ``K`` jumps and a Cantor mass.

    All amounts live on the lattice ``t / resolution``: strain ``e = i t/(l n)``,
    jumps ``s_j = k_j t/n`` for the first ``K - 1`` jumps, Cantor mass on
    ``cantor_levels`` lattice points of ``[0, t]``, and the last jump takes the
    remainder.  Energies are table lookups, so the search is exact on the
    lattice.  ``grid_gap`` bounds how far the lattice optimum can sit above
    the true minimum.
    """
    if K < 0 or K > 3:
        raise OracleTooLarge("oracle supports at most 3 jumps")
    if resolution > 4096 or resolution < 1:
        raise OracleTooLarge("oracle resolution must be in [1, 4096]")
    n = int(resolution)
    n_free = K - 1 if K >= 1 else 0
    npts = (n + 1) ** (1 + n_free) * cantor_levels
    if npts > MAX_ORACLE_POINTS:
        raise OracleTooLarge(f"oracle would visit {npts} lattice points (cap {MAX_ORACLE_POINTS})")
    if t == 0:
        return OracleResult(0.0, 0.0, (), 0.0, 0.0)
    env = build_envelope(F, G)
    step = t / n
    idx = np.arange(n + 1)
    bulk_tab = l * env.value(idx * step / l)
    g_tab = G.value(idx * step)
    c_idx = np.unique(np.round(np.linspace(0, n, cantor_levels)).astype(int))

    best = (np.inf, None)
    for kc in c_idx:
        cost_c = G.slope0 * kc * step
        if K == 0:
            i = n - kc
            val = bulk_tab[i] + cost_c
            cfg = (i, (), kc)
            if val < best[0]:
                best = (val, cfg)
            continue
        # free indices: strain i, first K-1 jumps; last jump is the remainder
        grids = np.meshgrid(*([idx] * (1 + n_free)), indexing="ij", sparse=True)
        used = sum(grids) + kc
        rem = n - used
        ok = rem >= 0
        total = bulk_tab[grids[0]] + cost_c
        for g in grids[1:]:
            total = total + g_tab[g]
        total = np.where(ok, total + g_tab[np.clip(rem, 0, n)], np.inf)
        flat = int(np.argmin(total))
        val = float(total.flat[flat])
        if val < best[0]:
            pos = np.unravel_index(flat, total.shape)
            free = [int(p) for p in pos]
            last = n - sum(free) - int(kc)
            best = (val, (free[0], tuple(free[1:]) + (last,), int(kc)))
    val, (i, js, kc) = best
    jumps = tuple(float(j * step) for j in js if j > 0)
    # moving the strain down one lattice step and the difference into a jump
    # costs at most G'(0) t/n in each term
    gap = 2.0 * G.slope0 * step
    return OracleResult(float(val), float(i * step / l), jumps, float(kc * step), gap)


def sweep_min1d(F: BulkLaw, G: CohesiveLaw, l: float, ts: Sequence[float]):
    """Rows ``(t, e*, s*, c*, energy, e_M)`` for each boundary displacement."""
    rows = []
    for t in ts:
        m = minimize_relaxed_1d(F, G, l, float(t))
        rows.append((float(t), m.e_star, m.s_star, m.c_star, m.energy, m.e_M))
    return rows
