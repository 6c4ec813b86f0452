"""Marching-squares extraction of planar level sets as ordered polylines."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

TAU_LEVEL = 1e-9

# edges of a cell: 0 bottom, 1 right, 2 top, 3 left; corner bits: 1 bl, 2 br, 4 tr, 8 tl
_SEGMENTS = {
    1: [(3, 0)], 14: [(3, 0)],
    2: [(0, 1)], 13: [(0, 1)],
    3: [(3, 1)], 12: [(3, 1)],
    4: [(1, 2)], 11: [(1, 2)],
    6: [(0, 2)], 9: [(0, 2)],
    7: [(3, 2)], 8: [(3, 2)],
}
# saddles, keyed by (case, centre above level)
_SADDLES = {
    (5, True): [(0, 1), (2, 3)],
    (5, False): [(3, 0), (1, 2)],
    (10, True): [(3, 0), (1, 2)],
    (10, False): [(0, 1), (2, 3)],
}


@dataclass
class LevelSetCurve:
    """Polylines approximating ``{v = level}`` with per-segment unit normals.

    ``components[i]`` is an ``(m, 2)`` vertex array; ``normals[i]`` has shape
    ``(m - 1, 2)`` and points along ``grad v``.
    """

    components: List[np.ndarray] = field(default_factory=list)
    closed: List[bool] = field(default_factory=list)
    normals: List[np.ndarray] = field(default_factory=list)
    level: float = 0.0

    @property
    def empty(self) -> bool:
        return not self.components

    @property
    def length(self) -> float:
        return float(sum(np.sum(np.linalg.norm(np.diff(c, axis=0), axis=1)) for c in self.components))

    @property
    def vertices(self) -> np.ndarray:
        if self.empty:
            return np.zeros((0, 2))
        return np.concatenate(self.components)

    def segments(self):
        """Midpoints, lengths and normals of all segments, concatenated in component order."""
        if self.empty:
            z = np.zeros((0, 2))
            return z, np.zeros(0), z
        mids, lens = [], []
        for c in self.components:
            d = np.diff(c, axis=0)
            mids.append(0.5 * (c[1:] + c[:-1]))
            lens.append(np.linalg.norm(d, axis=1))
        return np.concatenate(mids), np.concatenate(lens), np.concatenate(self.normals)

    def to_csv(self) -> str:
        """``x,y`` rows per vertex, a blank line between components."""
        buf = io.StringIO()
        buf.write("x,y\n")
        for i, c in enumerate(self.components):
            if i:
                buf.write("\n")
            for x, y in c:
                buf.write(f"{x:.12g},{y:.12g}\n")
        return buf.getvalue()


def _grid(box, h):
    x0, x1, y0, y1 = box
    nx = max(1, int(np.ceil((x1 - x0) / h - 1e-9)))
    ny = max(1, int(np.ceil((y1 - y0) / h - 1e-9)))
    xs = x0 + h * np.arange(nx + 1)
    ys = y0 + h * np.arange(ny + 1)
    return xs, ys


def extract_level_set(v, level: float, box, h: float, ball: Optional[float] = None, newton: bool = True) -> LevelSetCurve:
    """Trace ``{v = level}`` over ``box`` on a square grid of spacing ``h``.

    ``v`` needs vectorised ``value`` and ``grad`` methods.  Nodes with
    ``v >= level`` count as above.  Ambiguous (saddle) cells are resolved by
    the sign of ``v - level`` at the cell centre.  With ``ball`` set, the curve
    is clipped to the closed disk of that radius about the origin.  Each
    vertex then receives one Newton correction along ``grad v`` (along the
    circle for vertices created by clipping).
    """
    xs, ys = _grid(box, h)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.stack([X, Y], axis=-1)
    V = v.value(P) - level
    above = V >= 0
    nx, ny = xs.size - 1, ys.size - 1
    case = (
        above[:-1, :-1].astype(int)
        + 2 * above[1:, :-1]
        + 4 * above[1:, 1:]
        + 8 * above[:-1, 1:]
    )

    # crossing points on horizontal edges (i,j)-(i+1,j) and vertical edges (i,j)-(i,j+1)
    def crossing(va, vb, pa, pb):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = va / (va - vb)
        t = np.nan_to_num(t)
        return pa + t[..., None] * (pb - pa)

    hpts = crossing(V[:-1, :], V[1:, :], P[:-1, :], P[1:, :])  # (nx, ny+1, 2)
    vpts = crossing(V[:, :-1], V[:, 1:], P[:, :-1], P[:, 1:])  # (nx+1, ny, 2)
    n_h = nx * (ny + 1)

    def edge_id(i, j, e):
        if e == 0:
            return i * (ny + 1) + j
        if e == 2:
            return i * (ny + 1) + j + 1
        if e == 3:
            return n_h + i * ny + j
        return n_h + (i + 1) * ny + j

    def edge_point(eid):
        if eid < n_h:
            return hpts[eid // (ny + 1), eid % (ny + 1)]
        k = eid - n_h
        return vpts[k // ny, k % ny]

    active = np.argwhere((case != 0) & (case != 15))
    saddle = [(i, j) for i, j in active if case[i, j] in (5, 10)]
    centre_above = {}
    if saddle:
        cs = np.array([[xs[i] + 0.5 * h, ys[j] + 0.5 * h] for i, j in saddle])
        cv = v.value(cs) - level >= 0
        centre_above = {ij: bool(b) for ij, b in zip(saddle, cv)}

    segs = []
    for i, j in active:
        c = int(case[i, j])
        pairs = _SADDLES[(c, centre_above[(i, j)])] if c in (5, 10) else _SEGMENTS[c]
        for a, b in pairs:
            segs.append((edge_id(i, j, a), edge_id(i, j, b)))

    chains = _link(segs)
    comps, closed = [], []
    for chain, is_closed in chains:
        pts = np.array([edge_point(e) for e in chain])
        comps.append(pts)
        closed.append(is_closed)

    curve = LevelSetCurve(level=level)
    for pts, is_closed in zip(comps, closed):
        pieces = _clip_to_ball(pts, ball) if ball is not None else [(pts, is_closed, None)]
        for piece, pc, flags in pieces:
            if piece.shape[0] < 2:
                continue
            if newton:
                piece = _newton(v, level, piece, ball, flags)
            curve.components.append(piece)
            curve.closed.append(pc)
    curve.normals = [_normals(v, c) for c in curve.components]
    return curve


def _link(segs):
    """Join edge-id segments into chains; returns ``[(edge ids, closed)]``."""
    adj = {}
    for k, (a, b) in enumerate(segs):
        adj.setdefault(a, []).append(k)
        adj.setdefault(b, []).append(k)
    used = [False] * len(segs)
    chains = []
    # open chains first (start at edges used once), then closed loops
    starts = [e for e, ks in adj.items() if len(ks) == 1]
    order = sorted(starts) + sorted(adj)
    for start in order:
        ks = [k for k in adj[start] if not used[k]]
        if not ks:
            continue
        chain = [start]
        cur = start
        while True:
            nxt = [k for k in adj[cur] if not used[k]]
            if not nxt:
                break
            k = nxt[0]
            used[k] = True
            a, b = segs[k]
            cur = b if a == cur else a
            chain.append(cur)
            if cur == start:
                break
        chains.append((chain, chain[0] == chain[-1] and len(chain) > 2))
    return chains


def _clip_to_ball(pts, R):
    """Split a polyline into runs inside the disk of radius ``R``; mark clipped ends."""
    inside = np.hypot(pts[:, 0], pts[:, 1]) <= R
    pieces = []
    cur, flags = [], []

    def hit(p, q):
        d = q - p
        a = d @ d
        b = 2 * p @ d
        c = p @ p - R * R
        disc = max(b * b - 4 * a * c, 0.0)
        roots = [(-b - np.sqrt(disc)) / (2 * a), (-b + np.sqrt(disc)) / (2 * a)]
        s = min((t for t in roots if -1e-12 <= t <= 1 + 1e-12), key=lambda t: abs(t - 0.5))
        return p + s * d

    closed = len(pts) > 2 and np.allclose(pts[0], pts[-1])
    if bool(np.all(inside)):
        return [(pts, closed, [False] * len(pts))]
    if closed:
        # restart the loop at an outside vertex so no run wraps around the seam
        k = int(np.argmin(inside))
        ring = np.roll(pts[:-1], -k, axis=0)
        pts = np.vstack([ring, ring[:1]])
        inside = np.hypot(pts[:, 0], pts[:, 1]) <= R
    for k in range(len(pts)):
        if inside[k]:
            if not cur and k > 0:
                cur.append(hit(pts[k - 1], pts[k]))
                flags.append(True)
            cur.append(pts[k])
            flags.append(False)
        elif cur:
            cur.append(hit(pts[k - 1], pts[k]))
            flags.append(True)
            pieces.append((np.array(cur), False, flags))
            cur, flags = [], []
    if cur:
        pieces.append((np.array(cur), False, flags))
    return pieces


def _newton(v, level, pts, ball, flags):
    pts = pts.copy()
    flags = np.zeros(len(pts), bool) if flags is None else np.asarray(flags, bool)
    free = ~flags
    if np.any(free):
        p = pts[free]
        g = v.grad(p)
        r = v.value(p) - level
        gg = np.sum(g * g, axis=1)
        step = np.where(gg > 0, r / np.where(gg > 0, gg, 1.0), 0.0)
        pts[free] = p - step[:, None] * g
    if np.any(flags):
        p = pts[flags]
        th = np.arctan2(p[:, 1], p[:, 0])
        q = ball * np.stack([np.cos(th), np.sin(th)], axis=1)
        tang = ball * np.stack([-np.sin(th), np.cos(th)], axis=1)
        r = v.value(q) - level
        dr = np.sum(v.grad(q) * tang, axis=1)
        th = th - np.where(dr != 0, r / np.where(dr != 0, dr, 1.0), 0.0)
        pts[flags] = ball * np.stack([np.cos(th), np.sin(th)], axis=1)
    return pts


def _normals(v, c):
    mid = 0.5 * (c[1:] + c[:-1])
    g = v.grad(mid)
    nrm = np.linalg.norm(g, axis=1, keepdims=True)
    return g / np.where(nrm > 0, nrm, 1.0)


def surface_integral(curve: LevelSetCurve, g, with_normals: bool = False) -> float:
    """Segment-midpoint rule ``sum g(midpoint) * length`` over all components.

    With ``with_normals`` the integrand is called as ``g(points, normals)``.
    """
    if curve.empty:
        return 0.0
    mids, lens, nrm = curve.segments()
    vals = g(mids, nrm) if with_normals else g(mids)
    return float(np.sum(np.asarray(vals, dtype=float) * lens))
