"""delta, real zeros and resonances as zeros of det(I - L_s)."""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ..errors import CoarseMethodWarning, GeometryError, RegionError
from ..schottky import SchottkyGroup, enumerate_primitives
from .transfer import auto_nodes, family_for


def find_delta(group: SchottkyGroup, N_per_disk: int = 32, tol: float = 1e-12, spectrum=None) -> float:
    """Exponent of convergence: the s where the leading eigenvalue of L_s is 1."""
    n = group.ambient_n
    if n != 1:
        return _coarse_delta(group, spectrum)
    fam = family_for(group, N_per_disk)
    f = lambda s: fam.leading_eigenvalue(s) - 1.0
    lo, hi = 1e-9, float(n)
    if not (f(lo) > 0 > f(hi)):
        raise GeometryError("no eigenvalue crossing in (0, n): degenerate group")
    return float(optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps))


def _coarse_delta(group, spectrum=None, T: float | None = None) -> float:
    """Balance length-weighted Poincaré sums over two equal length windows."""
    warnings.warn("delta for ambient_n = 2 uses a coarse length-window estimate", CoarseMethodWarning,
                  stacklevel=3)
    if spectrum is None:
        T = 10.0 if T is None else T
        spectrum = enumerate_primitives(group, T)
    L = spectrum.lengths
    T = spectrum.complete_below
    w1 = (L > T / 2 - 1) & (L <= T / 2)
    w2 = (L > T - 1) & (L <= T)
    if not w1.any() or not w2.any():
        raise GeometryError("spectrum too short for a growth estimate")
    g = lambda s: math.log(np.sum(L[w2] * np.exp(-s * (L[w2] - T)))) - \
        math.log(np.sum(L[w1] * np.exp(-s * (L[w1] - T))))
    return float(optimize.brentq(g, 1e-6, float(group.ambient_n) * 2, xtol=1e-10))


def find_real_zeros(group: SchottkyGroup, interval, N_per_disk: int = 32, samples: int = 200,
                    tol: float = 1e-10):
    """All sign changes of det(I - L_s) on an interval inside (n/2, n), refined by bisection."""
    n = group.ambient_n
    lo, hi = map(float, interval)
    if lo <= n / 2 or hi > n or lo >= hi:
        raise RegionError("interval must lie in (n/2, n]")
    fam = family_for(group, N_per_disk)
    f = lambda s: fam.det(s).real
    xs = np.linspace(lo, hi, samples + 1)
    vals = [f(x) for x in xs]
    out = []
    for x0, x1, v0, v1 in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if v0 == 0:
            out.append(float(x0))
        elif v0 * v1 < 0:
            out.append(float(optimize.brentq(f, x0, x1, xtol=tol)))
    if vals[-1] == 0:
        out.append(float(hi))
    return out


# ----------------------------------------------------------------------------
# resonances

@dataclass
class ResonanceSet:
    entries: list
    box: tuple
    source: str = "zeta_zero"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        x0, x1, y0, y1 = self.box
        for s, m in self.entries:
            if not (x0 <= s.real <= x1 and y0 <= s.imag <= y1):
                raise ValueError(f"entry {s} outside box")
            if m < 1:
                raise ValueError("multiplicities must be positive")

    @classmethod
    def supplied(cls, entries, box=None):
        entries = [(complex(s), int(m)) for s, m in entries]
        if box is None:
            re = [s.real for s, _ in entries] or [0.0]
            im = [s.imag for s, _ in entries] or [0.0]
            box = (min(re), max(re), min(im), max(im))
        return cls(entries, tuple(box), "supplied")

    def __len__(self):
        return len(self.entries)

    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "multiplicity"])
        for s, m in self.entries:
            w.writerow([f"{s.real:.17g}", f"{s.imag:.17g}", m])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"box": list(self.box), "source": self.source,
                           "entries": [[s.real, s.imag, m] for s, m in self.entries],
                           "diagnostics": self.diagnostics}, indent=2, sort_keys=True)


def _wrap(x):
    return (x + math.pi) % (2 * math.pi) - math.pi


class _BoundaryZero(Exception):
    pass


class _Winder:
    """Argument-principle bookkeeping for log det(I - L_s) with a shared cache."""

    def __init__(self, fam, min_step, piece=0.5, cache=None):
        self.fam = fam
        self.cache = {} if cache is None else cache
        self.min_step = min_step
        self.piece = piece

    def value(self, s):
        key = (s.real, s.imag)
        v = self.cache.get(key)
        if v is None:
            v = self.fam.logdet_dlog(s)
            self.cache[key] = v
        return v

    def segment(self, a, b):
        """Change of arg det along the straight segment a -> b.

        The sampled change of log det must match the trapezoid integral of
        Z'/Z over the segment; a 2 pi wrap hidden between the samples shows
        up as an O(2 pi) mismatch and forces refinement.
        """
        (la, ga), (lb, gb) = self.value(a), self.value(b)
        h = b - a
        est = h * (ga + gb) / 2
        obs = complex(lb.real - la.real, _wrap(lb.imag - la.imag))
        if abs(est.imag) < math.pi / 3 and abs(obs - est) < 0.05:
            return obs.imag
        if abs(h) < self.min_step:
            raise _BoundaryZero(a)
        m = (a + b) / 2
        return self.segment(a, m) + self.segment(m, b)

    def edge(self, a, b, pieces=None):
        if pieces is None:
            pieces = max(1, math.ceil(abs(b - a) / self.piece))
        pts = [a + (b - a) * k / pieces for k in range(pieces + 1)]
        return sum(self.segment(p, q) for p, q in zip(pts[:-1], pts[1:]))

    def winding(self, x0, x1, y0, y1):
        c = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
        tot = sum(self.edge(c[i], c[(i + 1) % 4]) for i in range(4))
        w = tot / (2 * math.pi)
        r = round(w)
        if abs(w - r) > 1e-6:
            raise _BoundaryZero(None)
        return int(r)


def _newton(fam, s0, mult, cell, tol, max_iter=60):
    x0, x1, y0, y1 = cell
    diam = math.hypot(x1 - x0, y1 - y0)
    s = s0
    for _ in range(max_iter):
        g = fam.dlog(s, monitor=False)
        if g == 0 or not np.isfinite(g):
            return None
        step = mult / g
        if abs(step) > diam / 4:
            step *= diam / 4 / abs(step)
        s = s - step
        if not (x0 - diam <= s.real <= x1 + diam and y0 - diam <= s.imag <= y1 + diam):
            return None
        if abs(step) < tol:
            return s
    return None


def find_resonances(group: SchottkyGroup, box, refine_tol: float = 1e-10, N_per_disk: int | None = None,
                    max_depth: int = 8, cell_size: float = 1.0, workers: int = 1) -> ResonanceSet:
    """Zeros of det(I - L_s) in the rectangle box = (re0, re1, im0, im1)."""
    if group.ambient_n != 1:
        raise GeometryError("resonance search implemented for real (ambient_n = 1) groups")
    x0, x1, y0, y1 = map(float, box)
    if not (x0 < x1 and y0 < y1):
        raise ValueError("box must have positive width and height")
    if N_per_disk is None:
        probe = family_for(group, 8)
        scale = max(abs(y0), abs(y1), abs(x0), abs(x1))
        N_per_disk = auto_nodes(probe.phase_variation, scale)
    fam = family_for(group, N_per_disk)
    size = max(x1 - x0, y1 - y0)
    win = _Winder(fam, min_step=1e-7 * size)

    # nudge the outer box off zeros lying on its boundary
    nudges = 0
    eps = 1e-3 * size
    while True:
        try:
            total = win.winding(x0, x1, y0, y1)
            break
        except _BoundaryZero:
            nudges += 1
            if nudges > 6:
                raise RegionError("could not move the box boundary off a zero")
            x0 -= eps * 0.731
            x1 += eps * 0.619
            y0 -= eps * 0.557
            y1 += eps * 0.683
            eps *= 2

    nx = max(1, math.ceil((x1 - x0) / cell_size))
    ny = max(1, math.ceil((y1 - y0) / cell_size))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    cells = [(xs[i], xs[i + 1], ys[j], ys[j + 1]) for j in range(ny) for i in range(nx)]

    def solve(cell):
        w = _Winder(fam, win.min_step, cache=win.cache)
        found, unresolved = [], []
        _resolve(fam, w, cell, 0, max_depth, refine_tol, found, unresolved)
        return found, unresolved

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(solve, cells))
    else:
        parts = [solve(c) for c in cells]
    entries, unresolved = [], []
    for f, u in parts:
        entries.extend(f)
        unresolved.extend(u)
    entries = _merge(entries, 10 * refine_tol + 1e-9)
    cleaned = []
    for s, m in entries:
        if s.real > 0.5 * group.ambient_n and abs(s.imag) < 1e-8:
            s = complex(s.real, 0.0)
        cleaned.append((s, m))
    found_total = sum(m for _, m in cleaned) + sum(u["winding"] for u in unresolved)
    diag = {"N_per_disk": N_per_disk, "total_winding": total, "nudges": nudges,
            "cells": len(cells), "unresolved": unresolved, "winding_consistent": found_total == total}
    return ResonanceSet(cleaned, (x0, x1, y0, y1), "zeta_zero", diag)


def _merge(entries, tol):
    out = []
    for s, m in sorted(entries, key=lambda e: (round(e[0].real, 8), round(e[0].imag, 8))):
        if out and abs(out[-1][0] - s) < tol:
            out[-1] = (out[-1][0], out[-1][1] + m)
        else:
            out.append((s, m))
    return out


def _split(cell):
    x0, x1, y0, y1 = cell
    # slightly off-centre cuts avoid symmetric zero configurations
    xm = x0 + 0.5137 * (x1 - x0)
    ym = y0 + 0.4871 * (y1 - y0)
    return [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]


def _resolve(fam, win, cell, depth, max_depth, tol, found, unresolved):
    try:
        w = win.winding(*cell)
    except _BoundaryZero:
        unresolved.append({"cell": list(cell), "winding": 0, "reason": "zero on cell boundary"})
        return
    if w == 0:
        return
    x0, x1, y0, y1 = cell
    if w == 1 or depth >= max_depth:
        s = _newton(fam, complex((x0 + x1) / 2, (y0 + y1) / 2), w, cell, tol)
        if s is not None and x0 <= s.real <= x1 and y0 <= s.imag <= y1:
            found.append((s, w))
            return
        if depth >= max_depth:
            unresolved.append({"cell": list(cell), "winding": w, "reason": "no convergence at max depth"})
            return
    kids = _split(cell)
    sub_found, sub_unres = [], []
    try:
        ws = [win.winding(*k) for k in kids]
    except _BoundaryZero:
        ws = None
    if ws is None or sum(ws) != w:
        # cuts through a zero: retry with the other orientation of offsets
        x0, x1, y0, y1 = cell
        xm = x0 + 0.4629 * (x1 - x0)
        ym = y0 + 0.5311 * (y1 - y0)
        kids = [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
        try:
            ws = [win.winding(*k) for k in kids]
        except _BoundaryZero:
            ws = None
        if ws is None or sum(ws) != w:
            unresolved.append({"cell": list(cell), "winding": w, "reason": "inconsistent subdivision"})
            return
    for k in kids:
        _resolve(fam, win, k, depth + 1, max_depth, tol, sub_found, sub_unres)
    found.extend(sub_found)
    unresolved.extend(sub_unres)
