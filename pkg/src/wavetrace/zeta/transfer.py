"""Transfer operator of a real Schottky group and its Fredholm determinant.

For z in the interval of disk b the operator acts by

    (L_s f)(z) = sum_{a != b} (S_a'(z))^s f(S_a z),

where S_a is the letter-a Möbius map, sending disk b into disk a^1.  Functions
on each disk are represented by Chebyshev interpolation on the hull of the
first-generation image intervals, which is invariant under every branch.
det(I - L_s) then equals Z(s) up to the discretization error, which decays
exponentially in the number of nodes.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ..errors import ConditioningWarning, GeometryError
from ..schottky import SchottkyGroup, require_valid

COND_LIMIT = 1e12


def chebyshev_nodes(N: int) -> np.ndarray:
    k = np.arange(N)
    return np.cos(np.pi * (k + 0.5) / N)


def chebyshev_weights(N: int) -> np.ndarray:
    k = np.arange(N)
    return (-1.0) ** k * np.sin(np.pi * (k + 0.5) / N)


def interpolation_matrix(x: np.ndarray, w: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Barycentric interpolation rows evaluating the interpolant at points y."""
    d = y[:, None] - x[None, :]
    hit = d == 0
    d[hit] = 1.0
    c = w[None, :] / d
    c /= c.sum(1, keepdims=True)
    rows = hit.any(1)
    if rows.any():
        c[rows] = hit[rows].astype(float)
    return c


def _moebius(m, z):
    return (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])


def hull_intervals(group: SchottkyGroup):
    """Interval J_t per disk t: hull of the images S_{t^1}(I_c), c != t^1."""
    ms = group.letter_matrices()
    cs, rs = group.centers.real, group.radii
    nd = len(cs)
    out = []
    for t in range(nd):
        a = t ^ 1
        pts = []
        for c in range(nd):
            if c != a:
                pts += [_moebius(ms[a], cs[c] - rs[c]), _moebius(ms[a], cs[c] + rs[c])]
        lo, hi = min(pts), max(pts)
        if not (cs[t] - rs[t] <= lo < hi <= cs[t] + rs[t]):
            raise GeometryError(f"image hull for disk {t} leaves the disk")
        out.append((lo, hi))
    return out


class TransferFamily:
    """s-independent data of the collocation matrix for a fixed node count."""

    def __init__(self, group: SchottkyGroup, N_per_disk: int):
        if group.ambient_n != 1:
            raise GeometryError("transfer operator implemented for real (ambient_n = 1) groups")
        if N_per_disk < 4:
            raise ValueError("N_per_disk must be at least 4")
        require_valid(group)
        self.group = group
        self.N = N = int(N_per_disk)
        ms = group.letter_matrices()
        cs = group.centers.real
        nd = len(cs)
        self.intervals = hull_intervals(group)
        xr = chebyshev_nodes(N)
        w = chebyshev_weights(N)
        mid = [(lo + hi) / 2 for lo, hi in self.intervals]
        rad = [(hi - lo) / 2 for lo, hi in self.intervals]
        self.nodes = [mid[b] + rad[b] * xr for b in range(nd)]
        size = nd * N
        self.C = np.zeros((size, size))
        self.LP = np.zeros((size, size))
        self.lp_rows = np.zeros((size, nd))     # log |S'| per row, by target block
        self.phase_variation = 0.0
        for b in range(nd):
            z = self.nodes[b]
            rows = slice(b * N, (b + 1) * N)
            for a in range(nd):
                if a == b:
                    continue
                m = ms[a]
                t = a ^ 1
                cz = m[1, 0] * z + m[1, 1]
                sgn = np.sign(m[1, 0] * cs[b] + m[1, 1])
                if np.any(sgn * cz <= 0):
                    raise GeometryError("branch map has a pole on a collocation interval")
                y = _moebius(m, z)
                lo, hi = self.intervals[t]
                tol = 1e-12 * (hi - lo)
                if np.any(y < lo - tol) or np.any(y > hi + tol):
                    raise GeometryError("collocation nodes leave their contraction domain")
                yr = (y - mid[t]) / rad[t]
                lp = -2.0 * np.log(sgn * cz)      # log of |S_a'(z)|
                cols = slice(t * N, (t + 1) * N)
                self.C[rows, cols] = interpolation_matrix(xr, w, yr)
                self.LP[rows, cols] = lp[:, None]
                self.lp_rows[rows, t] = lp
                self.phase_variation = max(self.phase_variation, float(lp.max() - lp.min()))

    @property
    def size(self) -> int:
        return self.C.shape[0]

    def matrix(self, s: complex) -> np.ndarray:
        s = float(np.real(s)) if np.imag(s) == 0 else complex(s)
        return self.C * np.repeat(np.exp(s * self.lp_rows), self.N, axis=1)

    def _lu(self, s):
        A = np.eye(self.size) - self.matrix(s)
        lu, piv = linalg.lu_factor(A, check_finite=False)
        return A, lu, piv

    def _cond(self, A, lu):
        anorm = np.linalg.norm(A, 1)
        if np.iscomplexobj(lu):
            rcond, _ = linalg.lapack.zgecon(lu, anorm, norm="1")
        else:
            rcond, _ = linalg.lapack.dgecon(lu, anorm, norm="1")
        return math.inf if rcond == 0 else 1.0 / rcond

    def logdet(self, s: complex, with_cond: bool = False):
        """log det(I - L_s) on some branch (imaginary part defined mod 2 pi)."""
        A, lu, piv = self._lu(s)
        d = np.diag(lu).astype(complex)
        swaps = int(np.sum(piv != np.arange(len(piv))))
        val = complex(np.sum(np.log(d)) + (1j * np.pi if swaps % 2 else 0))
        if with_cond:
            return val, self._cond(A, lu)
        return val

    def det(self, s: complex) -> complex:
        A, lu, piv = self._lu(s)
        swaps = int(np.sum(piv != np.arange(len(piv))))
        d = np.prod(np.diag(lu))
        return complex(-d if swaps % 2 else d)

    def dlog(self, s: complex, monitor: bool = True):
        """Z'/Z(s) = -tr((I - L_s)^{-1} dL/ds), with dL/ds = LP * L entrywise."""
        L = self.matrix(s)
        A = np.eye(self.size) - L
        lu, piv = linalg.lu_factor(A, check_finite=False)
        dL = self.LP * L
        X = linalg.lu_solve((lu, piv), dL, check_finite=False)
        if monitor:
            cond = self._cond(A, lu)
            if cond > COND_LIMIT:
                warnings.warn(f"ill-conditioned I - L_s at s = {s}: cond {cond:.3g}", ConditioningWarning,
                              stacklevel=2)
        return complex(-np.trace(X))

    def logdet_dlog(self, s: complex):
        """(log det(I - L_s), Z'/Z(s)) sharing one LU factorization."""
        L = self.matrix(s)
        A = np.eye(self.size) - L
        lu, piv = linalg.lu_factor(A, check_finite=False)
        d = np.diag(lu).astype(complex)
        swaps = int(np.sum(piv != np.arange(len(piv))))
        ld = complex(np.sum(np.log(d)) + (1j * np.pi if swaps % 2 else 0))
        X = linalg.lu_solve((lu, piv), self.LP * L, check_finite=False)
        return ld, complex(-np.trace(X))

    def leading_eigenvalue(self, s: float) -> float:
        ev = np.linalg.eigvals(self.matrix(float(s)))
        return float(ev[np.argmax(ev.real)].real)


@dataclass
class TransferOperator:
    group: SchottkyGroup
    nodes: list
    s: complex
    matrix: np.ndarray
    family: TransferFamily = field(repr=False, default=None)
    condition: float = math.nan
    flagged: bool = False

    def det(self) -> complex:
        return self.family.det(self.s)

    def logdet(self) -> complex:
        return self.family.logdet(self.s)

    def dlog(self) -> complex:
        return self.family.dlog(self.s)


def build_transfer(group: SchottkyGroup, s: complex, N_per_disk: int,
                   family: TransferFamily | None = None) -> TransferOperator:
    fam = family if family is not None else TransferFamily(group, N_per_disk)
    _, cond = fam.logdet(s, with_cond=True)
    op = TransferOperator(group, fam.nodes, complex(s), fam.matrix(s), fam, cond, cond > COND_LIMIT)
    if op.flagged:
        warnings.warn(f"collocation matrix condition {cond:.3g} exceeds {COND_LIMIT:g}", ConditioningWarning,
                      stacklevel=2)
    if not np.all(np.isfinite(op.matrix)):
        raise FloatingPointError("non-finite transfer matrix entries")
    return op


def auto_nodes(phase_variation: float, s_scale: float, base: int = 24) -> int:
    """Node count resolving the oscillation of |S'|^s across an interval."""
    return int(base + math.ceil(1.2 * phase_variation * abs(s_scale)))


_FAMILY_CACHE: dict = {}


def family_for(group: SchottkyGroup, N: int) -> TransferFamily:
    key = (id(group), N)
    fam = _FAMILY_CACHE.get(key)
    if fam is None or fam.group is not group:
        if len(_FAMILY_CACHE) > 64:
            _FAMILY_CACHE.clear()
        fam = TransferFamily(group, N)
        _FAMILY_CACHE[key] = fam
    return fam
