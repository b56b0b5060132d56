"""Selberg zeta function from a length spectrum: Euler product and log series."""
from __future__ import annotations

import math
import warnings

import numpy as np

from ..errors import CertificationError, RegionError
from ..schottky import LengthSpectrum


class ZetaEvaluator:
    """Evaluates Z(s) on Re(s) > delta_estimate + safety_margin.

    The stored classes cover lengths up to ``spec.complete_below``; the
    contribution of longer geodesics is estimated from the growth bound
    N(t) <= A e^{delta t} fitted on the top half of the certified range.
    With ``strict=True`` an evaluation whose total tail bound exceeds ``tol``
    raises :class:`CertificationError`; otherwise the bound is only recorded
    (useful when comparing two evaluations of the same truncated product).
    """

    def __init__(self, spec: LengthSpectrum, n: int | None = None, delta_estimate: float | None = None,
                 tol: float = 1e-8, safety_margin: float = 0.1, k_cutoff: int | None = None,
                 strict: bool = True):
        self.spec = spec
        self.n = spec.ambient_n if n is None else n
        if delta_estimate is None:
            from ..spectrum import growth_rate_fit
            delta_estimate = growth_rate_fit(spec, spec.complete_below) if len(spec) >= 10 else 0.0
        self.delta_estimate = float(delta_estimate)
        self.tol = tol
        self.safety_margin = safety_margin
        self.k_cutoff = k_cutoff
        self.strict = strict
        self.growth_constant = self._growth_constant()
        self.tail_bound = None
        self.diagnostics = {}

    def _growth_constant(self) -> float:
        T = self.spec.complete_below
        L = self.spec.lengths
        d = self.delta_estimate
        lo = T / 2
        cand = [self.spec.count(lo) * math.exp(-d * lo)]
        idx = np.flatnonzero((L >= lo) & (L <= T))
        if len(idx):
            # N jumps at each stored length; the sup of N e^{-dt} sits at a jump
            cand.append(float(np.max((idx + 1) * np.exp(-d * L[idx]))))
        return max(max(cand), 1e-300)

    # -- bounds -------------------------------------------------------------
    def check_region(self, s: complex):
        if not s.real > self.delta_estimate + self.safety_margin:
            raise RegionError(
                f"Re(s) = {s.real:.6g} not above delta_estimate + margin = "
                f"{self.delta_estimate + self.safety_margin:.6g}")

    def geodesic_tail(self, sigma: float) -> float:
        """Bound on |sum over classes longer than complete_below| of the log series."""
        T = self.spec.complete_below
        d = self.delta_estimate
        if sigma <= d:
            return math.inf
        cg = 1.0 / ((1 - math.exp(-T)) ** self.n * (1 - math.exp(-sigma * T)))
        return cg * sigma * self.growth_constant * math.exp(-(sigma - d) * T) / (sigma - d)

    def _finish(self, parts: dict):
        total = sum(parts.values())
        self.tail_bound = total
        self.diagnostics = dict(parts, total=total)
        if total > self.tol:
            if self.strict:
                raise CertificationError(
                    f"tail bound {total:.3g} above tolerance {self.tol:.3g}; "
                    f"spectrum certified only to {self.spec.complete_below:.6g}",
                    self.spec.complete_below)
            warnings.warn(f"zeta tail bound {total:.3g} exceeds tolerance", RuntimeWarning, stacklevel=3)

    # -- Euler product ------------------------------------------------------
    def _k_tail(self, sigma, K):
        L = self.spec.lengths
        if not len(L):
            return 0.0
        q = np.exp(-(sigma + K + 1) * L)
        # number of multi-indices with |k| = j is C(j+n-1, n-1); bounded by (K+2)^(n-1) growth
        mult = (K + 2) ** (self.n - 1)
        return float(np.sum(mult * q / ((1 - np.exp(-L)) ** self.n * (1 - q))))

    def choose_k(self, sigma: float) -> int:
        if self.k_cutoff is not None:
            return self.k_cutoff
        K = 0
        while self._k_tail(sigma, K) > self.tol / 10 and K < 10_000:
            K += 1
        return K

    def log_euler(self, s: complex) -> complex:
        s = complex(s)
        self.check_region(s)
        K = self.choose_k(s.real)
        L = self.spec.lengths
        total = 0j
        if self.n == 1:
            for k in range(K + 1):
                total += np.sum(np.log1p(-np.exp(-(s + k) * L)))
        elif self.n == 2:
            # holonomy eigenvalues e^{+-i theta}: alpha^k = e^{i (k1 - k2) theta}
            th = self.spec.angles[:, 0]
            for j in range(K + 1):
                for k1 in range(j + 1):
                    x = np.exp(1j * (2 * k1 - j) * th - (s + j) * L)
                    total += np.sum(np.log1p(-x))
        else:
            raise NotImplementedError("Euler product is implemented for n <= 2")
        self._finish({"geodesic_tail": self.geodesic_tail(s.real), "k_truncation": self._k_tail(s.real, K)})
        self.diagnostics["k_cutoff"] = K
        return complex(total)

    # -- log series ---------------------------------------------------------
    def _m_tail(self, sigma, M):
        L = self.spec.lengths
        if not len(L):
            return 0.0
        q = np.exp(-sigma * (M + 1) * L)
        return float(np.sum(q / ((M + 1) * (1 - np.exp(-L)) ** self.n * (1 - np.exp(-sigma * L)))))

    def choose_m(self, sigma: float, scale: float = 1.0) -> int:
        M = 1
        while scale * self._m_tail(sigma, M) > self.tol / 10 and M < 100_000:
            M += 1
        return M

    def log_series(self, s: complex, derivative: bool = False) -> complex:
        s = complex(s)
        self.check_region(s)
        # the derivative tail carries an extra factor of the length, at most ~ T + 1/(sigma-delta)
        scale = 1.0
        if derivative:
            scale = self.spec.complete_below + 1 / max(s.real - self.delta_estimate, 1e-12)
        M = self.choose_m(s.real, scale)
        L = self.spec.lengths
        total = 0j
        for m in range(1, M + 1):
            g = self.spec.g_values(m, self.n)
            e = np.exp(-s * m * L) / g
            total += np.sum(L * e) if derivative else -np.sum(e) / m
        parts = {"geodesic_tail": self.geodesic_tail(s.real), "m_truncation": self._m_tail(s.real, M)}
        if derivative:
            parts = {k: v * scale for k, v in parts.items()}
        self._finish(parts)
        self.diagnostics["m_cutoff"] = M
        return complex(total)


def zeta_euler(ev: ZetaEvaluator, s: complex) -> complex:
    """Z(s) from the truncated Euler product."""
    return complex(np.exp(ev.log_euler(s)))


def zeta_logsum(ev: ZetaEvaluator, s: complex) -> complex:
    """log Z(s) from the double series over classes and powers."""
    return ev.log_series(s)


def zeta_dlog(ev: ZetaEvaluator, s: complex) -> complex:
    """Z'(s)/Z(s) = sum over classes and powers of l e^{-s m l} / G(m)."""
    return ev.log_series(s, derivative=True)
