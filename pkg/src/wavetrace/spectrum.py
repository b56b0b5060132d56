"""Counting functions of a length spectrum and smooth test functions."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .errors import CertificationError
from .schottky import LengthSpectrum

LOG2 = math.log(2.0)
_EI_LOG2 = float(special.expi(LOG2))


# ----------------------------------------------------------------------------
# logarithmic integral

def li(x: float) -> float:
    """li(x) = int_2^x dt / log t = Ei(log x) - Ei(log 2)."""
    x = float(x)
    # allow rounding just below 2, as in li(exp(log 2))
    if not x >= 2 * (1 - 1e-12):
        raise ValueError("li is defined here for x >= 2")
    return max(0.0, float(special.expi(math.log(x)) - _EI_LOG2))


def li_exp(a: float) -> float:
    """li(e^a)."""
    return li(math.exp(a))


def li_inverse_rate(count: float, T: float) -> float:
    """Growth rate d with li(e^{dT}) = count."""
    if count <= 0:
        raise ValueError("count must be positive")
    lo = LOG2 / T
    hi = lo + 1.0
    while li_exp(hi * T) < count:
        hi *= 2
    return optimize.brentq(lambda d: li_exp(d * T) - count, lo, hi, xtol=1e-14, rtol=1e-14)


def growth_rate_fit(spec: LengthSpectrum, T: float) -> float:
    """Exponential growth rate of N(T) read off through li inversion."""
    _check_cert(spec, T)
    return li_inverse_rate(spec.count(T), T)


def naive_growth_rate(spec: LengthSpectrum, T: float) -> float:
    return math.log(spec.count(T)) / T


# ----------------------------------------------------------------------------
# counting functions

def _check_cert(spec, t):
    if t > spec.complete_below:
        raise CertificationError(
            f"requested length {t:.6g} exceeds certified complete_below = {spec.complete_below:.6g}",
            spec.complete_below)


def counting_functions(spec: LengthSpectrum, x: float | None = None, *, log_x: float | None = None,
                       n: int | None = None):
    """(Pi_0(x), Pi(x), Psi(x)) summed over classes and powers with e^{kl} <= x."""
    t = math.log(x) if log_x is None else float(log_x)
    _check_cert(spec, t)
    L = spec.lengths
    pi0 = spec.count(t)
    pi = 0.0
    psi = 0.0
    k = 1
    while pi0 and k * L[0] <= t:
        m = k * L <= t
        cnt = int(m.sum())
        pi += cnt / k
        psi += float(np.sum(L[m] / spec.g_values(k, n)[m]))
        k += 1
    return pi0, pi, psi


def beta_exponent(n: int, delta: float) -> float:
    return n * (0.5 + delta) / (n + 1)


@dataclass
class CountingReport:
    T_grid: np.ndarray
    N: np.ndarray
    li_main: np.ndarray
    li_eigen: np.ndarray
    residual: np.ndarray
    fitted_exponent: float | None
    delta: float
    eigen_params: tuple = ()
    n: int = 1
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self) -> np.ndarray:
        return self.N / self.li_main

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "N", "li_main", "li_eigen", "residual"])
        for row in zip(self.T_grid, self.N, self.li_main, self.li_eigen, self.residual):
            w.writerow([f"{row[0]:.17g}", int(row[1])] + [f"{v:.17g}" for v in row[2:]])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"delta": self.delta, "fitted_exponent": self.fitted_exponent,
                "beta_n": beta_exponent(self.n, self.delta), "eigen_params": list(self.eigen_params),
                "n": self.n, **self.extra}

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def fit_exponent(T, residual, min_points: int = 5):
    """Least-squares slope of log|residual| against T over the top half of the grid."""
    T = np.asarray(T, float)
    r = np.asarray(residual, float)
    top = slice(len(T) // 2, None)
    Tt, rt = T[top], r[top]
    nz = rt != 0
    if nz.sum() < min_points:
        return None
    slope, _ = np.polyfit(Tt[nz], np.log(np.abs(rt[nz])), 1)
    return float(slope)


def asymptotic_report(spec: LengthSpectrum, delta: float, eigen_params=(), T_grid=None,
                      n: int | None = None) -> CountingReport:
    n = spec.ambient_n if n is None else n
    if not 0 < delta < n:
        raise ValueError("delta must lie in (0, n)")
    eig = tuple(sorted(float(a) for a in eigen_params))
    for a in eig:
        if not n / 2 < a < delta:
            raise ValueError(f"eigen-parameter {a} outside (n/2, delta)")
    T = np.asarray(T_grid, float)
    if T.max() > spec.complete_below:
        _check_cert(spec, float(T.max()))
    if np.any(np.diff(T) <= 0):
        raise ValueError("T_grid must be increasing")
    for a in (delta,) + eig:
        if a * T.min() < LOG2:
            raise ValueError("grid starts below li's domain (need e^{alpha T} >= 2)")
    N = np.array([spec.count(t) for t in T], dtype=np.int64)
    main = np.array([li_exp(delta * t) for t in T])
    extra = np.array([sum(li_exp(a * t) for a in eig) for t in T])
    resid = N - main - extra
    return CountingReport(T, N, main, extra, resid, fit_exponent(T, resid), float(delta), eig, n)


# ----------------------------------------------------------------------------
# test functions

def _smooth_step(u):
    """C^infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(np.asarray(u, float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        f1 = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return f0 / (f0 + f1)


class _Smooth:
    """Shared quadrature for functions that are C^infinity with compact support.

    All derivatives vanish at the support ends, so the trapezoid rule converges
    faster than any power; refinement doubles the grid until two levels agree.
    """

    __test__ = False
    a: float
    b: float

    def __call__(self, t):
        return self.evaluate(t)

    def _grid(self, m):
        h = (self.b - self.a) / m
        return self.a + h * np.arange(1, m), h

    def integrate(self, g=None, tol: float = 1e-13, m0: int = 64, m_max: int = 1 << 20):
        """int phi(t) g(t) dt with adaptive grid doubling; g vectorized."""
        prev = None
        m = m0
        while True:
            t, h = self._grid(m)
            v = self.evaluate(t) if g is None else self.evaluate(t) * g(t)
            val = h * np.sum(v)
            if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
                return val
            if m >= m_max:
                return val
            prev = val
            m *= 2


class TestFunction(_Smooth):
    """Bump exp(1 - 1/(1 - u^2)) on [a, b], u the affine coordinate; peak value 1."""

    def __init__(self, a: float, b: float):
        if not 0 < a < b:
            raise ValueError("support must be an interval [a, b] with 0 < a < b")
        self.a = float(a)
        self.b = float(b)
        self.center = (self.a + self.b) / 2
        self.half = (self.b - self.a) / 2

    def evaluate(self, t):
        u = (np.asarray(t, float) - self.center) / self.half
        inside = np.abs(u) < 1
        uu = np.where(inside, u, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - uu * uu)), 0.0)

    def fourier(self, z, m: int | None = None):
        """phi_hat(z) = int phi(t) e^{-izt} dt (vectorized over z).

        Uses symmetry about the center: phi_hat = e^{-izc} * 2 int_0^h phi cos(zv) dv.
        The grid is refined until it resolves the oscillation and two levels agree.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zmax = float(np.max(np.abs(z))) if z.size else 0.0
        if m is None:
            m = 256
            while m < 4 * zmax * self.half + 64:
                m *= 2
            prev = self._fourier_amp(z, m)
            while True:
                m *= 2
                cur = self._fourier_amp(z, m)
                if np.max(np.abs(cur - prev)) <= 1e-15 * self.half or m > 1 << 18:
                    break
                prev = cur
        else:
            cur = self._fourier_amp(z, m)
        return np.exp(-1j * z * self.center) * cur

    def _fourier_amp(self, z, m):
        v = self.half * (np.arange(m) + 0.5) / m
        w = self.evaluate(self.center + v)
        hv = self.half / m
        out = np.empty(z.shape, dtype=complex)
        step = max(1, 4_000_000 // m)
        for s in range(0, z.size, step):
            out[s:s + step] = 2 * hv * (np.cos(np.outer(z[s:s + step], v)) @ w)
        return out

    def fourier_grid(self, dz: float, count: int, m: int | None = None) -> np.ndarray:
        """phi_hat(j dz) for j = 0..count-1, by a phase recurrence instead of cosines."""
        zmax = dz * max(count - 1, 0)
        if m is None:
            m = 1024
            while m < 6 * zmax * self.half + 256:
                m *= 2
        v = self.half * (np.arange(m) + 0.5) / m
        w = 2 * (self.half / m) * self.evaluate(self.center + v)
        step = np.exp(1j * dz * v)
        out = np.empty(count)
        e = np.ones(m, dtype=complex)
        for j in range(count):
            if j % 64 == 0:
                e = np.exp(1j * (j * dz) * v)    # re-anchor to stop drift
            out[j] = e.real @ w
            e *= step
        z = dz * np.arange(count)
        return np.exp(-1j * z * self.center) * out

    def fourier_quad(self, z: float) -> complex:
        """Reference value of phi_hat(z) for real z from scipy's QUADPACK."""
        f = lambda t: float(self.evaluate(t))
        re, _ = integrate.quad(f, self.a, self.b, weight="cos", wvar=z, epsabs=1e-14, limit=400)
        im, _ = integrate.quad(f, self.a, self.b, weight="sin", wvar=z, epsabs=1e-14, limit=400)
        return complex(re, -im)

    def describe(self) -> dict:
        return {"kind": "bump", "support": [self.a, self.b]}


class PlateauWindow(_Smooth):
    """Smooth window: 0 below a, rises to 1 on [a, p], 1 on [p, q], falls to 0 on [q, b]."""

    def __init__(self, a: float, p: float, q: float, b: float):
        if not 0 < a < p <= q < b:
            raise ValueError("need 0 < a < p <= q < b")
        self.a, self.p, self.q, self.b = map(float, (a, p, q, b))

    def evaluate(self, t):
        t = np.asarray(t, float)
        up = _smooth_step((t - self.a) / (self.p - self.a))
        down = 1.0 - _smooth_step((t - self.q) / (self.b - self.q))
        return up * down

    def describe(self) -> dict:
        return {"kind": "plateau", "knots": [self.a, self.p, self.q, self.b]}


def plateau_window(l_x: float, x: float, y: float) -> PlateauWindow:
    """The window equal to 1 on [l_x, log x] and 0 beyond log(x+y)."""
    return PlateauWindow(l_x / 2, l_x, math.log(x), math.log(x + y))


def default_window_width(n: int, delta: float, x: float) -> float:
    """Window width y balancing the smoothing and oscillation error terms."""
    return n ** (1 / (n + 1)) * x ** ((3 / (n + 1)) * (n / 2) + (1 - delta) / (n + 1))


def windowed_psi(spec: LengthSpectrum, x: float, y: float, l_x: float | None = None,
                 n: int | None = None) -> float:
    """Sum of l/G(k) phi_{x,y}(k l) over classes and powers."""
    if not y > 0:
        raise ValueError("y must be positive")
    top = math.log(x + y)
    _check_cert(spec, top)
    if l_x is None:
        if not len(spec):
            return 0.0
        l_x = float(spec.lengths[0])
    if not l_x < math.log(x):
        raise ValueError("need l(X) < log x")
    win = plateau_window(l_x, x, y)
    L = spec.lengths
    total = 0.0
    k = 1
    while len(L) and k * L[0] < top:
        m = k * L < top
        if m.any():
            total += float(np.sum(L[m] / spec.g_values(k, n)[m] * win.evaluate(k * L[m])))
        k += 1
    return total
