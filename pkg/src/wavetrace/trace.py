"""The wave 0-trace formula: geodesic side, spectral (theta) side, model identities."""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy import special

from .errors import CertificationError, ConditioningWarning
from .schottky import LengthSpectrum, SchottkyGroup
from .spectrum import TestFunction


def h_n(n: int, k: int) -> int:
    """Dimension of degree-k spherical harmonics on S^{n+1}."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    return (2 * k + n) * math.prod(range(k + 1, k + n)) // factorial(n)


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


@dataclass(frozen=True)
class TopologicalConstants:
    n: int
    chi: int
    A: float
    B: float
    zero_volume: float | None

    @classmethod
    def from_chi(cls, n: int, chi: int) -> "TopologicalConstants":
        if (n + 1) % 2 == 0:
            p = (n + 1) // 2
            vol0 = (-2 * math.pi) ** p / double_factorial(n) * chi
            B = double_factorial(n) * 2.0 ** (-3 * p) * (-math.pi) ** (-p) * vol0
            return cls(n, chi, 0.0, B, vol0)
        # the 0-volume depends on the defining function in this parity; B = 0 makes it moot
        return cls(n, chi, float(chi), 0.0, None)

    @classmethod
    def for_group(cls, group: SchottkyGroup) -> "TopologicalConstants":
        return cls.from_chi(group.ambient_n, group.chi)


# ----------------------------------------------------------------------------
# model space identities

def _series(n: int, t: float, tail_tol: float = 1e-15):
    """sum_k h_n(k) e^{-t(n/2 + k)} with a geometric tail bound."""
    q = math.exp(-t)
    terms = []
    k = 0
    while True:
        term = h_n(n, k) * math.exp(-t * (n / 2 + k))
        terms.append(term)
        ratio = h_n(n, k + 1) / h_n(n, k) * q
        # h_n(k+1)/h_n(k) decreases in k, so later ratios are at most this one
        nxt = term * ratio
        if ratio < 1 and nxt / (1 - ratio) < tail_tol:
            return math.fsum(terms)
        k += 1


def model_u0(n: int, t: float) -> float:
    """0-trace of the wave group on H^{n+1} for t > 0."""
    if not t > 0:
        raise ValueError("t must be positive")
    if (n + 1) % 2:
        return 0.0
    return 0.5 * _series(n, t)


def harmonic_kernel(n: int, t):
    """cosh(t/2) / sinh(t/2)^{n+1}."""
    t = np.asarray(t, float)
    return np.cosh(t / 2) / np.sinh(t / 2) ** (n + 1)


def model_identity_check(n: int, t_grid) -> float:
    """max |cosh(t/2)/sinh(t/2)^{n+1} - 2^n sum_k h_n(k) e^{-t(n/2+k)}| over the grid."""
    dev = 0.0
    for t in np.asarray(t_grid, float):
        if not t > 0:
            raise ValueError("grid must lie in (0, inf)")
        lhs = math.cosh(t / 2) / math.sinh(t / 2) ** (n + 1)
        rhs = 2.0 ** n * _series(n, t)
        dev = max(dev, abs(lhs - rhs))
    return dev


# ----------------------------------------------------------------------------
# geodesic side

def geodesic_side(spec: LengthSpectrum, consts: TopologicalConstants, phi: TestFunction,
                  tol: float = 1e-12) -> float:
    n = consts.n
    if phi.b > spec.complete_below:
        raise CertificationError(
            f"test function support reaches {phi.b:.6g} beyond complete_below = {spec.complete_below:.6g}",
            spec.complete_below)
    L = spec.lengths
    total = 0.0
    m = 1
    while len(L) and m * L[0] < phi.b:
        sel = (m * L > phi.a) & (m * L < phi.b)
        if sel.any():
            Ls = L[sel]
            g = spec.g_values(m, n)[sel]
            total += float(np.sum(Ls * np.exp(-n * m * Ls / 2) * phi.evaluate(m * Ls) / (2 * g)))
        m += 1
    if consts.B:
        total += consts.B * phi.integrate(lambda t: harmonic_kernel(n, t), tol=tol)
    return total


# ----------------------------------------------------------------------------
# resonance side

@dataclass(frozen=True)
class ResonanceSideResult:
    value: float
    truncated: bool


def resonance_side(res, d_seq, consts: TopologicalConstants, phi: TestFunction,
                   complete: bool = False, tol: float = 1e-13) -> ResonanceSideResult:
    """Pairing of the resonance expansion of the 0-trace with phi.

    ``res`` is a ResonanceSet or an iterable of (s, multiplicity); ``d_seq[k-1]``
    is d_k.  The result carries a truncation flag unless ``complete`` is set.
    """
    n = consts.n
    entries = res.entries if hasattr(res, "entries") else list(res)
    total = 0.0
    for s, m in entries:
        s = complex(s)
        val = phi.integrate(lambda t: np.real(np.exp(-(n / 2 - s) * t)), tol=tol)
        if s.imag != 0:
            val = complex(val, phi.integrate(lambda t: np.imag(np.exp(-(n / 2 - s) * t)), tol=tol))
        total += 0.5 * m * val
    for k, d in enumerate(d_seq, start=1):
        if d:
            total += 0.5 * d * phi.integrate(lambda t: np.exp(-k * t), tol=tol)
    if consts.A:
        total -= 2.0 ** (-n - 1) * consts.A * phi.integrate(lambda t: harmonic_kernel(n, t), tol=tol)
    return ResonanceSideResult(float(np.real(total)), not complete)


# ----------------------------------------------------------------------------
# spectral side through Z'/Z on the critical line

def theta2(n: int, z, zero_volume: float):
    """pi^{-n/2} Gamma(n/2)/Gamma(n) |Gamma(n/2+iz)|^2/|Gamma(iz)|^2 times the 0-volume."""
    z = np.asarray(z, float)
    pref = math.pi ** (-n / 2) * math.gamma(n / 2) / math.gamma(n)
    out = np.zeros_like(z)
    nz = z != 0
    lg = 2 * special.loggamma(n / 2 + 1j * z[nz]).real - 2 * special.loggamma(1j * z[nz]).real
    out[nz] = pref * np.exp(lg) * zero_volume
    return out


def _theta1_values(group, zs, node_base, workers):
    from .zeta.transfer import auto_nodes, family_for

    probe = family_for(group, 8)
    Ns = [auto_nodes(probe.phase_variation, z, node_base) for z in zs]

    def one(arg):
        z, N = arg
        return 2.0 * family_for(group, N).dlog(complex(0.5, z)).real

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConditioningWarning)
        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                vals = list(ex.map(one, zip(zs, Ns)))
        else:
            vals = [one(a) for a in zip(zs, Ns)]
    flagged = sum(1 for w in caught if issubclass(w.category, ConditioningWarning))
    return np.array(vals), flagged, max(Ns) if Ns else 0


def _trapezoid_even(vals, h):
    """Trapezoid rule on [0, Z] for an even integrand (half weight at 0 and Z)."""
    return h * (np.sum(vals) - 0.5 * vals[0] - 0.5 * vals[-1])


def _tail_cut(weight, phi, zstart, tol, zcap=200.0, dz=0.1):
    """Smallest ladder value Z >= zstart whose estimated tail int_Z^inf weight*|phi_hat| is below tol.

    The tail is integrated numerically out to 2*zcap; phi_hat decays faster than
    any power there, so the remainder beyond is negligible.
    """
    count = int(round(2 * zcap / dz)) + 1
    zs = dz * np.arange(count)
    amp = np.abs(phi.fourier_grid(dz, count)) * weight(zs)
    tail = np.cumsum(amp[::-1])[::-1] * dz / (2 * math.pi)
    for Z in np.arange(zstart, zcap + 1e-9, 10.0):
        est = float(tail[int(round(Z / dz))])
        if est <= tol:
            return float(Z), est
    return zcap, float(tail[int(round(zcap / dz))])


@dataclass
class TraceSideReport:
    geodesic_side: float
    spectral_side_theta: float
    resonance_side: float | None
    testfn: dict
    truncation_diagnostics: dict = field(default_factory=dict)

    @property
    def difference(self) -> float:
        return abs(self.geodesic_side - self.spectral_side_theta)

    def to_json(self) -> str:
        return json.dumps({"geodesic_side": self.geodesic_side,
                           "spectral_side_theta": self.spectral_side_theta,
                           "resonance_side": self.resonance_side,
                           "difference": self.difference,
                           "testfn": self.testfn,
                           "truncation_diagnostics": self.truncation_diagnostics}, indent=2, sort_keys=True)


def spectral_side_theta(group: SchottkyGroup, consts: TopologicalConstants, phi: TestFunction,
                        tol: float = 1e-6, eigen_params=None, h0: float = 0.2, node_base: int = 24,
                        workers: int = 1, return_diagnostics: bool = False):
    """(4 pi)^{-1} int phi_hat(z) theta(z) dz with theta = theta_1 + theta_2.

    theta_1(z) = Z'/Z(1/2+iz) + Z'/Z(1/2-iz) comes from the transfer determinant,
    theta_2(z) = z tanh(pi z) times the 0-volume.  With phi_hat(z) = int phi e^{-izt}
    the integrand is even, so the integral is (2 pi)^{-1} int_0^inf Re(phi_hat) theta.
    The trapezoid rule is spectrally accurate for this even analytic integrand; the
    step is halved until two levels agree to ``tol / 4``.  If delta > 1/2 the
    eigenvalue terms sum_alpha int cosh(t(1/2-alpha)) phi are added.
    """
    if group.ambient_n != 1 or consts.n != 1:
        raise NotImplementedError("spectral side via the determinant needs a real (n = 1) group")
    from .zeta.transfer import family_for
    from .zeta.zeros import find_delta, find_real_zeros

    delta = find_delta(group)
    diag = {"delta": delta}
    if delta < 0.5:
        bound = 2.0 * abs(family_for(group, 32).dlog(0.5))
        diag["theta1_bound"] = bound
        eig = []
    else:
        bound = None
        eig = list(eigen_params) if eigen_params is not None else find_real_zeros(group, (0.5 + 1e-3, 1.0))
    diag["eigen_params"] = list(eig)

    vol0 = consts.zero_volume
    # theta_2 part: cheap, integrate far out
    z2, t2_est = _tail_cut(lambda z: abs(vol0) * z, phi, 40.0, tol / 4)
    # theta_1 part: the bound on |theta_1| (or a provisional one) sets its cutoff
    w1 = bound if bound is not None else 4.0
    z1, t1_est = _tail_cut(lambda z: w1 + 0 * z, phi, 20.0, tol / 4)
    diag.update({"z_max_theta1": z1, "z_max_theta2": z2})

    h = h0
    grid1 = h * np.arange(int(round(z1 / h)) + 1)
    th1 = {}
    vals, flagged, nmax = _theta1_values(group, grid1, node_base, workers)
    th1.update(zip(np.round(grid1, 12), vals))
    fh = np.real(phi.fourier_grid(h, len(grid1)))
    prev = _trapezoid_even(fh * vals, h)
    levels = [prev]
    while True:
        h /= 2
        grid = h * np.arange(int(round(z1 / h)) + 1)
        new = grid[1::2]
        nv, fl, nm = _theta1_values(group, new, node_base, workers)
        flagged += fl
        nmax = max(nmax, nm)
        th1.update(zip(np.round(new, 12), nv))
        vals = np.array([th1[k] for k in np.round(grid, 12)])
        cur = _trapezoid_even(np.real(phi.fourier_grid(h, len(grid))) * vals, h)
        levels.append(cur)
        # errors square when h halves, so the level difference bounds the coarser level
        if abs(cur - prev) / (2 * math.pi) < tol / 4 or h < 1e-3:
            break
        prev = cur
    part1 = cur / (2 * math.pi)
    if bound is None:
        # provisional tail bound from the observed size of theta_1 near the cutoff
        w_obs = 2 * float(np.max(np.abs(vals[-max(1, len(vals) // 10):])))
        _, t1_est = _tail_cut(lambda z: w_obs + 0 * z, phi, z1, tol / 4)
    diag.update({"theta1_step": h, "theta1_levels": [l / (2 * math.pi) for l in levels],
                 "theta1_points": len(th1), "theta1_tail_estimate": t1_est,
                 "N_per_disk_max": nmax, "ill_conditioned_points": flagged})

    # theta_2 with the same nested trapezoid refinement
    h = 0.05
    prev = None
    while True:
        grid = h * np.arange(int(round(z2 / h)) + 1)
        cur = _trapezoid_even(np.real(phi.fourier_grid(h, len(grid))) * theta2(1, grid, vol0), h)
        if prev is not None and abs(cur - prev) < tol / 100:
            break
        prev = cur
        h /= 2
    part2 = cur / (2 * math.pi)
    diag.update({"theta2_step": h, "theta2_tail_estimate": t2_est})

    part3 = 0.0
    for a in eig:
        part3 += phi.integrate(lambda t: np.cosh(t * (0.5 - a)))
    diag.update({"theta1_part": part1, "theta2_part": part2, "eigen_part": part3,
                 "tail_total": t1_est + t2_est})
    val = part1 + part2 + part3
    return (val, diag) if return_diagnostics else val


def trace_check(group: SchottkyGroup, phi: TestFunction, spec: LengthSpectrum | None = None,
                tol: float = 1e-6, workers: int = 1) -> TraceSideReport:
    """Both sides of the trace formula for one test function."""
    from .schottky import enumerate_primitives

    consts = TopologicalConstants.for_group(group)
    if spec is None:
        spec = enumerate_primitives(group, phi.b, workers=workers)
    geo = geodesic_side(spec, consts, phi)
    spec_val, diag = spectral_side_theta(group, consts, phi, tol=tol, workers=workers,
                                         return_diagnostics=True)
    diag["spectrum_complete_below"] = spec.complete_below
    diag["classes"] = len(spec)
    return TraceSideReport(geo, spec_val, None, phi.describe(), diag)
