"""Conformal powers of the Laplacian on constant-curvature boundaries.

Kernel dimensions d_k of P_k, the scattering matrix of H^{n+1} on spherical
harmonics, and the relation between scattering poles and resonances.
"""
from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np
from scipy import special

EIG_TOL = 1e-9


class ScatteringPoleError(ValueError):
    """Evaluation point at (or within 1e-8 of) a pole of the model scattering matrix."""


def _half(n, exact):
    return Fraction(n, 2) if exact else n / 2


def pk_eigenvalue(n: int, k: int, K, mu):
    """prod_{j=1}^k (mu + (n/2 - j)(n/2 + j - 1) K); exact for int/Fraction inputs."""
    if k < 1:
        raise ValueError("k must be at least 1")
    exact = isinstance(K, (int, Fraction)) and isinstance(mu, (int, Fraction))
    h = _half(n, exact)
    val = Fraction(1) if exact else 1.0
    for j in range(1, k + 1):
        val *= mu + (h - j) * (h + j - 1) * K
    return val


def pk_coefficients(n: int, k: int, K) -> list:
    """Coefficients of P_k as a polynomial in mu, constant term first (exact)."""
    K = Fraction(K)
    h = Fraction(n, 2)
    coef = [Fraction(1)]
    for j in range(1, k + 1):
        c = (h - j) * (h + j - 1) * K
        new = [Fraction(0)] * (len(coef) + 1)
        for i, a in enumerate(coef):
            new[i] += a * c
            new[i + 1] += a
        coef = new
    return coef


@dataclass(frozen=True)
class BoundarySpectrum:
    n: int
    K: int
    eigenvalues: tuple      # ((mu, mult), ...) sorted by mu

    def __post_init__(self):
        if self.K not in (-1, 0, 1):
            raise ValueError("K must be -1, 0 or 1")
        ev = tuple((float(mu), int(m)) for mu, m in self.eigenvalues)
        if any(m < 1 for _, m in ev) or any(mu < 0 for mu, _ in ev):
            raise ValueError("eigenvalues must be nonnegative with positive multiplicities")
        if list(ev) != sorted(ev):
            raise ValueError("eigenvalues must be sorted")
        if not ev or ev[0][0] != 0:
            raise ValueError("a connected boundary has eigenvalue 0")
        object.__setattr__(self, "eigenvalues", ev)

    @classmethod
    def sphere(cls, n: int, l_max: int) -> "BoundarySpectrum":
        """Round S^n: eigenvalues l(l+n-1), multiplicity = harmonics of degree l on S^n."""
        from .trace import h_n

        def mult(l):
            if n == 1:
                return 1 if l == 0 else 2
            return h_n(n - 1, l)
        return cls(n, 1, tuple((l * (l + n - 1), mult(l)) for l in range(l_max + 1)))

    @classmethod
    def flat_torus(cls, n: int, mu_max: int) -> "BoundarySpectrum":
        """R^n / (2 pi Z)^n: eigenvalues |m|^2 over integer vectors m."""
        r = int(math.isqrt(mu_max))
        counts: dict = {}
        for m in product(range(-r, r + 1), repeat=n):
            q = sum(x * x for x in m)
            if q <= mu_max:
                counts[q] = counts.get(q, 0) + 1
        return cls(n, 0, tuple(sorted(counts.items())))

    @classmethod
    def from_csv(cls, text: str, n: int, K: int) -> "BoundarySpectrum":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        ev = sorted((float(a), int(b)) for a, b in rows)
        return cls(n, K, tuple(ev))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eigenvalue", "multiplicity"])
        for mu, m in self.eigenvalues:
            w.writerow([f"{mu:.17g}", m])
        return buf.getvalue()

    def multiplicity(self, mu: float) -> int:
        return sum(m for v, m in self.eigenvalues if abs(v - mu) <= EIG_TOL * max(1.0, abs(mu)))


def _is_number(x):
    try:
        float(x)
        return True
    except ValueError:
        return False


def _annihilating_values(n, k, K):
    """mu values killed by the factors j = 1..k of P_k."""
    return [-K * (n / 2 - j) * (n / 2 + j - 1) for j in range(1, k + 1)]


def dk(spec: BoundarySpectrum, k: int) -> int:
    """dim ker P_k: multiplicities of the eigenvalues annihilated by some factor."""
    if k < 1:
        raise ValueError("k must be at least 1")
    vals = _annihilating_values(spec.n, k, spec.K)
    return sum(m for mu, m in spec.eigenvalues
               if any(abs(mu - v) <= EIG_TOL * max(1.0, abs(v)) for v in vals))


def dk_count(spec: BoundarySpectrum, k: int) -> int:
    """Number of j <= k whose factor annihilates some eigenvalue."""
    return sum(1 for v in _annihilating_values(spec.n, k, spec.K) if spec.multiplicity(v) > 0)


def dk_table(spec: BoundarySpectrum, k_max: int):
    return [(k, dk(spec, k), dk_count(spec, k)) for k in range(1, k_max + 1)]


def dk_table_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "d_k_dim", "d_k_count"])
    w.writerows(rows)
    return buf.getvalue()


# ----------------------------------------------------------------------------
# model scattering matrix

def _near_nonpositive_int(x: complex, tol: float) -> bool:
    r = round(x.real)
    return r <= 0 and abs(x - r) < tol


def scattering_eigenvalue_model(n: int, s: complex, l: int, pole_tol: float = 1e-8) -> complex:
    """Eigenvalue on degree-l spherical harmonics of the scattering matrix of H^{n+1}:

        2^{n-2s} Gamma(n/2 - s)/Gamma(s - n/2) * Gamma(l + s)/Gamma(l + n - s).
    """
    s = complex(s)
    if _near_nonpositive_int(n / 2 - s, pole_tol):
        raise ScatteringPoleError(f"s = {s} is at a pole (or the regularization point s = n/2)")
    if _near_nonpositive_int(l + s, pole_tol):
        raise ScatteringPoleError(f"s = {s} is at a pole of Gamma(l + s)")
    for arg in (s - n / 2, l + n - s):
        r = round(arg.real)
        if r <= 0 and arg == r:
            return 0j
    lg = ((n - 2 * s) * math.log(2) + special.loggamma(n / 2 - s) - special.loggamma(s - n / 2)
          + special.loggamma(l + s) - special.loggamma(l + n - s))
    return complex(cmath.exp(lg))


def scattering_residue(n: int, k: int, l: int, radius: float = 1e-3, points: int = 64) -> complex:
    """Residue at s = n/2 + k by the trapezoid rule on a small circle."""
    s0 = n / 2 + k
    th = 2 * np.pi * (np.arange(points) + 0.5) / points
    u = radius * np.exp(1j * th)
    vals = np.array([scattering_eigenvalue_model(n, s0 + x, l) for x in u])
    return complex(np.mean(vals * u))


def residue_constant(k: int) -> float:
    """c_k = (-1)^{k+1} / (2^{2k} k! (k-1)!)."""
    return (-1) ** (k + 1) / (4 ** k * math.factorial(k) * math.factorial(k - 1))


# ----------------------------------------------------------------------------
# multiplicities and counting

def multiplicity_relation(m_s0: int, m_ns0: int, s0, n: int, d_lookup) -> int:
    """nu_{s0} = m_{s0} - m_{n-s0} + [n/2 - s0 in N] dim ker P_{n/2 - s0}."""
    s0 = complex(s0)
    if not s0.real < n / 2:
        raise ValueError("requires Re(s0) < n/2")
    nu = m_s0 - m_ns0
    k = n / 2 - s0
    if k.imag == 0 and abs(k.real - round(k.real)) < 1e-12 and round(k.real) >= 1:
        nu += int(d_lookup(int(round(k.real))))
    return nu


def counting_tallies(res, d_seq, R: float):
    """(sum of m_s over |s| <= R, sum of d_k over 1 <= k <= R)."""
    entries = res.entries if hasattr(res, "entries") else list(res)
    count = sum(m for s, m in entries if abs(complex(s)) <= R)
    dsum = sum(d for k, d in enumerate(d_seq, start=1) if k <= R)
    return count, dsum


def model_resonances(n: int, k_max: int):
    """Resonances of H^{n+1} (n odd): s = -k with multiplicity h_n(k)."""
    from .trace import h_n
    return [(complex(-k), h_n(n, k)) for k in range(k_max + 1)]
