"""Möbius isometries of the upper half space models of H^2 and H^3.

Isometries are stored as normalized 2x2 matrices.  Real matrices act on the
upper half plane (``ambient_n = 1``), complex ones on H^3 through the boundary
Riemann sphere (``ambient_n = 2``).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

PARABOLIC_TOL = 1e-10


def _normalize(m: np.ndarray) -> np.ndarray:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) == 0:
        raise GeometryError("singular matrix")
    if abs(det - 1) < 1e-14:
        # already unimodular: keep entries so that save/load round trips are exact
        return m.astype(complex)
    return m / np.sqrt(det + 0j)


@dataclass(frozen=True)
class Isometry:
    """Unimodular 2x2 matrix acting by linear fractional transformations."""

    matrix: np.ndarray
    ambient_n: int = 1

    def __post_init__(self):
        if self.ambient_n not in (1, 2):
            raise ValueError("ambient_n must be 1 or 2")
        m = np.array(self.matrix, dtype=complex).reshape(2, 2)
        if self.ambient_n == 1:
            if np.any(m.imag != 0):
                raise GeometryError("ambient_n = 1 requires real entries")
            det = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real
            if det <= 0:
                raise GeometryError("real isometry needs positive determinant")
            if abs(det - 1) >= 1e-14:
                m = (m.real / math.sqrt(det)).astype(complex)
        else:
            m = _normalize(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_entries(cls, a, b, c, d, ambient_n: int = 1) -> "Isometry":
        return cls(np.array([[a, b], [c, d]], dtype=complex), ambient_n)

    @classmethod
    def identity(cls, ambient_n: int = 1) -> "Isometry":
        return cls(np.eye(2, dtype=complex), ambient_n)

    @property
    def entries(self):
        m = self.matrix
        return m[0, 0], m[0, 1], m[1, 0], m[1, 1]

    @property
    def trace(self) -> complex:
        return complex(self.matrix[0, 0] + self.matrix[1, 1])

    def inverse(self) -> "Isometry":
        a, b, c, d = self.entries
        return Isometry(np.array([[d, -b], [-c, a]]), self.ambient_n)

    def real_matrix(self) -> np.ndarray:
        return self.matrix.real.copy() if self.ambient_n == 1 else self.matrix.copy()

    def apply(self, z):
        """Action on boundary points; ``np.inf`` is handled."""
        a, b, c, d = self.entries
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (a * z + b) / (c * z + d)
        return w

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return compose(self, other)


def compose(g: Isometry, h: Isometry) -> Isometry:
    """Group law g∘h, renormalized to unit determinant."""
    if g.ambient_n != h.ambient_n:
        raise GeometryError("ambient dimension mismatch")
    return Isometry(g.matrix @ h.matrix, g.ambient_n)


@dataclass(frozen=True)
class TranslationData:
    length: float
    angles: tuple = field(default=())

    def __post_init__(self):
        if not self.length > 0:
            raise GeometryError("translation length must be positive")


def _reduce_angle(theta: float) -> float:
    theta = math.remainder(theta, 2 * math.pi)
    if theta <= -math.pi:
        theta += 2 * math.pi
    return theta


def translation_from_trace(tr: complex, ambient_n: int = 1) -> TranslationData:
    """Length and holonomy from tr = 2 cosh((l + i theta)/2)."""
    if ambient_n == 1:
        t = abs(tr.real if isinstance(tr, complex) else tr)
        if t - 2 <= PARABOLIC_TOL:
            raise GeometryError("elliptic or parabolic element (|tr| <= 2)")
        return TranslationData(2 * math.acosh(t / 2), ())
    w = cmath.acosh(complex(tr) / 2)
    length = 2 * w.real
    if abs(length) <= PARABOLIC_TOL:
        raise GeometryError("elliptic or parabolic element")
    return TranslationData(abs(length), (_reduce_angle(2 * w.imag),))


def translation_data(g: Isometry) -> TranslationData:
    return translation_from_trace(g.trace, g.ambient_n)


def g_factor(data: TranslationData, k: int, n: int) -> float:
    """det(I - e^{-kl} O^k) for holonomy with the given rotation angles.

    The rotation O acts on R^n: each angle contributes a conjugate pair of
    eigenvalues and an odd leftover dimension contributes the eigenvalue 1.
    """
    if k <= 0:
        raise ValueError("k must be a positive integer")
    q = math.exp(-k * data.length)
    pairs = list(data.angles)
    if 2 * len(pairs) > n:
        raise ValueError("more rotation angles than dimensions")
    val = 1.0
    for theta in pairs:
        val *= 1 - 2 * q * math.cos(k * theta) + q * q
    if n - 2 * len(pairs) > 0:
        val *= (1 - q) ** (n - 2 * len(pairs))
    return val
