"""Schottky groups from pairing disks and enumeration of closed geodesics.

Letters are integers: ``2*i`` stands for generator ``g_i`` and ``2*i + 1`` for
its inverse, so ``a ^ 1`` is the inverse letter.  Generator ``g_i`` maps the
exterior of disk ``2*i`` onto the interior of disk ``2*i + 1``; in letter
terms, letter ``a`` maps the exterior of disk ``a`` into disk ``a ^ 1``.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError
from .geometry import Isometry, TranslationData, g_factor, translation_from_trace

DEFAULT_MAX_CLASSES = 10**7
DEFAULT_MAX_FRONTIER = 4 * 10**6
PAIRING_TOL = 1e-9


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float


def pairing_generator(c1, r1, c2, r2, twist: float = 0.0, ambient_n: int = 1) -> Isometry:
    """Map z -> c2 - e^{i twist} r1 r2 / (z - c1).

    It sends the circle |z - c1| = r1 onto |w - c2| = r2 and the exterior of
    the first disk into the second one.
    """
    u = r1 * r2 * np.exp(1j * twist)
    m = np.array([[c2, -(c1 * c2 + u)], [1.0, -c1]], dtype=complex)
    if ambient_n == 1:
        if twist != 0 or np.imag(c1) != 0 or np.imag(c2) != 0:
            raise GeometryError("real group needs real centers and no twist")
        m = m.real
    return Isometry(m, ambient_n)


@dataclass(frozen=True)
class SchottkyGroup:
    generators: tuple
    disks: tuple
    ambient_n: int = 1
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(
            self, "disks", tuple(d if isinstance(d, Disk) else Disk(complex(d[0]), float(d[1]))
                                 for d in self.disks))
        if len(self.disks) != 2 * len(self.generators):
            raise GeometryError("need exactly two disks per generator")
        for g in self.generators:
            if g.ambient_n != self.ambient_n:
                raise GeometryError("generator ambient dimension mismatch")

    @classmethod
    def from_disks(cls, centers, radii, twists=None, ambient_n: int = 1, name: str = ""):
        centers = list(centers)
        radii = list(radii)
        if len(centers) != len(radii) or len(centers) % 2:
            raise GeometryError("centers and radii must pair up")
        r = len(centers) // 2
        twists = [0.0] * r if twists is None else list(twists)
        gens = [pairing_generator(centers[2 * i], radii[2 * i], centers[2 * i + 1],
                                  radii[2 * i + 1], twists[i], ambient_n) for i in range(r)]
        disks = [Disk(complex(c), float(rr)) for c, rr in zip(centers, radii)]
        return cls(tuple(gens), tuple(disks), ambient_n, name)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def chi(self) -> int:
        return 1 - self.rank

    @property
    def centers(self) -> np.ndarray:
        return np.array([d.center for d in self.disks], dtype=complex)

    @property
    def radii(self) -> np.ndarray:
        return np.array([d.radius for d in self.disks], dtype=float)

    def letter(self, a: int) -> Isometry:
        g = self.generators[a // 2]
        return g if a % 2 == 0 else g.inverse()

    def letter_matrices(self) -> np.ndarray:
        """Array of shape (2r, 2, 2); real dtype when ambient_n = 1."""
        ms = np.array([self.letter(a).matrix for a in range(2 * self.rank)])
        return ms.real.copy() if self.ambient_n == 1 else ms

    def conjugate(self, h: Isometry) -> "SchottkyGroup":
        """The group h G h^{-1} with disks moved by h."""
        hi = h.inverse()
        gens = [h @ g @ hi for g in self.generators]
        disks = []
        for d in self.disks:
            c, r = image_circle(h.matrix, d.center, d.radius)
            disks.append(Disk(complex(c), float(r)))
        return SchottkyGroup(tuple(gens), tuple(disks), self.ambient_n, self.name)


@dataclass
class ValidityReport:
    valid: bool
    min_gap: float
    pairing_residuals: list
    messages: list = field(default_factory=list)

    def to_dict(self):
        return {"valid": self.valid, "min_gap": self.min_gap,
                "pairing_residuals": list(self.pairing_residuals), "messages": list(self.messages)}


def validate(group: SchottkyGroup, n_samples: int = 64) -> ValidityReport:
    """Check disk disjointness and that each generator pairs its circles."""
    msgs = []
    if group.rank < 2:
        msgs.append("rank must be at least 2")
    cs, rs = group.centers, group.radii
    if np.any(rs <= 0):
        msgs.append("radii must be positive")
    if group.ambient_n == 1 and np.any(cs.imag != 0):
        msgs.append("ambient_n = 1 requires centers on the real axis")
    gap = np.abs(cs[:, None] - cs[None, :]) - rs[:, None] - rs[None, :]
    np.fill_diagonal(gap, np.inf)
    min_gap = float(gap.min()) if len(cs) > 1 else math.inf
    if not min_gap > 0:
        msgs.append("disks not disjoint")
    theta = 2 * np.pi * (np.arange(n_samples) + 0.5) / n_samples
    residuals = []
    for i, g in enumerate(group.generators):
        src, dst = group.disks[2 * i], group.disks[2 * i + 1]
        w = g.apply(src.center + src.radius * np.exp(1j * theta))
        res = float(np.max(np.abs(np.abs(w - dst.center) - dst.radius)))
        a, b, c, d = g.entries
        # the exterior of the source disk contains infinity, whose image is a/c
        if c == 0 or not abs(a / c - dst.center) < dst.radius:
            res = max(res, math.inf if c == 0 else abs(abs(a / c - dst.center) - dst.radius) + 1.0)
            msgs.append(f"generator {i} does not map the exterior of disk {2 * i} into disk {2 * i + 1}")
        if not np.isfinite(res) or res > PAIRING_TOL:
            if not any(m.startswith(f"generator {i} ") for m in msgs):
                msgs.append(f"generator {i} pairing residual {res:.3g} exceeds {PAIRING_TOL:g}")
        residuals.append(res)
    return ValidityReport(not msgs, min_gap, residuals, msgs)


def require_valid(group: SchottkyGroup) -> ValidityReport:
    rep = validate(group)
    if not rep.valid:
        raise GeometryError("invalid Schottky group: " + "; ".join(rep.messages))
    return rep


# ----------------------------------------------------------------------------
# words

def letter_names(rank: int):
    return [ch for i in range(rank) for ch in (chr(97 + i), chr(65 + i))]


def format_word(word, rank: int = 26) -> str:
    names = letter_names(rank)
    return "".join(names[a] for a in word)


def parse_word(text: str):
    out = []
    for ch in text:
        if ch.islower():
            out.append(2 * (ord(ch) - 97))
        elif ch.isupper():
            out.append(2 * (ord(ch) - 65) + 1)
        else:
            raise ValueError(f"bad letter {ch!r}")
    return tuple(out)


def free_reduce(word):
    stack = []
    for a in word:
        if stack and stack[-1] == a ^ 1:
            stack.pop()
        else:
            stack.append(a)
    return stack


def cyclic_normal_form(word) -> tuple:
    """Cyclically reduced, lexicographically minimal rotation of a word."""
    if isinstance(word, str):
        word = parse_word(word)
    w = free_reduce(int(a) for a in word)
    i, j = 0, len(w) - 1
    while i < j and w[i] == w[j] ^ 1:
        i += 1
        j -= 1
    w = w[i:j + 1]
    if not w:
        return ()
    return min(tuple(w[k:] + w[:k]) for k in range(len(w)))


def inverse_word(word) -> tuple:
    return tuple(a ^ 1 for a in reversed(word))


def is_primitive_word(word) -> bool:
    m = len(word)
    return not any(m % p == 0 and tuple(word[p:]) + tuple(word[:p]) == tuple(word)
                   for p in range(1, m))


def word_matrix(group: SchottkyGroup, word) -> np.ndarray:
    ms = group.letter_matrices()
    p = np.eye(2, dtype=ms.dtype)
    for a in word:
        p = p @ ms[a]
    return p


# ----------------------------------------------------------------------------
# spectrum types

@dataclass(frozen=True)
class GeodesicClass:
    word: tuple
    length: float
    angles: tuple = ()
    is_primitive: bool = True

    @property
    def data(self) -> TranslationData:
        return TranslationData(self.length, self.angles)

    def g(self, m: int, n: int) -> float:
        return g_factor(self.data, m, n)

    @property
    def name(self) -> str:
        return format_word(self.word)


class LengthSpectrum:
    """Primitive classes sorted by length, with a completeness certificate."""

    def __init__(self, classes, cutoff: float, complete_below: float | None = None,
                 ambient_n: int = 1, stats: dict | None = None):
        classes = sorted(classes, key=lambda c: (c.length, c.word))
        self.classes = tuple(classes)
        self.cutoff = float(cutoff)
        self.complete_below = float(cutoff if complete_below is None else complete_below)
        if self.complete_below > self.cutoff:
            raise ValueError("complete_below cannot exceed cutoff")
        self.ambient_n = ambient_n
        self.stats = dict(stats or {})
        self.lengths = np.array([c.length for c in classes], dtype=float)
        if len(self.lengths) and self.lengths[-1] > self.cutoff:
            raise ValueError("class longer than cutoff")
        if len({c.word for c in classes}) != len(classes):
            raise ValueError("duplicate classes")
        n_ang = ambient_n // 2
        self.angles = np.array([list(c.angles) + [0.0] * (n_ang - len(c.angles))
                                for c in classes], dtype=float).reshape(len(classes), n_ang)

    def __len__(self):
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    def count(self, T: float) -> int:
        return int(np.searchsorted(self.lengths, T, side="right"))

    def truncate(self, T: float) -> "LengthSpectrum":
        k = self.count(T)
        return LengthSpectrum(self.classes[:k], min(T, self.cutoff),
                              min(T, self.complete_below), self.ambient_n)

    def g_values(self, m: int, n: int | None = None) -> np.ndarray:
        """Vectorized G_gamma(m) over all classes."""
        n = self.ambient_n if n is None else n
        q = np.exp(-m * self.lengths)
        val = np.ones_like(q)
        k = self.angles.shape[1]
        for j in range(k):
            val = val * (1 - 2 * q * np.cos(m * self.angles[:, j]) + q * q)
        if n - 2 * k > 0:
            val = val * (1 - q) ** (n - 2 * k)
        return val

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["word", "length", "angle"])
        for c in self.classes:
            w.writerow([c.name, f"{c.length:.17g}", f"{(c.angles[0] if c.angles else 0.0):.17g}"])
        return buf.getvalue()


# ----------------------------------------------------------------------------
# enumeration

def image_circle(m, z0, r):
    """Image of the circle |z - z0| = r under the Möbius matrix (or stack) m."""
    m = np.asarray(m)
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    den = np.abs(c * z0 + d) ** 2 - np.abs(c) ** 2 * r ** 2
    cen = ((a * z0 + b) * np.conj(c * z0 + d) - a * np.conj(c) * r ** 2) / den
    return cen, r / np.abs(den)


def inversive_distance(c1, r1, c2, r2):
    return (np.abs(c1 - c2) ** 2 - r1 ** 2 - r2 ** 2) / (2 * r1 * r2)


def _canonical_mask(words: np.ndarray):
    """(minimal rotation, primitive) masks for an array of cyclic words."""
    k, m = words.shape
    if m == 1:
        return np.ones(k, bool), np.ones(k, bool)
    idx = (np.arange(m)[:, None] + np.arange(m)[None, :]) % m
    is_min = np.empty(k, bool)
    is_prim = np.empty(k, bool)
    step = max(1, 2_000_000 // (m * m))
    for s in range(0, k, step):
        w = words[s:s + step]
        rot = w[:, idx]
        diff = rot != w[:, None, :]
        anyd = diff.any(2)
        first = diff.argmax(2)
        rv = np.take_along_axis(rot, first[..., None], 2)[..., 0]
        wv = np.take_along_axis(w, first, 1)
        is_min[s:s + step] = ~(anyd & (rv < wv)).any(1)
        is_prim[s:s + step] = anyd[:, 1:].all(1)
    return is_min, is_prim


def _lengths_from_traces(tr, ambient_n):
    if ambient_n == 1:
        t = np.abs(tr.real)
        return 2 * np.arccosh(np.maximum(t / 2, 1.0)), None
    w = np.arccosh(tr.astype(complex) / 2)
    w = np.where(w.real < 0, -w, w)
    ang = np.remainder(2 * w.imag + np.pi, 2 * np.pi) - np.pi
    ang = np.where(ang <= -np.pi, ang + 2 * np.pi, ang)
    return 2 * w.real, ang


def _enumerate_subtree(ms, cs, rs, ambient_n, T, first, max_classes, max_frontier):
    nd = len(cs)
    words = np.array([[first]], dtype=np.int8)
    P = ms[[first]].copy()
    found = []
    nodes = 0
    complete = T
    while len(words):
        m = words.shape[1]
        f = words[:, 0].astype(np.intp)
        last = words[:, -1].astype(np.intp)
        cen, R = image_circle(P, cs[last], rs[last])
        inv = inversive_distance(cs[None, :], rs[None, :], cen[:, None], R[:, None])
        inv[np.arange(len(f)), f ^ 1] = np.inf
        bound = np.arccosh(np.maximum(inv.min(1), 1.0))
        keep = bound <= T
        words, P, bound = words[keep], P[keep], bound[keep]
        nodes += len(words)
        if not len(words):
            break
        cyc = words[:, 0] != (words[:, -1] ^ 1)
        L, ang = _lengths_from_traces(P[:, 0, 0] + P[:, 1, 1], ambient_n)
        sel = np.flatnonzero(cyc & (L <= T))
        if len(sel):
            is_min, is_prim = _canonical_mask(words[sel])
            ok = sel[is_min & is_prim]
            for i in ok:
                found.append((float(L[i]), tuple(int(a) for a in words[i]),
                              () if ang is None else (float(ang[i]),)))
        if len(found) > max_classes or len(words) * (nd - 1) > max_frontier:
            complete = min(T, float(bound.min()))
            break
        last = words[:, -1]
        nw, nP = [], []
        for a in range(nd):
            ok = last != (a ^ 1)
            nw.append(np.hstack([words[ok], np.full((int(ok.sum()), 1), a, np.int8)]))
            nP.append(P[ok] @ ms[a])
        words = np.vstack(nw)
        P = np.vstack(nP)
    return found, nodes, complete


def enumerate_primitives(group: SchottkyGroup, T: float, *, workers: int = 1,
                         max_classes: int = DEFAULT_MAX_CLASSES,
                         max_frontier: int = DEFAULT_MAX_FRONTIER) -> LengthSpectrum:
    """All primitive conjugacy classes of translation length at most T.

    Prefixes are pruned with a certified bound: if a word maps the exterior
    of disk A into a disk B disjoint from A, its translation length is at
    least arccosh of the inversive distance of A and B.  The nested image
    disks of a prefix shrink under extension, so the bound is monotone and
    the search is exhaustive below ``complete_below``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    require_valid(group)
    ms = group.letter_matrices()
    cs, rs = group.centers, group.radii
    if group.ambient_n == 1:
        cs = cs.real
    nd = 2 * group.rank
    per_cap = max(1, max_classes // nd)
    per_front = max(1, max_frontier // nd)
    tasks = list(range(nd))
    run = lambda a: _enumerate_subtree(ms, cs, rs, group.ambient_n, T, a, per_cap, per_front)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, tasks))
    else:
        results = [run(a) for a in tasks]
    classes = []
    nodes = 0
    complete = T
    for found, nn, cb in results:
        nodes += nn
        complete = min(complete, cb)
        classes.extend(GeodesicClass(w, l, ang) for l, w, ang in found)
    return LengthSpectrum(classes, T, complete, group.ambient_n,
                          stats={"nodes": nodes, "classes": len(classes)})
