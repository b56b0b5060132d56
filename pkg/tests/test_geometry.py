import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavetrace.errors import GeometryError
from wavetrace.geometry import (Isometry, TranslationData, compose, g_factor, translation_data,
                                translation_from_trace)

lengths = st.floats(0.05, 30.0)
angles = st.floats(-3.1, 3.1)
real_entries = st.floats(-5, 5, allow_nan=False)


def hyperbolic(l):
    return Isometry.from_entries(math.exp(l / 2), 0, 0, math.exp(-l / 2))


def test_normalized_to_unit_determinant():
    g = Isometry.from_entries(2, 0, 0, 8)
    assert abs(np.linalg.det(g.matrix) - 1) < 1e-14
    assert g.trace == pytest.approx(2.5)


def test_real_form_rejects_complex_and_orientation_reversing():
    with pytest.raises(GeometryError):
        Isometry.from_entries(1j, 0, 0, 1, ambient_n=1)
    with pytest.raises(GeometryError):
        Isometry.from_entries(1, 0, 0, -1, ambient_n=1)
    with pytest.raises(GeometryError):
        Isometry.from_entries(1, 2, 2, 4)


@given(lengths)
def test_length_from_trace_roundtrip(l):
    assert translation_from_trace(2 * math.cosh(l / 2)).length == pytest.approx(l, rel=1e-12, abs=1e-12)


@given(lengths, angles)
def test_loxodromic_roundtrip(l, th):
    d = translation_from_trace(2 * cmath.cosh(complex(l, th) / 2), ambient_n=2)
    assert d.length == pytest.approx(l, rel=1e-10, abs=1e-10)
    assert d.angles[0] == pytest.approx(th, abs=1e-9)


@pytest.mark.parametrize("tr", [2.0, -2.0, 1.0, 2 + 1e-12])
def test_non_hyperbolic_rejected(tr):
    with pytest.raises(GeometryError):
        translation_from_trace(tr)


def test_translation_data_of_diagonal():
    assert translation_data(hyperbolic(3.0)).length == pytest.approx(3.0, rel=1e-14)


@given(st.floats(0.05, 12.0), real_entries, real_entries)
@settings(max_examples=60)
def test_length_is_conjugation_invariant(l, x, y):
    h = Isometry.from_entries(1 + x * y, x, y, 1)
    g = hyperbolic(l)
    c = compose(compose(h, g), h.inverse())
    assert translation_data(c).length == pytest.approx(l, rel=1e-7, abs=1e-7)


def test_inverse_and_identity():
    g = Isometry.from_entries(2, 1, 3, 2)
    e = compose(g, g.inverse())
    assert np.allclose(e.matrix, np.eye(2))
    assert np.allclose((g @ Isometry.identity()).matrix, g.matrix)


def test_apply_moebius():
    g = Isometry.from_entries(1, 2, 0, 1)
    assert g.apply(1.0) == pytest.approx(3.0)


@given(lengths, st.integers(1, 6))
def test_g_factor_real(l, k):
    assert g_factor(TranslationData(l), k, 1) == pytest.approx(1 - math.exp(-k * l), rel=1e-14)


@given(lengths, angles, st.integers(1, 6))
def test_g_factor_complex_is_modulus_squared(l, th, k):
    expect = abs(1 - cmath.exp(-k * complex(l, th))) ** 2
    assert g_factor(TranslationData(l, (th,)), k, 2) == pytest.approx(expect, rel=1e-12, abs=1e-300)


def test_g_factor_odd_leftover_dimension():
    d = TranslationData(1.0, (0.5,))
    q = math.exp(-1.0)
    assert g_factor(d, 1, 3) == pytest.approx((1 - 2 * q * math.cos(0.5) + q * q) * (1 - q))
    with pytest.raises(ValueError):
        g_factor(d, 0, 3)


small = st.floats(-1.5, 1.5, allow_nan=False)
unimodular = st.tuples(small, small, small).filter(lambda t: abs(1 + t[0] * t[1] + t[2]) > 0.1)


def _from(t):
    x, y, z = t
    # a generic invertible matrix; the constructor rescales it to unit determinant
    return Isometry.from_entries(1 + x * y + z, x, y, 1)


@given(unimodular, unimodular, unimodular)
@settings(max_examples=60)
def test_composition_associative(a, b, c):
    try:
        g, h, k = _from(a), _from(b), _from(c)
    except GeometryError:
        return
    lhs = compose(compose(g, h), k).matrix
    rhs = compose(g, compose(h, k)).matrix
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.max(np.abs(lhs)))


def test_reference_lengths():
    assert translation_from_trace(3.0).length == pytest.approx(1.924847300238, rel=1e-11)
    d = translation_data(Isometry.from_entries(math.exp(0.5), 0, 0, math.exp(-0.5)))
    assert d.length == pytest.approx(1.0, rel=1e-14) and d.angles == ()
    w = complex(1, math.pi / 3) / 2
    d = translation_data(Isometry.from_entries(cmath.exp(w), 0, 0, cmath.exp(-w), ambient_n=2))
    assert d.length == pytest.approx(1.0, rel=1e-13)
    assert d.angles[0] == pytest.approx(math.pi / 3, rel=1e-13)


def test_reference_g_factors():
    assert g_factor(TranslationData(1.0), 2, 1) == pytest.approx(0.864664716763, rel=1e-11)
    assert abs(g_factor(TranslationData(50.0), 1, 1) - 1) < 1e-20
    # (1 + e^{-1})^2 = 1.8710941655794973
    assert g_factor(TranslationData(1.0, (math.pi,)), 1, 2) == pytest.approx(1.8710941655794973, rel=1e-14)
