import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavetrace.errors import CertificationError, GeometryError
from wavetrace.geometry import Isometry
from wavetrace.groupfile import group_from_dict, group_to_dict, load_group, save_group
from wavetrace.schottky import (LengthSpectrum, SchottkyGroup, cyclic_normal_form, enumerate_primitives,
                                format_word, free_reduce, inverse_word, is_primitive_word, parse_word,
                                require_valid, validate, word_matrix)
from wavetrace.zeta import find_delta

# Brute force over all cyclically reduced words of length <= 8 in 30-digit
# arithmetic; every word of length >= 5 is longer than 10 for this group.
THIN_SHORTEST = [2.1972245773362195, 2.1972245773362195, 4.394449154672439, 4.394449154672439,
                 4.5848633391223555, 4.5848633391223555, 7.3949639180064043, 7.3949639180064043]
THIN_COUNTS = {6: 6, 8: 10, 10: 16}
WIDE_SHORTEST = [0.64607287854360685, 0.64607287854360685, 0.82759168476716066,
                 0.82759168476716066, 2.9819926179896168, 2.9819926179896168]

words = st.lists(st.integers(0, 3), min_size=1, max_size=12)


def test_bundled_groups_valid(thin, wide):
    for g in (thin, wide):
        rep = validate(g)
        assert rep.valid, rep.messages
        assert max(rep.pairing_residuals) < 1e-10
    assert validate(thin).min_gap == pytest.approx(0.8)
    assert thin.rank == 2 and thin.chi == -1


def test_overlapping_disks_invalid():
    g = SchottkyGroup.from_disks([-1.0, 1.0, -0.2, 3.0], [0.5] * 4)
    assert not validate(g).valid
    with pytest.raises(GeometryError):
        require_valid(g)


def test_mismatched_generator_invalid(thin):
    wrong = SchottkyGroup(thin.generators[::-1], thin.disks)
    assert not validate(wrong).valid


def test_shortest_lengths_match_brute_force(thin, wide):
    s = enumerate_primitives(thin, 10.0)
    assert s.complete_below == 10.0
    assert np.allclose(s.lengths[:8], THIN_SHORTEST, rtol=0, atol=1e-12)
    for T, n in THIN_COUNTS.items():
        assert s.count(T) == n
    w = enumerate_primitives(wide, 3.0)
    assert np.allclose(w.lengths, WIDE_SHORTEST, rtol=0, atol=1e-12)


def test_single_letter_length_closed_form(thin):
    # |tr| = |c2 - c1| / r for the pairing of two radius-r disks
    s = enumerate_primitives(thin, 5.0)
    assert s.classes[0].length == pytest.approx(2 * math.acosh(2 / (2 * 0.6)), rel=1e-14)
    assert s.classes[4].length == pytest.approx(2 * math.acosh(6 / (2 * 0.6)), rel=1e-14)


def test_spectrum_invariants(thin_spec):
    L = thin_spec.lengths
    assert np.all(np.diff(L) >= 0) and L[-1] <= 20.0
    seen = {c.word for c in thin_spec}
    for c in thin_spec:
        assert cyclic_normal_form(c.word) == c.word
        assert is_primitive_word(c.word)
        # both orientations are present with the same length
        assert cyclic_normal_form(inverse_word(c.word)) in seen
        tr = np.trace(word_matrix(thin_spec_group(), c.word)).real
        assert 2 * math.acosh(abs(tr) / 2) == pytest.approx(c.length, rel=1e-9)


_GROUP = {}


def thin_spec_group():
    if "g" not in _GROUP:
        _GROUP["g"] = load_group("pants_thin")
    return _GROUP["g"]


def test_worker_count_does_not_change_output(wide):
    a = enumerate_primitives(wide, 10.0, workers=1).to_csv()
    b = enumerate_primitives(wide, 10.0, workers=4).to_csv()
    assert a == b


def test_conjugate_group_same_spectrum(thin):
    h = Isometry.from_entries(1.0, 0.3, 0.1, 1.0)
    other = thin.conjugate(h)
    a = enumerate_primitives(thin, 12.0).lengths
    b = enumerate_primitives(other, 12.0).lengths
    assert len(a) == len(b)
    assert np.allclose(a, b, rtol=1e-9)


def test_truncated_enumeration_is_certified_lower(wide):
    s = enumerate_primitives(wide, 12.0, max_classes=400)
    assert s.complete_below < 12.0
    full = enumerate_primitives(wide, 12.0)
    assert s.count(s.complete_below) == full.count(s.complete_below)


def test_growth_sanity(wide):
    s = enumerate_primitives(wide, 18.0)
    d = find_delta(wide)
    T = 18.0
    assert abs(math.log(d * T * s.count(T)) / T - d) < 0.1


def test_length_spectrum_checks():
    from wavetrace.schottky import GeodesicClass
    c = GeodesicClass((0,), 1.0)
    with pytest.raises(ValueError):
        LengthSpectrum([c, c], 2.0)
    with pytest.raises(ValueError):
        LengthSpectrum([GeodesicClass((0,), 3.0)], 2.0)
    s = LengthSpectrum([c], 2.0)
    assert s.count(1.0) == 1 and s.count(0.5) == 0
    assert s.truncate(0.5).count(2.0) == 0


def test_csv_has_round_trip_precision(thin):
    s = enumerate_primitives(thin, 8.0)
    rows = s.to_csv().splitlines()
    assert rows[0] == "word,length,angle"
    word, length, _ = rows[1].split(",")
    assert word == "b" and float(length) == s.lengths[0]


def test_loxodromic_group_enumerates():
    g = SchottkyGroup.from_disks([-3, 3, -1j, 1j], [0.6] * 4, twists=[0.4, -0.7], ambient_n=2)
    assert validate(g).valid
    s = enumerate_primitives(g, 8.0)
    assert len(s)
    assert all(len(c.angles) == 1 for c in s)
    assert s.angles.shape == (len(s), 1)


def test_group_file_roundtrip(tmp_path, wide):
    p = tmp_path / "g.json"
    save_group(wide, p)
    back = load_group(p)
    assert np.allclose(back.letter_matrices(), wide.letter_matrices())
    assert group_to_dict(group_from_dict(group_to_dict(wide))) == group_to_dict(wide)


@given(words)
def test_normal_form_rotation_invariant(w):
    w = free_reduce(w)
    for k in range(len(w)):
        assert cyclic_normal_form(w[k:] + w[:k]) == cyclic_normal_form(w)


@given(words, words)
def test_normal_form_conjugation_invariant(w, u):
    conj = list(u) + list(w) + list(inverse_word(u))
    assert cyclic_normal_form(conj) == cyclic_normal_form(w)


@given(words)
def test_word_formatting_roundtrip(w):
    assert parse_word(format_word(w, 2)) == tuple(w)


@given(words, st.integers(2, 4))
@settings(max_examples=50)
def test_powers_not_primitive(w, p):
    w = cyclic_normal_form(w)
    if w:
        assert not is_primitive_word(w * p)


def test_small_disk_group_valid():
    assert validate(SchottkyGroup.from_disks([-1, 1, -3, 3], [0.2] * 4)).valid


def test_tangent_disks_invalid():
    rep = validate(SchottkyGroup.from_disks([-1.0, 1.0, -3.0, 3.0], [0.5, 0.5, 1.5, 0.5]))
    assert not rep.valid and "disks not disjoint" in rep.messages


def test_identity_generator_invalid(thin):
    g = SchottkyGroup((Isometry.identity(), thin.generators[1]), thin.disks)
    rep = validate(g)
    assert not rep.valid and rep.pairing_residuals[0] > 0.1


def test_cutoff_below_shortest_is_empty(thin):
    s = enumerate_primitives(thin, 2.0)
    assert len(s) == 0 and s.complete_below == 2.0


def test_no_proper_powers(thin_spec):
    words = {c.word for c in thin_spec}
    assert parse_word("bb") not in words and parse_word("aa") not in words
    assert parse_word("b") in words


def test_normal_form_examples():
    assert cyclic_normal_form("abA") == cyclic_normal_form("b")
    w = "abaB"
    reps = {cyclic_normal_form(w[k:] + w[:k]) for k in range(len(w))}
    assert len(reps) == 1


def test_random_conjugates_collapse():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        u = free_reduce(rng.integers(0, 4, rng.integers(1, 9)).tolist())
        w = rng.integers(0, 4, rng.integers(0, 6)).tolist()
        assert cyclic_normal_form(w + list(u) + list(inverse_word(w))) == cyclic_normal_form(u)
