import pytest

from artifact import words as W

GENS = ["a", "b"]


def test_parse_and_format_round_trip():
    w = W.parse_word("a b^-2 a", GENS)
    assert w == (1, -2, -2, 1)
    assert W.format_word(w, GENS) == "a b^-2 a"
    assert W.parse_word("", GENS) == ()


def test_parse_rejects_unknown_generator():
    with pytest.raises(ValueError):
        W.parse_word("c", GENS)


def test_reduce_invert_multiply():
    assert W.reduce_word((1, 2, -2, -1, 1)) == (1,)
    w = (1, 2, -1)
    assert W.multiply(w, W.invert(w)) == ()
    assert W.power((1, 2), 3) == (1, 2, 1, 2, 1, 2)
    assert W.power((1, 2), -1) == (-2, -1)


def test_cyclic_canonical_form():
    assert W.canonical_cyclic((1, 2, -1)) == (2,)
    assert W.canonical_cyclic((2, 1)) == W.canonical_cyclic((1, 2))
    assert W.primitive_root((1, 2, 1, 2)) == ((1, 2), 2)
    assert W.primitive_root((1, 2, 2))[1] == 1


def test_exponent_sums():
    assert W.exponent_sums((1, -2, -1, 2, 2), 2) == [0, 1]


def test_fox_derivative_terms():
    # d(a b a^-1)/da = 1 - a b a^-1
    assert W.fox_derivative_terms((1, 2, -1), 1) == [(1, ()), (-1, (1, 2, -1))]
    # d(a b a^-1)/db = a
    assert W.fox_derivative_terms((1, 2, -1), 2) == [(1, (1,))]
