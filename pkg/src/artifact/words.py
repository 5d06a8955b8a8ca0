"""Words in a finitely generated free group.

A word is stored as a tuple of nonzero integers: ``+k`` stands for the
``k``-th generator (1-based) and ``-k`` for its inverse.  The text syntax is
whitespace separated run-length tokens such as ``"a b^-1 a^2"``; the empty
word may be written ``""`` or ``"1"``.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

Word = tuple[int, ...]

_TOKEN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?$")


def parse_word(text: str, generators: Sequence[str]) -> Word:
    """Parse run-length word syntax into a letter tuple.

    Parameters
    ----------
    text : str
        Word such as ``"a b^-1 a^2"``.
    generators : sequence of str
        Generator symbols; position ``i`` maps to letter ``i + 1``.

    Returns
    -------
    Word
        Freely reduced letter tuple.

    Raises
    ------
    ValueError
        On unknown symbols or malformed tokens.
    """
    index = {g: i + 1 for i, g in enumerate(generators)}
    letters: list[int] = []
    text = text.strip()
    if text in ("", "1"):
        return ()
    for tok in text.split():
        m = _TOKEN.match(tok)
        if m is None:
            raise ValueError(f"malformed word token {tok!r}")
        sym, exp = m.group(1), m.group(2)
        if sym not in index:
            raise ValueError(f"unknown generator {sym!r} in word {text!r}")
        e = 1 if exp is None else int(exp)
        letter = index[sym] if e > 0 else -index[sym]
        letters.extend([letter] * abs(e))
    return reduce_word(letters)


def format_word(word: Iterable[int], generators: Sequence[str]) -> str:
    """Render a letter tuple in run-length syntax (inverse of :func:`parse_word`)."""
    out: list[str] = []
    run_letter, run = 0, 0
    for x in list(word) + [0]:
        if x == run_letter and x != 0:
            run += 1
            continue
        if run_letter != 0:
            e = run if run_letter > 0 else -run
            sym = generators[abs(run_letter) - 1]
            out.append(sym if e == 1 else f"{sym}^{e}")
        run_letter, run = x, 1
    return " ".join(out) if out else "1"


def reduce_word(word: Iterable[int]) -> Word:
    """Free reduction (cancel adjacent ``x x^-1`` pairs)."""
    out: list[int] = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def invert(word: Sequence[int]) -> Word:
    """Inverse word."""
    return tuple(-x for x in reversed(word))


def multiply(*words: Sequence[int]) -> Word:
    """Freely reduced concatenation."""
    return reduce_word([x for w in words for x in w])


def power(word: Sequence[int], k: int) -> Word:
    """``word**k`` for any integer ``k``."""
    base = tuple(word) if k >= 0 else invert(word)
    return reduce_word(base * abs(k))


def cyclic_reduce(word: Sequence[int]) -> Word:
    """Cyclic reduction: strip matching inverse letters from both ends."""
    w = reduce_word(word)
    i, j = 0, len(w)
    while j - i >= 2 and w[i] == -w[j - 1]:
        i += 1
        j -= 1
    return w[i:j]


def _sort_key(word: Sequence[int]) -> tuple:
    # order letters as a < a^-1 < b < b^-1 < ...
    return tuple(2 * abs(x) + (x < 0) for x in word)


def canonical_cyclic(word: Sequence[int]) -> Word:
    """Cyclic reduction followed by the lexicographically least rotation.

    Orientation is kept: a word and its inverse generally have different
    canonical forms.
    """
    w = cyclic_reduce(word)
    if not w:
        return w
    rots = [w[i:] + w[:i] for i in range(len(w))]
    return min(rots, key=_sort_key)


def primitive_root(word: Sequence[int]) -> tuple[Word, int]:
    """Write a cyclically reduced word as ``root**k`` with ``k`` maximal."""
    w = cyclic_reduce(word)
    n = len(w)
    for d in range(1, n + 1):
        if n % d == 0 and w[:d] * (n // d) == w:
            return w[:d], n // d
    return w, 1


def exponent_sums(word: Sequence[int], ngens: int) -> list[int]:
    """Exponent sum of each generator (abelianization)."""
    out = [0] * ngens
    for x in word:
        out[abs(x) - 1] += 1 if x > 0 else -1
    return out


def fox_derivative_terms(word: Sequence[int], j: int) -> list[tuple[int, Word]]:
    """Fox derivative of ``word`` with respect to generator ``j`` (1-based).

    Returns
    -------
    list of (coefficient, prefix word)
        The derivative as a formal sum ``sum c * prefix`` in the group ring.
    """
    terms: list[tuple[int, Word]] = []
    prefix: list[int] = []
    for x in word:
        if x == j:
            terms.append((1, tuple(prefix)))
        elif x == -j:
            terms.append((-1, tuple(prefix) + (x,)))
        prefix.append(x)
    return terms
