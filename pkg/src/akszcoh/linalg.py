"""Sparse exact linear algebra.

Rows are dictionaries ``column -> coefficient``.  Elimination is carried out
on integer rows (denominators cleared once on entry) using fraction-free
combinations ``a*r - b*p`` followed by division by the row content, so the
entries stay small and no rational arithmetic is needed until solutions are
read off.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Mapping

__all__ = ["SparseEchelon", "rref", "rank", "nullspace", "solve"]


def _integer_row(row: Mapping[int, object]) -> dict[int, int]:
    items = [(k, Fraction(v)) for k, v in row.items() if v]
    if not items:
        return {}
    den = reduce(lcm, (v.denominator for _, v in items), 1)
    out = {k: int(v * den) for k, v in items}
    return _primitive(out)


def _primitive(row: dict[int, int]) -> dict[int, int]:
    if not row:
        return row
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            break
    lead = row[min(row)]
    if lead < 0:
        g = -g
    if g != 1:
        row = {k: v // g for k, v in row.items()}
    return row


def _eliminate(row: dict[int, int], piv: dict[int, int], col: int) -> dict[int, int]:
    """Remove ``col`` from ``row`` using pivot row ``piv`` (fraction-free)."""
    a = piv[col]
    b = row[col]
    g = gcd(a, b)
    a //= g
    b //= g
    out = {k: v * a for k, v in row.items()}
    for k, v in piv.items():
        nv = out.get(k, 0) - b * v
        if nv:
            out[k] = nv
        else:
            out.pop(k, None)
    return _primitive(out)


class SparseEchelon:
    """Incrementally built row-echelon form; pivot = smallest column of a row."""

    def __init__(self):
        self.pivots: dict[int, dict[int, int]] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def reduce(self, row: Mapping[int, object]) -> dict[int, int]:
        r = _integer_row(row)
        while r:
            col = min(r)
            piv = self.pivots.get(col)
            if piv is None:
                return r
            r = _eliminate(r, piv, col)
        return r

    def add(self, row: Mapping[int, object]) -> bool:
        """Insert ``row``; returns False if it was already in the span."""
        r = self.reduce(row)
        if not r:
            return False
        self.pivots[min(r)] = r
        return True

    def contains(self, row: Mapping[int, object]) -> bool:
        return not self.reduce(row)


def rref(rows: Iterable[Mapping[int, object]]) -> list[dict[int, int]]:
    """Reduced row-echelon form as integer rows, sorted by pivot column."""
    ech = SparseEchelon()
    for r in rows:
        ech.add(r)
    cols = sorted(ech.pivots)
    red = dict(ech.pivots)
    for i in reversed(range(len(cols))):
        pc = cols[i]
        prow = red[pc]
        for j in range(i):
            qc = cols[j]
            q = red[qc]
            if pc in q:
                red[qc] = _eliminate(q, prow, pc)
    return [red[c] for c in cols]


def rank(rows: Iterable[Mapping[int, object]]) -> int:
    ech = SparseEchelon()
    for r in rows:
        ech.add(r)
    return ech.rank


def nullspace(rows: Iterable[Mapping[int, object]], ncols: int) -> list[dict[int, Fraction]]:
    """Basis of ``{x : A x = 0}`` for the matrix with the given rows.

    One vector per free column, in increasing column order, normalized so the
    free coordinate equals 1.
    """
    R = rref(rows)
    pivot_of = {min(r): r for r in R}
    free = [c for c in range(ncols) if c not in pivot_of]
    basis = []
    for f in free:
        vec = {f: Fraction(1)}
        for pc, r in pivot_of.items():
            v = r.get(f)
            if v:
                vec[pc] = Fraction(-v, r[pc])
        basis.append(vec)
    return basis


def solve(rows: Iterable[Mapping[int, object]], rhs: Mapping[int, object],
          ncols: int) -> dict[int, Fraction] | None:
    """One solution of ``A x = b`` (free variables set to zero) or None.

    ``rows`` are indexed by equation; ``rhs`` maps equation index to value.
    """
    rows = list(rows)
    aug = []
    for i, r in enumerate(rows):
        row = dict(r)
        b = rhs.get(i)
        if b:
            row[ncols] = b
        aug.append(row)
    for i, b in rhs.items():
        if i >= len(rows) and b:
            return None
    R = rref(aug)
    sol: dict[int, Fraction] = {}
    for r in R:
        pc = min(r)
        if pc == ncols:
            return None
        b = r.get(ncols, 0)
        if b:
            sol[pc] = Fraction(b, r[pc])
    return sol
