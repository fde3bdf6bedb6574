"""Block-wise cohomology of nilpotent derivations by exact linear algebra.

A block is a finite set of monomials selected by a cohomological degree
(ghost number, or ghost number plus form degree), optional exact values of
further gradings and optional upper bounds.  The differential must map the
block into the block of shifted degree; when it would leave the selection the
computation is refused instead of silently truncating the image.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .errors import GradingError, NotACocycleError, TruncationError
from .graded import (Derivation, GradedVariable, Kind, Monomial, Polynomial,
                     apply_derivation)
from .linalg import SparseEchelon, nullspace, solve

__all__ = [
    "Grading",
    "BlockSelector",
    "CohomologyReport",
    "ExactnessResult",
    "enumerate_block",
    "verify_complex",
    "cohomology_block",
    "cohomology_blocks",
    "exactness_witness",
    "degree_in",
]

Grading = Callable[[GradedVariable], int]

_NON_FIELD = (Kind.BASE, Kind.THETA)


def is_field(v: GradedVariable) -> bool:
    return v.kind not in _NON_FIELD


class degree_in:
    """Grading counting the factors drawn from a set of variables (picklable)."""

    def __init__(self, variables, weight: int = 1):
        self.orders = frozenset(v.order for v in variables)
        self.weight = weight

    def __call__(self, v: GradedVariable) -> int:
        return self.weight if v.order in self.orders else 0


class weight_table:
    """Grading given by an explicit table ``variable -> weight`` (default 0)."""

    def __init__(self, table: Mapping[GradedVariable, int]):
        self.table = {v.order: w for v, w in table.items() if w}

    def __call__(self, v: GradedVariable) -> int:
        return self.table.get(v.order, 0)


@dataclass(frozen=True)
class BlockSelector:
    """Finite graded block of monomials in ``generators``.

    ``degree`` selects which grading is the cohomological one: ``"ghost"``
    (monomial ghost number) or ``"total"`` (ghost number plus form degree).
    ``fixed`` pins further gradings to exact values, ``bounds`` caps them;
    both refer to entries of ``gradings``.  With ``include_constants=False``
    monomials free of field variables (constants, pure ``x``/``θ`` monomials)
    are excluded.
    """

    generators: tuple
    ghost: int
    bounds: Mapping[str, int] = field(default_factory=dict)
    fixed: Mapping[str, int] = field(default_factory=dict)
    gradings: Mapping[str, Grading] = field(default_factory=dict)
    include_constants: bool = True
    degree: str = "ghost"
    label: str = ""

    def __post_init__(self):
        gens = tuple(sorted(set(self.generators), key=lambda v: v.order))
        object.__setattr__(self, "generators", gens)
        for key in list(self.bounds) + list(self.fixed):
            if key not in self.gradings:
                raise KeyError(f"unknown grading {key!r}")
        if self.degree not in ("ghost", "total"):
            raise ValueError("degree must be 'ghost' or 'total'")

    def degree_of(self, m: Monomial) -> int:
        return m.ghost if self.degree == "ghost" else m.total_degree

    def shifted(self, ddeg: int, shifts: Mapping[str, int]) -> "BlockSelector":
        fixed = {k: v + shifts.get(k, 0) for k, v in self.fixed.items()}
        return replace(self, ghost=self.ghost + ddeg, fixed=fixed)

    def contains(self, m: Monomial) -> bool:
        if self.degree_of(m) != self.ghost:
            return False
        gen = {v.order for v in self.generators}
        if any(v.order not in gen for v, _ in m.factors):
            return False
        if not self.include_constants and not any(is_field(v) for v, _ in m.factors):
            return False
        for k, b in self.bounds.items():
            if m.weight(self.gradings[k]) > b:
                return False
        for k, b in self.fixed.items():
            if m.weight(self.gradings[k]) != b:
                return False
        return True

    def describe(self) -> dict:
        return {"label": self.label, self.degree: self.ghost, "fixed": dict(self.fixed),
                "bounds": dict(self.bounds), "include_constants": self.include_constants}


def enumerate_block(sel: BlockSelector) -> list[Monomial]:
    """All monomials of the block in canonical order."""
    gens = sel.generators
    prunable = {}
    for k in list(sel.bounds) + list(sel.fixed):
        g = sel.gradings[k]
        ws = [g(v) for v in gens]
        if all(w >= 0 for w in ws):
            cap = sel.bounds.get(k)
            if k in sel.fixed:
                cap = sel.fixed[k] if cap is None else min(cap, sel.fixed[k])
            prunable[k] = (ws, cap)
    for i, v in enumerate(gens):
        if v.parity:
            continue
        if not any(ws[i] > 0 for ws, _ in prunable.values()):
            raise ValueError(f"block is infinite: even generator {v} is unbounded")
    keys = list(prunable)
    weights = [prunable[k][0] for k in keys]
    caps = [prunable[k][1] for k in keys]
    out: list[Monomial] = []
    n = len(gens)
    factors: list = []
    used = [0] * len(keys)

    def rec(i: int):
        if i == n:
            m = Monomial(tuple(factors))
            if sel.contains(m):
                out.append(m)
            return
        v = gens[i]
        # exponent 0
        rec(i + 1)
        e = 1
        while True:
            if v.parity and e > 1:
                break
            ok = True
            for j in range(len(keys)):
                if used[j] + weights[j][i] * e > caps[j]:
                    ok = False
                    break
            if not ok:
                break
            for j in range(len(keys)):
                used[j] += weights[j][i] * e
            factors.append((v, e))
            rec(i + 1)
            factors.pop()
            for j in range(len(keys)):
                used[j] -= weights[j][i] * e
            e += 1

    rec(0)
    out.sort(key=Monomial.sort_key)
    return out


def _degree_shift(D: Derivation, degree: str) -> int:
    return D.ghost if degree == "ghost" else D.ghost + D.form_degree


def _grading_shift(D: Derivation, grading: Grading, generators, name: str) -> int:
    """Constant shift of ``grading`` under ``D``; raises if ``D`` is inhomogeneous."""
    shift = None
    for v in generators:
        try:
            img = D.on(v)
        except TruncationError:
            continue
        w0 = grading(v)
        for m in img:
            s = m.weight(grading) - w0
            if shift is None:
                shift = s
            elif s != shift:
                raise GradingError(f"differential is not homogeneous in {name!r}: "
                                   f"generator {v} maps to {m}")
    return 0 if shift is None else shift


def _check_homogeneous(D: Derivation, sel: BlockSelector) -> None:
    dd = _degree_shift(D, sel.degree)
    for v in sel.generators:
        try:
            img = D.on(v)
        except TruncationError:
            continue
        d0 = v.ghost if sel.degree == "ghost" else v.total_degree
        for m in img:
            if sel.degree_of(m) - d0 != dd:
                raise GradingError(f"differential is not grading-homogeneous: generator {v} "
                                   f"maps to {m}")


def _neighbors(D: Derivation, sel: BlockSelector):
    shifts = {k: _grading_shift(D, sel.gradings[k], sel.generators, k) for k in sel.fixed}
    dd = _degree_shift(D, sel.degree)
    nxt = sel.shifted(dd, shifts)
    prv = sel.shifted(-dd, {k: -s for k, s in shifts.items()})
    return prv, nxt


def _images(D: Derivation, basis: Sequence[Monomial], target: BlockSelector,
            target_index: dict | None, what: str):
    rows = []
    for m in basis:
        img = apply_derivation(D, Polynomial._wrap({m: Fraction(1)}))
        for mm in img:
            if not target.contains(mm):
                raise TruncationError(
                    f"block truncation would cut the image of the differential: {what} "
                    f"element {m} maps to {mm}, outside the selected block")
        rows.append(img)
    return rows


def _column_rows(images: Sequence[Polynomial], index: dict) -> list[dict]:
    """Transpose images into rows indexed by codomain monomial."""
    by_row: dict[int, dict[int, Fraction]] = {}
    for j, img in enumerate(images):
        for mm, c in img.items():
            i = index[mm]
            by_row.setdefault(i, {})[j] = c
    return [by_row[i] for i in sorted(by_row)]


def _vector(p: Polynomial, index: dict) -> dict[int, Fraction]:
    return {index[m]: c for m, c in p.items()}


def _poly(vec: Mapping[int, Fraction], basis: Sequence[Monomial]) -> Polynomial:
    return Polynomial({basis[i]: c for i, c in vec.items()})


@dataclass(frozen=True)
class CohomologyReport:
    block: BlockSelector
    dim_space: int
    dim_cocycles: int
    dim_coboundaries: int
    betti: int
    representatives: tuple

    def as_dict(self) -> dict:
        return {"block": self.block.describe(), "dim_space": self.dim_space,
                "dim_cocycles": self.dim_cocycles, "dim_coboundaries": self.dim_coboundaries,
                "betti": self.betti, "representatives": [str(r) for r in self.representatives]}


def verify_complex(D: Derivation, blocks: Sequence[BlockSelector]) -> bool:
    """True iff ``D∘D`` vanishes on every basis element of every block."""
    for sel in blocks:
        _check_homogeneous(D, sel)
        for m in enumerate_block(sel):
            p = Polynomial._wrap({m: Fraction(1)})
            if apply_derivation(D, apply_derivation(D, p)):
                return False
    return True


def cohomology_block(D: Derivation, sel: BlockSelector) -> CohomologyReport:
    """Cocycles, coboundaries and representatives of ``H(D)`` at ``sel``."""
    _check_homogeneous(D, sel)
    prv, nxt = _neighbors(D, sel)
    basis = enumerate_block(sel)
    index = {m: i for i, m in enumerate(basis)}
    out_images = _images(D, basis, nxt, None, "block")
    next_index: dict = {}
    for img in out_images:
        for mm in img:
            if mm not in next_index:
                next_index[mm] = len(next_index)
    kernel = nullspace(_column_rows(out_images, next_index), len(basis))
    prev_basis = enumerate_block(prv)
    in_images = _images(D, prev_basis, sel, index, "incoming")
    ech = SparseEchelon()
    for img in in_images:
        ech.add(_vector(img, index))
    boundaries = ech.rank
    reps = []
    for vec in kernel:
        if ech.add(vec):
            reps.append(_poly(vec, basis))
    betti = len(kernel) - boundaries
    if betti != len(reps) or betti < 0:
        raise ArithmeticError("inconsistent ranks: the differential is not nilpotent "
                              "on this block")
    return CohomologyReport(sel, len(basis), len(kernel), boundaries, betti, tuple(reps))


def _block_job(args):
    D, sel = args
    return cohomology_block(D, sel)


def cohomology_blocks(D: Derivation, selectors: Sequence[BlockSelector],
                      n_jobs: int = 1) -> list[CohomologyReport]:
    """Independent blocks, optionally in worker processes; order of the input is kept."""
    if n_jobs == 1 or len(selectors) <= 1:
        return [cohomology_block(D, s) for s in selectors]
    with ProcessPoolExecutor(max_workers=None if n_jobs < 0 else n_jobs) as ex:
        return list(ex.map(_block_job, [(D, s) for s in selectors]))


@dataclass(frozen=True)
class ExactnessResult:
    exact: bool
    witness: Polynomial | None
    block: BlockSelector

    def __str__(self):
        if self.exact:
            return f"exact, witness {self.witness}"
        return "not-exact-within-truncation"


def exactness_witness(z: Polynomial, D: Derivation, sel: BlockSelector) -> ExactnessResult:
    """Find ``η`` in ``sel`` with ``Dη = z`` or certify none exists in that block."""
    if apply_derivation(D, z):
        raise NotACocycleError("element is not closed under the differential")
    if not z:
        return ExactnessResult(True, Polynomial(), sel)
    basis = enumerate_block(sel)
    images = [apply_derivation(D, Polynomial._wrap({m: Fraction(1)})) for m in basis]
    index: dict = {}
    for img in images:
        for mm in img:
            if mm not in index:
                index[mm] = len(index)
    for mm in z:
        if mm not in index:
            return ExactnessResult(False, None, sel)
    # equations indexed by the codomain monomials that occur
    by_row: dict[int, dict] = {}
    for j, img in enumerate(images):
        for mm, c in img.items():
            by_row.setdefault(index[mm], {})[j] = c
    order = sorted(by_row)
    pos = {i: k for k, i in enumerate(order)}
    rhs = {pos[index[mm]]: c for mm, c in z.items()}
    sol = solve([by_row[i] for i in order], rhs, len(basis))
    if sol is None:
        return ExactnessResult(False, None, sel)
    eta = _poly(sol, basis)
    if apply_derivation(D, eta) != z:
        raise ArithmeticError("linear solve produced an invalid witness")
    return ExactnessResult(True, eta, sel)
