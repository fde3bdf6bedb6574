"""Block designs for the cohomology comparisons run by the CLI and the tests.

Each function fixes a family of finite blocks on which a differential is
graded, computes the reports and returns them together with the number the
comparison expects.  The bounds are choices; every "non-exact" statement
produced here holds within the selected blocks only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .cohomology import (BlockSelector, CohomologyReport, ExactnessResult, cohomology_blocks,
                         degree_in, enumerate_block, exactness_witness, weight_table)
from .graded import ZERO, GradedVariable, Kind, Polynomial
from .jets import (JetContext, aksz_brst_parts, build_jet_context, form_rank, jet_data,
                   jet_order, prolong)
from .qtarget import QManifoldSpec, cotangent_lift, q_derivation

__all__ = [
    "BlockComparison",
    "target_cohomology",
    "lifted_cohomology",
    "spacetime_cohomology",
    "horizontal_cohomology",
    "proposition1",
    "proposition1_selector",
    "horizontal_selector",
    "horizontal_witness",
]


@dataclass(frozen=True)
class BlockComparison:
    """A cohomology report next to the value the comparison predicts."""

    key: tuple
    report: CohomologyReport
    expected: int

    @property
    def matches(self) -> bool:
        return self.report.betti == self.expected

    def as_dict(self) -> dict:
        d = self.report.as_dict()
        d["key"] = list(self.key)
        d["expected"] = self.expected
        d["matches"] = self.matches
        return d


def target_cohomology(M: QManifoldSpec, ghosts: Sequence[int], max_degree: int,
                      include_constants: bool = True, n_jobs: int = 1) -> dict:
    """``H(Q)`` on polynomials of degree ``≤ max_degree``, split by ghost and degree.

    ``Q`` must be homogeneous in the polynomial degree (Lie-type and
    linear-bivector targets are); each degree is then a subcomplex and the
    per-ghost totals are the cohomology of the truncated algebra.
    Returns ``{(ghost, degree): CohomologyReport}``.
    """
    coords = tuple(M.coordinates)
    grad = {"degree": degree_in(coords)}
    sels = []
    for g in ghosts:
        for d in range(max_degree + 1):
            sels.append(BlockSelector(coords, g, fixed={"degree": d}, gradings=grad,
                                      include_constants=include_constants,
                                      label=f"gh={g},deg={d}"))
    reports = cohomology_blocks(q_derivation(M), sels, n_jobs)
    return {(s.ghost, s.fixed["degree"]): r for s, r in zip(sels, reports)}


def lifted_cohomology(M: QManifoldSpec, n: int, ghosts: Sequence[int], pi_degrees: Sequence[int],
                      max_cdeg: int, n_jobs: int = 1) -> dict:
    """``H(Q_E)`` on the cotangent lift, blocks of fixed π-degree and base degree.

    Returns ``{(ghost, pi_degree, base_degree): CohomologyReport}``.
    """
    L = cotangent_lift(M, n)
    base = tuple(M.coordinates)
    mom = tuple(L.metadata["momenta"])
    grad = {"cdeg": degree_in(base), "pideg": degree_in(mom)}
    sels = []
    for g in ghosts:
        for k in pi_degrees:
            for d in range(max_cdeg + 1):
                sels.append(BlockSelector(base + mom, g, fixed={"cdeg": d, "pideg": k},
                                          gradings=grad, label=f"gh={g},pi={k},c={d}"))
    reports = cohomology_blocks(q_derivation(L), sels, n_jobs)
    return {(s.ghost, s.fixed["pideg"], s.fixed["cdeg"]): r for s, r in zip(sels, reports)}


def _field_vars(gens):
    return [v for v in gens if jet_data(v) is not None]


def spacetime_cohomology(ctx: JetContext, max_field_degree: int, max_weight: int,
                         max_x_degree: int = 1, n_jobs: int = 1) -> list[BlockComparison]:
    """``H(s₋₁)`` against the count of monomials in ``x``, ``θ`` and ``Ψ^A`` alone.

    ``s₋₁`` preserves ``w = Σ (jet order + number of form indices)`` over the
    field factors, so blocks fix ghost number, field degree and ``w``.  Only
    blocks whose generators (order ``≤ w``) lie inside the context are used,
    which requires ``max_weight ≤ J``.
    """
    if max_weight > ctx.J:
        raise ValueError("weight bound exceeds the jet order of the context")
    s_m1, _ = aksz_brst_parts(ctx)
    gens = tuple(ctx.generators(ctx.J))
    fields = _field_vars(gens)
    grad = {
        "fdeg": degree_in(fields),
        "w": weight_table({v: jet_order(v) + form_rank(v) for v in fields}),
        "xdeg": degree_in(ctx.base_coords),
    }
    undiff = {A for A in ctx.target.coordinates}
    sels = []
    for d in range(max_field_degree + 1):
        ghosts = _ghost_range(fields, d, ctx.n)
        for w in range(max_weight + 1):
            for g in ghosts:
                sels.append(BlockSelector(gens, g, bounds={"xdeg": max_x_degree},
                                          fixed={"fdeg": d, "w": w}, gradings=grad,
                                          label=f"gh={g},fdeg={d},w={w}"))
    reports = cohomology_blocks(s_m1, sels, n_jobs)
    out = []
    for sel, rep in zip(sels, reports):
        expected = sum(1 for m in enumerate_block(sel)
                       if all(_is_plain(v, undiff) for v, _ in m.factors))
        out.append(BlockComparison((sel.ghost, sel.fixed["fdeg"], sel.fixed["w"]),
                                   rep, expected))
    return out


def _is_plain(v: GradedVariable, undiff) -> bool:
    if v.kind in (Kind.BASE, Kind.THETA):
        return True
    d = jet_data(v)
    return d is not None and not d[1] and not d[0].info.indices and d[0].info.coordinate in undiff


def _ghost_range(fields, degree: int, n: int) -> range:
    if not fields or degree == 0:
        return range(0, 1)
    lo = min(v.ghost for v in fields)
    hi = max(v.ghost for v in fields)
    return range(lo * degree, hi * degree + 1)


def _horizontal_gradings(ctx: JetContext):
    gens = tuple(ctx.generators(ctx.J, include_x=False))
    fields = _field_vars(gens)
    table = {v: jet_order(v) for v in fields}
    for th in ctx.thetas:
        table[th] = -1
    grad = {"form": degree_in(ctx.thetas), "fdeg": degree_in(fields),
            "ow": weight_table(table)}
    return gens, fields, grad


def horizontal_selector(ctx: JetContext, form: int, field_degree: int, weight: int,
                        ghost: int) -> BlockSelector:
    """``x``-independent block of ``d_H`` with fixed form degree, field degree and ``order − #θ``.

    ``d_H`` maps it to the block with ``form + 1`` and the same weight; both
    stay inside the context when ``weight + form + 1 ≤ J``.
    """
    if weight + form + 1 > ctx.J:
        raise ValueError("block images leave the jet order of the context")
    gens, _, grad = _horizontal_gradings(ctx)
    return BlockSelector(gens, ghost, fixed={"form": form, "fdeg": field_degree, "ow": weight},
                         gradings=grad, include_constants=False,
                         label=f"form={form},gh={ghost},fdeg={field_degree},w={weight}")


def horizontal_witness(ctx: JetContext, form: Polynomial) -> ExactnessResult:
    """Search a ``d_H``-preimage of an ``x``-independent, field-dependent form.

    The form is split into its components of fixed form degree, field degree,
    ghost number and ``order − #θ``; each is solved in its own block
    (:func:`horizontal_selector`).  The result is exact iff every component
    is, and the witness is the sum of the component witnesses.  Components
    must satisfy ``weight + form ≤ J - 1`` so that closedness can be checked.
    """
    gens, _, grad = _horizontal_gradings(ctx)
    comps: dict = {}
    for m, c in form.items():
        key = (m.weight(grad["form"]), m.weight(grad["fdeg"]), m.weight(grad["ow"]), m.ghost)
        comps.setdefault(key, {})[m] = c
    dH = ctx.horizontal_derivation()
    witness = ZERO
    sel = None
    for (k, d, w, g), terms in sorted(comps.items()):
        if k == 0:
            return ExactnessResult(False, None, sel)
        sel = horizontal_selector(ctx, k - 1, d, w, g)
        res = exactness_witness(Polynomial(terms), dH, sel)
        if not res.exact:
            return ExactnessResult(False, None, sel)
        witness = witness + res.witness
    return ExactnessResult(True, witness, sel)


def horizontal_cohomology(ctx: JetContext, forms: Sequence[int], max_field_degree: int,
                          max_weight: int, n_jobs: int = 1) -> list[BlockComparison]:
    """``H(d_H)`` on ``x``-independent, field-dependent forms of the given degrees.

    ``d_H`` preserves ``order − #θ`` summed over a monomial, so blocks fix form
    degree, field degree, ghost number and that weight.  Block generators and
    images must stay below the jet order: ``weight + form + 1 ≤ J``.
    The expected betti number is 0 throughout.
    """
    dH = ctx.horizontal_derivation()
    _, fields, _ = _horizontal_gradings(ctx)
    sels = []
    for k in forms:
        for d in range(1, max_field_degree + 1):
            for w in range(max_weight + 1):
                if w + k + 1 > ctx.J:
                    continue
                for g in _ghost_range(fields, d, ctx.n):
                    sels.append(horizontal_selector(ctx, k, d, w, g))
    reports = cohomology_blocks(dH, sels, n_jobs)
    return [BlockComparison((s.fixed["form"], s.ghost, s.fixed["fdeg"], s.fixed["ow"]), r, 0)
            for s, r in zip(sels, reports)]


def proposition1(M: QManifoldSpec, ghosts: Sequence[int], J: int = 2, n: int = 1,
                 max_target_degree: int | None = None, n_jobs: int = 1) -> list[BlockComparison]:
    """Blocks of ``s̃ = s + d_H`` against ``H(Q)`` of constant-free target functions.

    Works on ``x``-independent polynomials of the jets (order ``≤ J``) and
    ``θ`` without field-independent terms.  ``s̃`` preserves
    ``W = Σ (jet order + form indices) − #θ``; the blocks fix the total
    degree ``G`` (ghost plus form degree) and ``W = 0``, which forces every
    element to carry at most ``n`` derivatives and form indices in total.
    The expected value is the betti number of ``H^G(Q)`` without constants,
    summed over polynomial degrees up to ``max_target_degree``.
    """
    ctx = build_jet_context(n, M, J)
    s = prolong(ctx, ctx.brst_tables[0], ghost=1, name="s")
    stilde = s + ctx.horizontal_derivation()
    gens = tuple(ctx.generators(J, include_x=False))
    fields = _field_vars(gens)
    ro = {v: jet_order(v) + form_rank(v) for v in fields}
    table = dict(ro)
    for th in ctx.thetas:
        table[th] = -1
    grad = {"W": weight_table(table), "ro": weight_table(ro),
            "fdeg": degree_in(fields)}
    if max_target_degree is None:
        max_target_degree = len(M.coordinates)
    tgt = target_cohomology(M, ghosts, max_target_degree, include_constants=False)
    sels = [BlockSelector(gens, g, bounds={"ro": n}, fixed={"W": 0}, gradings=grad,
                          include_constants=False, degree="total", label=f"G={g}")
            for g in ghosts]
    reports = cohomology_blocks(stilde, sels, n_jobs)
    out = []
    for sel, rep in zip(sels, reports):
        expected = sum(r.betti for (g, _), r in tgt.items() if g == sel.ghost)
        out.append(BlockComparison((sel.ghost,), rep, expected))
    return out


def proposition1_selector(ctx: JetContext, G: int, max_field_degree: int) -> BlockSelector:
    """Preimage block for exactness tests under ``s̃``: total degree ``G``, ``W = 0``."""
    gens = tuple(ctx.generators(ctx.J, include_x=False))
    fields = _field_vars(gens)
    ro = {v: jet_order(v) + form_rank(v) for v in fields}
    table = dict(ro)
    for th in ctx.thetas:
        table[th] = -1
    grad = {"W": weight_table(table), "ro": weight_table(ro), "fdeg": degree_in(fields)}
    return BlockSelector(gens, G, bounds={"ro": ctx.n, "fdeg": max_field_degree},
                         fixed={"W": 0}, gradings=grad, include_constants=False,
                         degree="total", label=f"G={G}")
