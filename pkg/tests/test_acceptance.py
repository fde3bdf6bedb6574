"""Acceptance suite: one PASS/FAIL line per criterion, printed at the end of the run.

Run alone with ``pytest tests/test_acceptance.py``.  Every comparison is exact.
"""
import contextlib
import itertools
import random
import time
from fractions import Fraction

import pytest

from akszcoh.cohomology import enumerate_block, exactness_witness
from akszcoh.experiments import (horizontal_cohomology, horizontal_selector, horizontal_witness,
                                 lifted_cohomology, proposition1, proposition1_selector,
                                 spacetime_cohomology, target_cohomology)
from akszcoh.graded import ZERO, Polynomial, apply_derivation, substitute
from akszcoh.jets import (LocalFunctional, aksz_brst_parts, build_jet_context,
                          build_master_action, functional_equal, grading_N, jet_order,
                          pullback_I, prolong, variational_derivatives)
from akszcoh.multivectors import (LagrangeStructureCandidate, apply_equivalence,
                                  check_lagrange_structure, extend_jet_context,
                                  functional_field_bracket, lagrange_residual, pullback_I_E, s_E)
from akszcoh.qtarget import bracket_eval, check_master_equation
from akszcoh.specfile import parse_spec
from helpers import monomials
from oracles import SU2_CE

V = Polynomial.variable
RESULTS: dict = {}


@contextlib.contextmanager
def criterion(k, title, limit=None):
    """Record PASS/FAIL for criterion ``k``; the runtime limit is part of the verdict."""
    t0 = time.perf_counter()
    info = {}
    try:
        yield info
    except BaseException as exc:
        RESULTS[k] = f"AC{k} FAIL {title} ({type(exc).__name__}: {str(exc)[:120]})"
        raise
    dt = time.perf_counter() - t0
    extra = "".join(f", {a}={b}" for a, b in info.items())
    if limit is not None and dt >= limit:
        RESULTS[k] = f"AC{k} FAIL {title} (runtime {dt:.2f}s >= {limit}s{extra})"
        pytest.fail(RESULTS[k])
    RESULTS[k] = f"AC{k} PASS {title} ({dt:.2f}s{extra})"


@pytest.fixture(scope="module", autouse=True)
def _print_summary(request):
    yield
    tr = request.config.pluginmanager.getplugin("terminalreporter")
    lines = [RESULTS.get(k, f"AC{k} FAIL not run") for k in range(1, 11)]
    if tr is not None:
        tr.write_line("")
        for line in lines:
            tr.write_line(line)
    else:
        print("\n".join(lines))


def _levi_civita_cubic(doc):
    return doc.parse("eps[a,b,d]*c[a]*c[b]*c[d]")


def test_ac1_su2_chevalley_eilenberg(su2_doc):
    with criterion(1, "su(2) CE cohomology", limit=1.0) as info:
        reps = target_cohomology(su2_doc.target, range(4), 3)
        betti = [sum(r.betti for (g, _), r in reps.items() if g == k) for k in range(4)]
        assert betti == [1, 0, 0, 1]
        # with ghost-1 generators only degree == ghost carries anything
        assert [reps[(k, k)].dim_space for k in range(4)] == SU2_CE["dims"]
        assert [reps[(k + 1, k + 1)].dim_coboundaries if k < 3 else 0
                for k in range(4)] == SU2_CE["ranks"]
        assert betti == SU2_CE["betti"]
        (rep,) = reps[(3, 3)].representatives
        target = _levi_civita_cubic(su2_doc)
        ratio = {rep.coefficient(m) / c for m, c in target.items()}
        assert len(ratio) == 1 and set(rep) == set(target)
        info["betti"] = betti


def test_ac2_lifted_chern_simons(su2_doc):
    with criterion(2, "lifted CS cohomology", limit=10.0) as info:
        M = su2_doc.target
        lin = lifted_cohomology(M, 3, range(0, 9), [1], 6)
        assert all(r.betti == 0 for r in lin.values())
        assert sum(r.dim_space for r in lin.values()) > 0
        quad = lifted_cohomology(M, 3, [4], [2], 0)
        rep = quad[(4, 2, 0)]
        assert rep.betti == 1
        (r,) = rep.representatives
        # the lift is rebuilt per call, so compare monomials by name
        ref = su2_doc.parse("delta[a,b]*pi_c[a]*pi_c[b]", extra=_momenta(M))
        got = {str(m): c for m, c in r.items()}
        ratio = {got.get(str(m), 0) / c for m, c in ref.items()}
        assert len(ratio) == 1 and ratio != {0} and len(got) == len(ref)
        info["linear_blocks"] = len(lin)


def _momenta(M):
    from akszcoh.qtarget import cotangent_lift
    return cotangent_lift(M, 3).metadata["momenta"]


def _s_squared_residuals(doc, n, J=1):
    ctx = build_jet_context(n, doc.target, J + 2)
    s = prolong(ctx, ctx.brst_tables[0], ghost=1, name="s")
    dH = ctx.horizontal_derivation()
    bad = []
    for v in ctx.jet_variables(J):
        r = apply_derivation(s, s.on(v))
        if r:
            bad.append((v.name, r))
        if jet_order(v) < J:
            m = apply_derivation(s, dH.on(v)) + apply_derivation(dH, s.on(v))
            if m:
                bad.append((f"[s,d_H]{v.name}", m))
    return bad


def test_ac3_nilpotency_suite(capsys):
    with criterion(3, "s^2 = 0 suite", limit=60.0) as info:
        for name, n in [("su2", 3), ("psm_su2", 2), ("bf_su2_n2", 2), ("bf_su2_n3", 3)]:
            assert _s_squared_residuals(parse_spec(name), n) == [], name
        broken = _s_squared_residuals(parse_spec("broken"), 1)
        assert broken and all(p for _, p in broken)
        name, p = broken[0]
        with capsys.disabled():
            print(f"\ncontrol residual s^2({name}) = {p}")
        info["control_residuals"] = len(broken)


def test_ac4_master_equations(su2_doc, psm_doc):
    with criterion(4, "master equations") as info:
        M = psm_doc.target
        assert check_master_equation(M.master_function, M.bracket).passed
        ctx = build_jet_context(3, su2_doc.target, 1)
        S = build_master_action(ctx)
        zero = LocalFunctional(ZERO, ctx)
        assert functional_equal(functional_field_bracket(S, S), zero)
        rng = random.Random(11)
        coords = list(su2_doc.target.coordinates)
        checked = 0
        while checked < 5:
            f = Polynomial.product([rng.choice(coords) for _ in range(rng.randint(1, 3))])
            F = pullback_I(ctx, f)
            if F.is_zero():
                continue
            assert functional_equal(functional_field_bracket(S, F),
                                    LocalFunctional(ctx.s(F.integrand), ctx)), str(f)
            checked += 1
        info["samples"] = checked


def test_ac5_chain_map_and_homomorphism(su2_doc, psm_doc):
    with criterion(5, "chain map and homomorphism") as info:
        pairs = 0
        for doc, n in [(su2_doc, 3), (psm_doc, 2)]:
            M = doc.target
            ctx = build_jet_context(n, M, 1)
            fs = [f for f in monomials(M.coordinates, 3) if not pullback_I(ctx, f).is_zero()]
            for f in fs:
                F = pullback_I(ctx, f)
                assert functional_equal(LocalFunctional(ctx.s(F.integrand), ctx),
                                        pullback_I(ctx, M.Q(f))), str(f)
            for f, g in itertools.product(fs, repeat=2):
                lhs = pullback_I(ctx, bracket_eval(f, g, M.bracket))
                rhs = functional_field_bracket(pullback_I(ctx, f), pullback_I(ctx, g))
                assert functional_equal(lhs, rhs), (str(f), str(g))
                pairs += 1
        info["pairs"] = pairs


def test_ac6_proposition1(su2_doc):
    with criterion(6, "H(s + d_H) vs H(Q) desk check") as info:
        M = su2_doc.target
        J = 2
        ctx = build_jet_context(1, M, J)
        f = _levi_civita_cubic(su2_doc)
        F = pullback_I(ctx, f)
        assert not variational_derivatives(LocalFunctional(ctx.s(F.integrand), ctx))
        ladder = substitute(f, ctx.ladders)
        stilde = prolong(ctx, ctx.brst_tables[0], ghost=1) + ctx.horizontal_derivation()
        assert not apply_derivation(stilde, ladder)
        sel = proposition1_selector(ctx, ladder.total_degree - 1, 4)
        assert not exactness_witness(ladder, stilde, sel).exact
        comps = proposition1(M, range(0, 5), J=J, n=1)
        assert all(c.matches for c in comps), [(c.key, c.report.betti, c.expected)
                                               for c in comps]
        info["betti"] = [c.report.betti for c in comps]


def test_ac7_spacetime_part(abelian):
    with criterion(7, "spacetime-part cohomology") as info:
        ctx = build_jet_context(2, abelian, 2)
        comps = spacetime_cohomology(ctx, 3, 2)
        assert all(c.matches for c in comps), [c.key for c in comps if not c.matches]
        s_m1, s0 = aksz_brst_parts(ctx)
        for v in ctx.jet_variables(1):
            N = set(grading_N(ctx, V(v)))
            for D, shift in ((s_m1, -1), (s0, 0)):
                img = D.on(v)
                if img:
                    assert set(grading_N(ctx, img)) == {k + shift for k in N}
        info["blocks"] = len(comps)


def test_ac8_horizontal_triviality(abelian):
    with criterion(8, "horizontal triviality") as info:
        ctx = build_jet_context(2, abelian, 2)
        comps = horizontal_cohomology(ctx, [0, 1], 2, 1)
        assert comps and all(c.report.betti == 0 for c in comps)
        info["blocks"] = len(comps)


def test_ac9_lagrange_structure(su2_doc):
    with criterion(9, "Lagrange structure") as info:
        e = extend_jet_context(build_jet_context(3, su2_doc.target, 1), "symmetric")
        L = e.lifted_target()
        f = su2_doc.parse("1/2*delta[a,b]*pi_c[a]*pi_c[b]", extra=L.metadata["momenta"])
        cand = LagrangeStructureCandidate(e, (pullback_I_E(e, f, L),))
        rep = check_lagrange_structure(cand, 3)
        assert rep.passed and [k for k, _ in rep.vanishing] == [1, 2, 3]
        c1, c2 = e.target.coordinates[:2]
        X = LocalFunctional.from_density(
            e, Polynomial.product([e.field_of(c1), e.field_of(c2), e.momentum(c1),
                                   e.momentum(c2)]))
        new = apply_equivalence(cand, [X], 3)
        assert functional_equal(new.omegas[0], cand.omegas[0] + s_E(X, e))
        for m in (1, 2, 3):
            assert functional_equal(lagrange_residual(new, m), lagrange_residual(cand, m))
        info["orders"] = 3


def test_ac10_variational_calculus(su2_doc):
    with criterion(10, "variational calculus on d_H-exact forms") as info:
        rng = random.Random(2024)
        M = su2_doc.target
        ctxs = {n: build_jet_context(n, M, 3) for n in (1, 2)}
        blocks: dict = {}
        done = 0
        while done < 100:
            n = rng.choice((1, 2))
            ctx = ctxs[n]
            d = rng.randint(1, 2)
            w = rng.randint(0, ctx.J - n - 1)
            g = rng.randint(d - n, d)
            key = (n, d, w, g)
            if key not in blocks:
                blocks[key] = enumerate_block(horizontal_selector(ctx, n - 1, d, w, g))
            basis = blocks[key]
            if not basis:
                continue
            omega = Polynomial({m: Fraction(rng.choice([-3, -2, -1, 1, 2, 3]))
                                for m in rng.sample(basis, min(3, len(basis)))})
            top = apply_derivation(ctx.horizontal_derivation(), omega)
            if not top:
                continue
            assert not variational_derivatives(LocalFunctional(top, ctx))
            res = horizontal_witness(ctx, top)
            assert res.exact and apply_derivation(ctx.horizontal_derivation(), res.witness) == top
            done += 1
        info["forms"] = done
