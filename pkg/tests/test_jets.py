import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from akszcoh.errors import GradingError, NotACocycleError, TruncationError
from akszcoh.graded import ZERO, Polynomial, apply_derivation, left_derivative, multiply, substitute
from akszcoh.jets import (N_GRADING, LocalFunctional, aksz_brst, aksz_brst_parts,
                          build_jet_context, build_master_action, descent_ladder, euler_lagrange,
                          form_part, form_rank, functional_equal, grading_N, jet_data, jet_order,
                          prolong, pullback_I, variational_derivatives)
from akszcoh.errors import NotNilpotentError
from akszcoh.qtarget import levi_civita
from akszcoh.specfile import parse_spec

V = Polynomial.variable


@pytest.fixture(scope="module")
def cs_ctx(su2):
    return build_jet_context(3, su2, 1)


def test_formfield_content(cs_ctx, su2):
    assert len(cs_ctx.formfields) == 3 * 8
    c1 = su2.coordinates[0]
    names = sorted(cs_ctx.field_of(c1, I).name for k in range(4)
                   for I in itertools.combinations(range(3), k))
    assert "c_f01[1]" in names and "c_f012[1]" in names
    for f in cs_ctx.formfields:
        assert f.ghost == 1 - form_rank(f)
        assert f.form_degree == 0


def test_ladder_components(cs_ctx, su2):
    c1 = su2.coordinates[0]
    lad = cs_ctx.ladders[c1]
    assert lad.total_degrees() == {1}
    assert form_part(lad, 0) == V(cs_ctx.field_of(c1))
    th0, th1, _ = cs_ctx.thetas
    expected = multiply(V(cs_ctx.field_of(c1, (0, 1))), V(th0) * V(th1))
    assert form_part(lad, 2).filter(lambda m: th0 in m.variables() and th1 in m.variables()) \
        == expected


def test_jet_names_and_orders(cs_ctx, su2):
    f = cs_ctx.field_of(su2.coordinates[0], (0, 1))
    j = cs_ctx.jet(f, (1, 0, 0))
    assert j.name == "c_f01_d001[1]"
    assert jet_order(j) == 3
    assert jet_data(j) == (f, (0, 0, 1))
    assert cs_ctx.jet(f, (0, 1, 0)) is j


def test_total_derivatives_commute_and_dH_squares_to_zero(su2):
    ctx = build_jet_context(2, su2, 3)
    gens = ctx.jet_variables(1)
    for v in gens:
        p = V(v)
        assert ctx.d(0, ctx.d(1, p)) == ctx.d(1, ctx.d(0, p))
        assert ctx.d_H(ctx.d_H(p)) == ZERO
    x0 = ctx.base_coords[0]
    assert ctx.d(0, V(x0)) == Polynomial.constant(1)
    assert ctx.d(1, V(x0)) == ZERO


def test_truncation_is_reported(su2):
    ctx = build_jet_context(1, su2, 1)
    dH = ctx.horizontal_derivation()
    top = [v for v in ctx.jet_variables() if jet_order(v) == 1][0]
    with pytest.raises(TruncationError):
        apply_derivation(dH, V(top))


@pytest.mark.parametrize("n", [1, 2])
def test_s_squared_vanishes(su2, n):
    J = 1
    ctx = build_jet_context(n, su2, J + 2)
    s = aksz_brst(ctx)
    for v in ctx.jet_variables(J):
        assert apply_derivation(s, s.on(v)) == ZERO


def test_aksz_brst_refuses_broken_target():
    ctx = build_jet_context(1, parse_spec("broken").target, 1)
    with pytest.raises(NotNilpotentError):
        aksz_brst(ctx)


def test_abelian_one_dimensional_sign(abelian):
    # s A = -(d_H c) component read with the volume on the right: s c_f0 = + c_d0
    ctx = build_jet_context(1, abelian, 1)
    c = abelian.coordinates[0]
    s = ctx.brst_tables[0]
    assert s[ctx.field_of(c, (0,))] == V(ctx.jet(ctx.field_of(c), (0,)))
    assert s[ctx.field_of(c)] == ZERO


@pytest.mark.parametrize("name,n", [("su2", 3), ("psm_su2", 2), ("su2", 1)])
def test_spacetime_part_formula(name, n):
    """s₋₁Ψ_I = -(-1)^{|A|+k-1} Σ_j (-1)^j ∂_{i_j} Ψ_{I∖i_j}."""
    M = parse_spec(name).target
    ctx = build_jet_context(n, M, 1)
    _, m1, _ = ctx.brst_tables
    for A in M.coordinates:
        for k in range(1, n + 1):
            for I in itertools.combinations(range(n), k):
                acc = ZERO
                for j, i in enumerate(I):
                    rest = I[:j] + I[j + 1:]
                    term = V(ctx.jet(ctx.field_of(A, rest), (i,)))
                    acc = acc + (term if j % 2 == 0 else -term)
                sign = -1 if (A.parity + k - 1) % 2 == 0 else 1
                assert m1[ctx.field_of(A, I)] == acc.scale(sign)


def _Q_at_fields(ctx, p):
    return substitute(p, {A: V(ctx.field_of(A)) for A in ctx.target.coordinates})


@pytest.mark.parametrize("name,n", [("su2", 3), ("psm_su2", 2)])
def test_Q_part_form_level(name, n):
    """s₀ on the form components reproduces the Taylor expansion of Q."""
    M = parse_spec(name).target
    ctx = build_jet_context(n, M, 1)
    _, s0 = aksz_brst_parts(ctx)
    psi = {A: [form_part(ctx.ladders[A], k) for k in range(n + 1)] for A in M.coordinates}
    for A in M.coordinates:
        QA = M.Q_action[A]
        first = ZERO
        second = ZERO
        for B in M.coordinates:
            dB = left_derivative(QA, B)
            first = first + multiply(psi[B][1], _Q_at_fields(ctx, dB))
            second = second + multiply(psi[B][2], _Q_at_fields(ctx, dB))
            for B2 in M.coordinates:
                dd = left_derivative(dB, B2)
                if dd:
                    second = second + multiply(multiply(psi[B][1], psi[B2][1]),
                                               _Q_at_fields(ctx, dd)).scale(Fraction(1, 2))
        assert apply_derivation(s0, psi[A][1]) == first
        assert apply_derivation(s0, psi[A][2]) == second


@pytest.mark.parametrize("name,n", [("su2", 3), ("psm_su2", 2), ("bf_su2_n2", 2)])
def test_N_grading_of_the_two_parts(name, n):
    M = parse_spec(name).target
    ctx = build_jet_context(n, M, 2)
    s_m1, s0 = aksz_brst_parts(ctx)
    for v in ctx.jet_variables(1):
        N = N_GRADING(v)
        for D, shift in ((s_m1, -1), (s0, 0)):
            img = D.on(v)
            if img:
                assert set(grading_N(ctx, img)) == {N + shift}


def test_descent_for_cubic_invariant(su2_doc):
    cs_ctx = build_jet_context(3, su2_doc.target, 1)
    f = su2_doc.parse("eps[a,b,d]*c[a]*c[b]*c[d]")
    lad = descent_ladder(cs_ctx, f)
    assert lad.verified
    assert [w.ghost for w in lad.forms] == [3, 2, 1, 0]
    assert [w.form_degree for w in lad.forms] == [0, 1, 2, 3]
    top = lad.top(cs_ctx)
    sF = LocalFunctional(cs_ctx.s(top.integrand), cs_ctx)
    assert not variational_derivatives(sF)


def test_descent_rejects_non_cocycle(cs_ctx, su2, su2_doc):
    with pytest.raises(NotACocycleError):
        descent_ladder(cs_ctx, V(su2.coordinates[0]))
    with pytest.raises(GradingError):
        descent_ladder(cs_ctx, V(su2_doc.target.coordinates[0]))


def _random_dh_exact(ctx, rng):
    fields = [v for v in ctx.jet_variables(ctx.J - 1)]
    thetas = ctx.thetas
    omega = ZERO
    for _ in range(3):
        k = ctx.n - 1
        ths = sorted(rng.sample(range(ctx.n), k))
        mono = Polynomial.product([rng.choice(fields) for _ in range(rng.randint(1, 2))]
                                  + [thetas[i] for i in ths], rng.randint(-2, 2))
        omega = omega + mono
    return omega


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6), st.sampled_from([1, 2]))
def test_euler_lagrange_kills_dH_exact(seed, n):
    M = parse_spec("psm_su2").target
    ctx = build_jet_context(n, M, 2)
    omega = _random_dh_exact(ctx, random.Random(seed))
    top = ctx.d_H(omega)
    assert not variational_derivatives(LocalFunctional(top, ctx))


def test_euler_lagrange_of_kinetic_term(abelian):
    ctx = build_jet_context(1, abelian, 2)
    c = abelian.coordinates[0]
    A = ctx.field_of(c, (0,))
    phi = ctx.field_of(c)
    # density c_t * c_f0 : δ/δc = -∂_t c_f0, δ/δc_f0 = ± c_t
    F = LocalFunctional.from_density(ctx, V(ctx.jet(phi, (0,))) * V(A))
    assert euler_lagrange(ctx, F, phi) == -V(ctx.jet(A, (0,)))
    assert euler_lagrange(ctx, F, A) == V(ctx.jet(phi, (0,)))


def test_functional_equal_modulo_dH(psm_doc):
    ctx = build_jet_context(1, psm_doc.target, 2)
    X1 = ctx.field_of(psm_doc.target.coordinate("X[1]"))
    a = LocalFunctional.from_density(ctx, V(X1) * V(ctx.jet(X1, (0,))))
    zero = LocalFunctional(ZERO, ctx)
    assert functional_equal(a, zero)
    b = LocalFunctional.from_density(ctx, V(X1) * V(X1))
    assert not functional_equal(b, zero)


@pytest.mark.parametrize("name", ["su2", "psm_su2"])
def test_chain_map_on_generators(name):
    doc = parse_spec(name)
    M = doc.target
    ctx = build_jet_context(doc.base_dimension, M, 1)
    for A in M.coordinates:
        f = V(A)
        lhs = LocalFunctional(ctx.s(pullback_I(ctx, f).integrand), ctx)
        assert functional_equal(lhs, pullback_I(ctx, M.Q(f)))


def test_chern_simons_sector(su2_doc):
    """Terms of the master action built from A alone: -½ CS[-A] with f = ε."""
    M = su2_doc.target
    cs = M.coordinates
    ctx = build_jet_context(3, M, 1)
    SS = build_master_action(ctx)
    sector = SS.integrand.filter(
        lambda m: all(form_rank(jet_data(v)[0]) == 1 for v, _ in m.factors if jet_data(v)))

    def A(a, mu):
        return -V(ctx.field_of(cs[a], (mu,)))

    def dA(a, nu, mu):
        return -V(ctx.jet(ctx.field_of(cs[a], (mu,)), (nu,)))

    dens = ZERO
    for mu, nu, rho in itertools.permutations(range(3)):
        e = levi_civita([mu, nu, rho])
        for a in range(3):
            dens = dens + (A(a, mu) * dA(a, nu, rho)).scale(e)
        for a, b, c in itertools.permutations(range(3)):
            dens = dens + (A(a, mu) * A(b, nu) * A(c, rho)).scale(
                Fraction(e * levi_civita([a, b, c]), 3))
    CS = LocalFunctional.from_density(ctx, dens)
    assert functional_equal(LocalFunctional(sector, ctx), CS.scale(Fraction(-1, 2)))
    assert SS.ghosts() == {0}


def test_bfv_toy_action():
    doc = parse_spec("bfv_toy")
    ctx = build_jet_context(1, doc.target, 1)
    SS = build_master_action(ctx)
    q, p = doc.target.coordinates
    expected = -(V(ctx.thetas[0]) * V(ctx.field_of(p)) * V(ctx.jet(ctx.field_of(q), (0,))))
    assert SS.integrand == expected


def test_prolongation_marks_overflow(su2):
    ctx = build_jet_context(1, su2, 1)
    s = prolong(ctx, ctx.brst_tables[0], ghost=1)
    assert s.overflow
    assert all(jet_order(v) == 1 for v in s.overflow)
