import itertools

import pytest
from hypothesis import given, strategies as st

from akszcoh.errors import GradingError, NotNilpotentError
from akszcoh.graded import ONE, ZERO, GradedVariable, Polynomial, apply_derivation
from akszcoh.qtarget import (BracketSpec, QManifoldSpec, bracket_eval, check_master_equation,
                             check_nilpotent, cotangent_lift, hamiltonian_vf, levi_civita,
                             lie_algebra_target, lift_formula, q_derivation)
from akszcoh.specfile import parse_spec
from helpers import monomials

P = Polynomial.product
V = Polynomial.variable

DOCS = ["su2", "psm_su2", "bf_su2_n2", "bf_su2_n3", "bfv_toy"]


def test_levi_civita():
    assert levi_civita([0, 1, 2]) == 1
    assert levi_civita([1, 0, 2]) == -1
    assert levi_civita([2, 0, 1]) == 1
    assert levi_civita([0, 0, 1]) == 0


def test_su2_vector_field(su2):
    c1, c2, c3 = su2.coordinates
    assert su2.Q_action[c1] == P([c2, c3])
    assert su2.Q_action[c2] == -P([c1, c3])
    assert check_nilpotent(su2).passed


def test_broken_jacobi_fails_with_residual():
    M = parse_spec("broken").target
    rep = check_nilpotent(M)
    assert not rep.passed
    c1, c2, c3 = M.coordinates
    assert rep.residuals == {c3: P([c1, c2, c3])}
    with pytest.raises(NotNilpotentError):
        cotangent_lift(M, 3)


def test_q_component_ghost_validated():
    x = GradedVariable("x", 0)
    with pytest.raises(GradingError):
        QManifoldSpec((x,), {x: V(x)})


def test_psm_vector_field(psm_doc):
    M = psm_doc.target
    X = [M.coordinate(f"X[{i}]") for i in (1, 2, 3)]
    C = [M.coordinate(f"C[{i}]") for i in (1, 2, 3)]
    assert M.Q_action[X[0]] == -P([X[1], C[2]]) + P([X[2], C[1]])
    assert M.Q_action[C[0]] == P([C[1], C[2]])
    assert check_nilpotent(M).passed


@pytest.mark.parametrize("name", DOCS)
def test_bundled_master_equations(name):
    M = parse_spec(name).target
    assert check_master_equation(M.master_function, M.bracket).passed
    assert check_nilpotent(M).passed
    ham = hamiltonian_vf(M.master_function, M.bracket, M.coordinates)
    for v in M.coordinates:
        assert ham.on(v) == M.Q_action[v]


def _jacobi_ok(B, f, g, h):
    k = B.parity
    sign = -1 if ((f.parity + k) * (g.parity + k)) % 2 else 1
    lhs = bracket_eval(f, bracket_eval(g, h, B), B)
    rhs = bracket_eval(bracket_eval(f, g, B), h, B) \
        + bracket_eval(g, bracket_eval(f, h, B), B).scale(sign)
    return lhs == rhs


@pytest.mark.parametrize("name", ["psm_su2", "su2", "bf_su2_n2"])
def test_bracket_symmetry_and_jacobi(name):
    M = parse_spec(name).target
    B = M.bracket
    mons = monomials(M.coordinates, 2)
    k = B.parity
    for f, g in itertools.product(mons, repeat=2):
        sign = -(-1) ** (((f.parity + k) * (g.parity + k)) % 2)
        assert bracket_eval(f, g, B) == bracket_eval(g, f, B).scale(sign)
    for f, g, h in itertools.islice(itertools.product(mons, repeat=3), 0, None, 7):
        assert _jacobi_ok(B, f, g, h)


def test_bracket_degree():
    M = parse_spec("psm_su2").target
    X1, C1 = M.coordinate("X[1]"), M.coordinate("C[1]")
    assert bracket_eval(V(X1), V(C1), M.bracket) == ONE
    assert M.bracket.ghost_shift == -1


def test_bracket_rejects_wrong_ghost():
    x, y = GradedVariable("x", 0), GradedVariable("y", 0)
    with pytest.raises(GradingError):
        BracketSpec({(x, y): ONE}, ghost_shift=1, parity=1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cotangent_lift(su2, n):
    L = cotangent_lift(su2, n)
    mom = L.metadata["momenta"]
    assert [p.ghost for p in mom] == [n - 1] * 3
    assert [p.name for p in mom] == ["pi_c[1]", "pi_c[2]", "pi_c[3]"]
    assert check_nilpotent(L).passed
    direct = lift_formula(su2, mom)
    for v in L.coordinates:
        assert L.Q_action[v] == direct[v]
    for v in su2.coordinates:
        assert L.Q_action[v] == su2.Q_action[v]


def test_lift_momenta_transform_in_coadjoint(su2):
    L = cotangent_lift(su2, 3)
    c1, c2, c3 = su2.coordinates
    p1, p2, p3 = L.metadata["momenta"]
    # Q_E π_1 = -(-1)^{|c|} (∂Q^B/∂c^1) π_B  with ∂Q^2/∂c^1 = -c3, ∂Q^3/∂c^1 = c2
    assert L.Q_action[p1] == -P([c3, p2]) + P([c2, p3])


@given(st.integers(1, 4))
def test_abelian_target_trivial(dim):
    M = lie_algebra_target({}, dimension=dim)
    assert all(not q for q in M.Q_action.values())
    assert check_nilpotent(M).passed


def test_q_derivation_on_products(su2):
    Q = q_derivation(su2)
    top = P(su2.coordinates)
    assert apply_derivation(Q, top) == ZERO
    c1, c2, _ = su2.coordinates
    assert apply_derivation(Q, P([c1, c2])) == ZERO
