import itertools
from fractions import Fraction

from hypothesis import given, strategies as st

from akszcoh.linalg import SparseEchelon, nullspace, rank, rref, solve
from oracles import matrix_rank

entries = st.integers(-3, 3)


@st.composite
def matrices(draw):
    r = draw(st.integers(0, 5))
    c = draw(st.integers(1, 5))
    rows = [{j: Fraction(draw(entries)) for j in range(c)} for _ in range(r)]
    return [{j: x for j, x in row.items() if x} for row in rows], c


@given(matrices())
def test_rank_matches_dense_oracle(m):
    rows, _ = m
    assert rank(rows) == matrix_rank(rows)


@given(matrices())
def test_rank_nullity(m):
    rows, c = m
    assert rank(rows) + len(nullspace(rows, c)) == c


@given(matrices())
def test_nullspace_vectors_are_annihilated(m):
    rows, c = m
    for vec in nullspace(rows, c):
        for row in rows:
            assert sum(x * vec.get(j, 0) for j, x in row.items()) == 0


@given(matrices(), st.lists(entries, min_size=5, max_size=5))
def test_solve_consistent_systems(m, xs):
    rows, c = m
    x = {j: Fraction(xs[j]) for j in range(c)}
    rhs = {i: sum(v * x[j] for j, v in row.items()) for i, row in enumerate(rows)}
    sol = solve(rows, rhs, c)
    assert sol is not None
    for i, row in enumerate(rows):
        assert sum(v * sol.get(j, 0) for j, v in row.items()) == rhs[i]


def test_solve_detects_inconsistency():
    rows = [{0: 1, 1: 1}, {0: 2, 1: 2}]
    assert solve(rows, {0: 1, 1: 3}, 2) is None


def test_rref_is_reduced():
    rows = [{0: 2, 1: 4, 2: 6}, {0: 1, 1: 3, 2: 5}]
    R = rref(rows)
    pivots = [min(r) for r in R]
    for r, p in zip(R, pivots):
        for other in pivots:
            if other != p:
                assert other not in r


def test_echelon_membership():
    ech = SparseEchelon()
    assert ech.add({0: 1, 1: 1})
    assert not ech.add({0: 3, 1: 3})
    assert ech.contains({0: -2, 1: -2})
    assert not ech.contains({1: 1})
    assert ech.rank == 1


def test_hilbert_rank_exact():
    # ill-conditioned in floating point; exact arithmetic gives full rank
    n = 6
    rows = [{j: Fraction(1, i + j + 1) for j in range(n)} for i in range(n)]
    assert rank(rows) == n
    assert all(len(nullspace(rows, n)) == 0 for _ in itertools.repeat(None, 1))
