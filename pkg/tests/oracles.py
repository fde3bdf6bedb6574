"""Independent oracles used to freeze expected values.

Nothing here imports the package's algebra: exterior algebras are modelled as
dictionaries keyed by sorted index tuples, signs come from counting
inversions, and ranks from a plain Gaussian elimination over Fractions.
"""

import itertools
from fractions import Fraction


def levi_civita(idx):
    if len(set(idx)) != len(idx):
        return 0
    inv = sum(1 for i, j in itertools.combinations(range(len(idx)), 2) if idx[i] > idx[j])
    return -1 if inv % 2 else 1


def wedge_sort(idx):
    """Sign and sorted tuple of the exterior product of generators ``idx``."""
    if len(set(idx)) != len(idx):
        return 0, None
    return levi_civita(list(idx)), tuple(sorted(idx))


def ce_differential(f, dim):
    """Matrices of ``d c^a = ½ f^a_{bc} c^b c^c`` on ``Λ^k``, k = 0..dim.

    Returns ``{k: (basis_k, rows)}`` where ``rows[j]`` is the image of the
    ``j``-th basis element of ``Λ^k`` as a dict over ``basis_{k+1}``.
    """
    dc = {}
    for a in range(dim):
        img = {}
        for b in range(dim):
            for c in range(dim):
                v = f.get((a, b, c), 0)
                if not v:
                    continue
                sgn, key = wedge_sort((b, c))
                if sgn:
                    img[key] = img.get(key, 0) + Fraction(v, 2) * sgn
        dc[a] = {k: v for k, v in img.items() if v}
    out = {}
    for k in range(dim + 1):
        basis = list(itertools.combinations(range(dim), k))
        rows = []
        for mono in basis:
            img = {}
            for pos, a in enumerate(mono):
                # d passes the first pos odd generators
                sign = -1 if pos % 2 else 1
                for key, v in dc[a].items():
                    s2, new = wedge_sort(mono[:pos] + key + mono[pos + 1:])
                    if s2:
                        img[new] = img.get(new, 0) + sign * s2 * v
            rows.append({k2: v for k2, v in img.items() if v})
        out[k] = (basis, rows)
    return out


def matrix_rank(rows):
    """Rank of a list of sparse rows (dicts) by Gaussian elimination."""
    cols = sorted({c for r in rows for c in r})
    m = [[Fraction(r.get(c, 0)) for c in cols] for r in rows]
    rank = 0
    for j in range(len(cols)):
        piv = next((i for i in range(rank, len(m)) if m[i][j]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][j]:
                t = m[i][j] / m[rank][j]
                m[i] = [x - t * y for x, y in zip(m[i], m[rank])]
        rank += 1
    return rank


def ce_betti(f, dim):
    d = ce_differential(f, dim)
    dims = [len(d[k][0]) for k in range(dim + 1)]
    ranks = [matrix_rank(d[k][1]) for k in range(dim + 1)]
    betti = [dims[k] - ranks[k] - (ranks[k - 1] if k else 0) for k in range(dim + 1)]
    return dims, ranks, betti


# Frozen output of ce_betti for su(2) with f = ε (computed once by the code
# above and by hand: d is injective on Λ¹ because su(2) is perfect, and zero
# on Λ² because su(2) is unimodular).
SU2_CE = {"dims": [1, 3, 3, 1], "ranks": [0, 3, 0, 0], "betti": [1, 0, 0, 1]}
