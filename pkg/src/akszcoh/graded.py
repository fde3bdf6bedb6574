"""Graded-commutative polynomial algebra over the rationals.

Every variable carries a ghost number and a form degree; its Grassmann
parity is their sum modulo 2.  Monomials are kept in a canonical order (the
global creation order of variables) and the only place where Koszul signs
are produced is :func:`koszul_sort`, which counts transpositions of odd
factors while sorting.
"""

from __future__ import annotations

import enum
import itertools
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

from .errors import GradingError, TruncationError

__all__ = [
    "Kind",
    "GradedVariable",
    "Monomial",
    "Polynomial",
    "Derivation",
    "koszul_sort",
    "multiply",
    "apply_derivation",
    "graded_commutator",
    "substitute",
    "left_derivative",
    "right_derivative",
    "ZERO",
    "ONE",
]

_creation = itertools.count()


class Kind(str, enum.Enum):
    BASE = "base-coordinate"
    THETA = "theta"
    TARGET = "target-coordinate"
    FORMFIELD = "formfield"
    JET = "jet"
    MOMENTUM = "momentum"
    MOMENTUM_JET = "momentum-jet"


class GradedVariable:
    """A generator of the algebra.

    Variables compare by their creation index, which is also the global total
    order used to canonicalize monomials.
    """

    __slots__ = ("order", "name", "ghost", "form_degree", "kind", "parity", "info")

    def __init__(self, name: str, ghost: int = 0, form_degree: int = 0,
                 kind: Kind = Kind.TARGET, info=None):
        if form_degree < 0:
            raise GradingError(f"negative form degree for {name}")
        self.order = next(_creation)
        self.name = name
        self.ghost = int(ghost)
        self.form_degree = int(form_degree)
        self.kind = Kind(kind)
        self.parity = (self.ghost + self.form_degree) % 2
        self.info = info

    @property
    def total_degree(self) -> int:
        return self.ghost + self.form_degree

    @property
    def is_odd(self) -> bool:
        return self.parity == 1

    def __eq__(self, other):
        return isinstance(other, GradedVariable) and other.order == self.order

    def __hash__(self):
        return hash(self.order)

    def __lt__(self, other):
        return self.order < other.order

    def __repr__(self):
        return self.name

    def __reduce__(self):
        return (_restore_variable, (self.order, self.name, self.ghost, self.form_degree,
                                    self.kind.value, self.info))


def _restore_variable(order, name, ghost, form_degree, kind, info):
    v = GradedVariable.__new__(GradedVariable)
    v.order = order
    v.name = name
    v.ghost = ghost
    v.form_degree = form_degree
    v.kind = Kind(kind)
    v.parity = (ghost + form_degree) % 2
    v.info = info
    return v


def koszul_sort(factors: Iterable[tuple[GradedVariable, int]]):
    """Sort ``(variable, exponent)`` factors into canonical order.

    Returns ``(sign, factors)`` with ``factors`` merged and sorted, or
    ``(0, None)`` when an odd variable appears twice.  The sign is
    ``(-1)**t`` where ``t`` counts the transpositions of two odd factors
    performed by the (stable) insertion sort.
    """
    items = [(v, e) for v, e in factors if e != 0]
    sign = 1
    for i in range(1, len(items)):
        cur = items[i]
        cur_odd = cur[0].parity & cur[1]
        j = i
        while j > 0 and items[j - 1][0].order > cur[0].order:
            prev = items[j - 1]
            if cur_odd and prev[0].parity & prev[1]:
                sign = -sign
            items[j] = prev
            j -= 1
        items[j] = cur
    merged: list[tuple[GradedVariable, int]] = []
    for v, e in items:
        if e < 0:
            raise GradingError(f"negative exponent for {v}")
        if v.parity and e > 1:
            return 0, None
        if merged and merged[-1][0].order == v.order:
            if v.parity:
                return 0, None
            merged[-1] = (v, merged[-1][1] + e)
        else:
            merged.append((v, e))
    return sign, tuple(merged)


class Monomial:
    """Canonical product of variables; factors sorted by creation order."""

    __slots__ = ("factors", "_hash", "ghost", "form_degree", "parity")

    def __init__(self, factors: tuple = ()):
        self.factors = factors
        self._hash = hash(tuple((v.order, e) for v, e in factors))
        g = f = p = 0
        for v, e in factors:
            g += v.ghost * e
            f += v.form_degree * e
            p += v.parity * e
        self.ghost = g
        self.form_degree = f
        self.parity = p % 2

    @classmethod
    def normalize(cls, factors):
        """Canonicalize an arbitrary factor list: returns ``(sign, Monomial | None)``."""
        sign, merged = koszul_sort(factors)
        if merged is None:
            return 0, None
        return sign, cls(merged)

    @property
    def total_degree(self) -> int:
        return self.ghost + self.form_degree

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.factors)

    def exponent(self, v: GradedVariable) -> int:
        for w, e in self.factors:
            if w.order == v.order:
                return e
        return 0

    def variables(self):
        return [v for v, _ in self.factors]

    def weight(self, grading: Callable[[GradedVariable], int]) -> int:
        return sum(grading(v) * e for v, e in self.factors)

    def sort_key(self):
        return (self.degree, tuple((v.order, -e) for v, e in self.factors))

    def __eq__(self, other):
        return (isinstance(other, Monomial) and self._hash == other._hash
                and len(self.factors) == len(other.factors)
                and all(a.order == b.order and e == f
                        for (a, e), (b, f) in zip(self.factors, other.factors)))

    def __hash__(self):
        return self._hash

    def __mul__(self, other: "Monomial"):
        if not self.factors:
            return 1, other
        if not other.factors:
            return 1, self
        return Monomial.normalize(self.factors + other.factors)

    def __str__(self):
        if not self.factors:
            return "1"
        return "*".join(v.name if e == 1 else f"{v.name}^{e}" for v, e in self.factors)

    __repr__ = __str__

    def __reduce__(self):
        return (Monomial, (self.factors,))


_UNIT = Monomial(())


def _coerce(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    return Fraction(c)


class Polynomial:
    """Finite sum of canonical monomials with nonzero rational coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        d = {}
        if terms:
            for m, c in terms.items():
                c = _coerce(c)
                if c:
                    d[m] = c
        self._terms = d
        self._hash = None

    @classmethod
    def _wrap(cls, d: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p._terms = d
        p._hash = None
        return p

    @classmethod
    def constant(cls, c) -> "Polynomial":
        c = _coerce(c)
        return cls._wrap({_UNIT: c} if c else {})

    @classmethod
    def variable(cls, v: GradedVariable, exponent: int = 1) -> "Polynomial":
        if v.parity and exponent > 1:
            return ZERO
        return cls._wrap({Monomial(((v, exponent),)): Fraction(1)})

    @classmethod
    def from_factors(cls, factors, coefficient=1) -> "Polynomial":
        """Polynomial of a single (possibly unsorted) product of factors."""
        sign, m = Monomial.normalize(factors)
        if m is None:
            return ZERO
        return cls._wrap({m: _coerce(coefficient) * sign}) if coefficient else ZERO

    @classmethod
    def product(cls, variables: Iterable[GradedVariable], coefficient=1) -> "Polynomial":
        return cls.from_factors([(v, 1) for v in variables], coefficient)

    # -- mapping-like access ---------------------------------------------------
    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def coefficient(self, m: Monomial) -> Fraction:
        return self._terms.get(m, Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get(_UNIT, Fraction(0))

    # -- arithmetic ----------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        d = dict(self._terms)
        for m, c in other._terms.items():
            s = d.get(m)
            if s is None:
                d[m] = c
            else:
                s += c
                if s:
                    d[m] = s
                else:
                    del d[m]
        return Polynomial._wrap(d)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._wrap({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = _coerce(c)
        if not c:
            return ZERO
        if c == 1:
            return self
        return Polynomial._wrap({m: v * c for m, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        # scalars commute with everything
        return self.scale(other)

    def __truediv__(self, other):
        return self.scale(Fraction(1) / _coerce(other))

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = ONE
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Polynomial.constant(other)._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __reduce__(self):
        return (Polynomial, (dict(self._terms),))

    # -- gradings ------------------------------------------------------------------
    def ghosts(self) -> set[int]:
        return {m.ghost for m in self._terms}

    def form_degrees(self) -> set[int]:
        return {m.form_degree for m in self._terms}

    def total_degrees(self) -> set[int]:
        return {m.total_degree for m in self._terms}

    def parities(self) -> set[int]:
        return {m.parity for m in self._terms}

    def _single(self, values: set[int], what: str) -> int:
        if len(values) > 1:
            raise GradingError(f"polynomial is not homogeneous in {what}: {sorted(values)}")
        return values.pop() if values else 0

    @property
    def ghost(self) -> int:
        return self._single(self.ghosts(), "ghost number")

    @property
    def form_degree(self) -> int:
        return self._single(self.form_degrees(), "form degree")

    @property
    def total_degree(self) -> int:
        return self._single(self.total_degrees(), "total degree")

    @property
    def parity(self) -> int:
        return self._single(self.parities(), "parity")

    def is_homogeneous(self, grading: Callable[[GradedVariable], int] | None = None) -> bool:
        if grading is None:
            return len(self.ghosts()) <= 1 and len(self.form_degrees()) <= 1
        return len({m.weight(grading) for m in self._terms}) <= 1

    def weights(self, grading: Callable[[GradedVariable], int]) -> set[int]:
        return {m.weight(grading) for m in self._terms}

    def degree(self, predicate: Callable[[GradedVariable], bool] | None = None) -> int:
        """Maximal degree in the variables selected by ``predicate``."""
        if not self._terms:
            return -1
        if predicate is None:
            return max(m.degree for m in self._terms)
        return max(sum(e for v, e in m.factors if predicate(v)) for m in self._terms)

    def variables(self) -> set[GradedVariable]:
        out = set()
        for m in self._terms:
            out.update(v for v, _ in m.factors)
        return out

    def filter(self, keep: Callable[[Monomial], bool]) -> "Polynomial":
        return Polynomial._wrap({m: c for m, c in self._terms.items() if keep(m)})

    def part(self, grading: Callable[[GradedVariable], int], value: int) -> "Polynomial":
        """Component of weight ``value`` under ``grading``."""
        return self.filter(lambda m: m.weight(grading) == value)

    def decompose(self, grading: Callable[[GradedVariable], int]) -> dict[int, "Polynomial"]:
        buckets: dict[int, dict] = {}
        for m, c in self._terms.items():
            buckets.setdefault(m.weight(grading), {})[m] = c
        return {w: Polynomial._wrap(d) for w, d in sorted(buckets.items())}

    def sorted_terms(self):
        return sorted(self._terms.items(), key=lambda mc: mc[0].sort_key())

    def __str__(self):
        if not self._terms:
            return "0"
        out = []
        for m, c in self.sorted_terms():
            neg = c < 0
            a = -c if neg else c
            if m.factors:
                body = str(m) if a == 1 else f"{_fmt(a)}*{m}"
            else:
                body = _fmt(a)
            if not out:
                out.append(f"-{body}" if neg else body)
            else:
                out.append(f" - {body}" if neg else f" + {body}")
        return "".join(out)

    def __repr__(self):
        return f"Polynomial({self})"


def _fmt(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


ZERO = Polynomial._wrap({})
ONE = Polynomial._wrap({_UNIT: Fraction(1)})


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    """Graded-commutative product with Koszul signs."""
    if not p._terms or not q._terms:
        return ZERO
    out: dict[Monomial, Fraction] = {}
    for m1, c1 in p._terms.items():
        for m2, c2 in q._terms.items():
            sign, m = m1 * m2
            if m is None:
                continue
            c = c1 * c2 if sign > 0 else -(c1 * c2)
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s += c
                if s:
                    out[m] = s
                else:
                    del out[m]
    return Polynomial._wrap(out)


def _mono_poly(m: Monomial, c: Fraction, p: Polynomial, rest: Monomial | None,
               out: dict) -> None:
    """Accumulate ``c * m * p * rest`` into ``out``."""
    for m2, c2 in p._terms.items():
        sign, mm = m * m2
        if mm is None:
            continue
        if rest is not None and rest.factors:
            s2, mm = mm * rest
            if mm is None:
                continue
            sign *= s2
        val = c * c2 if sign > 0 else -(c * c2)
        s = out.get(mm)
        if s is None:
            out[mm] = val
        else:
            s += val
            if s:
                out[mm] = s
            else:
                del out[mm]


class Derivation:
    """Graded derivation given extensionally by its values on generators.

    ``overflow`` lists generators on which the derivation is undefined because
    the value would require jets beyond the truncation order; applying the
    derivation to a polynomial containing one of them raises
    :class:`TruncationError`.
    """

    __slots__ = ("ghost", "form_degree", "_action", "overflow", "name")

    def __init__(self, action: Mapping[GradedVariable, Polynomial] | None = None,
                 ghost: int = 0, form_degree: int = 0, overflow=(), name: str = ""):
        self.ghost = int(ghost)
        self.form_degree = int(form_degree)
        self._action = {v: p for v, p in (action or {}).items() if p}
        self.overflow = frozenset(overflow)
        self.name = name

    @property
    def parity(self) -> int:
        return (self.ghost + self.form_degree) % 2

    @property
    def action(self) -> Mapping[GradedVariable, Polynomial]:
        return MappingProxyType(self._action)

    def on(self, v: GradedVariable) -> Polynomial:
        if v in self.overflow:
            raise TruncationError(f"derivation {self.name or ''} undefined on {v} "
                                  "(truncation order exceeded)", v)
        return self._action.get(v, ZERO)

    def __call__(self, p: Polynomial) -> Polynomial:
        return apply_derivation(self, p)

    def is_zero(self) -> bool:
        return not self._action and not self.overflow

    def check_homogeneous(self) -> None:
        """Raise :class:`GradingError` naming the first offending generator."""
        for v, p in self._action.items():
            for m in p:
                if (m.ghost - v.ghost != self.ghost
                        or m.form_degree - v.form_degree != self.form_degree):
                    raise GradingError(
                        f"derivation is not homogeneous: on generator {v} it produces "
                        f"{m} (ghost shift {m.ghost - v.ghost}, form shift "
                        f"{m.form_degree - v.form_degree})")

    def _combine(self, other: "Derivation", sign: int) -> "Derivation":
        if other.is_zero():
            return self
        if self.is_zero():
            return other if sign > 0 else other.scale(-1)
        ghost, form = self.ghost, self.form_degree
        if (ghost, form) != (other.ghost, other.form_degree):
            # s + d_H: only the total degree survives; it is recorded as ghost
            if ghost + form != other.ghost + other.form_degree:
                raise GradingError("cannot add derivations of different total degree")
            ghost, form = ghost + form, 0
        act = dict(self._action)
        for v, p in other._action.items():
            act[v] = act.get(v, ZERO) + (p if sign > 0 else -p)
        return Derivation(act, ghost, form, self.overflow | other.overflow)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def scale(self, c) -> "Derivation":
        return Derivation({v: p.scale(c) for v, p in self._action.items()},
                          self.ghost, self.form_degree, self.overflow, self.name)

    def restrict(self, keep: Callable[[GradedVariable], bool]) -> "Derivation":
        return Derivation({v: p for v, p in self._action.items() if keep(v)},
                          self.ghost, self.form_degree,
                          {v for v in self.overflow if keep(v)}, self.name)

    def __eq__(self, other):
        if not isinstance(other, Derivation):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return (self._action == other._action and self.overflow == other.overflow
                and (self.ghost, self.form_degree) == (other.ghost, other.form_degree))

    __hash__ = None

    def __repr__(self):
        body = ", ".join(f"{v}: {p}" for v, p in sorted(self._action.items(),
                                                         key=lambda t: t[0].order))
        return f"Derivation({{{body}}}, ghost={self.ghost}, form_degree={self.form_degree})"


def apply_derivation(D: Derivation, p: Polynomial) -> Polynomial:
    """Left graded Leibniz extension of ``D`` from generators to ``p``."""
    if not p._terms or (not D._action and not D.overflow):
        return ZERO
    act = D._action
    over = D.overflow
    dpar = D.parity
    out: dict[Monomial, Fraction] = {}
    for m, c in p._terms.items():
        fac = m.factors
        prefix_parity = 0
        for i, (v, e) in enumerate(fac):
            if v in over:
                raise TruncationError(
                    f"derivation {D.name or ''} undefined on {v} (truncation order exceeded)", v)
            dv = act.get(v)
            if dv is not None:
                coef = c * e
                if dpar and prefix_parity:
                    coef = -coef
                prefix = Monomial(fac[:i])
                rest_f = fac[i + 1:]
                if e > 1:
                    rest_f = ((v, e - 1),) + rest_f
                rest = Monomial(rest_f) if rest_f else None
                _mono_poly(prefix, coef, dv, rest, out)
            prefix_parity ^= (v.parity & e) & 1
    return Polynomial._wrap(out)


def graded_commutator(D1: Derivation, D2: Derivation) -> Derivation:
    """``[D1, D2] = D1 D2 - (-1)^{|D1||D2|} D2 D1`` evaluated on generators."""
    sign = -1 if (D1.parity and D2.parity) else 1
    gens = set(D1._action) | set(D2._action) | set(D1.overflow) | set(D2.overflow)
    act = {}
    over = set()
    for v in gens:
        try:
            a = apply_derivation(D1, D2.on(v))
            b = apply_derivation(D2, D1.on(v))
        except TruncationError:
            over.add(v)
            continue
        val = a + b if sign > 0 else a - b
        if val:
            act[v] = val
    return Derivation(act, D1.ghost + D2.ghost, D1.form_degree + D2.form_degree, over)


def substitute(p: Polynomial, assignment: Mapping[GradedVariable, Polynomial],
               check: bool = True) -> Polynomial:
    """Graded ring homomorphism sending each assigned variable to its image."""
    if check:
        for v, q in assignment.items():
            for m in q:
                if m.total_degree != v.total_degree or m.parity != v.parity:
                    raise GradingError(
                        f"replacement for {v} has term {m} of total degree "
                        f"{m.total_degree}/parity {m.parity}, expected "
                        f"{v.total_degree}/{v.parity}")
    out = ZERO
    cache: dict[tuple, Polynomial] = {}
    for m, c in p._terms.items():
        term = Polynomial.constant(c)
        run: list = []
        for v, e in m.factors:
            q = assignment.get(v)
            if q is None:
                run.append((v, e))
                continue
            if run:
                term = term * Polynomial.from_factors(run)
                run = []
            key = (v.order, e)
            qe = cache.get(key)
            if qe is None:
                qe = q ** e
                cache[key] = qe
            term = term * qe
            if not term:
                break
        if run and term:
            term = term * Polynomial.from_factors(run)
        out = out + term
    return out


def _partial(p: Polynomial, v: GradedVariable, right: bool) -> Polynomial:
    out: dict[Monomial, Fraction] = {}
    for m, c in p._terms.items():
        fac = m.factors
        for i, (w, e) in enumerate(fac):
            if w.order != v.order:
                continue
            coef = c * e
            if v.parity:
                others = fac[i + 1:] if right else fac[:i]
                par = sum(x.parity * k for x, k in others) & 1
                if par:
                    coef = -coef
            new = fac[:i] + (((w, e - 1),) if e > 1 else ()) + fac[i + 1:]
            mm = Monomial(new)
            s = out.get(mm, 0) + coef
            if s:
                out[mm] = s
            else:
                out.pop(mm, None)
            break
    return Polynomial._wrap(out)


def left_derivative(p: Polynomial, v: GradedVariable) -> Polynomial:
    """``∂p/∂v`` acting from the left."""
    return _partial(p, v, right=False)


def right_derivative(p: Polynomial, v: GradedVariable) -> Polynomial:
    """``p ∂/∂v`` acting from the right."""
    return _partial(p, v, right=True)


def partial_derivation(v: GradedVariable) -> Derivation:
    """The coordinate derivation ``∂/∂v`` as a :class:`Derivation`."""
    return Derivation({v: ONE}, -v.ghost, -v.form_degree, name=f"d/d{v.name}")
