"""Jet-space field content of AKSZ sigma models and their BRST differential.

The base has coordinates ``x^μ`` and odd ``θ^μ`` (the horizontal forms
``dx^μ``).  Every target coordinate ``Ψ^A`` gives formfields ``Ψ^A_I`` for
strictly increasing index lists ``I`` with ghost number ``gh A - |I|``, and
the formfields have jets ``∂_K Ψ^A_I`` labelled by sorted multi-indices.

Conventions used throughout:

* the ladder is ``Ψ̃^A = Σ_I Ψ^A_I θ^I`` with ``θ^I`` the product of the
  ``θ``'s in increasing order, written to the right of the component;
* top forms are ``density · θ^0…θ^{n-1}``, again with the volume on the right,
  so derivations acting on fields act identically on the form and on its
  density;
* the BRST differential is ``s Ψ̃^A = -d_H Ψ̃^A + Q^A(Ψ̃)``.

Jets up to the context order ``J`` are created eagerly and are the
generators of cohomology blocks.  Variational calculus (Euler–Lagrange
derivatives, brackets of functionals) needs more derivatives than any fixed
``J``; those jets are created on demand in a registry shared by all contexts
derived from one build.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .errors import GradingError, NotACocycleError, TruncationError
from .graded import (ONE, ZERO, Derivation, GradedVariable, Kind, Monomial,
                     Polynomial, apply_derivation, left_derivative, multiply,
                     right_derivative, substitute)
from .qtarget import QManifoldSpec, check_nilpotent, q_derivation

__all__ = [
    "FieldInfo",
    "JetInfo",
    "JetContext",
    "LocalFunctional",
    "DescentLadder",
    "Evolutionary",
    "build_jet_context",
    "ladder",
    "ladders",
    "split_theta",
    "form_part",
    "total_derivative",
    "horizontal_differential",
    "prolong",
    "brst_tables",
    "aksz_brst",
    "aksz_brst_parts",
    "grading_N",
    "euler_lagrange",
    "variational_derivatives",
    "functional_equal",
    "pullback_I",
    "descent_ladder",
    "build_master_action",
]


@dataclass(frozen=True)
class FieldInfo:
    """Identity of an undifferentiated field: target coordinate, form indices, role."""

    coordinate: GradedVariable
    indices: tuple
    role: str  # "formfield", "momentum" or "antifield"
    stem: str
    suffix: str


@dataclass(frozen=True)
class JetInfo:
    field: GradedVariable
    multi: tuple


def _split_name(name: str) -> tuple[str, str]:
    if "[" in name:
        i = name.index("[")
        return name[:i], name[i:]
    return name, ""


def _digits(idx: Iterable[int]) -> str:
    return "".join(str(i) for i in idx)


def jet_data(v: GradedVariable):
    """``(field, multi-index)`` for a field or jet variable, else ``None``."""
    if isinstance(v.info, FieldInfo):
        return v, ()
    if isinstance(v.info, JetInfo):
        return v.info.field, v.info.multi
    return None


def jet_order(v: GradedVariable) -> int:
    d = jet_data(v)
    return -1 if d is None else len(d[1])


def form_rank(v: GradedVariable) -> int:
    """Number of form indices carried by a formfield jet (0 otherwise)."""
    d = jet_data(v)
    if d is None or d[0].info.role != "formfield":
        return 0
    return len(d[0].info.indices)


class JetContext:
    """Field content for base dimension ``n`` and jet order ``J``.

    Built by :func:`build_jet_context`; immutable apart from the shared
    on-demand jet registry.
    """

    def __init__(self, n: int, J: int, target: QManifoldSpec, base_coords, thetas,
                 formfield: Mapping, fields: Sequence[GradedVariable], registry: dict):
        self.n = n
        self.J = J
        self.target = target
        self.base_coords = tuple(base_coords)
        self.thetas = tuple(thetas)
        self.formfield = dict(formfield)
        self.formfields = tuple(self.formfield.values())
        self.fields = tuple(fields)
        self._registry = registry
        for f in self.fields:
            for k in range(1, J + 1):
                for K in _multi_indices(n, k):
                    self.jet(f, K)

    # -- variables --------------------------------------------------------------
    def jet(self, field: GradedVariable, K: Iterable[int]) -> GradedVariable:
        """Jet variable ``∂_K field`` (created on first use)."""
        K = tuple(sorted(K))
        if not K:
            return field
        key = (field, K)
        v = self._registry.get(key)
        if v is None:
            info = field.info
            kind = Kind.JET if info.role == "formfield" else Kind.MOMENTUM_JET
            v = GradedVariable(f"{info.stem}_d{_digits(K)}{info.suffix}", ghost=field.ghost,
                               form_degree=0, kind=kind, info=JetInfo(field, K))
            self._registry[key] = v
        return v

    def field_of(self, A, indices: Iterable[int] = ()) -> GradedVariable:
        if isinstance(A, str):
            A = self.target.coordinate(A)
        return self.formfield[(A, tuple(indices))]

    def jet_variables(self, max_order: int | None = None, fields=None) -> list[GradedVariable]:
        if max_order is None:
            max_order = self.J
        out = []
        for f in (self.fields if fields is None else fields):
            out.append(f)
            for k in range(1, max_order + 1):
                for K in _multi_indices(self.n, k):
                    out.append(self.jet(f, K))
        return out

    def generators(self, max_order: int | None = None, *, include_x: bool = True,
                   include_theta: bool = True, fields=None) -> list[GradedVariable]:
        """Block generators: base coordinates, θ's and jets up to ``max_order``."""
        out = []
        if include_x:
            out.extend(self.base_coords)
        if include_theta:
            out.extend(self.thetas)
        out.extend(self.jet_variables(max_order, fields))
        return out

    @property
    def volume(self) -> Polynomial:
        return Polynomial.product(self.thetas)

    def with_order(self, J: int) -> "JetContext":
        """Same variables, different truncation order."""
        return JetContext(self.n, J, self.target, self.base_coords, self.thetas,
                          self.formfield, self.fields, self._registry)

    # -- total derivatives --------------------------------------------------------
    def _d_on(self, v: GradedVariable, mu: int) -> Polynomial:
        if v.kind == Kind.BASE:
            return ONE if v == self.base_coords[mu] else ZERO
        d = jet_data(v)
        if d is None:
            return ZERO
        f, K = d
        return Polynomial.variable(self.jet(f, K + (mu,)))

    def d(self, mu: int, p: Polynomial) -> Polynomial:
        """Total derivative without truncation (jets are generated as needed)."""
        act = {v: self._d_on(v, mu) for v in p.variables()}
        return apply_derivation(Derivation(act, name=f"D{mu}"), p)

    def d_multi(self, K: Iterable[int], p: Polynomial) -> Polynomial:
        for mu in K:
            if not p:
                break
            p = self.d(mu, p)
        return p

    def d_H(self, p: Polynomial) -> Polynomial:
        """Horizontal differential without truncation."""
        act = {}
        for v in p.variables():
            acc = ZERO
            for mu, th in enumerate(self.thetas):
                dv = self._d_on(v, mu)
                if dv:
                    acc = acc + multiply(Polynomial.variable(th), dv)
            if acc:
                act[v] = acc
        return apply_derivation(Derivation(act, form_degree=1, name="d_H"), p)

    def total_derivation(self, mu: int) -> Derivation:
        """``∂_μ`` on the generators of this context; undefined on order-``J`` jets."""
        act = {x: ONE for i, x in enumerate(self.base_coords) if i == mu}
        over = []
        for v in self.jet_variables():
            if jet_order(v) >= self.J:
                over.append(v)
            else:
                act[v] = self._d_on(v, mu)
        return Derivation(act, overflow=over, name=f"D{mu}")

    def horizontal_derivation(self) -> Derivation:
        act = {x: Polynomial.variable(th) for x, th in zip(self.base_coords, self.thetas)}
        over = []
        for v in self.jet_variables():
            if jet_order(v) >= self.J:
                over.append(v)
                continue
            acc = ZERO
            for mu, th in enumerate(self.thetas):
                acc = acc + multiply(Polynomial.variable(th), self._d_on(v, mu))
            act[v] = acc
        return Derivation(act, form_degree=1, overflow=over, name="d_H")

    # -- cached AKSZ data -------------------------------------------------------------
    @cached_property
    def ladders(self) -> dict:
        return {A: ladder(self, A) for A in self.target.coordinates}

    @cached_property
    def brst_tables(self):
        return brst_tables(self)

    @cached_property
    def s(self) -> "Evolutionary":
        """The BRST differential as an untruncated evolutionary vector field."""
        return Evolutionary(self, self.brst_tables[0], ghost=1, name="s")

    def __repr__(self):
        return (f"JetContext(n={self.n}, J={self.J}, target={self.target.name!r}, "
                f"fields={len(self.fields)})")


def _multi_indices(n: int, k: int):
    """Sorted multi-indices of length ``k`` over ``0..n-1``."""
    if k == 0:
        yield ()
        return

    def rec(start, left, acc):
        if left == 0:
            yield tuple(acc)
            return
        for i in range(start, n):
            acc.append(i)
            yield from rec(i, left - 1, acc)
            acc.pop()

    yield from rec(0, k, [])


def build_jet_context(n: int, target: QManifoldSpec, J: int) -> JetContext:
    """Generate ``x^μ``, ``θ^μ``, all formfields and their jets up to order ``J``."""
    if n < 1:
        raise ValueError("base dimension must be at least 1")
    if J < 0:
        raise ValueError("jet order must be non-negative")
    xs = [GradedVariable(f"x{mu}", kind=Kind.BASE) for mu in range(n)]
    ths = [GradedVariable(f"th{mu}", form_degree=1, kind=Kind.THETA) for mu in range(n)]
    formfield = {}
    for A in target.coordinates:
        stem, suffix = _split_name(A.name)
        for k in range(n + 1):
            for I in combinations(range(n), k):
                fstem = f"{stem}_f{_digits(I)}" if I else stem
                info = FieldInfo(A, I, "formfield", fstem, suffix)
                formfield[(A, I)] = GradedVariable(f"{fstem}{suffix}", ghost=A.ghost - k,
                                                   kind=Kind.FORMFIELD, info=info)
    return JetContext(n, J, target, xs, ths, formfield, list(formfield.values()), {})


def _theta_product(ctx: JetContext, I: Iterable[int]) -> Polynomial:
    return Polynomial.product([ctx.thetas[i] for i in I])


def ladder(ctx: JetContext, A) -> Polynomial:
    """``Ψ̃^A = Σ_I Ψ^A_I θ^I`` over strictly increasing ``I``."""
    if isinstance(A, str):
        A = ctx.target.coordinate(A)
    out = ZERO
    for k in range(ctx.n + 1):
        for I in combinations(range(ctx.n), k):
            out = out + multiply(Polynomial.variable(ctx.formfield[(A, I)]),
                                 _theta_product(ctx, I))
    return out


def ladders(ctx: JetContext) -> dict:
    return dict(ctx.ladders)


def split_theta(p: Polynomial, thetas: Sequence[GradedVariable]) -> dict:
    """Write ``p = Σ_I c_I θ^I`` with ``θ^I`` increasing and on the right.

    Returns ``{I: c_I}`` with θ-free coefficients.
    """
    pos = {th.order: i for i, th in enumerate(thetas)}
    buckets: dict[tuple, dict] = {}
    for m, c in p.items():
        rest = []
        idx = []
        sign = 1
        odd_after = 0
        # walk right to left: each θ passes the odd non-θ factors to its right
        for v, e in reversed(m.factors):
            if v.order in pos:
                if odd_after:
                    sign = -sign
                idx.append(pos[v.order])
            else:
                rest.append((v, e))
                odd_after ^= (v.parity & e) & 1
        rest.reverse()
        idx.reverse()
        perm_sign, ordered = _sort_sign(idx)
        sign *= perm_sign
        key = tuple(ordered)
        mono = Monomial(tuple(rest))
        d = buckets.setdefault(key, {})
        d[mono] = d.get(mono, 0) + (c if sign > 0 else -c)
    out = {}
    for k, d in sorted(buckets.items()):
        poly = Polynomial(d)
        if poly:
            out[k] = poly
    return out


def _sort_sign(idx):
    idx = list(idx)
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, idx


def form_part(p: Polynomial, k: int) -> Polynomial:
    """Component of form degree ``k``."""
    return p.filter(lambda m: m.form_degree == k)


def _check_order(ctx: JetContext, p: Polynomial, what: str) -> None:
    for v in p.variables():
        if jet_order(v) >= ctx.J:
            raise TruncationError(f"{what} needs a jet of order {ctx.J + 1} "
                                  f"(from {v}); rebuild the context with larger J", v)


def total_derivative(ctx: JetContext, mu: int, p: Polynomial) -> Polynomial:
    """``∂_μ p``; rejects input containing jets of the truncation order."""
    _check_order(ctx, p, "total derivative")
    return ctx.d(mu, p)


def horizontal_differential(ctx: JetContext, p: Polynomial) -> Polynomial:
    """``d_H p = θ^μ ∂_μ p``."""
    _check_order(ctx, p, "horizontal differential")
    return ctx.d_H(p)


class Evolutionary:
    """Evolutionary vector field ``∂_K S^α ∂/∂z^α_K`` from its characteristic.

    Values on jets are computed lazily by prolongation and memoized; no
    truncation applies.
    """

    def __init__(self, ctx: JetContext, table: Mapping[GradedVariable, Polynomial],
                 ghost: int = 0, name: str = ""):
        self.ctx = ctx
        self.table = {f: p for f, p in table.items() if p}
        self.ghost = ghost
        self.name = name
        self._memo: dict = {}

    def on(self, v: GradedVariable) -> Polynomial:
        d = jet_data(v)
        if d is None:
            return ZERO
        f, K = d
        if f not in self.table:
            return ZERO
        key = (f, K)
        val = self._memo.get(key)
        if val is None:
            if not K:
                val = self.table[f]
            else:
                val = self.ctx.d(K[-1], self.on(self.ctx.jet(f, K[:-1])))
            self._memo[key] = val
        return val

    def derivation(self, variables: Iterable[GradedVariable]) -> Derivation:
        return Derivation({v: self.on(v) for v in variables}, ghost=self.ghost, name=self.name)

    def __call__(self, p: Polynomial) -> Polynomial:
        return apply_derivation(self.derivation(p.variables()), p)


def prolong(ctx: JetContext, table: Mapping[GradedVariable, Polynomial],
            ghost: int | None = None, name: str = "") -> Derivation:
    """Prolongation of ``z ↦ table[z]`` to all jets of the context.

    Jets whose prolonged value would need derivatives beyond order ``J`` are
    marked as overflow; applying the result to them raises
    :class:`TruncationError`.
    """
    if ghost is None:
        ghosts = set()
        for f, p in table.items():
            for m in p:
                ghosts.add(m.ghost - f.ghost)
        if len(ghosts) > 1:
            raise GradingError("prolongation table is not ghost-homogeneous")
        ghost = ghosts.pop() if ghosts else 0
    ev = Evolutionary(ctx, table, ghost, name)
    act = {}
    over = []
    for v in ctx.jet_variables():
        f, K = jet_data(v)
        if f not in ev.table:
            continue
        # the characteristic's highest jet order plus |K| must stay within J
        base_order = max((jet_order(w) for w in ev.table[f].variables()), default=-1)
        if base_order + len(K) > ctx.J:
            over.append(v)
            continue
        act[v] = ev.on(v)
    return Derivation(act, ghost=ghost, overflow=over, name=name)


def brst_tables(ctx: JetContext):
    """Characteristics ``(s, s₋₁, s₀)`` on undifferentiated formfields.

    ``s₋₁`` is read off from ``-d_H Ψ̃`` and ``s₀`` from ``Q^A(Ψ̃)``.
    """
    lad = ctx.ladders
    s_m1: dict = {}
    s_0: dict = {}
    for A in ctx.target.coordinates:
        minus = split_theta(-ctx.d_H(lad[A]), ctx.thetas)
        zero = split_theta(substitute(ctx.target.Q_action[A], lad), ctx.thetas)
        for k in range(ctx.n + 1):
            for I in combinations(range(ctx.n), k):
                f = ctx.formfield[(A, I)]
                s_m1[f] = minus.get(I, ZERO)
                s_0[f] = zero.get(I, ZERO)
    full = {f: s_m1[f] + s_0[f] for f in s_m1}
    return full, s_m1, s_0


def aksz_brst(ctx: JetContext) -> Derivation:
    """AKSZ BRST differential ``s Ψ̃ = -d_H Ψ̃ + Q(Ψ̃)``, prolonged to jets (truncated at ``J``)."""
    if not check_nilpotent(ctx.target).passed:
        from .errors import NotNilpotentError
        raise NotNilpotentError("target vector field is not nilpotent")
    return prolong(ctx, ctx.brst_tables[0], ghost=1, name="s")


def aksz_brst_parts(ctx: JetContext) -> tuple[Derivation, Derivation]:
    """``(s₋₁, s₀)``: the spacetime part and the part fixed by ``Q``."""
    _, m1, z = ctx.brst_tables
    return (prolong(ctx, m1, ghost=1, name="s_-1"), prolong(ctx, z, ghost=1, name="s_0"))


class _NWeight:
    def __call__(self, v: GradedVariable) -> int:
        if v.kind == Kind.THETA:
            return -1
        return form_rank(v)


N_GRADING = _NWeight()


def grading_N(ctx: JetContext, p: Polynomial) -> dict[int, Polynomial]:
    """Decomposition by ``𝒩`` = (number of form indices) − (number of θ's)."""
    return p.decompose(N_GRADING)


# -- local functionals ------------------------------------------------------------------

class LocalFunctional:
    """Top horizontal form ``density · θ^0…θ^{n-1}`` standing for its class mod ``d_H``."""

    __slots__ = ("integrand", "context")

    def __init__(self, integrand: Polynomial, context: JetContext):
        for m in integrand:
            if m.form_degree != context.n:
                raise GradingError(f"integrand term {m} has form degree {m.form_degree}, "
                                   f"expected {context.n}")
        self.integrand = integrand
        self.context = context

    @classmethod
    def from_density(cls, ctx: JetContext, density: Polynomial) -> "LocalFunctional":
        return cls(multiply(density, ctx.volume), ctx)

    @property
    def density(self) -> Polynomial:
        parts = split_theta(self.integrand, self.context.thetas)
        return parts.get(tuple(range(self.context.n)), ZERO)

    @property
    def ghost(self) -> int:
        return self.integrand.total_degree - self.context.n if self.integrand else 0

    def ghosts(self) -> set[int]:
        return {d - self.context.n for d in self.integrand.total_degrees()}

    def is_zero(self) -> bool:
        return not self.integrand

    def __add__(self, other: "LocalFunctional") -> "LocalFunctional":
        return LocalFunctional(self.integrand + other.integrand, self.context)

    def __sub__(self, other: "LocalFunctional") -> "LocalFunctional":
        return LocalFunctional(self.integrand - other.integrand, self.context)

    def __neg__(self):
        return LocalFunctional(-self.integrand, self.context)

    def scale(self, c) -> "LocalFunctional":
        return LocalFunctional(self.integrand.scale(c), self.context)

    def equals(self, other: "LocalFunctional") -> bool:
        return functional_equal(self, other)

    def __repr__(self):
        return f"LocalFunctional(∫ {self.integrand})"


def _fields_in(p: Polynomial) -> list[GradedVariable]:
    out = {}
    for v in p.variables():
        d = jet_data(v)
        if d is not None:
            out[d[0].order] = d[0]
    return [out[k] for k in sorted(out)]


def _density_of(ctx: JetContext, F) -> Polynomial:
    if isinstance(F, LocalFunctional):
        return F.density
    return LocalFunctional(F, ctx).density


def variational_derivative(ctx: JetContext, density: Polynomial, z: GradedVariable,
                           side: str = "left") -> Polynomial:
    """``Σ_K (-1)^{|K|} ∂_K (∂f/∂z_K)`` of a density (left or right partials)."""
    partial = left_derivative if side == "left" else right_derivative
    out = ZERO
    for v in sorted(density.variables(), key=lambda w: w.order):
        d = jet_data(v)
        if d is None or d[0] != z:
            continue
        K = d[1]
        term = ctx.d_multi(K, partial(density, v))
        out = out + (term if len(K) % 2 == 0 else -term)
    return out


def euler_lagrange(ctx: JetContext, F, z: GradedVariable, side: str = "left") -> Polynomial:
    """Euler–Lagrange derivative ``δF/δz`` (density-valued)."""
    return variational_derivative(ctx, _density_of(ctx, F), z, side)


def variational_derivatives(F: LocalFunctional, side: str = "left") -> dict:
    ctx = F.context
    dens = F.density
    out = {}
    for z in _fields_in(dens):
        e = variational_derivative(ctx, dens, z, side)
        if e:
            out[z] = e
    return out


def functional_equal(F: LocalFunctional, G: LocalFunctional) -> bool:
    """``∫F = ∫G`` iff every Euler–Lagrange derivative of ``F - G`` vanishes."""
    return not variational_derivatives(F - G)


def pullback_I(ctx: JetContext, f: Polynomial) -> LocalFunctional:
    """``I(f) = ∫ f(Ψ̃)|_n``."""
    return LocalFunctional(form_part(substitute(f, ctx.ladders), ctx.n), ctx)


@dataclass(frozen=True)
class DescentLadder:
    """Forms ``ω_k = f(Ψ̃)|_k``; ``residuals[k] = s ω_k + d_H ω_{k-1}``."""

    forms: tuple
    residuals: tuple
    verified: bool = dc_field(default=False)

    def top(self, ctx: JetContext) -> LocalFunctional:
        return LocalFunctional(self.forms[-1], ctx)


def descent_ladder(ctx: JetContext, f: Polynomial) -> DescentLadder:
    """Descent equations generated by a target cocycle ``f``."""
    if not f or f.constant_term():
        raise GradingError("descent requires a target function without constant term")
    foreign = f.variables() - set(ctx.target.coordinates)
    if foreign:
        raise GradingError(f"descent function uses non-target variables {sorted(map(str, foreign))}")
    if apply_derivation(q_derivation(ctx.target), f):
        raise NotACocycleError("target function is not Q-closed")
    full = substitute(f, ctx.ladders)
    forms = tuple(form_part(full, k) for k in range(ctx.n + 1))
    res = []
    for k in range(ctx.n + 1):
        r = ctx.s(forms[k])
        if k:
            r = r + ctx.d_H(forms[k - 1])
        res.append(r)
    return DescentLadder(forms, tuple(res), all(not r for r in res))


def build_master_action(ctx: JetContext) -> LocalFunctional:
    """``𝐒 = ∫ [(-d_H Ψ̃^A) V_A(Ψ̃) + S(Ψ̃)]|_n``."""
    M = ctx.target
    if M.symplectic_potential is None or M.master_function is None:
        raise ValueError("master action needs a symplectic potential and a master function")
    lad = ctx.ladders
    total = substitute(M.master_function, lad)
    for A in M.coordinates:
        VA = M.symplectic_potential.get(A)
        if not VA:
            continue
        total = total + multiply(-ctx.d_H(lad[A]), substitute(VA, lad))
    return LocalFunctional(form_part(total, ctx.n), ctx)
