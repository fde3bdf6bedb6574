"""Functional multivectors: momenta or antifields, the extended bracket and Ω₀.

For every formfield ``Ψ^A_I`` the extended context adds a conjugate variable
``π_A^I`` (graded symmetric variant: ghost ``-gh Ψ^A_I``, same parity) or
``Ψ*_A^I`` (skew variant: ghost ``-gh Ψ^A_I + 1``, opposite parity).

A functional ``F = ∫ f`` defines the evolutionary vector field with
characteristic

* on ``z``: ``-δ^R f/δp``
* on ``p``: ``σ(z) δ^R f/δz``

where ``p`` is the conjugate of ``z`` and ``σ(z) = (-1)^{|z|}`` in the
symmetric variant, ``σ = +1`` in the skew variant.  ``{F, G}_E`` is that
vector field applied to the integrand of ``G``.  All results are integrand
representatives; equalities hold modulo ``d_H`` and are tested with
:func:`functional_equal`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Sequence

from .errors import GradingError
from .graded import ZERO, GradedVariable, Kind, Polynomial, multiply, substitute
from .jets import (Evolutionary, FieldInfo, JetContext, LocalFunctional, form_part,
                   functional_equal, variational_derivative)
from .qtarget import BracketSpec, QManifoldSpec, bracket_eval, cotangent_lift, levi_civita

__all__ = [
    "ExtendedJetContext",
    "LagrangeStructureCandidate",
    "LagrangeReport",
    "extend_jet_context",
    "momentum_ladder",
    "pullback_I_E",
    "pi_degree",
    "hamiltonian_field",
    "extended_bracket",
    "omega0",
    "omega0_superfield",
    "s_E",
    "derived_bracket",
    "check_lagrange_structure",
    "apply_equivalence",
    "bivector_generator",
    "functional_field_bracket",
]

SYMMETRIC = "symmetric"
SKEW = "skew"
_VARIANTS = {"sym": SYMMETRIC, "symmetric": SYMMETRIC, "skew": SKEW}


class ExtendedJetContext(JetContext):
    """Jet context with conjugate momenta (or antifields) for every formfield."""

    def __init__(self, base: JetContext, variant: str = SYMMETRIC):
        variant = _VARIANTS.get(variant)
        if variant is None:
            raise ValueError("variant must be 'symmetric' or 'skew'")
        self.base = base
        self.variant = variant
        shift, prefix, role = (0, "pi_", "momentum") if variant == SYMMETRIC else \
            (1, "as_", "antifield")
        conj = {}
        for z in base.formfields:
            info = z.info
            minfo = FieldInfo(info.coordinate, info.indices, role, prefix + info.stem,
                              info.suffix)
            conj[z] = GradedVariable(prefix + z.name, ghost=-z.ghost + shift,
                                     kind=Kind.MOMENTUM, info=minfo)
        self.conjugate = conj
        self.momenta = tuple(conj.values())
        self.base_of = {p: z for z, p in conj.items()}
        super().__init__(base.n, base.J, base.target, base.base_coords, base.thetas,
                         base.formfield, tuple(base.fields) + self.momenta, base._registry)
        # the base BRST data does not depend on the momenta
        self.__dict__["ladders"] = base.ladders

    @property
    def brst_tables(self):
        return self.base.brst_tables

    @property
    def lift_n(self) -> int:
        """Ghost offset of the superfield momenta: ``gh Π̃_A = -gh Ψ^A + lift_n``."""
        return self.n if self.variant == SYMMETRIC else self.n + 1

    def lifted_target(self, check: bool = True) -> QManifoldSpec:
        key = "_lifted" if check else "_lifted_nocheck"
        got = self.__dict__.get(key)
        if got is None:
            got = cotangent_lift(self.target, self.lift_n, check=check)
            self.__dict__[key] = got
        return got

    def momentum(self, A, indices=()) -> GradedVariable:
        return self.conjugate[self.field_of(A, indices)]

    def sigma(self, z: GradedVariable) -> int:
        if self.variant == SYMMETRIC:
            return -1 if z.parity else 1
        return 1

    @property
    def omega0(self) -> LocalFunctional:
        got = self.__dict__.get("_omega0")
        if got is None:
            got = omega0(self)
            self.__dict__["_omega0"] = got
        return got

    def __repr__(self):
        return f"ExtendedJetContext({self.base!r}, variant={self.variant!r})"


def extend_jet_context(ctx: JetContext, variant: str = SYMMETRIC) -> ExtendedJetContext:
    return ExtendedJetContext(ctx, variant)


def _is_momentum(v: GradedVariable) -> int:
    return 1 if v.kind in (Kind.MOMENTUM, Kind.MOMENTUM_JET) else 0


def pi_degree(F) -> set[int]:
    """Set of degrees in momenta/antifields (and their jets) occurring in ``F``."""
    p = F.integrand if isinstance(F, LocalFunctional) else F
    return p.weights(_is_momentum)


def momentum_ladder(ectx: ExtendedJetContext, A) -> Polynomial:
    """``Π̃_A = Σ_I (-1)^{n + |I|(p_A+1)} ε_{I I^c} π_A^I θ^{I^c}``.

    ``p_A`` is ``|Ψ^A|`` for momenta and ``|Ψ^A| + 1`` for antifields.
    """
    if isinstance(A, str):
        A = ectx.target.coordinate(A)
    n = ectx.n
    pA = A.parity if ectx.variant == SYMMETRIC else 1 - A.parity
    out = ZERO
    for k in range(n + 1):
        sgn = -1 if (n + k * (pA + 1)) % 2 else 1
        for I in combinations(range(n), k):
            Ic = tuple(i for i in range(n) if i not in I)
            eps = levi_civita(I + Ic)
            th = Polynomial.product([ectx.thetas[i] for i in Ic])
            out = out + multiply(Polynomial.variable(ectx.momentum(A, I)), th).scale(sgn * eps)
    return out


def _lift_assignment(ectx: ExtendedJetContext, lifted: QManifoldSpec) -> dict:
    assign = dict(ectx.ladders)
    for P in lifted.metadata["momenta"]:
        assign[P] = momentum_ladder(ectx, P.info[1])
    return assign


def pullback_I_E(ectx: ExtendedJetContext, f: Polynomial,
                 lifted: QManifoldSpec | None = None) -> LocalFunctional:
    """``I_E(f) = ∫ f(Ψ̃, Π̃)|_n`` for a function on the lifted target."""
    if lifted is None:
        lifted = ectx.lifted_target(check=False)
    full = substitute(f, _lift_assignment(ectx, lifted))
    return LocalFunctional(form_part(full, ectx.n), ectx)


def _as_functional(ectx: ExtendedJetContext, F: LocalFunctional) -> LocalFunctional:
    if F.context is ectx:
        return F
    if F.context is ectx.base or F.context.fields == ectx.base.fields:
        return LocalFunctional(F.integrand, ectx)
    raise ValueError("functional belongs to a different context")


def hamiltonian_field(ectx: ExtendedJetContext, f: Polynomial, ghost: int) -> Evolutionary:
    """Evolutionary vector field ``{∫f, ·}_E`` of a ghost-homogeneous density."""
    table = {}
    for z, p in ectx.conjugate.items():
        a = variational_derivative(ectx, f, p, side="right")
        b = variational_derivative(ectx, f, z, side="right")
        if a:
            table[z] = -a
        if b:
            table[p] = b if ectx.sigma(z) > 0 else -b
    vghost = ghost if ectx.variant == SYMMETRIC else ghost - 1
    return Evolutionary(ectx, table, ghost=vghost, name="{F,.}")


def extended_bracket(F: LocalFunctional, G: LocalFunctional,
                     ectx: ExtendedJetContext | None = None) -> LocalFunctional:
    """``{F, G}_E`` as an integrand representative."""
    if ectx is None:
        ectx = F.context if isinstance(F.context, ExtendedJetContext) else G.context
    if not isinstance(ectx, ExtendedJetContext):
        raise ValueError("the extended bracket needs an extended context")
    F = _as_functional(ectx, F)
    G = _as_functional(ectx, G)
    out = ZERO
    dens = F.density
    by_ghost: dict[int, Polynomial] = {}
    for m, c in dens.items():
        by_ghost.setdefault(m.ghost, {})[m] = c
    for g, terms in sorted(by_ghost.items()):
        V = hamiltonian_field(ectx, Polynomial(terms), g)
        out = out + V(G.integrand)
    return LocalFunctional(out, ectx)


def omega0(ectx: ExtendedJetContext) -> LocalFunctional:
    """``Ω₀ = -∫ Σ_I (sΨ^A_I) π_A^I`` (component form)."""
    full = ectx.brst_tables[0]
    dens = ZERO
    for z, p in ectx.conjugate.items():
        sz = full.get(z, ZERO)
        if sz:
            dens = dens - multiply(sz, Polynomial.variable(p))
    return LocalFunctional.from_density(ectx, dens)


def omega0_superfield(ectx: ExtendedJetContext) -> LocalFunctional:
    """``-∫ (sΨ̃^A) Π̃_A |_n`` built from the ladders.

    Equals ``(-1)^n Ω₀``: the sign is the orientation of the superfield
    measure relative to the component volume ``θ^0…θ^{n-1}``.
    """
    total = ZERO
    for A in ectx.target.coordinates:
        sPsi = -ectx.d_H(ectx.ladders[A]) + substitute(ectx.target.Q_action[A], ectx.ladders)
        total = total - multiply(sPsi, momentum_ladder(ectx, A))
    return LocalFunctional(form_part(total, ectx.n), ectx)


def s_E(F: LocalFunctional, ectx: ExtendedJetContext | None = None) -> LocalFunctional:
    """Adjoint action ``{Ω₀, F}_E``."""
    if ectx is None:
        ectx = F.context
    return extended_bracket(ectx.omega0, F, ectx)


def derived_bracket(V: LocalFunctional, args: Sequence[LocalFunctional],
                    ectx: ExtendedJetContext | None = None) -> LocalFunctional:
    """``(1/k!) {…{{V, F_1}_E, F_2}_E …, F_k}_E`` for π-independent ``F_i``."""
    if ectx is None:
        ectx = V.context
    for F in args:
        if any(_is_momentum(v) for v in F.integrand.variables()):
            raise GradingError("derived bracket arguments must be independent of the momenta")
    out = V
    for F in args:
        out = extended_bracket(out, F, ectx)
    k = len(args)
    return out.scale(Fraction(1, factorial(k))) if k > 1 else out


# -- Lagrange structures -----------------------------------------------------------------

@dataclass(frozen=True)
class LagrangeStructureCandidate:
    """Deformation ``Ω = Ω₀ + Ω₁ + Ω₂ + …``; ``omegas[k-1] = Ω_k``."""

    context: ExtendedJetContext
    omegas: tuple = ()
    xis: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(self.omegas))
        object.__setattr__(self, "xis", tuple(self.xis))
        for k, W in enumerate(self.omegas, start=1):
            _check_component(W, k + 1, 1, f"Omega_{k}")
        for k, X in enumerate(self.xis, start=1):
            _check_component(X, k + 1, 0, f"Xi_{k}")

    def omega(self, k: int) -> LocalFunctional:
        if k == 0:
            return self.context.omega0
        if k <= len(self.omegas):
            return self.omegas[k - 1]
        return LocalFunctional(ZERO, self.context)


def _check_component(W: LocalFunctional, degree: int, ghost: int, label: str):
    if W.is_zero():
        return
    degs = pi_degree(W)
    if degs != {degree}:
        raise GradingError(f"{label} must be homogeneous of degree {degree} in the "
                           f"momenta, found {sorted(degs)}")
    if W.ghosts() != {ghost}:
        raise GradingError(f"{label} must have ghost number {ghost}, found {sorted(W.ghosts())}")


@dataclass(frozen=True)
class LagrangeReport:
    residuals: tuple  # (order, LocalFunctional)
    vanishing: tuple  # (order, bool)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.vanishing)

    def failures(self):
        return [(k, r) for (k, r), (_, ok) in zip(self.residuals, self.vanishing) if not ok]


def lagrange_residual(cand: LagrangeStructureCandidate, m: int) -> LocalFunctional:
    """``r_m = ½ Σ_{i+j=m} {Ω_i, Ω_j}_E`` (``i, j ≥ 0``)."""
    ectx = cand.context
    total = s_E(cand.omega(m), ectx)
    for i in range(1, m):
        j = m - i
        Wi, Wj = cand.omega(i), cand.omega(j)
        if Wi.is_zero() or Wj.is_zero():
            continue
        total = total + extended_bracket(Wi, Wj, ectx).scale(Fraction(1, 2))
    return total


def check_lagrange_structure(cand: LagrangeStructureCandidate, order: int) -> LagrangeReport:
    """Residuals of the master equation for ``Ω`` up to π-order ``order + 1``."""
    res = []
    ok = []
    for m in range(1, order + 1):
        r = lagrange_residual(cand, m)
        res.append((m, r))
        ok.append((m, functional_equal(r, LocalFunctional(ZERO, cand.context))))
    return LagrangeReport(tuple(res), tuple(ok))


def apply_equivalence(cand: LagrangeStructureCandidate, xis: Sequence[LocalFunctional],
                      order: int) -> LagrangeStructureCandidate:
    """``Ω' = exp(-ad_Ξ) Ω`` with ``ad_Ξ = {Ξ, ·}_E``, kept up to ``Ω'_order``.

    At first order ``Ω'_1 = Ω_1 + s_E Ξ_1``.
    """
    ectx = cand.context
    xis = tuple(xis)
    for k, X in enumerate(xis, start=1):
        _check_component(X, k + 1, 0, f"Xi_{k}")
    zero = LocalFunctional(ZERO, ectx)
    current = {m: cand.omega(m) for m in range(order + 1)}
    result = dict(current)
    r = 1
    while True:
        nxt = {m: zero for m in range(order + 1)}
        any_term = False
        for k, X in enumerate(xis, start=1):
            if X.is_zero():
                continue
            for j, W in current.items():
                m = j + k
                if m > order or W.is_zero():
                    continue
                nxt[m] = nxt[m] + extended_bracket(X, W, ectx)
                any_term = True
        if not any_term:
            break
        current = {m: W.scale(Fraction(-1, r)) for m, W in nxt.items()}
        for m, W in current.items():
            result[m] = result[m] + W
        r += 1
    omegas = tuple(result[m] for m in range(1, order + 1))
    return LagrangeStructureCandidate(ectx, omegas, xis)


# -- functional bracket on the space of maps ------------------------------------------------

def bivector_generator(B: BracketSpec, lifted: QManifoldSpec) -> Polynomial:
    """Quadratic ``p = Σ_{C≤D} x^{CD}(Ψ) Π_C Π_D`` with ``½{{p,Ψ^C},Ψ^D} = (-1)^{|C|+n} E^{CD}``.

    ``n`` is the shift of the cotangent lift.
    """
    base = lifted.metadata["base"]
    n = lifted.metadata["n"]
    mom = dict(zip(base.coordinates, lifted.metadata["momenta"]))
    LB = lifted.bracket
    order = {v: i for i, v in enumerate(base.coordinates)}
    p = ZERO
    for (C, D), E in sorted(B.bivector.items(), key=lambda t: (order[t[0][0]], order[t[0][1]])):
        if order[C] > order[D]:
            continue
        quad = Polynomial.product([mom[C], mom[D]])
        if not quad:
            raise GradingError(f"bracket entry {{{C}, {D}}} cannot be encoded: the conjugate "
                               "momentum squares to zero")
        t = bracket_eval(bracket_eval(quad, Polynomial.variable(C), LB),
                         Polynomial.variable(D), LB).scale(Fraction(1, 2))
        tc = t.constant_term()
        if not tc or t != Polynomial.constant(tc):
            raise GradingError(f"cannot normalize bracket entry {{{C}, {D}}}")
        # match the derived-bracket identity ½{{p,f},g} = (-1)^{|f|+n} {f,g}
        sign = -1 if (C.parity + n) % 2 else 1
        p = p + multiply(E, quad).scale(sign / tc)
    return p


def _bracket_extension(ctx: JetContext, B: BracketSpec):
    cache = ctx.__dict__.setdefault("_bracket_ext", {})
    key = id(B)
    got = cache.get(key)
    if got is None:
        ectx = ExtendedJetContext(ctx, SYMMETRIC)
        lifted = ectx.lifted_target(check=False)
        V = pullback_I_E(ectx, bivector_generator(B, lifted), lifted)
        got = (ectx, V, B)
        cache[key] = got
    return got[0], got[1]


def functional_field_bracket(F: LocalFunctional, G: LocalFunctional,
                             B: BracketSpec | None = None) -> LocalFunctional:
    """Bracket of functionals induced by the target bracket ``E^{AB}``.

    Realized as the derived bracket ``(-1)^{|F|} ½{{I_E(p), F}_E, G}_E`` of the
    quadratic momentum function ``p`` encoding ``E^{AB}`` on the cotangent
    lift; this contracts the ε-weighted superfield Euler–Lagrange derivatives
    of ``F`` and ``G`` through ``E^{AB}(Ψ̃)``.  The target bracket must have
    the degree of an AKSZ target, ``k = 1 - n``; the functional bracket then
    has ghost number ``k + n = 1`` and is odd.
    """
    ctx = F.context
    if B is None:
        B = ctx.target.bracket
    if B is None:
        raise ValueError("target has no bracket")
    if B.ghost_shift != 1 - ctx.n or B.parity != (1 - ctx.n) % 2:
        raise GradingError(f"bracket of degree {B.ghost_shift} does not match base dimension "
                           f"{ctx.n} (expected {1 - ctx.n})")
    ectx, V = _bracket_extension(ctx, B)
    out = ZERO
    by_parity: dict[int, dict] = {}
    for m, c in F.integrand.items():
        by_parity.setdefault((m.total_degree - ctx.n) % 2, {})[m] = c
    for par, terms in sorted(by_parity.items()):
        part = derived_bracket(V, [LocalFunctional(Polynomial(terms), ctx), G], ectx).integrand
        out = out + (-part if par else part)
    return LocalFunctional(out, ctx)
