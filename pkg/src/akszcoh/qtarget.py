"""Target-space structures: Q-manifolds, graded brackets, master functions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import GradingError, NotNilpotentError
from .graded import (ONE, ZERO, Derivation, GradedVariable, Kind, Polynomial,
                     apply_derivation, left_derivative,
                     multiply, right_derivative)

__all__ = [
    "BracketSpec",
    "QManifoldSpec",
    "NilpotencyReport",
    "q_derivation",
    "check_nilpotent",
    "bracket_eval",
    "hamiltonian_vf",
    "check_master_equation",
    "cotangent_lift",
    "levi_civita",
    "lie_algebra_target",
    "lift_formula",
]


def _swap_sign(a: GradedVariable, b: GradedVariable, kappa: int) -> int:
    # {b,a} = -(-1)^{(|a|+κ)(|b|+κ)} {a,b}
    return 1 if ((a.parity + kappa) * (b.parity + kappa)) % 2 else -1


def levi_civita(indices: Sequence[int]) -> int:
    """Sign of the permutation ``indices`` of ``0..k-1`` (0 if any repeat)."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class BracketSpec:
    """Graded bracket fixed by its values ``{Ψ^A, Ψ^B}`` on coordinates.

    Only one ordering of each pair needs to be declared; the other follows
    from graded symmetry ``{f,g} = -(-1)^{(|f|+κ)(|g|+κ)} {g,f}``.
    """

    bivector: Mapping[tuple[GradedVariable, GradedVariable], Polynomial]
    ghost_shift: int
    parity: int

    def __post_init__(self):
        full: dict = {}
        for (a, b), e in self.bivector.items():
            if not e:
                continue
            exp_ghost = a.ghost + b.ghost + self.ghost_shift
            exp_par = (a.parity + b.parity + self.parity) % 2
            for m in e:
                if m.ghost != exp_ghost or m.parity != exp_par:
                    raise GradingError(
                        f"bracket {{{a}, {b}}} = {e} has term of ghost {m.ghost}, "
                        f"expected {exp_ghost}")
            swapped = e.scale(_swap_sign(a, b, self.parity))
            if a == b:
                if swapped != e:
                    raise GradingError(f"diagonal bracket entry for {a} violates graded symmetry")
                full[(a, a)] = e
                continue
            if (b, a) in self.bivector and self.bivector[(b, a)] != swapped:
                raise GradingError(f"bracket entries for ({a}, {b}) violate graded symmetry")
            full[(a, b)] = e
            full[(b, a)] = swapped
        object.__setattr__(self, "bivector", full)

    def entry(self, a: GradedVariable, b: GradedVariable) -> Polynomial:
        return self.bivector.get((a, b), ZERO)

    def coordinates(self) -> set[GradedVariable]:
        out = set()
        for a, b in self.bivector:
            out.add(a)
            out.add(b)
        return out


@dataclass(frozen=True)
class QManifoldSpec:
    """Target data: coordinates, homological vector field, optional structures."""

    coordinates: tuple[GradedVariable, ...]
    Q_action: Mapping[GradedVariable, Polynomial]
    bracket: BracketSpec | None = None
    master_function: Polynomial | None = None
    symplectic_potential: Mapping[GradedVariable, Polynomial] | None = None
    name: str = ""
    metadata: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coordinates", tuple(self.coordinates))
        q = {v: self.Q_action.get(v, ZERO) for v in self.coordinates}
        object.__setattr__(self, "Q_action", q)
        for v, p in q.items():
            for m in p:
                if m.ghost != v.ghost + 1 or m.parity == v.parity:
                    raise GradingError(
                        f"Q component of {v} has term {m} of ghost {m.ghost}; "
                        f"expected ghost {v.ghost + 1} and flipped parity")

    @property
    def Q(self) -> Derivation:
        return q_derivation(self)

    def coordinate(self, name: str) -> GradedVariable:
        for v in self.coordinates:
            if v.name == name:
                return v
        raise KeyError(name)

    def with_master_function(self, S: Polynomial) -> "QManifoldSpec":
        """Replace ``Q`` by the Hamiltonian vector field of ``S``."""
        if self.bracket is None:
            raise ValueError("a bracket is required to generate Q from a master function")
        v = hamiltonian_vf(S, self.bracket, self.coordinates)
        return replace(self, Q_action={c: v.on(c) for c in self.coordinates},
                       master_function=S)


@dataclass(frozen=True)
class NilpotencyReport:
    residuals: Mapping
    passed: bool

    @property
    def pass_(self) -> bool:
        return self.passed

    def __bool__(self):
        return self.passed


def q_derivation(M: QManifoldSpec) -> Derivation:
    return Derivation(M.Q_action, ghost=1, name="Q")


def check_nilpotent(M: QManifoldSpec) -> NilpotencyReport:
    """Evaluate ``½[Q,Q] = Q∘Q`` on every coordinate."""
    Q = q_derivation(M)
    residuals = {}
    for v in M.coordinates:
        r = apply_derivation(Q, Q.on(v))
        if r:
            residuals[v] = r
    return NilpotencyReport(residuals, not residuals)


def bracket_eval(f: Polynomial, g: Polynomial, B: BracketSpec) -> Polynomial:
    """``{f, g} = (f ∂⃖_A) E^{AB} (∂⃗_B g)``."""
    if not f or not g:
        return ZERO
    fv = f.variables()
    gv = g.variables()
    out = ZERO
    right = {}
    left = {}
    for (a, b), e in B.bivector.items():
        if a not in fv or b not in gv:
            continue
        fa = right.get(a)
        if fa is None:
            fa = right[a] = right_derivative(f, a)
        gb = left.get(b)
        if gb is None:
            gb = left[b] = left_derivative(g, b)
        if fa and gb:
            out = out + multiply(multiply(fa, e), gb)
    return out


def hamiltonian_vf(S: Polynomial, B: BracketSpec,
                   coordinates: Sequence[GradedVariable] | None = None) -> Derivation:
    """Derivation ``v(Ψ) = {S, Ψ}``."""
    if coordinates is None:
        coordinates = sorted(B.coordinates() | S.variables(), key=lambda v: v.order)
    ghosts = S.ghosts()
    if len(ghosts) > 1:
        raise GradingError("master function must be ghost-homogeneous")
    gh = (min(ghosts) if ghosts else 0) + B.ghost_shift
    act = {v: bracket_eval(S, Polynomial.variable(v), B) for v in coordinates}
    return Derivation(act, gh, name="{S,.}")


def check_master_equation(S: Polynomial, B: BracketSpec) -> NilpotencyReport:
    """Residual ``½{S,S}``."""
    r = bracket_eval(S, S, B).scale(Fraction(1, 2))
    return NilpotencyReport({"1/2{S,S}": r} if r else {}, not r)


def cotangent_lift(M: QManifoldSpec, n: int, prefix: str = "pi_",
                   check: bool = True) -> QManifoldSpec:
    """Target of the extended model: coordinates ``Ψ^A, Π_A`` with ``{Π_B, Ψ^A} = -δ``.

    ``gh Π_A = -gh Ψ^A + n``; the lifted vector field is generated by ``-Q^A Π_A``.
    ``check=False`` skips the nilpotency gate (used when only the lifted
    bracket is needed).
    """
    report = check_nilpotent(M) if check else NilpotencyReport({}, True)
    if not report.passed:
        raise NotNilpotentError(f"cannot lift a non-nilpotent Q (residuals on "
                                f"{sorted(map(str, report.residuals))})")
    momenta = []
    for v in M.coordinates:
        momenta.append(GradedVariable(_momentum_name(prefix, v.name), ghost=-v.ghost + n,
                                      kind=Kind.MOMENTUM, info=("momentum", v)))
    kappa = n % 2
    biv = {(p, v): -ONE for p, v in zip(momenta, M.coordinates)}
    B = BracketSpec(biv, ghost_shift=-n, parity=kappa)
    generator = ZERO
    for v, p in zip(M.coordinates, momenta):
        generator = generator - multiply(M.Q_action[v], Polynomial.variable(p))
    coords = tuple(M.coordinates) + tuple(momenta)
    Q_E = hamiltonian_vf(generator, B, coords)
    lifted = QManifoldSpec(coords, {c: Q_E.on(c) for c in coords}, bracket=B,
                           master_function=generator, name=f"{M.name}*lift{n}",
                           metadata={"base": M, "momenta": tuple(momenta), "n": n})
    return lifted


def lift_formula(M: QManifoldSpec, momenta: Sequence[GradedVariable]) -> dict:
    """``Q_E`` written out directly: ``Q_E Π_A = -(-1)^{|A|} (∂Q^B/∂Ψ^A) Π_B``."""
    out = {v: M.Q_action[v] for v in M.coordinates}
    for a, pa in zip(M.coordinates, momenta):
        acc = ZERO
        for b, pb in zip(M.coordinates, momenta):
            acc = acc + multiply(left_derivative(M.Q_action[b], a), Polynomial.variable(pb))
        out[pa] = acc.scale(-1 if a.parity == 0 else 1)
    return out


def _momentum_name(prefix: str, name: str) -> str:
    if "[" in name:
        base, rest = name.split("[", 1)
        return f"{prefix}{base}[{rest}"
    return prefix + name


def lie_algebra_target(structure_constants, name: str = "c", dimension: int | None = None,
                       label: str = "lie") -> QManifoldSpec:
    """``ΠG`` with ``Q c^a = ½ f^a_{bc} c^b c^c`` (indices 1-based in names).

    ``structure_constants`` maps ``(a, b, c)`` (0-based) to ``f^a_{bc}``.
    """
    if dimension is None:
        dimension = 1 + max(max(k) for k in structure_constants) if structure_constants else 0
    cs = [GradedVariable(f"{name}[{i + 1}]", ghost=1) for i in range(dimension)]
    q = {}
    for a in range(dimension):
        acc = ZERO
        for (aa, b, c), val in structure_constants.items():
            if aa != a or not val:
                continue
            acc = acc + Polynomial.product([cs[b], cs[c]], Fraction(val) / 2)
        q[cs[a]] = acc
    return QManifoldSpec(tuple(cs), q, name=label)
