"""Command line interface.

Every subcommand loads a spec document, runs its checks and produces a
:class:`RunReport`.  The report is printed as text and optionally written as
JSON (``--json PATH``, ``-`` for standard output); both renderings are made
from the same dictionary.  Exit status: 0 if every check passed, 1 if a
mathematical check failed, 2 for usage or spec errors.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from dataclasses import dataclass, field
from typing import Sequence

from .cohomology import exactness_witness
from .errors import AKSZError, GradingError, NotACocycleError, SpecError
from .experiments import (lifted_cohomology, proposition1, proposition1_selector,
                          target_cohomology)
from .expr import format_polynomial, polynomial_terms
from .graded import ZERO, Polynomial, apply_derivation, substitute
from .jets import (LocalFunctional, build_jet_context, build_master_action, descent_ladder,
                   functional_equal, jet_order, prolong, pullback_I, variational_derivatives)
from .multivectors import (LagrangeStructureCandidate, apply_equivalence,
                           check_lagrange_structure, extend_jet_context,
                           functional_field_bracket, pi_degree, pullback_I_E)
from .qtarget import (check_master_equation, check_nilpotent, cotangent_lift, hamiltonian_vf,
                      lift_formula, q_derivation)
from .specfile import SpecDocument, parse_spec

__all__ = ["RunReport", "CheckResult", "main", "run", "build_parser"]


class UsageError(Exception):
    """Invalid combination of command, flags and spec contents."""


def _poly_entry(label: str, p: Polynomial) -> dict:
    return {"label": label, "polynomial": format_polynomial(p), "terms": polynomial_terms(p)}


@dataclass
class CheckResult:
    name: str
    passed: bool
    residuals: list = field(default_factory=list)  # (label, Polynomial)
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "residuals": [_poly_entry(lbl, p) for lbl, p in self.residuals],
                "details": self.details}


@dataclass
class RunReport:
    """Outcome of one subcommand."""

    command: list
    spec: str = ""
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    timing: dict | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, passed: bool, residuals=(), **details) -> CheckResult:
        c = CheckResult(name, bool(passed), list(residuals), details)
        self.checks.append(c)
        return c

    def as_dict(self) -> dict:
        d = {"command": list(self.command), "spec": self.spec, "passed": self.passed,
             "checks": [c.as_dict() for c in self.checks], "tables": self.tables,
             "info": self.info}
        if self.timing is not None:
            d["timing"] = self.timing
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def render_text(self) -> str:
        return _render(self.as_dict())


def _render(d: dict) -> str:
    lines = [f"command: {' '.join(d['command'])}"]
    if d["spec"]:
        lines.append(f"spec: {d['spec']}")
    for key in sorted(d["info"]):
        lines.append(f"{key}: {_scalar(d['info'][key])}")
    for c in d["checks"]:
        lines.append(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}")
        for key in sorted(c["details"]):
            lines.append(f"    {key}: {_scalar(c['details'][key])}")
        for r in c["residuals"]:
            lines.append(f"    residual {r['label']}: {r['polynomial']}")
            lines.append(f"      terms: {json.dumps(r['terms'], ensure_ascii=False)}")
    for name in sorted(d["tables"]):
        rows = d["tables"][name]
        lines.append(f"table {name}:")
        for row in rows:
            lines.append("    " + ", ".join(f"{k}={_scalar(row[k])}" for k in sorted(row)))
    if "timing" in d:
        for key in sorted(d["timing"]):
            lines.append(f"time {key}: {d['timing'][key]}")
    lines.append(f"result: {'PASS' if d['passed'] else 'FAIL'}")
    return "\n".join(lines) + "\n"


def _scalar(v) -> str:
    if isinstance(v, str):
        return v
    return json.dumps(v, sort_keys=True, ensure_ascii=False)


# -- helpers ---------------------------------------------------------------------------------

def _base_dim(args, doc: SpecDocument, default: int | None = None) -> int:
    n = args.base_dim if args.base_dim is not None else (doc.base_dimension or default)
    if n is None or n < 1:
        raise UsageError("a base dimension is required (--base-dim)")
    return n


def _jet_order(args, doc: SpecDocument, default: int = 1) -> int:
    J = args.jet_order
    if J is None:
        J = doc.jet_order if doc.jet_order is not None else default
    if J < 0:
        raise UsageError("--jet-order must be non-negative")
    return J


def _default(args, doc: SpecDocument, attr: str, key: str, fallback=None):
    v = getattr(args, attr, None)
    if v is None:
        v = doc.defaults.get(key, fallback)
    return v


def _ghost_range(coords, max_degree: int) -> range:
    gh = [v.ghost for v in coords] or [0]
    lo = min(0, min(gh) * max_degree)
    hi = max(0, max(gh) * max_degree)
    return range(lo, hi + 1)


def _report_rows(reports, keys: Sequence[str]) -> list:
    rows = []
    for key, rep in sorted(reports.items()):
        row = dict(zip(keys, key))
        row.update({"dim_space": rep.dim_space, "dim_cocycles": rep.dim_cocycles,
                    "dim_coboundaries": rep.dim_coboundaries, "betti": rep.betti,
                    "representatives": [format_polynomial(r) for r in rep.representatives]})
        rows.append(row)
    return rows


def _nilpotency_gate(report: RunReport, doc: SpecDocument) -> bool:
    nil = check_nilpotent(doc.target)
    report.check("Q^2 = 0 on every coordinate", nil.passed,
                 [(f"1/2[Q,Q]({v.name})", p) for v, p in nil.residuals.items()])
    return nil.passed


# -- subcommands -----------------------------------------------------------------------------

def cmd_check_q(args, doc: SpecDocument, report: RunReport) -> None:
    _nilpotency_gate(report, doc)
    report.info["coordinates"] = [v.name for v in doc.target.coordinates]


def cmd_master_eq(args, doc: SpecDocument, report: RunReport) -> None:
    M = doc.target
    if M.master_function is None or M.bracket is None:
        raise UsageError("master-eq needs a master function and a bracket in the spec")
    me = check_master_equation(M.master_function, M.bracket)
    report.check("1/2{S,S} = 0", me.passed, [(str(k), p) for k, p in me.residuals.items()])
    ham = hamiltonian_vf(M.master_function, M.bracket, M.coordinates)
    diffs = [(f"Q({v.name}) - {{S,{v.name}}}", M.Q_action[v] - ham.on(v))
             for v in M.coordinates if M.Q_action[v] != ham.on(v)]
    report.check("Q = {S, .}", not diffs, diffs)
    report.info["master_function"] = format_polynomial(M.master_function)


def cmd_cohomology(args, doc: SpecDocument, report: RunReport) -> None:
    if not _nilpotency_gate(report, doc):
        return
    D = args.max_cdeg if args.max_cdeg is not None else doc.defaults.get("max_cdeg", 3)
    ghosts = [args.ghost] if args.ghost is not None else list(_ghost_range(doc.target.coordinates, D))
    reps = target_cohomology(doc.target, ghosts, D, args.include_constants, args.jobs)
    report.tables["blocks"] = _report_rows(reps, ("ghost", "degree"))
    totals: dict[int, int] = {}
    for (g, _), r in reps.items():
        totals[g] = totals.get(g, 0) + r.betti
    report.tables["betti"] = [{"ghost": g, "betti": b} for g, b in sorted(totals.items())]
    report.info["max_degree"] = D
    report.info["include_constants"] = args.include_constants


def _brst_on_generators(ctx, J: int):
    """``s`` prolonged on a context built two orders beyond ``J``."""
    return prolong(ctx, ctx.brst_tables[0], ghost=1, name="s")


def cmd_aksz(args, doc: SpecDocument, report: RunReport) -> None:
    n = _base_dim(args, doc)
    J = _jet_order(args, doc)
    ctx = build_jet_context(n, doc.target, J + 2)
    s = _brst_on_generators(ctx, J)
    dH = ctx.horizontal_derivation()
    gens = ctx.jet_variables(J)
    sq, mixed = [], []
    for v in gens:
        r = apply_derivation(s, s.on(v))
        if r:
            sq.append((f"s^2({v.name})", r))
        if jet_order(v) < J:
            m = apply_derivation(s, dH.on(v)) + apply_derivation(dH, s.on(v))
            if m:
                mixed.append((f"[s,d_H]({v.name})", m))
    report.check(f"s^2 = 0 on all {len(gens)} generators up to jet order {J}", not sq, sq[:20],
                 failing=len(sq))
    report.check("s d_H + d_H s = 0 on generators", not mixed, mixed[:20], failing=len(mixed))
    report.info.update({"base_dimension": n, "jet_order": J, "context_order": J + 2,
                        "formfields": len(ctx.formfields),
                        "formfields_per_coordinate": len(ctx.formfields) // len(doc.target.coordinates)})
    report.tables["brst"] = [{"field": f.name, "s": format_polynomial(p)}
                             for f, p in sorted(ctx.brst_tables[0].items(),
                                                key=lambda t: t[0].order)]


def cmd_descent(args, doc: SpecDocument, report: RunReport) -> None:
    n = _base_dim(args, doc)
    text = _default(args, doc, "function", "descent_function")
    if not text:
        raise UsageError("descent needs --function")
    f = doc.parse(text, location="--function")
    if not f or f.constant_term():
        raise UsageError("descent needs a target function without constant term")
    Qf = apply_derivation(q_derivation(doc.target), f)
    report.check("Q f = 0", not Qf, [("Q f", Qf)] if Qf else [])
    if Qf:
        return
    ctx = build_jet_context(n, doc.target, 1)
    lad = descent_ladder(ctx, f)
    res = [(f"s w_{k} + d_H w_{k - 1}" if k else "s w_0", r)
           for k, r in enumerate(lad.residuals) if r]
    report.check("descent equations hold at every rung", lad.verified, res)
    report.tables["ladder"] = [{"form_degree": k, "ghost": f.ghost - k,
                                "form": format_polynomial(w)}
                               for k, w in enumerate(lad.forms)]
    report.info["function"] = format_polynomial(f)


def cmd_prop1(args, doc: SpecDocument, report: RunReport) -> None:
    if not _nilpotency_gate(report, doc):
        return
    n = args.base_dim if args.base_dim is not None else 1
    J = args.jet_order if args.jet_order is not None else 2
    top = len(doc.target.coordinates) + n
    ghosts = [args.ghost] if args.ghost is not None else list(range(0, top + 1))
    comps = proposition1(doc.target, ghosts, J=J, n=n, n_jobs=args.jobs)
    report.tables["blocks"] = [{"G": c.key[0], "dim_space": c.report.dim_space,
                                "betti_stilde": c.report.betti, "betti_Q": c.expected,
                                "representatives": [format_polynomial(r)
                                                    for r in c.report.representatives]}
                               for c in comps]
    report.check("dim H^G(s + d_H) = dim H^G(Q) in every block", all(c.matches for c in comps),
                 mismatched=[c.key[0] for c in comps if not c.matches])
    text = _default(args, doc, "function", "descent_function")
    if text:
        f = doc.parse(text, location="--function")
        ctx = build_jet_context(n, doc.target, J)
        F = pullback_I(ctx, f)
        sF = LocalFunctional(ctx.s(F.integrand), ctx)
        closed = not variational_derivatives(sF)
        report.check("s I(f) = 0 modulo d_H", closed)
        ladder = substitute(f, ctx.ladders)
        sel = proposition1_selector(ctx, ladder.total_degree - 1,
                                    args.max_cdeg if args.max_cdeg is not None else 4)
        stilde = prolong(ctx, ctx.brst_tables[0], ghost=1) + ctx.horizontal_derivation()
        ex = exactness_witness(ladder, stilde, sel)
        report.check("f(ladder) is not (s + d_H)-exact within truncation", not ex.exact,
                     verdict=str(ex) if not ex.exact else "exact", block=sel.label)
        report.info["function"] = format_polynomial(f)
    report.info.update({"base_dimension": n, "jet_order": J})


def cmd_lift(args, doc: SpecDocument, report: RunReport) -> None:
    if not _nilpotency_gate(report, doc):
        return
    n = _base_dim(args, doc)
    shift = n if args.variant == "sym" else n + 1
    L = cotangent_lift(doc.target, shift)
    nil = check_nilpotent(L)
    report.check("Q_E^2 = 0", nil.passed,
                 [(f"1/2[Q_E,Q_E]({v.name})", p) for v, p in nil.residuals.items()])
    direct = lift_formula(doc.target, L.metadata["momenta"])
    diffs = [(f"Q_E({v.name})", L.Q_action[v] - direct[v]) for v in L.coordinates
             if L.Q_action[v] != direct[v]]
    report.check("Q_E is generated by -Q^A Pi_A", not diffs, diffs)
    restr = [(v.name, L.Q_action[v] - doc.target.Q_action[v]) for v in doc.target.coordinates
             if L.Q_action[v] != doc.target.Q_action[v]]
    report.check("Q_E restricts to Q", not restr, restr)
    report.tables["coordinates"] = [{"name": v.name, "ghost": v.ghost,
                                     "Q_E": format_polynomial(L.Q_action[v])}
                                    for v in L.coordinates]
    report.info.update({"variant": args.variant, "shift": shift})


def cmd_multivector_cohomology(args, doc: SpecDocument, report: RunReport) -> None:
    if not _nilpotency_gate(report, doc):
        return
    n = _base_dim(args, doc)
    D = args.max_cdeg if args.max_cdeg is not None else 6
    pis = [args.pi_degree] if args.pi_degree is not None else [1, 2]
    L = cotangent_lift(doc.target, n)
    if args.ghost is not None:
        ghosts = [args.ghost]
    else:
        ghosts = list(_ghost_range(L.coordinates, D + max(pis)))
    reps = lifted_cohomology(doc.target, n, ghosts, pis, D, args.jobs)
    report.tables["blocks"] = [row for row in _report_rows(reps, ("ghost", "pi_degree", "cdeg"))
                               if row["dim_space"]]
    totals: dict = {}
    for (g, k, _), r in reps.items():
        totals[(g, k)] = totals.get((g, k), 0) + r.betti
    report.tables["betti"] = [{"ghost": g, "pi_degree": k, "betti": b}
                              for (g, k), b in sorted(totals.items()) if b]
    report.info.update({"base_dimension": n, "max_cdeg": D, "pi_degrees": pis})


def cmd_lagrange(args, doc: SpecDocument, report: RunReport) -> None:
    n = _base_dim(args, doc)
    text = _default(args, doc, "omega", "lagrange_omega")
    if not text:
        raise UsageError("lagrange needs --omega (a function on the cotangent lift)")
    ctx = build_jet_context(n, doc.target, 1)
    ectx = extend_jet_context(ctx, "symmetric")
    L = ectx.lifted_target()
    f = doc.parse(text, extra=L.metadata["momenta"], location="--omega")
    W1 = pullback_I_E(ectx, f, L)
    try:
        cand = LagrangeStructureCandidate(ectx, (W1,))
    except GradingError as exc:
        raise UsageError(str(exc)) from None
    order = args.order
    rep = check_lagrange_structure(cand, order)
    for (k, r), (_, ok) in zip(rep.residuals, rep.vanishing):
        report.check(f"r_{k} = 0 modulo d_H", ok, [] if ok else [(f"r_{k}", r.integrand)])
    if args.xi:
        dens = doc.parse(args.xi, extra=ectx.generators(ectx.J), location="--xi")
        X1 = LocalFunctional.from_density(ectx, dens)
        try:
            eq = apply_equivalence(cand, [X1], order)
        except GradingError as exc:
            raise UsageError(str(exc)) from None
        rep2 = check_lagrange_structure(eq, order)
        for (k, r), (_, ok) in zip(rep2.residuals, rep2.vanishing):
            report.check(f"after equivalence: r_{k} = 0 modulo d_H", ok,
                         [] if ok else [(f"r_{k}'", r.integrand)])
    report.info.update({"omega_1": format_polynomial(f), "order": order,
                        "pi_degree": sorted(pi_degree(W1))})


def cmd_master_action(args, doc: SpecDocument, report: RunReport) -> None:
    M = doc.target
    if M.master_function is None or M.symplectic_potential is None:
        raise UsageError("master-action needs a master function and a symplectic potential")
    n = _base_dim(args, doc)
    ctx = build_jet_context(n, M, 1)
    SS = build_master_action(ctx)
    report.info["integrand"] = format_polynomial(SS.integrand)
    gh = M.master_function.ghosts() or {1 - M.bracket.ghost_shift}
    expected = {g - n for g in gh}
    report.check("gh S_action = gh S - n", SS.is_zero() or SS.ghosts() <= expected,
                 ghost=sorted(SS.ghosts()))
    if M.bracket.ghost_shift != 1 - n:
        report.info["functional_bracket"] = "skipped: bracket degree is not 1 - n"
        return
    zero = LocalFunctional(ZERO, ctx)
    SSS = functional_field_bracket(SS, SS)
    report.check("{S_action, S_action} = 0 modulo d_H", functional_equal(SSS, zero),
                 [] if functional_equal(SSS, zero) else [("{S,S}", SSS.integrand)])
    rng = random.Random(args.seed)
    coords = list(M.coordinates)
    bad = []
    tried = []
    attempts = 0
    while len(tried) < args.samples and attempts < 100 * max(args.samples, 1):
        attempts += 1
        deg = rng.randint(1, 3)
        f = Polynomial.product([rng.choice(coords) for _ in range(deg)])
        if not f:
            continue
        F = pullback_I(ctx, f)
        if F.is_zero():
            continue
        tried.append(format_polynomial(f))
        lhs = functional_field_bracket(SS, F)
        rhs = LocalFunctional(ctx.s(F.integrand), ctx)
        if not functional_equal(lhs, rhs):
            bad.append((f"{{S, I({format_polynomial(f)})}} - s I(f)", (lhs - rhs).integrand))
    report.check(f"{{S_action, F}} = s F on {len(tried)} sampled functionals", not bad, bad,
                 samples=tried, seed=args.seed)


COMMANDS = {
    "check-q": (cmd_check_q, "nilpotency of the target vector field"),
    "master-eq": (cmd_master_eq, "classical master equation of the master function"),
    "cohomology": (cmd_cohomology, "Q-cohomology of target polynomials by blocks"),
    "aksz": (cmd_aksz, "build the AKSZ BRST differential and check s^2 = 0"),
    "descent": (cmd_descent, "descent ladder of a target cocycle"),
    "prop1": (cmd_prop1, "compare H(s + d_H) with H(Q) block by block"),
    "lift": (cmd_lift, "cotangent extension of the target"),
    "multivector-cohomology": (cmd_multivector_cohomology,
                               "Q_E-cohomology of the cotangent lift by pi-degree"),
    "lagrange": (cmd_lagrange, "order-by-order Lagrange structure check"),
    "master-action": (cmd_master_action, "AKSZ master action and its functional bracket"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="spec file path or name of a bundled spec")
    common.add_argument("--base-dim", type=int, help="base dimension n")
    common.add_argument("--jet-order", type=int, help="jet truncation order J")
    common.add_argument("--ghost", type=int, help="ghost number (total degree for prop1)")
    common.add_argument("--max-cdeg", type=int, help="bound on the degree in target coordinates")
    common.add_argument("--pi-degree", type=int, help="degree in the conjugate momenta")
    common.add_argument("--include-constants", action=argparse.BooleanOptionalAction,
                        default=True, help="keep field-independent elements in blocks")
    common.add_argument("--variant", choices=("sym", "skew"), default="sym",
                        help="graded symmetric momenta or skew antifields")
    common.add_argument("--function", help="target function (descent, prop1)")
    common.add_argument("--omega", help="Omega_1 as a function on the cotangent lift")
    common.add_argument("--xi", help="density of an equivalence generator Xi_1 (lagrange)")
    common.add_argument("--order", type=int, default=3, help="Lagrange residual order")
    common.add_argument("--samples", type=int, default=5, help="sampled functionals")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for blocks")
    common.add_argument("--json", metavar="PATH", help="write the report as JSON ('-' = stdout)")
    common.add_argument("--timing", action="store_true", help="include wall-clock timing")
    parser = argparse.ArgumentParser(prog="akszcoh", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def run(argv: Sequence[str]) -> tuple[RunReport | None, int, str]:
    """Execute a command line; returns ``(report, exit code, error message)``.

    Raises ``SystemExit`` for argparse usage errors.
    """
    args = build_parser().parse_args(list(argv))
    return _run(args, list(argv))


def _run(args, argv: list) -> tuple[RunReport | None, int, str]:
    report = RunReport(command=argv)
    start = time.perf_counter()
    try:
        doc = parse_spec(args.spec)
        report.spec = doc.model
        COMMANDS[args.command][0](args, doc, report)
    except (SpecError, UsageError) as exc:
        kind = getattr(exc, "category", "usage")
        return None, 2, f"error ({kind}): {exc}"
    except FileNotFoundError as exc:
        return None, 2, f"error (file): {exc}"
    except NotACocycleError as exc:
        report.check("precondition", False, message=str(exc))
    except AKSZError as exc:
        return None, 2, f"error: {exc}"
    if args.timing:
        report.timing = {"seconds": round(time.perf_counter() - start, 3)}
    return report, (0 if report.passed else 1), ""


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    report, code, err = _run(args, argv)
    if report is None:
        print(err, file=sys.stderr)
        return code
    if args.json == "-":
        sys.stdout.write(report.to_json())
        return code
    sys.stdout.write(report.render_text())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
