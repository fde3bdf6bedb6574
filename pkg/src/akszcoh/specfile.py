"""Spec documents: JSON descriptions of target Q-manifolds.

A document looks like::

    {
      "model": "su2-chern-simons",
      "base_dimension": 3,
      "jet_order": 1,
      "index_range": [1, 3],
      "coordinates": [{"name": "c", "range": [1, 3], "ghost": 1}],
      "tables": {"f": {"expression": "eps[a,b,d]", "indices": ["a", "b", "d"]}},
      "Q": {"c[a]": "1/2*f[a,b,d]*c[b]*c[d]"},
      "bracket": {"ghost_shift": -2, "parity": 0,
                  "entries": {"c[a], c[b]": "delta[a,b]"}},
      "master_function": "1/6*f[a,b,d]*c[a]*c[b]*c[d]",
      "symplectic_potential": {"c[a]": "1/2*c[a]"},
      "defaults": {"descent_function": "...", "lagrange_omega": "..."}
    }

Keys such as ``"c[a]"`` carry free index letters that run over the range of
the coordinate family.  When ``Q`` is omitted but a master function and a
bracket are present, ``Q`` is the Hamiltonian vector field of the master
function; when both are given they must agree.

Every check performed on load raises a :class:`SpecError` subclass whose
``category`` distinguishes syntax errors, undeclared symbols, duplicate
coordinates, ghost inconsistencies, format problems and inconsistencies
between declared structures.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (DuplicateCoordinateError, GhostInconsistencyError, SpecConsistencyError,
                     SpecFormatError, SpecSyntaxError, UndeclaredSymbolError)
from .expr import BUILTINS, Expression, SymbolTable
from .graded import ZERO, GradedVariable, Polynomial
from .qtarget import BracketSpec, QManifoldSpec, hamiltonian_vf

__all__ = ["SpecDocument", "parse_spec", "load_spec", "bundled_specs", "resolve_spec_path"]

_KEY = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\[\s*([^\]]*)\])?\s*$")


@dataclass
class SpecDocument:
    """A validated spec document and the target it describes."""

    model: str
    description: str
    base_dimension: int | None
    jet_order: int | None
    coordinates: tuple  # declarations as given
    expressions: dict  # raw expression strings by section
    symbols: SymbolTable
    target: QManifoldSpec
    defaults: dict = field(default_factory=dict)
    path: str = ""

    def parse(self, text: str, extra: Iterable[GradedVariable] = (),
              location: str = "expression") -> Polynomial:
        """Evaluate an expression against the document's symbols plus ``extra``."""
        sym = SymbolTable(dict(self.symbols.variables), self.symbols.tables,
                          self.symbols.index_ranges, self.symbols.default_range,
                          self.symbols.index_base)
        for v in extra:
            sym.add(v)
        return Expression(text, location).evaluate(sym)

    def summary(self) -> dict:
        return {
            "model": self.model,
            "coordinates": [{"name": v.name, "ghost": v.ghost} for v in self.target.coordinates],
            "bracket": None if self.target.bracket is None else
            {"ghost_shift": self.target.bracket.ghost_shift,
             "parity": self.target.bracket.parity},
            "has_master_function": self.target.master_function is not None,
            "has_symplectic_potential": self.target.symplectic_potential is not None,
        }


def _require(obj: Mapping, key: str, kind, where: str):
    if key not in obj:
        raise SpecFormatError(f"missing field {key!r}", where)
    val = obj[key]
    if not isinstance(val, kind) or (kind is int and isinstance(val, bool)):
        raise SpecFormatError(f"field {key!r} has the wrong type", where)
    return val


def _range(val, where: str):
    if (not isinstance(val, list) or len(val) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in val)
            or val[0] > val[1]):
        raise SpecFormatError("an index range must be [lo, hi] with integers lo <= hi", where)
    return (val[0], val[1])


def _parse_key(key: str, where: str):
    m = _KEY.match(key)
    if not m:
        raise SpecSyntaxError(f"malformed symbol {key!r}", where)
    name, idx = m.group(1), m.group(2)
    if idx is None:
        return name, []
    parts = [p.strip() for p in idx.split(",")]
    if not all(parts):
        raise SpecSyntaxError(f"malformed index list in {key!r}", where)
    return name, parts


class _Builder:
    def __init__(self, data: Mapping, path: str):
        self.data = data
        self.path = path
        self.families: dict[str, tuple] = {}  # name -> (range or None, ghost)
        self.variables: dict[str, GradedVariable] = {}

    # -- declarations -------------------------------------------------------------
    def coordinates(self):
        decls = _require(self.data, "coordinates", list, "coordinates")
        if not decls:
            raise SpecFormatError("at least one coordinate is required", "coordinates")
        ordered = []
        for i, d in enumerate(decls):
            where = f"coordinates[{i}]"
            if not isinstance(d, dict):
                raise SpecFormatError("coordinate declaration must be an object", where)
            name = _require(d, "name", str, where)
            ghost = _require(d, "ghost", int, where)
            if not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", name):
                raise SpecSyntaxError(f"invalid coordinate name {name!r}", where)
            if name in self.families or name in BUILTINS:
                raise DuplicateCoordinateError(f"coordinate {name!r} declared twice", where)
            rng = _range(d["range"], where) if "range" in d else None
            self.families[name] = (rng, ghost)
            names = [name] if rng is None else [f"{name}[{k}]" for k in range(rng[0], rng[1] + 1)]
            for nm in names:
                if nm in self.variables:
                    raise DuplicateCoordinateError(f"coordinate {nm!r} declared twice", where)
                v = GradedVariable(nm, ghost=ghost)
                self.variables[nm] = v
                ordered.append(v)
        return ordered

    def symbol_table(self) -> SymbolTable:
        d = self.data
        default = _range(d["index_range"], "index_range") if "index_range" in d else None
        if default is None:
            ranges = {r for r, _ in self.families.values() if r is not None}
            if len(ranges) == 1:
                default = ranges.pop()
        letters = {}
        for k, v in (d.get("indices") or {}).items():
            letters[k] = _range(v, f"indices.{k}")
        base = d.get("index_base", 1)
        sym = SymbolTable(dict(self.variables), {}, letters, default, base)
        tables = d.get("tables") or {}
        if not isinstance(tables, dict):
            raise SpecFormatError("'tables' must be an object", "tables")
        for name, spec in tables.items():
            where = f"tables.{name}"
            if name in self.families or name in BUILTINS:
                raise DuplicateCoordinateError(f"table name {name!r} clashes with a symbol", where)
            sym.tables[name] = self._table(spec, sym, where)
        return sym

    def _table(self, spec, sym: SymbolTable, where: str) -> dict:
        if not isinstance(spec, dict):
            raise SpecFormatError("table must be an object", where)
        out: dict[tuple, Fraction] = {}
        if "expression" in spec:
            letters = _require(spec, "indices", list, where)
            expr = Expression(_require(spec, "expression", str, where), where)
            ranges = []
            for L in letters:
                r = sym.range_of(L)
                if r is None:
                    raise UndeclaredSymbolError(f"index {L!r} has no declared range", where)
                ranges.append(r)
            for vals in itertools.product(*ranges):
                val = expr.evaluate(sym, dict(zip(letters, vals)))
                c = val.constant_term()
                if val != Polynomial.constant(c):
                    raise SpecFormatError("table entries must be numbers", where)
                if c:
                    out[vals] = c
            return out
        entries = _require(spec, "entries", dict, where)
        anti = spec.get("antisymmetric")
        for key, val in entries.items():
            try:
                idx = tuple(int(x) for x in key.split(","))
            except ValueError:
                raise SpecSyntaxError(f"malformed table index {key!r}", where) from None
            try:
                c = Fraction(str(val))
            except (ValueError, ZeroDivisionError):
                raise SpecSyntaxError(f"malformed table value {val!r}", f"{where}[{key}]") from None
            self._set(out, idx, c, where)
            if anti:
                i, j = anti
                sw = list(idx)
                sw[i], sw[j] = sw[j], sw[i]
                self._set(out, tuple(sw), -c, where)
        return {k: v for k, v in out.items() if v}

    @staticmethod
    def _set(out, idx, c, where):
        if idx in out and out[idx] != c:
            raise SpecConsistencyError(f"conflicting table entries at {idx}", where)
        out[idx] = c

    # -- indexed sections ------------------------------------------------------------
    def expand_key(self, key: str, where: str):
        """Yield ``(variable, env)`` for a key with free index letters."""
        name, parts = _parse_key(key, where)
        fam = self.families.get(name)
        if fam is None:
            raise UndeclaredSymbolError(f"undeclared coordinate {name!r}", where)
        rng, _ = fam
        if rng is None:
            if parts:
                raise SpecSyntaxError(f"coordinate {name!r} takes no index", where)
            yield self.variables[name], {}
            return
        if len(parts) != 1:
            raise SpecSyntaxError(f"coordinate {name!r} takes exactly one index", where)
        p = parts[0]
        if re.match(r"^-?\d+$", p):
            nm = f"{name}[{int(p)}]"
            if nm not in self.variables:
                raise UndeclaredSymbolError(f"undeclared coordinate {nm!r}", where)
            yield self.variables[nm], {}
            return
        for k in range(rng[0], rng[1] + 1):
            yield self.variables[f"{name}[{k}]"], {p: k}

    def component_map(self, section: str, sym: SymbolTable) -> dict:
        raw = self.data.get(section)
        if raw is None:
            return {}
        if not isinstance(raw, dict):
            raise SpecFormatError(f"{section!r} must be an object", section)
        out = {}
        for key, text in raw.items():
            where = f"{section}[{key}]"
            if not isinstance(text, str):
                raise SpecFormatError("expression must be a string", where)
            expr = Expression(text, where)
            for v, env in self.expand_key(key, where):
                if v in out:
                    raise DuplicateCoordinateError(f"component for {v.name!r} given twice", where)
                out[v] = (expr.evaluate(sym, env), f"{section}[{v.name}]")
        return out

    def bracket(self, sym: SymbolTable) -> BracketSpec | None:
        raw = self.data.get("bracket")
        if raw is None:
            return None
        where = "bracket"
        if not isinstance(raw, dict):
            raise SpecFormatError("'bracket' must be an object", where)
        k = _require(raw, "ghost_shift", int, where)
        kappa = _require(raw, "parity", int, where)
        if kappa not in (0, 1):
            raise SpecFormatError("bracket parity must be 0 or 1", where)
        entries = _require(raw, "entries", dict, where)
        biv = {}
        for key, text in entries.items():
            ew = f"bracket[{key}]"
            parts = _split_pair(key, ew)
            expr = Expression(text, ew)
            for a, env_a in self.expand_key(parts[0], ew):
                for b, env_b in self.expand_key(parts[1], ew):
                    env = dict(env_a)
                    env.update(env_b)
                    val = expr.evaluate(sym, env)
                    if not val:
                        continue
                    exp_ghost = a.ghost + b.ghost + k
                    exp_par = (a.parity + b.parity + kappa) % 2
                    for m in val:
                        if m.ghost != exp_ghost or m.parity != exp_par:
                            raise GhostInconsistencyError(
                                f"{{{a.name}, {b.name}}} has a term of ghost {m.ghost}, expected "
                                f"{exp_ghost}", ew)
                    if (a, b) in biv and biv[(a, b)] != val:
                        raise SpecConsistencyError(
                            f"bracket {{{a.name}, {b.name}}} declared twice", ew)
                    biv[(a, b)] = val
        try:
            return BracketSpec(biv, k, kappa)
        except ValueError as exc:
            raise SpecConsistencyError(str(exc), where) from None


def _split_pair(key: str, where: str):
    depth = 0
    for i, ch in enumerate(key):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == "," and depth == 0:
            return key[:i], key[i + 1:]
    raise SpecSyntaxError(f"bracket key {key!r} must name two coordinates", where)


def _check_ghost(p: Polynomial, ghost: int, parity: int | None, what: str, where: str):
    for m in p:
        if m.ghost != ghost or (parity is not None and m.parity != parity):
            raise GhostInconsistencyError(
                f"{what} has the term {m} of ghost {m.ghost}; expected ghost {ghost}", where)


def load_spec(data, path: str = "") -> SpecDocument:
    """Validate a decoded document (a dict)."""
    if not isinstance(data, dict):
        raise SpecFormatError("spec document must be a JSON object", path)
    b = _Builder(data, path)
    model = data.get("model", Path(path).stem if path else "model")
    coords = b.coordinates()
    sym = b.symbol_table()
    n = data.get("base_dimension")
    J = data.get("jet_order")
    for key, val in (("base_dimension", n), ("jet_order", J)):
        if val is not None and (not isinstance(val, int) or isinstance(val, bool) or val < 0):
            raise SpecFormatError(f"{key!r} must be a non-negative integer", key)

    B = b.bracket(sym)
    S = None
    if "master_function" in data:
        text = data["master_function"]
        if not isinstance(text, str):
            raise SpecFormatError("expression must be a string", "master_function")
        S = Expression(text, "master_function").evaluate(sym)
        if B is not None:
            _check_ghost(S, 1 - B.ghost_shift, None, "master function", "master_function")
        elif len(S.ghosts()) > 1:
            raise GhostInconsistencyError("master function is not ghost-homogeneous",
                                          "master_function")
    V = None
    if "symplectic_potential" in data:
        comps = b.component_map("symplectic_potential", sym)
        if B is None:
            raise SpecFormatError("a symplectic potential requires a bracket",
                                  "symplectic_potential")
        V = {}
        for v, (p, where) in comps.items():
            _check_ghost(p, -B.ghost_shift - v.ghost, None, f"potential of {v.name}", where)
            V[v] = p

    exprs = {k: data[k] for k in ("Q", "bracket", "master_function", "symplectic_potential")
             if k in data}
    if "Q" in data:
        comps = b.component_map("Q", sym)
        Q = {}
        for v, (p, where) in comps.items():
            _check_ghost(p, v.ghost + 1, 1 - v.parity, f"Q component of {v.name}", where)
            Q[v] = p
        if S is not None and B is not None:
            ham = hamiltonian_vf(S, B, coords)
            for v in coords:
                if ham.on(v) != Q.get(v, ZERO):
                    raise SpecConsistencyError(
                        f"Q({v.name}) = {Q.get(v, ZERO)} differs from the Hamiltonian vector "
                        f"field of the master function, {ham.on(v)}", f"Q[{v.name}]")
    elif S is not None and B is not None:
        ham = hamiltonian_vf(S, B, coords)
        Q = {v: ham.on(v) for v in coords}
    else:
        raise SpecFormatError("either 'Q' or a master function with a bracket is required", "Q")

    target = QManifoldSpec(tuple(coords), Q, bracket=B, master_function=S,
                           symplectic_potential=V, name=model)
    defaults = data.get("defaults") or {}
    if not isinstance(defaults, dict):
        raise SpecFormatError("'defaults' must be an object", "defaults")
    return SpecDocument(model, data.get("description", ""), n, J, tuple(data["coordinates"]),
                        exprs, sym, target, dict(defaults), path)


def parse_spec(path) -> SpecDocument:
    """Read and validate a spec file (a path or the name of a bundled spec)."""
    p = resolve_spec_path(path)
    text = p.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(f"invalid JSON ({exc.msg})", str(p), exc.lineno, exc.colno) from None
    return load_spec(data, str(p))


def bundled_specs() -> dict[str, Path]:
    """Bundled example specs by name."""
    root = resources.files("akszcoh") / "data"
    return {Path(str(f)).stem: Path(str(f)) for f in root.iterdir() if str(f).endswith(".json")}


def resolve_spec_path(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = bundled_specs()
    stem = p.stem if p.suffix in (".json", ".spec") else p.name
    if stem in bundled:
        return bundled[stem]
    raise FileNotFoundError(f"no such spec file: {path}")
