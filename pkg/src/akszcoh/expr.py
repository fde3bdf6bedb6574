"""Expression language for spec files.

Grammar (a subset of Python expression syntax, with ``^`` for powers)::

    expr    := term (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*      # "/" only by constants
    factor  := ("-" | "+") factor | atom ("^" integer)?
    atom    := integer | symbol | symbol "[" index ("," index)* "]" | "(" expr ")"
    index   := integer | letter

Symbols resolve against a :class:`SymbolTable`: graded variables (``c[1]``,
``x0``, ``c_f01_d00[1]``), numeric tables such as structure constants
(``f[a,b,c]``) and the builtins ``eps`` (Levi-Civita, ``+1`` on the increasing
index list starting at the index base) and ``delta``.

Index letters that occur in two or more factors of a product are summed over
their range; a letter occurring in only one factor must be bound from the
outside (the free index of a component such as ``Q(c[a])``).

Polynomials print in the same grammar (:func:`format_polynomial`), so printed
output re-parses to an equal polynomial.
"""

from __future__ import annotations

import ast
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import SpecSyntaxError, UndeclaredSymbolError
from .graded import ONE, ZERO, GradedVariable, Polynomial
from .qtarget import levi_civita

__all__ = [
    "SymbolTable",
    "Expression",
    "parse_expression",
    "evaluate",
    "format_polynomial",
    "polynomial_terms",
]

BUILTINS = ("eps", "delta")


@dataclass
class SymbolTable:
    """Names visible to expressions."""

    variables: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)  # name -> {index tuple: Fraction}
    index_ranges: dict = field(default_factory=dict)  # letter -> (lo, hi)
    default_range: tuple | None = None
    index_base: int = 1

    @classmethod
    def from_variables(cls, variables: Iterable[GradedVariable], **kw) -> "SymbolTable":
        return cls({v.name: v for v in variables}, **kw)

    def add(self, v: GradedVariable) -> None:
        self.variables[v.name] = v

    def range_of(self, letter: str):
        r = self.index_ranges.get(letter, self.default_range)
        return None if r is None else range(r[0], r[1] + 1)


def _caret_to_pow(text: str):
    """Replace ``^`` by ``**``; returns the new text and a column map per line."""
    lines = text.split("\n")
    out_lines = []
    maps = []
    for line in lines:
        new = []
        cmap = []
        for i, ch in enumerate(line):
            if ch == "^":
                new.append("**")
                cmap.extend([i, i])
            else:
                new.append(ch)
                cmap.append(i)
        cmap.append(len(line))
        out_lines.append("".join(new))
        maps.append(cmap)
    return "\n".join(out_lines), maps


class Expression:
    """A parsed expression; evaluate it with :meth:`evaluate`."""

    def __init__(self, text: str, location: str = ""):
        self.text = text
        self.location = location
        src, self._maps = _caret_to_pow(text)
        stripped = src.strip()
        if not stripped:
            raise SpecSyntaxError("empty expression", location, 1, 1)
        try:
            tree = ast.parse("(" + src + "\n)", mode="eval")
        except SyntaxError as exc:
            line = exc.lineno or 1
            raise SpecSyntaxError(f"invalid syntax ({exc.msg})", location,
                                  *self._pos(line, max((exc.offset or 1) - 1, 0))) from None
        self.tree = tree.body
        self._validate(self.tree)

    # -- positions --------------------------------------------------------------
    def _pos(self, line: int, col0: int):
        """1-based (line, column) in the original text from a parsed position."""
        if line == 1:
            col0 -= 1  # the added "("
        cmap = self._maps[line - 1] if 0 < line <= len(self._maps) else [0]
        col0 = min(max(col0, 0), len(cmap) - 1)
        return line, cmap[col0] + 1

    def _where(self, node):
        return self._pos(getattr(node, "lineno", 1), getattr(node, "col_offset", 0))

    def _error(self, cls, msg, node):
        return cls(msg, self.location, *self._where(node))

    # -- structure checks -----------------------------------------------------------
    def _validate(self, node):
        if isinstance(node, ast.BinOp):
            if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
                raise self._error(SpecSyntaxError, "unsupported operator", node)
            self._validate(node.left)
            if isinstance(node.op, ast.Pow):
                if not (isinstance(node.right, ast.Constant) and type(node.right.value) is int
                        and node.right.value >= 0):
                    raise self._error(SpecSyntaxError,
                                      "exponent must be a non-negative integer", node.right)
                return
            self._validate(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise self._error(SpecSyntaxError, "unsupported operator", node)
            self._validate(node.operand)
        elif isinstance(node, ast.Constant):
            if type(node.value) is not int:
                raise self._error(SpecSyntaxError,
                                  "only integer literals are allowed (write rationals as a/b)",
                                  node)
        elif isinstance(node, ast.Name):
            pass
        elif isinstance(node, ast.Subscript):
            if not isinstance(node.value, ast.Name):
                raise self._error(SpecSyntaxError, "only named symbols can be indexed", node)
            for idx in _index_nodes(node):
                if isinstance(idx, ast.Name):
                    continue
                if isinstance(idx, ast.Constant) and type(idx.value) is int:
                    continue
                if (isinstance(idx, ast.UnaryOp) and isinstance(idx.op, ast.USub)
                        and isinstance(idx.operand, ast.Constant)
                        and type(idx.operand.value) is int):
                    continue
                raise self._error(SpecSyntaxError,
                                  "indices must be integers or index letters", idx)
        else:
            raise self._error(SpecSyntaxError, "unsupported construct", node)

    # -- evaluation -------------------------------------------------------------------
    def evaluate(self, symbols: SymbolTable, env: Mapping[str, int] | None = None) -> Polynomial:
        return self._eval(self.tree, symbols, dict(env or {}))

    def free_indices(self) -> set[str]:
        """Index letters that the expression does not sum over."""
        return _free(self.tree)

    def _eval(self, node, sym: SymbolTable, env: dict) -> Polynomial:
        if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Mult, ast.Div)):
            return self._product(node, sym, env)
        if isinstance(node, ast.BinOp):
            left = self._eval(node.left, sym, env)
            if isinstance(node.op, ast.Pow):
                return left ** node.right.value
            right = self._eval(node.right, sym, env)
            return left + right if isinstance(node.op, ast.Add) else left - right
        if isinstance(node, ast.UnaryOp):
            val = self._eval(node.operand, sym, env)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.Constant):
            return Polynomial.constant(node.value)
        if isinstance(node, ast.Name):
            v = sym.variables.get(node.id)
            if v is None:
                raise self._error(UndeclaredSymbolError, f"undeclared symbol {node.id!r}", node)
            return Polynomial.variable(v)
        if isinstance(node, ast.Subscript):
            return self._indexed(node, sym, env)
        raise self._error(SpecSyntaxError, "unsupported construct", node)

    def _indexed(self, node, sym: SymbolTable, env: dict) -> Polynomial:
        name = node.value.id
        idx = []
        for i in _index_nodes(node):
            if isinstance(i, ast.Name):
                if i.id not in env:
                    raise self._error(UndeclaredSymbolError,
                                      f"index {i.id!r} is neither bound nor summed", i)
                idx.append(env[i.id])
            elif isinstance(i, ast.UnaryOp):
                idx.append(-i.operand.value)
            else:
                idx.append(i.value)
        if name == "eps":
            base = sym.index_base
            return Polynomial.constant(levi_civita([k - base for k in idx])
                                       if all(0 <= k - base < len(idx) for k in idx) else 0)
        if name == "delta":
            if len(idx) != 2:
                raise self._error(SpecSyntaxError, "delta takes two indices", node)
            return ONE if idx[0] == idx[1] else ZERO
        if name in sym.tables:
            return Polynomial.constant(sym.tables[name].get(tuple(idx), 0))
        key = f"{name}[{','.join(str(k) for k in idx)}]"
        v = sym.variables.get(key)
        if v is None:
            raise self._error(UndeclaredSymbolError, f"undeclared symbol {key!r}", node)
        return Polynomial.variable(v)

    def _product(self, node, sym: SymbolTable, env: dict) -> Polynomial:
        factors = []  # (node, is_divisor)
        _flatten_product(node, factors, False)
        occurrences: dict[str, int] = {}
        for f, _ in factors:
            for letter in _free(f) - set(env):
                occurrences[letter] = occurrences.get(letter, 0) + 1
        summed = sorted(k for k, c in occurrences.items() if c >= 2)
        ranges = []
        for letter in summed:
            r = sym.range_of(letter)
            if r is None:
                raise self._error(UndeclaredSymbolError,
                                  f"summation index {letter!r} has no declared range", node)
            ranges.append(r)
        # constant-valued factors first so that vanishing terms are skipped early
        order = sorted(range(len(factors)), key=lambda i: 0 if _is_numeric(factors[i][0]) else 1)
        total = ZERO
        for values in itertools.product(*ranges):
            local = dict(env)
            local.update(zip(summed, values))
            acc = ONE
            for i in order:
                f, div = factors[i]
                val = self._eval(f, sym, local)
                if div:
                    c = val.constant_term()
                    if not c or val != Polynomial.constant(c):
                        raise self._error(SpecSyntaxError,
                                          "division is only allowed by nonzero constants", f)
                    acc = acc.scale(1 / Fraction(c))
                else:
                    acc = acc * val
                if not acc:
                    break
            total = total + acc
        return total


def _index_nodes(node: ast.Subscript):
    sl = node.slice
    if isinstance(sl, ast.Index):  # pragma: no cover - Python < 3.9
        sl = sl.value
    if isinstance(sl, ast.Tuple):
        return list(sl.elts)
    return [sl]


def _flatten_product(node, out, div):
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Mult, ast.Div)):
        _flatten_product(node.left, out, div)
        if isinstance(node.op, ast.Mult):
            _flatten_product(node.right, out, div)
        else:
            out.append((node.right, not div))
        return
    out.append((node, div))


def _free(node) -> set[str]:
    """Index letters occurring in ``node`` that are not summed inside it."""
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Mult, ast.Div)):
        factors = []
        _flatten_product(node, factors, False)
        counts: dict[str, int] = {}
        for f, _ in factors:
            for k in _free(f):
                counts[k] = counts.get(k, 0) + 1
        return {k for k, c in counts.items() if c == 1}
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            return _free(node.left)
        return _free(node.left) | _free(node.right)
    if isinstance(node, ast.UnaryOp):
        return _free(node.operand)
    if isinstance(node, ast.Subscript):
        return {i.id for i in _index_nodes(node) if isinstance(i, ast.Name)}
    return set()


def _is_numeric(node) -> bool:
    if isinstance(node, ast.Constant):
        return True
    if isinstance(node, ast.Subscript) and isinstance(node.value, ast.Name):
        return node.value.id in BUILTINS
    return False


def parse_expression(text: str, symbols: SymbolTable, env: Mapping[str, int] | None = None,
                     location: str = "") -> Polynomial:
    """Parse and evaluate ``text`` in one step."""
    return Expression(text, location).evaluate(symbols, env)


evaluate = parse_expression


def format_polynomial(p: Polynomial) -> str:
    """Canonical printed form (re-parses to ``p``)."""
    return str(p)


def polynomial_terms(p: Polynomial) -> list:
    """Machine-readable form: ``[[coefficient, [[name, exponent], ...]], ...]``."""
    out = []
    for m, c in p.sorted_terms():
        coef = str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
        out.append([coef, [[v.name, e] for v, e in m.factors]])
    return out
