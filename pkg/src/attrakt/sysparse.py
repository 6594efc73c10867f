"""Parsers for polynomial expressions, system files and run-configuration files.

Expression grammar::

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := base ('^' nat)?
    base   := number | ident | '(' expr ')' | '-' factor

``^`` binds tighter than unary minus, so ``-x1^2`` is ``-(x1^2)``. There is no
division: a rational vector field would silently break the SOS pipeline.

System file::

    vars: x1 x2
    dot x1 = -0.42*x1 - 1.05*x2 - 2.3*x1^2 - 0.5*x1*x2 - x1^3
    dot x2 = 1.98*x1 + x1*x2
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .polycore import Polynomial

EQUILIBRIUM_TOL = 1e-12

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class ParseError(ValueError):
    """Syntax or semantic error in an input file, with 1-based position."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # 'num', 'ident', 'op', 'end'
    text: str
    column: int


def tokenize(text: str, line: int = 1, col_offset: int = 0) -> list[Token]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        col = col_offset + i + 1
        if ch in "+-*^()":
            tokens.append(Token("op", ch, col))
            i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            end = m.end()
            if end < len(text) and (text[end].isalnum() or text[end] in "._"):
                raise ParseError(f"malformed number {text[i:end + 1]!r}", line, col)
            tokens.append(Token("num", m.group(), col))
            i = end
            continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(Token("ident", m.group(), col))
            i = m.end()
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("end", "", col_offset + len(text) + 1))
    return tokens


class _ExprParser:
    def __init__(self, tokens: list[Token], var_names: Sequence[str], line: int):
        self.tokens = tokens
        self.pos = 0
        self.line = line
        self.index = {name: i for i, name in enumerate(var_names)}
        self.nvars = len(var_names)

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, self.line, tok.column)

    def parse(self) -> Polynomial:
        result = self.expr()
        if self.peek().kind != "end":
            self.error(f"unexpected token {self.peek().text!r}")
        return result

    def expr(self) -> Polynomial:
        result = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> Polynomial:
        result = self.factor()
        while self.peek().kind == "op" and self.peek().text == "*":
            self.advance()
            result = result * self.factor()
        return result

    def factor(self) -> Polynomial:
        base = self.base()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            tok = self.advance()
            if tok.kind != "num" or not tok.text.isdigit():
                self.error("exponent must be a non-negative integer literal", tok)
            base = base ** int(tok.text)
        return base

    def base(self) -> Polynomial:
        tok = self.advance()
        if tok.kind == "num":
            return Polynomial.constant(self.nvars, float(tok.text))
        if tok.kind == "ident":
            if tok.text not in self.index:
                self.error(f"unknown identifier {tok.text!r}", tok)
            return Polynomial.variable(self.nvars, self.index[tok.text])
        if tok.kind == "op" and tok.text == "(":
            inner = self.expr()
            close = self.advance()
            if close.kind != "op" or close.text != ")":
                self.error("expected ')'", close)
            return inner
        if tok.kind == "op" and tok.text == "-":
            return -self.factor()
        if tok.kind == "end":
            self.error("unexpected end of expression", tok)
        self.error(f"unexpected token {tok.text!r}", tok)


def parse_polynomial(text: str, var_names: Sequence[str], *, line: int = 1, col_offset: int = 0) -> Polynomial:
    """Parse and fully expand a polynomial expression over ``var_names``."""
    tokens = tokenize(text, line, col_offset)
    return _ExprParser(tokens, var_names, line).parse()


@dataclass
class PolySystem:
    """Polynomial vector field dx/dt = f(x) with an equilibrium at the origin."""

    var_names: list[str]
    f: list[Polynomial]

    def __post_init__(self):
        if len(self.f) != len(self.var_names):
            raise ValueError("one equation per state variable is required")
        for fi in self.f:
            if fi.nvars != len(self.var_names):
                raise ValueError("vector field components must use all declared variables")

    @property
    def nvars(self) -> int:
        return len(self.var_names)

    @property
    def degree(self) -> int:
        return max(fi.degree for fi in self.f)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.asarray(fi.evaluate(x)) for fi in self.f], axis=-1)

    def to_text(self) -> str:
        lines = ["vars: " + " ".join(self.var_names)]
        for name, fi in zip(self.var_names, self.f):
            lines.append(f"dot {name} = {fi.to_text(self.var_names)}")
        return "\n".join(lines) + "\n"


def _strip_comment(raw: str) -> str:
    return raw.split("#", 1)[0]


def parse_system(contents: str) -> PolySystem:
    var_names: list[str] | None = None
    eqs: dict[str, Polynomial] = {}
    eq_lines: dict[str, int] = {}
    for lineno, raw in enumerate(contents.splitlines(), start=1):
        text = _strip_comment(raw)
        if not text.strip():
            continue
        stripped = text.lstrip()
        indent = len(text) - len(stripped)
        if stripped.startswith("vars:"):
            if var_names is not None:
                raise ParseError("duplicate 'vars:' declaration", lineno, indent + 1)
            names = stripped[5:].split()
            if not names:
                raise ParseError("no variables declared", lineno, indent + 1)
            for name in names:
                if not _IDENT.fullmatch(name):
                    raise ParseError(f"invalid variable name {name!r}", lineno, text.find(name) + 1)
                if names.count(name) > 1:
                    raise ParseError(f"duplicate variable {name!r}", lineno, text.find(name) + 1)
            var_names = names
            continue
        m = re.match(r"dot\s+([A-Za-z_][A-Za-z0-9_]*)\s*=", stripped)
        if m:
            if var_names is None:
                raise ParseError("'dot' line before 'vars:' declaration", lineno, indent + 1)
            name = m.group(1)
            if name not in var_names:
                raise ParseError(f"equation for undeclared variable {name!r}", lineno, indent + m.start(1) + 1)
            if name in eqs:
                raise ParseError(f"duplicate equation for {name!r}", lineno, indent + 1)
            rhs = stripped[m.end():]
            eqs[name] = parse_polynomial(rhs, var_names, line=lineno, col_offset=indent + m.end())
            eq_lines[name] = lineno
            continue
        raise ParseError(f"unrecognized line {stripped.strip()!r}", lineno, indent + 1)
    if var_names is None:
        raise ParseError("missing 'vars:' declaration", 1, 1)
    missing = [v for v in var_names if v not in eqs]
    if missing:
        raise ParseError(f"missing equation for {', '.join(missing)}", len(contents.splitlines()) or 1, 1)
    f = [eqs[v] for v in var_names]
    for name, fi in zip(var_names, f):
        value = fi.constant_term()
        if abs(value) > EQUILIBRIUM_TOL:
            raise ParseError(f"origin is not an equilibrium: f_{name}(0) = {value!r}", eq_lines[name], 1)
    return PolySystem(list(var_names), f)


def parse_pieces(contents: str, var_names: Sequence[str]) -> tuple[list[Polynomial], float | None]:
    """Parse a pieces file: ``piece = <expr>`` lines and an optional ``gamma_lo = <num>``."""
    pieces = []
    gamma_lo = None
    for lineno, raw in enumerate(contents.splitlines(), start=1):
        text = _strip_comment(raw)
        if not text.strip():
            continue
        key, sep, value = text.partition("=")
        if not sep:
            raise ParseError("expected 'key = value'", lineno, 1)
        key = key.strip()
        if key == "piece":
            pieces.append(parse_polynomial(value, var_names, line=lineno, col_offset=len(key) + 1))
        elif key == "gamma_lo":
            try:
                gamma_lo = float(value)
            except ValueError:
                raise ParseError(f"invalid number {value.strip()!r}", lineno, len(key) + 2) from None
        else:
            raise ParseError(f"unknown key {key!r}", lineno, 1)
    if not pieces:
        raise ParseError("no 'piece' lines found", 1, 1)
    return pieces, gamma_lo


@dataclass
class RunConfig:
    deg_VN: int = 4
    deg_R: int = 2
    deg_p: int | None = None
    deg_m0: int | None = None
    deg_m1: int | None = None
    deg_m2: int | None = None
    deg_m3: int | None = None
    deg_s: int | None = None
    gamma_lo: float = 1.0
    gamma_hi: float = 100.0
    bisect_tol: float = 1e-3
    max_outer_iters: int = 10
    stop_tol: float = 1e-3
    eps_margin: float = 1e-6
    kappa: float = 1e-3
    k_compact: int | None = None
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iters: int = 100
    seed: int = 0
    verify_T: float = 100.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.deg_VN < 2 or self.deg_VN % 2:
            raise ValueError("deg_VN must be an even integer >= 2")
        if self.deg_R < 2 or self.deg_R % 2:
            raise ValueError("deg_R must be an even integer >= 2")
        if not 0 < self.gamma_lo < self.gamma_hi:
            raise ValueError("require 0 < gamma_lo < gamma_hi")
        if self.bisect_tol <= 0 or self.eps_margin <= 0:
            raise ValueError("bisect_tol and eps_margin must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.verify_T <= 0:
            raise ValueError("verify_T must be positive")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _convert(value: str, annotation: str):
    value = value.strip()
    if value.lower() in ("none", "auto") and "None" in annotation:
        return None
    if annotation.startswith("int"):
        return int(value)
    return float(value)


def parse_config(contents: str) -> RunConfig:
    types = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(contents.splitlines(), start=1):
        text = _strip_comment(raw)
        if not text.strip():
            continue
        key, sep, value = text.partition("=")
        if not sep:
            raise ParseError("expected 'key = value'", lineno, 1)
        key = key.strip()
        if key not in types:
            raise ParseError(f"unknown configuration key {key!r}", lineno, text.find(key) + 1)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno, text.find(key) + 1)
        try:
            values[key] = _convert(value, str(types[key]))
        except ValueError:
            raise ParseError(f"invalid value {value.strip()!r} for {key!r}", lineno, text.find("=") + 2) from None
    try:
        return RunConfig(**values)
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from None
