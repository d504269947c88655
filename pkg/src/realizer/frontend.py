"""Concrete syntax: parsing, pretty-printing and the JSON trace format.

Grammar (``->`` and ``+`` associate to the right, ``+`` binds tighter, and
application associates to the left)::

    type ::= nat | unit | bool | type + type | type -> type | ( type )
    term ::= x | n | () | true | false | fun x : type . term | term term
           | inj1{type} term | inj2{type} term
           | case term of { inj1 x -> term | inj2 y -> term }
           | if term then term else term | ( term )

An injection takes a single atomic argument, so ``inj1{nat+nat} f 3`` reads as
``(inj1{nat+nat} f) 3``. A ``fun`` or ``if`` may appear unparenthesized as the
last argument of an application.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from realizer.core import (
    BOOL,
    NAT,
    UNIT,
    App,
    Arrow,
    Case,
    Inj,
    Lam,
    Nat,
    NatLit,
    Sum,
    Term,
    Type,
    Unit,
    UnitIntro,
    Var,
    shift,
)
from realizer.machine import (
    Cons,
    CoVar,
    MConfig,
    MInj,
    MNatLit,
    MUnitIntro,
    MVar,
    Mu,
    MuCopat,
    MuTilde,
    MuTildeSum,
    Rule,
    Trace,
)


@dataclass(frozen=True)
class SourceSpan:
    start_offset: int
    end_offset: int
    line: int

    def __post_init__(self):
        if self.start_offset > self.end_offset:
            raise ValueError("span ends before it starts")


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan, expected: Iterable[str] = ()):
        self.message = message
        self.span = span
        self.expected = frozenset(expected)
        detail = f"line {span.line}, offset {span.start_offset}: {message}"
        if self.expected:
            detail += f" (expected {', '.join(sorted(self.expected))})"
        super().__init__(detail)


# -- lexer -------------------------------------------------------------------

KEYWORDS = frozenset({
    "fun", "case", "of", "inj1", "inj2", "if", "then", "else",
    "true", "false", "nat", "unit", "bool",
})

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|[(){}:.+|])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", a keyword, a symbol, or "eof"
    text: str
    span: SourceSpan


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    byte = 0
    line = 1
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        text = m.group() if m else source[pos]
        width = len(text.encode("utf-8"))
        if m is None:
            raise ParseError(f"unexpected character {text!r}",
                             SourceSpan(byte, byte + width, line))
        span = SourceSpan(byte, byte + width, line)
        match m.lastgroup:
            case "ident":
                tokens.append(Token(text if text in KEYWORDS else "ident", text, span))
            case "num":
                tokens.append(Token("num", text, span))
            case "sym":
                tokens.append(Token(text, text, span))
        line += text.count("\n")
        pos = m.end()
        byte += width
    tokens.append(Token("eof", "", SourceSpan(byte, byte, line)))
    return tokens


# -- parser ------------------------------------------------------------------

_TYPE_START = frozenset({"nat", "unit", "bool", "("})
_ATOM_START = frozenset({"ident", "num", "(", "true", "false", "case", "inj1", "inj2"})
_TERM_START = _ATOM_START | {"fun", "if"}


class _Parser:
    def __init__(self, source: str, scope: Sequence[str]):
        self.tokens = tokenize(source)
        self.pos = 0
        self.scope = list(scope)  # innermost first

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def fail(self, expected: Iterable[str], message: str | None = None):
        tok = self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(message or f"unexpected {found}", tok.span, expected)

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            self.fail({kind})
        tok = self.tok
        self.pos += 1
        return tok

    def accept(self, kind: str) -> Token | None:
        if self.tok.kind == kind:
            return self.expect(kind)
        return None

    def spanning(self, first: Token) -> SourceSpan:
        last = self.tokens[self.pos - 1]
        return SourceSpan(first.span.start_offset, last.span.end_offset, first.span.line)

    # types

    def type_(self) -> Type:
        left = self.sum_type()
        if self.accept("->"):
            return Arrow(left, self.type_())
        return left

    def sum_type(self) -> Type:
        left = self.type_atom()
        if self.accept("+"):
            return Sum(left, self.sum_type())
        return left

    def type_atom(self) -> Type:
        match self.tok.kind:
            case "nat":
                self.pos += 1
                return NAT
            case "unit":
                self.pos += 1
                return UNIT
            case "bool":
                self.pos += 1
                return BOOL
            case "(":
                self.pos += 1
                ty = self.type_()
                self.expect(")")
                return ty
        self.fail(_TYPE_START, "expected a type")

    # terms

    def bind(self, name: str):
        self.scope.insert(0, name)

    def unbind(self):
        self.scope.pop(0)

    def term(self) -> Term:
        first = self.tok
        match first.kind:
            case "fun":
                return self.lam()
            case "if":
                return self.if_()
        head = self.atom()
        while self.tok.kind in _TERM_START:
            if self.tok.kind in ("fun", "if"):
                arg = self.term()
                return App(head, arg, self.spanning(first))
            head = App(head, self.atom(), self.spanning(first))
        return head

    def lam(self) -> Lam:
        first = self.expect("fun")
        name = self.expect("ident").text
        self.expect(":")
        annot = self.type_()
        self.expect(".")
        self.bind(name)
        body = self.term()
        self.unbind()
        return Lam(annot, body, name, self.spanning(first))

    def if_(self) -> Case:
        first = self.expect("if")
        cond = self.term()
        self.expect("then")
        then = self.term()
        self.expect("else")
        else_ = self.term()
        return Case(cond, shift(then, 1), shift(else_, 1), "_", "_", self.spanning(first))

    def branch(self, side: str) -> tuple[str, Term]:
        self.expect(side)
        name = self.expect("ident").text
        self.expect("->")
        self.bind(name)
        body = self.term()
        self.unbind()
        return name, body

    def atom(self) -> Term:
        first = self.tok
        match first.kind:
            case "ident":
                self.pos += 1
                try:
                    index = self.scope.index(first.text)
                except ValueError:
                    raise ParseError(f"unbound identifier {first.text!r}", first.span) from None
                return Var(index, first.text, first.span)
            case "num":
                self.pos += 1
                return NatLit(int(first.text), first.span)
            case "true" | "false":
                self.pos += 1
                return Inj(1 if first.kind == "true" else 2, BOOL, UnitIntro(first.span),
                           first.span)
            case "(":
                self.pos += 1
                if self.accept(")"):
                    return UnitIntro(self.spanning(first))
                t = self.term()
                self.expect(")")
                return t
            case "inj1" | "inj2":
                self.pos += 1
                self.expect("{")
                annot = self.type_()
                self.expect("}")
                payload = self.atom()
                return Inj(int(first.kind[-1]), annot, payload, self.spanning(first))
            case "case":
                self.pos += 1
                scrutinee = self.term()
                self.expect("of")
                self.expect("{")
                n1, b1 = self.branch("inj1")
                self.expect("|")
                n2, b2 = self.branch("inj2")
                self.expect("}")
                return Case(scrutinee, b1, b2, n1, n2, self.spanning(first))
        self.fail(_TERM_START, "expected a term")

    def finish(self):
        if self.tok.kind != "eof":
            self.fail({"eof"}, f"unexpected {self.tok.text!r} after the end of the term")


def parse_program(source: str, scope: Sequence[str] = ()) -> Term:
    """Parse a term. ``scope`` names free variables, innermost first."""
    p = _Parser(source, scope)
    t = p.term()
    p.finish()
    return t


def parse_type(source: str) -> Type:
    p = _Parser(source, ())
    ty = p.type_()
    p.finish()
    return ty


# -- rendering ---------------------------------------------------------------

def render_type(ty: Type, level: int = 0) -> str:
    # level 0: anything; 1: no arrows; 2: atoms only
    match ty:
        case Nat():
            return "nat"
        case Unit():
            return "unit"
        case Sum(left, right):
            if ty == BOOL:
                return "bool"
            s = f"{render_type(left, 2)}+{render_type(right, 1)}"
            return s if level <= 1 else f"({s})"
        case Arrow(dom, cod):
            s = f"{render_type(dom, 1)} -> {render_type(cod, 0)}"
            return s if level == 0 else f"({s})"
    raise TypeError(f"not a type: {ty!r}")


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")


def _fresh(hint: str, taken: Sequence[str]) -> str:
    """A name based on ``hint`` that is a valid identifier and not in ``taken``."""
    if not _IDENT.fullmatch(hint or "") or hint in KEYWORDS:
        hint = "x"
    if hint not in taken:
        return hint
    base = hint.rstrip("0123456789") or "x"
    n = 1
    while f"{base}{n}" in taken or f"{base}{n}" in KEYWORDS:
        n += 1
    return f"{base}{n}"


def _free_name(j: int) -> str:
    return f"free{j}"


def render_term(t: Term, names: Sequence[str] = (), level: int = 0) -> str:
    """Render a source term; ``names`` gives names for free variables, innermost first."""
    def go(t: Term, names: list[str], level: int) -> str:
        # level 0: anything; 1: application head; 2: atom
        match t:
            case Var(i):
                return names[i] if i < len(names) else _free_name(i - len(names))
            case NatLit(n):
                return str(n)
            case UnitIntro():
                return "()"
            case Inj(side, annot, UnitIntro()) if annot == BOOL:
                return "true" if side == 1 else "false"
            case Inj(side, annot, payload):
                s = f"inj{side}{{{render_type(annot)}}} {go(payload, names, 2)}"
                return s if level <= 1 else f"({s})"
            case Case(s, b1, b2, n1, n2):
                x1 = _fresh(n1, names)
                x2 = _fresh(n2, names)
                return (f"case {go(s, names, 0)} of {{ inj1 {x1} -> {go(b1, [x1] + names, 0)}"
                        f" | inj2 {x2} -> {go(b2, [x2] + names, 0)} }}")
            case App(fn, arg):
                s = f"{go(fn, names, 1)} {go(arg, names, 2)}"
                return s if level <= 1 else f"({s})"
            case Lam(annot, body, name):
                x = _fresh(name, names)
                s = f"fun {x} : {render_type(annot)} . {go(body, [x] + names, 0)}"
                return s if level == 0 else f"({s})"
        raise TypeError(f"not a term: {t!r}")

    return go(t, list(names), level)


def _free_covar_name(j: int) -> str:
    return "alpha" if j == 0 else f"alpha{j}"


class _MachinePrinter:
    """Co-variables bound inside the object are named ``a0, a1, ...`` by depth;
    free ones are ``alpha, alpha1, ...``. Term variables use their name hints."""

    def __init__(self, free_names: Sequence[str]):
        self.free_names = list(free_names)

    def var(self, i: int, names: list[str]) -> str:
        if i < len(names):
            return names[i]
        j = i - len(names)
        return self.free_names[j] if j < len(self.free_names) else f"z{j}"

    def covar(self, i: int, depth: int) -> str:
        if i < depth:
            return f"a{depth - 1 - i}"
        return _free_covar_name(i - depth)

    def term(self, t, names: list[str], depth: int, atomic: bool = False) -> str:
        match t:
            case MVar(i):
                return self.var(i, names)
            case MNatLit(n):
                return str(n)
            case MUnitIntro():
                return "()"
            case MInj(side, payload):
                s = f"inj{side} {self.term(payload, names, depth, True)}"
            case Mu(body):
                s = f"mu a{depth}. {self.config(body, names, depth + 1)}"
            case MuCopat(body, name):
                x = _fresh(name, names + self.free_names)
                s = f"mu({x} . a{depth}) {self.config(body, [x] + names, depth + 1)}"
            case _:
                raise TypeError(f"not a machine term: {t!r}")
        return f"({s})" if atomic else s

    def coterm(self, e, names: list[str], depth: int) -> str:
        match e:
            case CoVar(i):
                return self.covar(i, depth)
            case Cons(arg, rest):
                return f"{self.term(arg, names, depth, True)} . {self.coterm(rest, names, depth)}"
            case MuTilde(body, name):
                x = _fresh(name, names + self.free_names)
                return f"mut {x}. {self.config(body, [x] + names, depth)}"
            case MuTildeSum(c1, c2, n1, n2):
                x1 = _fresh(n1, names + self.free_names)
                x2 = _fresh(n2, names + self.free_names)
                return (f"mut[inj1 {x1}. {self.config(c1, [x1] + names, depth)}"
                        f" | inj2 {x2}. {self.config(c2, [x2] + names, depth)}]")
        raise TypeError(f"not a machine co-term: {e!r}")

    def config(self, c: MConfig, names: list[str], depth: int) -> str:
        return f"< {self.term(c.term, names, depth)} | {self.coterm(c.coterm, names, depth)} >"


def render(obj, names: Sequence[str] = ()) -> str:
    """Render any syntactic object. ``names`` names free term variables, innermost first."""
    match obj:
        case Nat() | Unit() | Sum() | Arrow():
            return render_type(obj)
        case Var() | Lam() | App() | Inj() | Case() | UnitIntro() | NatLit():
            return render_term(obj, names)
        case MConfig():
            return _MachinePrinter(names).config(obj, [], 0)
        case MVar() | Mu() | MuCopat() | MInj() | MNatLit() | MUnitIntro():
            return _MachinePrinter(names).term(obj, [], 0)
        case CoVar() | Cons() | MuTilde() | MuTildeSum():
            return _MachinePrinter(names).coterm(obj, [], 0)
        case Trace():
            return render_trace(obj, names)
    raise TypeError(f"cannot render {obj!r}")


def render_trace(tr: Trace, names: Sequence[str] = ()) -> str:
    p = _MachinePrinter(names)
    width = max(len(r.value) for r in Rule)
    lines = [f"{'init':<{width}}  {p.config(tr.initial, [], 0)}"]
    for rule, nxt in tr.steps:
        lines.append(f"{rule.value:<{width}}  {p.config(nxt, [], 0)}")
    return "\n".join(lines)


# -- JSON traces -------------------------------------------------------------

def _node(tag: str, required: dict, optional: dict | None = None) -> dict:
    props = {"k": {"const": tag}, **required, **(optional or {})}
    return {
        "type": "object",
        "properties": props,
        "required": ["k", *required],
        "additionalProperties": False,
    }


_INDEX = {"type": "integer", "minimum": 0}
_NAME = {"type": "string"}
_TERM = {"$ref": "#/$defs/term"}
_COTERM = {"$ref": "#/$defs/coterm"}
_CONFIG = {"$ref": "#/$defs/config"}

TRACE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "initial": _CONFIG,
        "steps": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "rule": {"enum": [r.value for r in Rule]},
                    "next": _CONFIG,
                },
                "required": ["rule", "next"],
                "additionalProperties": False,
            },
        },
        "final": _CONFIG,
    },
    "required": ["initial", "steps", "final"],
    "additionalProperties": False,
    "$defs": {
        "config": {
            "type": "object",
            "properties": {"t": _TERM, "e": _COTERM},
            "required": ["t", "e"],
            "additionalProperties": False,
        },
        "term": {"oneOf": [
            _node("var", {"i": _INDEX}),
            _node("mu-copat", {"body": _CONFIG}, {"name": _NAME}),
            _node("mu", {"body": _CONFIG}),
            _node("inj", {"side": {"enum": [1, 2]}, "payload": _TERM}),
            _node("nat", {"n": _INDEX}),
            _node("unit", {}),
        ]},
        "coterm": {"oneOf": [
            _node("covar", {"i": _INDEX}),
            _node("cons", {"arg": _TERM, "rest": _COTERM}),
            _node("mu-tilde", {"body": _CONFIG}, {"name": _NAME}),
            _node("mu-tilde-sum", {"branch1": _CONFIG, "branch2": _CONFIG},
                  {"name1": _NAME, "name2": _NAME}),
        ]},
    },
}


def _enc_term(t) -> dict:
    match t:
        case MVar(i):
            return {"k": "var", "i": i}
        case MuCopat(body, name):
            return {"k": "mu-copat", "name": name, "body": _enc_config(body)}
        case Mu(body):
            return {"k": "mu", "body": _enc_config(body)}
        case MInj(side, payload):
            return {"k": "inj", "side": side, "payload": _enc_term(payload)}
        case MNatLit(n):
            return {"k": "nat", "n": n}
        case MUnitIntro():
            return {"k": "unit"}
    raise TypeError(f"not a machine term: {t!r}")


def _enc_coterm(e) -> dict:
    match e:
        case CoVar(i):
            return {"k": "covar", "i": i}
        case Cons(arg, rest):
            return {"k": "cons", "arg": _enc_term(arg), "rest": _enc_coterm(rest)}
        case MuTilde(body, name):
            return {"k": "mu-tilde", "name": name, "body": _enc_config(body)}
        case MuTildeSum(c1, c2, n1, n2):
            return {"k": "mu-tilde-sum", "name1": n1, "name2": n2,
                    "branch1": _enc_config(c1), "branch2": _enc_config(c2)}
    raise TypeError(f"not a machine co-term: {e!r}")


def _enc_config(c: MConfig) -> dict:
    return {"t": _enc_term(c.term), "e": _enc_coterm(c.coterm)}


def machine_to_json(obj) -> dict:
    """The JSON node of a single machine term, co-term or configuration."""
    match obj:
        case MConfig():
            return _enc_config(obj)
        case CoVar() | Cons() | MuTilde() | MuTildeSum():
            return _enc_coterm(obj)
    return _enc_term(obj)


def trace_to_json(tr: Trace) -> dict:
    return {
        "initial": _enc_config(tr.initial),
        "steps": [{"rule": rule.value, "next": _enc_config(nxt)} for rule, nxt in tr.steps],
        "final": _enc_config(tr.final),
    }


def encode_trace(tr: Trace, indent: int | None = None) -> str:
    return json.dumps(trace_to_json(tr), indent=indent)


class TraceFormatError(ValueError):
    pass


def _dec_term(d):
    try:
        match d["k"]:
            case "var":
                return MVar(_index(d["i"]))
            case "mu-copat":
                return MuCopat(_dec_config(d["body"]), d.get("name", "x"))
            case "mu":
                return Mu(_dec_config(d["body"]))
            case "inj":
                if d["side"] not in (1, 2):
                    raise TraceFormatError(f"bad injection side {d['side']!r}")
                return MInj(d["side"], _dec_term(d["payload"]))
            case "nat":
                return MNatLit(_index(d["n"]))
            case "unit":
                return MUnitIntro()
    except (KeyError, TypeError) as exc:
        raise TraceFormatError(f"malformed term node: {exc}") from None
    raise TraceFormatError(f"unknown term tag {d.get('k')!r}")


def _dec_coterm(d):
    try:
        match d["k"]:
            case "covar":
                return CoVar(_index(d["i"]))
            case "cons":
                return Cons(_dec_term(d["arg"]), _dec_coterm(d["rest"]))
            case "mu-tilde":
                return MuTilde(_dec_config(d["body"]), d.get("name", "v"))
            case "mu-tilde-sum":
                return MuTildeSum(_dec_config(d["branch1"]), _dec_config(d["branch2"]),
                                  d.get("name1", "x"), d.get("name2", "y"))
    except (KeyError, TypeError) as exc:
        raise TraceFormatError(f"malformed co-term node: {exc}") from None
    raise TraceFormatError(f"unknown co-term tag {d.get('k')!r}")


def _index(v) -> int:
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise TraceFormatError(f"expected a natural number, got {v!r}")
    return v


def _dec_config(d) -> MConfig:
    if not isinstance(d, dict) or "t" not in d or "e" not in d:
        raise TraceFormatError("a configuration needs 't' and 'e'")
    return MConfig(_dec_term(d["t"]), _dec_coterm(d["e"]))


def trace_from_json(d: dict) -> Trace:
    if not isinstance(d, dict):
        raise TraceFormatError("a trace is a JSON object")
    try:
        steps = tuple((Rule(s["rule"]), _dec_config(s["next"])) for s in d["steps"])
        return Trace(_dec_config(d["initial"]), steps, _dec_config(d["final"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, TraceFormatError):
            raise
        raise TraceFormatError(f"malformed trace: {exc}") from None


def decode_trace(text: str) -> Trace:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"not JSON: {exc}") from None
    return trace_from_json(data)
