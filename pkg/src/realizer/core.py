"""Source language: simply-typed lambda-calculus with sums, unit and nat literals.

Variables are de Bruijn indices. A typing context is a tuple of types with the
innermost binding first, so ``Var(0)`` has type ``ctx[0]``. Binder names are
kept only as rendering hints and never take part in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Sequence, Union

if TYPE_CHECKING:
    from realizer.frontend import SourceSpan

DEFAULT_FUEL = 100_000


# -- types -------------------------------------------------------------------

@dataclass(frozen=True)
class Nat:
    pass


@dataclass(frozen=True)
class Unit:
    pass


@dataclass(frozen=True)
class Sum:
    left: Type
    right: Type

    def component(self, side: int) -> Type:
        return self.left if side == 1 else self.right


@dataclass(frozen=True)
class Arrow:
    dom: Type
    cod: Type


Type = Union[Nat, Unit, Sum, Arrow]

NAT = Nat()
UNIT = Unit()
BOOL = Sum(UNIT, UNIT)


class Polarity(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


def polarity(ty: Type) -> Polarity:
    """Sums and nat are defined by their constructors; arrows and unit by their observations."""
    match ty:
        case Nat() | Sum():
            return Polarity.POSITIVE
        case Unit() | Arrow():
            return Polarity.NEGATIVE
    raise TypeError(f"not a type: {ty!r}")


class Strategy(Enum):
    CBN = "cbn"
    CBV = "cbv"


# -- terms -------------------------------------------------------------------

def _meta():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    index: int
    name: str = field(default="x", compare=False)
    span: SourceSpan | None = _meta()


@dataclass(frozen=True)
class Lam:
    annot: Type
    body: Term
    name: str = field(default="x", compare=False)
    span: SourceSpan | None = _meta()


@dataclass(frozen=True)
class App:
    fn: Term
    arg: Term
    span: SourceSpan | None = _meta()


@dataclass(frozen=True)
class Inj:
    side: int
    annot: Type
    payload: Term
    span: SourceSpan | None = _meta()


@dataclass(frozen=True)
class Case:
    scrutinee: Term
    branch1: Term
    branch2: Term
    name1: str = field(default="x", compare=False)
    name2: str = field(default="y", compare=False)
    span: SourceSpan | None = _meta()


@dataclass(frozen=True)
class UnitIntro:
    span: SourceSpan | None = _meta()


@dataclass(frozen=True)
class NatLit:
    n: int
    span: SourceSpan | None = _meta()


Term = Union[Var, Lam, App, Inj, Case, UnitIntro, NatLit]
TypingContext = tuple  # tuple[Type, ...], innermost first


def true_term() -> Inj:
    return Inj(1, BOOL, UnitIntro())


def false_term() -> Inj:
    return Inj(2, BOOL, UnitIntro())


def term_depth(t: Term) -> int:
    match t:
        case Var() | UnitIntro() | NatLit():
            return 1
        case Lam(body=body):
            return 1 + term_depth(body)
        case App(fn, arg):
            return 1 + max(term_depth(fn), term_depth(arg))
        case Inj(payload=payload):
            return 1 + term_depth(payload)
        case Case(s, b1, b2):
            return 1 + max(term_depth(s), term_depth(b1), term_depth(b2))
    raise TypeError(f"not a term: {t!r}")


# -- substitution ------------------------------------------------------------

def _map_vars(t: Term, depth: int, on_free) -> Term:
    """Rebuild ``t``, replacing each free variable via ``on_free(index - depth, depth)``."""
    match t:
        case Var(i):
            return t if i < depth else on_free(i - depth, depth, t)
        case Lam(annot, body, name):
            return Lam(annot, _map_vars(body, depth + 1, on_free), name, t.span)
        case App(fn, arg):
            return App(_map_vars(fn, depth, on_free), _map_vars(arg, depth, on_free), t.span)
        case Inj(side, annot, payload):
            return Inj(side, annot, _map_vars(payload, depth, on_free), t.span)
        case Case(s, b1, b2, n1, n2):
            return Case(
                _map_vars(s, depth, on_free),
                _map_vars(b1, depth + 1, on_free),
                _map_vars(b2, depth + 1, on_free),
                n1, n2, t.span,
            )
        case UnitIntro() | NatLit():
            return t
    raise TypeError(f"not a term: {t!r}")


def shift(t: Term, by: int) -> Term:
    if by == 0:
        return t
    return _map_vars(t, 0, lambda j, depth, v: Var(j + depth + by, v.name, v.span))


def subst_top(body: Term, arg: Term) -> Term:
    """``body[arg/0]``, lowering the remaining free indices by one."""

    def on_free(j, depth, v):
        if j == 0:
            return shift(arg, depth)
        return Var(j - 1 + depth, v.name, v.span)

    return _map_vars(body, 0, on_free)


# -- type checking -----------------------------------------------------------

class TypeCheckError(Exception):
    def __init__(self, term: Term, message: str, expected: Type | None = None,
                 found: Type | None = None):
        super().__init__(message)
        self.term = term
        self.expected = expected
        self.found = found

    @property
    def span(self):
        return getattr(self.term, "span", None)


def typecheck(ctx: Sequence[Type], t: Term) -> Type:
    ctx = tuple(ctx)
    match t:
        case Var(i):
            if not 0 <= i < len(ctx):
                raise TypeCheckError(t, f"unbound variable index {i}")
            return ctx[i]
        case NatLit(n):
            if n < 0:
                raise TypeCheckError(t, "negative literal")
            return NAT
        case UnitIntro():
            return UNIT
        case Lam(annot, body):
            return Arrow(annot, typecheck((annot,) + ctx, body))
        case App(fn, arg):
            fn_ty = typecheck(ctx, fn)
            if not isinstance(fn_ty, Arrow):
                raise TypeCheckError(fn, "applying a term that is not a function",
                                     found=fn_ty)
            arg_ty = typecheck(ctx, arg)
            if arg_ty != fn_ty.dom:
                raise TypeCheckError(arg, "argument type mismatch",
                                     expected=fn_ty.dom, found=arg_ty)
            return fn_ty.cod
        case Inj(side, annot, payload):
            if not isinstance(annot, Sum):
                raise TypeCheckError(t, "injection annotation must be a sum type",
                                     found=annot)
            if side not in (1, 2):
                raise TypeCheckError(t, f"bad injection side {side}")
            payload_ty = typecheck(ctx, payload)
            if payload_ty != annot.component(side):
                raise TypeCheckError(payload, "injection payload type mismatch",
                                     expected=annot.component(side), found=payload_ty)
            return annot
        case Case(s, b1, b2):
            s_ty = typecheck(ctx, s)
            if not isinstance(s_ty, Sum):
                raise TypeCheckError(s, "case analysis on a term that is not a sum",
                                     found=s_ty)
            ty1 = typecheck((s_ty.left,) + ctx, b1)
            ty2 = typecheck((s_ty.right,) + ctx, b2)
            if ty1 != ty2:
                raise TypeCheckError(b2, "case branches disagree", expected=ty1, found=ty2)
            return ty1
    raise TypeError(f"not a term: {t!r}")


# -- reference evaluator -----------------------------------------------------

class Diverged(Exception):
    """Fuel ran out before reaching a value."""

    def __init__(self, fuel: int):
        super().__init__(f"no value within {fuel} evaluation steps")
        self.fuel = fuel


class EvalStuck(RuntimeError):
    """A closed well-typed term got stuck; an invariant is broken."""


def eval_reference(t: Term, strategy: Strategy, fuel: int = DEFAULT_FUEL) -> Term:
    """Big-step weak evaluation of a closed term.

    Under CBN arguments and injection payloads are passed unevaluated; under CBV
    both are evaluated first (argument before function).
    """
    budget = fuel
    by_value = strategy is Strategy.CBV

    def ev(t: Term) -> Term:
        nonlocal budget
        while True:
            budget -= 1
            if budget < 0:
                raise Diverged(fuel)
            match t:
                case Lam() | UnitIntro() | NatLit():
                    return t
                case Inj(side, annot, payload):
                    return Inj(side, annot, ev(payload)) if by_value else t
                case App(fn, arg):
                    a = ev(arg) if by_value else arg
                    f = ev(fn)
                    if not isinstance(f, Lam):
                        raise EvalStuck(f"applying non-function {f!r}")
                    t = subst_top(f.body, a)
                case Case(s, b1, b2):
                    v = ev(s)
                    if not isinstance(v, Inj):
                        raise EvalStuck(f"case on non-injection {v!r}")
                    t = subst_top(b1 if v.side == 1 else b2, v.payload)
                case Var():
                    raise EvalStuck(f"free variable {t!r}")
                case _:
                    raise TypeError(f"not a term: {t!r}")

    return ev(t)
