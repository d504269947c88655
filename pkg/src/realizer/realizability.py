"""Normalization by realizability: well-typed terms read as witness-producing evaluators.

Every well-typed term is interpreted as a truth witness of its type. A witness
carries the machine term it stands for and a ``justify`` closure that, given
something of the opposite side, produces an element of the pole. Witnesses are
dynamically tagged: passing the wrong kind of value is reported as
``WitnessMismatch`` and never happens on well-typed input.

Witness shapes, by polarity of the type ``A``::

    positive A   truth   WitnessT, justify: WitnessF -> pole
                 falsity WitnessF, justify: truth value (NatVal / SumVal) -> pole
    negative A   truth   WitnessT, justify: falsity value (ConsVal / ForceFrame) -> pole
                 falsity WitnessF, justify: WitnessT -> pole

A cut lets the side that is defined by its values drive: the truth witness at
a positive type, the falsity witness at a negative one.

Two poles ship. ``TracePole`` builds the full reduction trace to the normal
form and checks every step it prepends against the machine, so each result is
a certificate. ``IntegerPole`` drops all structure and keeps only the final
natural number.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Union

from realizer.compile import Compiler
from realizer.core import (
    NAT,
    UNIT,
    App,
    Arrow,
    Case,
    Inj,
    Lam,
    NatLit,
    Polarity,
    Strategy,
    Sum,
    Term,
    Type,
    UnitIntro,
    Var,
    polarity,
    typecheck,
)
from realizer.frontend import render
from realizer.machine import (
    ALPHA0,
    Cons,
    CoVar,
    MConfig,
    MCoterm,
    MInj,
    MNatLit,
    MTerm,
    MUnitIntro,
    Reduced,
    Rule,
    Trace,
    instantiate,
    is_normal,
    step,
    subst_term,
)

PoleElem = Union[Trace, int]


class WitnessMismatch(RuntimeError):
    """A witness received a value of the wrong shape. Unreachable from well-typed input."""


class AntiReductionError(RuntimeError):
    """The trace pole was asked to prepend a step the machine does not take."""


class Unsupported(Exception):
    """Normalization was requested at an observation the evaluator does not offer."""


# -- witnesses ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WitnessT:
    ty: Type
    carried: MTerm
    justify: Callable[[Any], PoleElem] = field(repr=False)


@dataclass(frozen=True, eq=False)
class WitnessF:
    ty: Type
    carried: MCoterm
    justify: Callable[[Any], PoleElem] = field(repr=False)


@dataclass(frozen=True, eq=False)
class NatVal:
    n: int

    @property
    def ty(self) -> Type:
        return NAT

    @property
    def carried(self) -> MTerm:
        return MNatLit(self.n)


@dataclass(frozen=True, eq=False)
class SumVal:
    """An injection. ``inner`` justifies the payload; under call-by-value
    ``value`` also holds the payload's value witness, which is what gets bound."""
    ty: Sum
    side: int
    inner: WitnessT
    value: Any = None

    @property
    def carried(self) -> MTerm:
        payload = self.value.carried if self.value is not None else self.inner.carried
        return MInj(self.side, payload)


@dataclass(frozen=True, eq=False)
class ConsVal:
    """An application frame ``u . e``: an argument and a continuation for the result."""
    ty: Arrow
    arg: Any
    rest: WitnessF

    @property
    def carried(self) -> MCoterm:
        return Cons(self.arg.carried, self.rest.carried)


@dataclass(frozen=True, eq=False)
class ForceFrame:
    """A ``mut x. c`` waiting for a value of negative type.

    Value-like truths (abstractions, unit) answer it by calling ``bind`` with
    themselves; computations first reduce to such a value.
    """
    ty: Type
    carried: MCoterm
    bind: Callable[[WitnessT], PoleElem] = field(repr=False)


TruthValue = Union[NatVal, SumVal, WitnessT]
FalsityValue = Union[ConsVal, ForceFrame, WitnessF]


def is_positive(ty: Type) -> bool:
    return polarity(ty) is Polarity.POSITIVE


def cut(ty: Type, tw: WitnessT, fw: WitnessF) -> PoleElem:
    if is_positive(ty):
        return tw.justify(fw)
    return fw.justify(tw)


def val_truth(v: NatVal | SumVal) -> WitnessT:
    def justify(k):
        if not isinstance(k, WitnessF):
            raise WitnessMismatch(f"positive truth expects a continuation, got {k!r}")
        return k.justify(v)

    return WitnessT(v.ty, v.carried, justify)


def val_falsity(pi: ConsVal | ForceFrame) -> WitnessF:
    def justify(t):
        if not isinstance(t, WitnessT):
            raise WitnessMismatch(f"negative falsity expects a truth witness, got {t!r}")
        return t.justify(pi)

    return WitnessF(pi.ty, pi.carried, justify)


def val(v):
    """Embed a value witness: truths for positive values, falsities for frames."""
    match v:
        case NatVal() | SumVal():
            return val_truth(v)
        case ConsVal() | ForceFrame():
            return val_falsity(v)
    raise WitnessMismatch(f"not a value witness: {v!r}")


def truth_of_value(ty: Type, v: TruthValue) -> WitnessT:
    """At negative types a truth value already is a truth witness."""
    return val_truth(v) if is_positive(ty) else v


def as_falsity(ty: Type, pi: FalsityValue) -> WitnessF:
    """What a truth witness at ``ty`` receives, seen as a falsity witness."""
    return pi if is_positive(ty) else val_falsity(pi)


def _forcer(ty: Type, coterm: MCoterm, bind: Callable) -> WitnessF:
    if is_positive(ty):
        return WitnessF(ty, coterm, bind)
    return val_falsity(ForceFrame(ty, coterm, bind))


# -- poles -------------------------------------------------------------------


class TracePole:
    name = "trace"

    def expand(self, rule: Rule, source: MConfig, p: Trace) -> Trace:
        r = step(source)
        if r != Reduced(rule, p.initial):
            raise AntiReductionError(
                f"expected {rule.value} step from {render(source)} to {render(p.initial)}, "
                f"machine gives {r}")
        return Trace(source, ((rule, p.initial),) + p.steps, p.final)

    def at_covar(self, v: TruthValue) -> Trace:
        c = MConfig(v.carried, ALPHA0)
        if not is_normal(c):
            raise WitnessMismatch(f"value does not give a normal configuration: {render(c)}")
        return Trace.empty(c)


class IntegerPole:
    name = "nat"

    def expand(self, rule: Rule, source: MConfig, p: int) -> int:
        return p

    def at_covar(self, v: TruthValue) -> int:
        if not isinstance(v, NatVal):
            raise WitnessMismatch(f"integer pole observed a non-integer value {v!r}")
        return v.n


TRACE_POLE = TracePole()
INTEGER_POLE = IntegerPole()

Pole = Union[TracePole, IntegerPole]


def pole_named(name: str) -> Pole:
    match name:
        case "trace":
            return TRACE_POLE
        case "nat" | "integer":
            return INTEGER_POLE
    raise ValueError(f"unknown pole {name!r}")


# -- the adequacy evaluator ----------------------------------------------------


def _need(kind, x, where: str):
    if not isinstance(x, kind):
        raise WitnessMismatch(f"{where}: expected {kind.__name__}, got {type(x).__name__}")
    return x


class Realizer:
    """Interprets terms as truth witnesses for one strategy and one pole."""

    def __init__(self, strategy: Strategy, pole: Pole = TRACE_POLE):
        self.strategy = strategy
        self.pole = pole
        self.by_value = strategy is Strategy.CBV
        self._types: dict = {}
        self._keep = []  # keeps cached keys' objects alive so ids stay unique
        self.compiled = Compiler(strategy)

    def type_of(self, t: Term, ctx: tuple) -> Type:
        key = (id(t), ctx)
        if key not in self._types:
            self._keep.append(t)
            self._types[key] = typecheck(ctx, t)
        return self._types[key]

    def close(self, t: Term, env: tuple) -> MTerm:
        """The compiled term with the environment's carried terms substituted."""
        return subst_term(self.compiled(t), {i: w.carried for i, w in enumerate(env)})

    def expand(self, rule: Rule, source: MConfig, p: PoleElem) -> PoleElem:
        return self.pole.expand(rule, source, p)

    def covar_falsity(self, ty: Type) -> WitnessF:
        if not is_positive(ty):
            raise Unsupported(f"cannot observe a result of negative type {render(ty)}")
        return WitnessF(ty, ALPHA0, self.pole.at_covar)

    def rea(self, t: Term, ctx: tuple, env: tuple) -> WitnessT:
        match t:
            case Var(i):
                w = env[i]
                return truth_of_value(ctx[i], w) if self.by_value else w
            case NatLit(n):
                return val_truth(NatVal(n))
            case UnitIntro():
                return self._unit()
            case Lam():
                return self._lam(t, ctx, env)
            case App():
                if self.by_value:
                    return self._app_cbv(t, ctx, env)
                return self._app_cbn(t, ctx, env)
            case Inj():
                if self.by_value:
                    return self._inj_cbv(t, ctx, env)
                ty = self.type_of(t, ctx)
                return val_truth(SumVal(ty, t.side, self.rea(t.payload, ctx, env)))
            case Case():
                return self._case(t, ctx, env)
        raise TypeError(f"not a term: {t!r}")

    def _unit(self) -> WitnessT:
        def justify(pi):
            return _need(ForceFrame, pi, "unit").bind(w)

        w = WitnessT(UNIT, MUnitIntro(), justify)
        return w

    def _lam(self, t: Lam, ctx: tuple, env: tuple) -> WitnessT:
        ty = self.type_of(t, ctx)
        carried = self.close(t, env)

        def justify(pi):
            match pi:
                case ConsVal(_, arg, rest):
                    body = self.rea(t.body, (t.annot,) + ctx, (arg,) + env)
                    source = MConfig(carried, pi.carried)
                    return self.expand(Rule.MU_CONS, source, cut(ty.cod, body, rest))
                case ForceFrame():
                    return pi.bind(w)
            raise WitnessMismatch(f"abstraction observed by {pi!r}")

        w = WitnessT(ty, carried, justify)
        return w

    def _app_cbn(self, t: App, ctx: tuple, env: tuple) -> WitnessT:
        fn_ty = self.type_of(t.fn, ctx)
        fw = self.rea(t.fn, ctx, env)
        aw = self.rea(t.arg, ctx, env)
        carried = self.close(t, env)

        def justify(pi):
            k = as_falsity(fn_ty.cod, pi)
            source = MConfig(carried, k.carried)
            return self.expand(Rule.MU, source, fw.justify(ConsVal(fn_ty, aw, k)))

        return WitnessT(fn_ty.cod, carried, justify)

    def _app_cbv(self, t: App, ctx: tuple, env: tuple) -> WitnessT:
        fn_ty = self.type_of(t.fn, ctx)
        arg_ty = fn_ty.dom
        fw = self.rea(t.fn, ctx, env)
        aw = self.rea(t.arg, ctx, env)
        carried = self.close(t, env)

        def justify(pi):
            k = as_falsity(fn_ty.cod, pi)
            source = MConfig(carried, k.carried)
            coterm = instantiate(carried.body, coterm=k.carried).coterm

            def bind(v):
                frame = val_falsity(ConsVal(fn_ty, v, k))
                return self.expand(Rule.MU_TILDE, MConfig(v.carried, coterm),
                                   cut(fn_ty, fw, frame))

            return self.expand(Rule.MU, source, cut(arg_ty, aw, _forcer(arg_ty, coterm, bind)))

        return WitnessT(fn_ty.cod, carried, justify)

    def _inj_cbv(self, t: Inj, ctx: tuple, env: tuple) -> WitnessT:
        ty = self.type_of(t, ctx)
        payload_ty = ty.component(t.side)
        pw = self.rea(t.payload, ctx, env)
        carried = self.close(t, env)

        def justify(k):
            k = _need(WitnessF, k, "injection")
            source = MConfig(carried, k.carried)
            coterm = instantiate(carried.body, coterm=k.carried).coterm

            def bind(v):
                sv = SumVal(ty, t.side, truth_of_value(payload_ty, v), v)
                return self.expand(Rule.MU_TILDE, MConfig(v.carried, coterm), k.justify(sv))

            return self.expand(Rule.MU, source,
                               cut(payload_ty, pw, _forcer(payload_ty, coterm, bind)))

        return WitnessT(ty, carried, justify)

    def _case(self, t: Case, ctx: tuple, env: tuple) -> WitnessT:
        sum_ty = self.type_of(t.scrutinee, ctx)
        ty = self.type_of(t, ctx)
        sw = self.rea(t.scrutinee, ctx, env)
        carried = self.close(t, env)

        def justify(pi):
            k = as_falsity(ty, pi)
            source = MConfig(carried, k.carried)
            destructor = instantiate(carried.body, coterm=k.carried).coterm

            def dispatch(v):
                v = _need(SumVal, v, "case")
                branch = t.branch1 if v.side == 1 else t.branch2
                entry = v.value if self.by_value else v.inner
                bw = self.rea(branch, (sum_ty.component(v.side),) + ctx, (entry,) + env)
                return self.expand(Rule.MU_TILDE_SUM, MConfig(v.carried, destructor),
                                   cut(ty, bw, k))

            return self.expand(Rule.MU, source,
                               cut(sum_ty, sw, WitnessF(sum_ty, destructor, dispatch)))

        return WitnessT(ty, carried, justify)


def rea(t: Term, ctx: tuple, env: tuple, strategy: Strategy = Strategy.CBN,
        pole: Pole = TRACE_POLE) -> WitnessT:
    return Realizer(strategy, pole).rea(t, tuple(ctx), tuple(env))


# Justification closures recurse once per machine step, so long traces need a
# deep Python stack. Work runs on a helper thread with a large stack.
_STACK_BYTES = 512 * 1024 * 1024
_RECURSION_LIMIT = 1_000_000


def with_deep_stack(fn: Callable, *args, **kwargs):
    result: list = []
    error: list = []

    def target():
        try:
            result.append(fn(*args, **kwargs))
        except BaseException as exc:  # re-raised on the caller's thread
            error.append(exc)

    old_limit = sys.getrecursionlimit()
    old_size = threading.stack_size()
    sys.setrecursionlimit(max(old_limit, _RECURSION_LIMIT))
    threading.stack_size(_STACK_BYTES)
    try:
        worker = threading.Thread(target=target, name="realizer")
        worker.start()
    finally:
        threading.stack_size(old_size)
    worker.join()
    sys.setrecursionlimit(old_limit)
    if error:
        raise error[0]
    return result[0]


def normalize(t: Term, strategy: Strategy = Strategy.CBN,
              pole: Pole | str = TRACE_POLE) -> PoleElem:
    """Normalize a closed program of positive type by realizability.

    With the trace pole the result is a checked trace from
    ``<compiled t | alpha>`` to its normal form; with the integer pole (nat
    programs only) it is the final literal.
    """
    if isinstance(pole, str):
        pole = pole_named(pole)

    def go():
        ty = typecheck((), t)
        if not is_positive(ty):
            raise Unsupported(f"cannot observe a result of negative type {render(ty)}; "
                              "apply it to arguments to reach a positive type")
        if isinstance(pole, IntegerPole) and ty != NAT:
            raise Unsupported(f"the integer pole only observes nat, not {render(ty)}")
        r = Realizer(strategy, pole)
        return cut(ty, r.rea(t, (), ()), r.covar_falsity(ty))

    return with_deep_stack(go)


def extract_nat(tr: Trace) -> int:
    match tr.final:
        case MConfig(MNatLit(n), CoVar()):
            return n
    raise ValueError(f"final config not a nat literal: {render(tr.final)}")
