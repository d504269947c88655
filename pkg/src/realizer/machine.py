"""The untyped mu/mu-tilde abstract machine, plus the Krivine machine.

Terms and co-terms use de Bruijn indices in two disjoint spaces: ``MVar``
indices count term binders (``MuCopat``, ``MuTilde``, the branches of
``MuTildeSum``) and ``CoVar`` indices count co-term binders (``MuCopat``,
``Mu``). The top-level co-variable of a run is ``CoVar(0)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Union

from realizer.core import DEFAULT_FUEL

# -- syntax ------------------------------------------------------------------


@dataclass(frozen=True)
class MVar:
    index: int


@dataclass(frozen=True)
class MuCopat:
    """``mu(x . a).c``: matches an application frame, binding term 0 and co-term 0."""
    body: MConfig
    name: str = field(default="x", compare=False)


@dataclass(frozen=True)
class Mu:
    body: MConfig


@dataclass(frozen=True)
class MInj:
    side: int
    payload: MTerm


@dataclass(frozen=True)
class MNatLit:
    n: int


@dataclass(frozen=True)
class MUnitIntro:
    pass


@dataclass(frozen=True)
class CoVar:
    index: int


@dataclass(frozen=True)
class Cons:
    arg: MTerm
    rest: MCoterm


@dataclass(frozen=True)
class MuTilde:
    body: MConfig
    name: str = field(default="v", compare=False)


@dataclass(frozen=True)
class MuTildeSum:
    branch1: MConfig
    branch2: MConfig
    name1: str = field(default="x", compare=False)
    name2: str = field(default="y", compare=False)


@dataclass(frozen=True)
class MConfig:
    term: MTerm
    coterm: MCoterm


MTerm = Union[MVar, MuCopat, Mu, MInj, MNatLit, MUnitIntro]
MCoterm = Union[CoVar, Cons, MuTilde, MuTildeSum]

ALPHA0 = CoVar(0)


class Rule(Enum):
    MU = "mu"
    MU_TILDE = "mu-tilde"
    MU_CONS = "mu-cons"
    MU_TILDE_SUM = "mu-tilde-sum"


# -- substitution ------------------------------------------------------------
#
# One traversal serves shifting and substitution alike. ``on_var(j, dt, dc)``
# is called for a free term variable whose index relative to the traversal
# root is ``j``, with ``dt``/``dc`` the term/co-term binders crossed so far;
# it returns the node to put in its place (already adjusted for the depth).
# A callback of ``None`` leaves that kind of variable alone.

def _bounds(node) -> tuple[int, int]:
    """How many enclosing term and co-term binders ``node`` reaches out to.

    Cached on the node; walks use it to leave untouched subtrees shared.
    """
    try:
        return node.__dict__["_fv"]
    except KeyError:
        pass
    match node:
        case MVar(i):
            b = (i + 1, 0)
        case CoVar(i):
            b = (0, i + 1)
        case MNatLit() | MUnitIntro():
            b = (0, 0)
        case MInj(_, payload):
            b = _bounds(payload)
        case MuCopat(body):
            ft, fc = _bounds(body)
            b = (max(ft - 1, 0), max(fc - 1, 0))
        case Mu(body):
            ft, fc = _bounds(body)
            b = (ft, max(fc - 1, 0))
        case MuTilde(body):
            ft, fc = _bounds(body)
            b = (max(ft - 1, 0), fc)
        case MuTildeSum(c1, c2):
            (t1, f1), (t2, f2) = _bounds(c1), _bounds(c2)
            b = (max(t1 - 1, t2 - 1, 0), max(f1, f2))
        case Cons(arg, rest) | MConfig(arg, rest):
            (t1, f1), (t2, f2) = _bounds(arg), _bounds(rest)
            b = (max(t1, t2), max(f1, f2))
        case _:
            raise TypeError(f"not a machine node: {node!r}")
    node.__dict__["_fv"] = b
    return b


def _untouched(node, dt, dc, on_var, on_covar) -> bool:
    ft, fc = _bounds(node)
    return (on_var is None or ft <= dt) and (on_covar is None or fc <= dc)


def _walk_term(t, dt, dc, on_var, on_covar):
    if _untouched(t, dt, dc, on_var, on_covar):
        return t
    match t:
        case MVar(i):
            return t if i < dt else on_var(i - dt, dt, dc)
        case MuCopat(body, name):
            return MuCopat(_walk_config(body, dt + 1, dc + 1, on_var, on_covar), name)
        case Mu(body):
            return Mu(_walk_config(body, dt, dc + 1, on_var, on_covar))
        case MInj(side, payload):
            return MInj(side, _walk_term(payload, dt, dc, on_var, on_covar))
        case MNatLit() | MUnitIntro():
            return t
    raise TypeError(f"not a machine term: {t!r}")


def _walk_coterm(e, dt, dc, on_var, on_covar):
    if _untouched(e, dt, dc, on_var, on_covar):
        return e
    match e:
        case CoVar(i):
            return e if i < dc else on_covar(i - dc, dt, dc)
        case Cons(arg, rest):
            return Cons(_walk_term(arg, dt, dc, on_var, on_covar),
                        _walk_coterm(rest, dt, dc, on_var, on_covar))
        case MuTilde(body, name):
            return MuTilde(_walk_config(body, dt + 1, dc, on_var, on_covar), name)
        case MuTildeSum(c1, c2, n1, n2):
            return MuTildeSum(_walk_config(c1, dt + 1, dc, on_var, on_covar),
                              _walk_config(c2, dt + 1, dc, on_var, on_covar), n1, n2)
    raise TypeError(f"not a machine co-term: {e!r}")


def _walk_config(c, dt, dc, on_var, on_covar):
    if _untouched(c, dt, dc, on_var, on_covar):
        return c
    return MConfig(_walk_term(c.term, dt, dc, on_var, on_covar),
                   _walk_coterm(c.coterm, dt, dc, on_var, on_covar))


def _shifter(by_t: int, by_c: int):
    def on_var(j, dt, dc):
        return MVar(j + dt + by_t)

    def on_covar(j, dt, dc):
        return CoVar(j + dc + by_c)

    return (on_var if by_t else None), (on_covar if by_c else None)


def shift_term(t: MTerm, by_t: int, by_c: int = 0) -> MTerm:
    if by_t == 0 and by_c == 0:
        return t
    return _walk_term(t, 0, 0, *_shifter(by_t, by_c))


def shift_coterm(e: MCoterm, by_t: int, by_c: int = 0) -> MCoterm:
    if by_t == 0 and by_c == 0:
        return e
    return _walk_coterm(e, 0, 0, *_shifter(by_t, by_c))


def _substituters(term_env: Callable[[int], MTerm | None],
                  coterm_env: Callable[[int], MCoterm | None],
                  lower_t: int, lower_c: int):
    """Replacement callbacks. Unmapped free indices are lowered by ``lower_*``."""

    def on_var(j, dt, dc):
        r = term_env(j)
        if r is None:
            return MVar(j - lower_t + dt)
        return shift_term(r, dt, dc)

    def on_covar(j, dt, dc):
        r = coterm_env(j)
        if r is None:
            return CoVar(j - lower_c + dc)
        return shift_coterm(r, dt, dc)

    return on_var, on_covar


def subst_config(c: MConfig, term_env: Mapping[int, MTerm] | None = None,
                 coterm_env: Mapping[int, MCoterm] | None = None) -> MConfig:
    """Capture-avoiding simultaneous substitution of free indices.

    Indices missing from the maps are left as they are.
    """
    term_env = term_env or {}
    coterm_env = coterm_env or {}
    if not term_env and not coterm_env:
        return c
    return _walk_config(c, 0, 0, *_substituters(term_env.get, coterm_env.get, 0, 0))


def subst_term(t: MTerm, term_env: Mapping[int, MTerm] | None = None,
               coterm_env: Mapping[int, MCoterm] | None = None) -> MTerm:
    term_env = term_env or {}
    coterm_env = coterm_env or {}
    if not term_env and not coterm_env:
        return t
    return _walk_term(t, 0, 0, *_substituters(term_env.get, coterm_env.get, 0, 0))


def _top(r):
    return lambda j: r if j == 0 else None


def instantiate(c: MConfig, term: MTerm | None = None,
                coterm: MCoterm | None = None) -> MConfig:
    """Open a binder body: put ``term``/``coterm`` for index 0 and lower the rest."""
    t_env = _top(term) if term is not None else (lambda j: None)
    c_env = _top(coterm) if coterm is not None else (lambda j: None)
    on_var, on_covar = _substituters(t_env, c_env,
                                     1 if term is not None else 0,
                                     1 if coterm is not None else 0)
    if term is None:
        on_var = None
    if coterm is None:
        on_covar = None
    return _walk_config(c, 0, 0, on_var, on_covar)


# -- reduction ---------------------------------------------------------------


@dataclass(frozen=True)
class Reduced:
    rule: Rule
    next: MConfig


@dataclass(frozen=True)
class Normal:
    pass


@dataclass(frozen=True)
class Stuck:
    reason: str


NORMAL = Normal()

_VALUES = (MuCopat, MInj, MNatLit, MUnitIntro)


def step(c: MConfig) -> Reduced | Normal | Stuck:
    """One top-level reduction. On the only critical pair, mu beats mu-tilde."""
    t, e = c.term, c.coterm
    if isinstance(t, MuCopat) and isinstance(e, Cons):
        return Reduced(Rule.MU_CONS, instantiate(t.body, e.arg, e.rest))
    if isinstance(t, MInj) and isinstance(e, MuTildeSum):
        branch = e.branch1 if t.side == 1 else e.branch2
        return Reduced(Rule.MU_TILDE_SUM, instantiate(branch, term=t.payload))
    if isinstance(t, Mu):
        return Reduced(Rule.MU, instantiate(t.body, coterm=e))
    if isinstance(e, MuTilde):
        return Reduced(Rule.MU_TILDE, instantiate(e.body, term=t))
    if isinstance(e, CoVar):
        return NORMAL
    if isinstance(t, MVar):
        if isinstance(e, MuTildeSum):
            return Stuck("variable against sum destructor")
        return NORMAL
    if isinstance(e, Cons):
        if isinstance(t, MInj):
            return Stuck("constructor against application frame")
        if isinstance(t, MNatLit):
            return Stuck("literal against application frame")
        return Stuck("unit against application frame")
    if isinstance(e, MuTildeSum):
        if isinstance(t, MuCopat):
            return Stuck("abstraction against sum destructor")
        if isinstance(t, MNatLit):
            return Stuck("literal against sum destructor")
        return Stuck("unit against sum destructor")
    raise TypeError(f"not a configuration: {c!r}")


def is_normal(c: MConfig) -> bool:
    return isinstance(step(c), Normal)


def step_open(c: MConfig) -> Reduced | Normal | Stuck:
    """``step`` extended to configurations blocked on a free variable.

    When the head is ``<x | mut[...]>`` the branches are reduced in place,
    first branch first; this is the context rule of the machine restricted to
    case analysis on a neutral scrutinee. Everything else behaves as ``step``.
    """
    if isinstance(c.term, MVar) and isinstance(c.coterm, MuTildeSum):
        e = c.coterm
        for which in (1, 2):
            branch = e.branch1 if which == 1 else e.branch2
            r = step_open(branch)
            if isinstance(r, Reduced):
                new = (MuTildeSum(r.next, e.branch2, e.name1, e.name2) if which == 1
                       else MuTildeSum(e.branch1, r.next, e.name1, e.name2))
                return Reduced(r.rule, MConfig(c.term, new))
            if isinstance(r, Stuck):
                return r
        return NORMAL
    return step(c)


def is_normal_open(c: MConfig) -> bool:
    return isinstance(step_open(c), Normal)


# -- traces ------------------------------------------------------------------


@dataclass(frozen=True)
class Trace:
    initial: MConfig
    steps: tuple[tuple[Rule, MConfig], ...]
    final: MConfig

    @classmethod
    def empty(cls, c: MConfig) -> Trace:
        return cls(c, (), c)

    @property
    def rules(self) -> list[Rule]:
        return [rule for rule, _ in self.steps]

    @property
    def configs(self) -> list[MConfig]:
        return [self.initial] + [nxt for _, nxt in self.steps]

    def __len__(self):
        return len(self.steps)


class MachineStuck(Exception):
    def __init__(self, reason: str, partial: Trace):
        super().__init__(f"machine stuck after {len(partial)} steps: {reason}")
        self.reason = reason
        self.partial = partial


class FuelExhausted(Exception):
    def __init__(self, partial: Trace):
        super().__init__(f"no normal form within {len(partial)} steps")
        self.partial = partial


def run(c: MConfig, fuel: int = DEFAULT_FUEL, *, stepper=step) -> Trace:
    """Iterate ``stepper`` to a normal configuration, recording every step."""
    steps = []
    cur = c
    while True:
        r = stepper(cur)
        match r:
            case Normal():
                return Trace(c, tuple(steps), cur)
            case Stuck(reason):
                raise MachineStuck(reason, Trace(c, tuple(steps), cur))
        if len(steps) >= fuel:
            raise FuelExhausted(Trace(c, tuple(steps), cur))
        steps.append((r.rule, r.next))
        cur = r.next


def run_open(c: MConfig, fuel: int = DEFAULT_FUEL) -> Trace:
    return run(c, fuel, stepper=step_open)


class InvalidTrace(ValueError):
    def __init__(self, position: int, reason: str):
        super().__init__(f"invalid trace at step {position}: {reason}")
        self.position = position
        self.reason = reason


def check_trace(tr: Trace, *, open_terms: bool = False) -> None:
    """Raise ``InvalidTrace`` at the first bad link; return quietly if valid.

    A valid trace is exactly a witness that its initial configuration belongs
    to the pole: every link is a machine step and the final configuration is
    normal.
    """
    stepper = step_open if open_terms else step
    cur = tr.initial
    for i, (rule, nxt) in enumerate(tr.steps):
        r = stepper(cur)
        if not isinstance(r, Reduced):
            raise InvalidTrace(i, f"configuration does not reduce ({r})")
        if r.rule is not rule:
            raise InvalidTrace(i, f"recorded rule {rule.value}, machine applies {r.rule.value}")
        if r.next != nxt:
            raise InvalidTrace(i, "recorded configuration is not the reduct")
        cur = nxt
    if cur != tr.final:
        raise InvalidTrace(len(tr.steps), "final configuration is not the last reduct")
    if not isinstance(stepper(cur), Normal):
        raise InvalidTrace(len(tr.steps), "final configuration is not normal")


def is_valid(tr: Trace, *, open_terms: bool = False) -> bool:
    try:
        check_trace(tr, open_terms=open_terms)
    except InvalidTrace:
        return False
    return True


# -- Krivine machine ---------------------------------------------------------


@dataclass(frozen=True)
class KVar:
    index: int


@dataclass(frozen=True)
class KLam:
    body: KTerm
    name: str = field(default="x", compare=False)


@dataclass(frozen=True)
class KApp:
    fn: KTerm
    arg: KTerm


@dataclass(frozen=True)
class Star:
    pass


@dataclass(frozen=True)
class KCons:
    arg: KTerm
    rest: KContext


@dataclass(frozen=True)
class KConfig:
    term: KTerm
    context: KContext


KTerm = Union[KVar, KLam, KApp]
KContext = Union[Star, KCons]

STAR = Star()

KAM_PUSH = 1  # <t u | e> -> <t | u.e>
KAM_GRAB = 2  # <lam x.t | u.e> -> <t[u/x] | e>


def _kmap(t: KTerm, depth: int, on_free) -> KTerm:
    match t:
        case KVar(i):
            return t if i < depth else on_free(i - depth, depth)
        case KLam(body, name):
            return KLam(_kmap(body, depth + 1, on_free), name)
        case KApp(fn, arg):
            return KApp(_kmap(fn, depth, on_free), _kmap(arg, depth, on_free))
    raise TypeError(f"not a KAM term: {t!r}")


def kam_subst_top(body: KTerm, arg: KTerm) -> KTerm:
    def on_free(j, depth):
        if j == 0:
            return _kmap(arg, 0, lambda k, d: KVar(k + d + depth)) if depth else arg
        return KVar(j - 1 + depth)

    return _kmap(body, 0, on_free)


def kam_step(c: KConfig) -> tuple[int, KConfig] | None:
    match c:
        case KConfig(KApp(fn, arg), e):
            return KAM_PUSH, KConfig(fn, KCons(arg, e))
        case KConfig(KLam(body), KCons(arg, e)):
            return KAM_GRAB, KConfig(kam_subst_top(body, arg), e)
    return None


@dataclass(frozen=True)
class KamRun:
    final: KConfig
    rules: tuple[int, ...]

    @property
    def steps(self) -> int:
        return len(self.rules)


def kam_run(c: KConfig, fuel: int = DEFAULT_FUEL) -> KamRun:
    rules = []
    while (r := kam_step(c)) is not None:
        if len(rules) >= fuel:
            raise FuelExhausted(Trace.empty(MConfig(MUnitIntro(), ALPHA0)))
        rule, c = r
        rules.append(rule)
    return KamRun(c, tuple(rules))


def erase(t) -> KTerm:
    """Embed an arrow-only source term into the Krivine machine."""
    from realizer.core import App, Lam, Var

    match t:
        case Var(i):
            return KVar(i)
        case Lam(_, body, name):
            return KLam(erase(body), name)
        case App(fn, arg):
            return KApp(erase(fn), erase(arg))
    raise ValueError(f"not in the arrow-only fragment: {t!r}")
