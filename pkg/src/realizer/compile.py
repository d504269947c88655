"""Translation of source terms into mu/mu-tilde machine terms.

Term variables keep their de Bruijn indices. Each ``Mu`` or ``MuCopat``
introduced by the translation binds co-variable 0, so a closed source term
compiles to a term with no free co-variables.
"""

from __future__ import annotations

from realizer.core import App, Case, Inj, Lam, NatLit, Strategy, Term, UnitIntro, Var
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
    MVar,
    Mu,
    MuCopat,
    MuTilde,
    MuTildeSum,
    shift_term,
)


def _lam(body: MTerm, name: str) -> MuCopat:
    return MuCopat(MConfig(body, ALPHA0), name)


class Compiler:
    """Memoizing translation for one strategy.

    Compiled terms never contain free co-variables, so a sub-translation can
    be placed under a new co-binder as it is; only term variables ever need
    lifting. Results are cached per source node, which keeps repeated requests
    for subterms (as the realizability evaluator makes) linear overall.
    """

    def __init__(self, strategy: Strategy):
        self.by_value = strategy is Strategy.CBV
        self._cache: dict[int, tuple[Term, MTerm]] = {}

    def __call__(self, t: Term) -> MTerm:
        hit = self._cache.get(id(t))
        if hit is not None and hit[0] is t:
            return hit[1]
        m = self._compile(t)
        self._cache[id(t)] = (t, m)
        return m

    def _compile(self, t: Term) -> MTerm:
        match t:
            case Var(i):
                return MVar(i)
            case Lam(_, body, name):
                return _lam(self(body), name)
            case App(fn, arg) if self.by_value:
                f = shift_term(self(fn), 1)
                return Mu(MConfig(self(arg), MuTilde(MConfig(f, Cons(MVar(0), ALPHA0)), "v")))
            case App(fn, arg):
                return Mu(MConfig(self(fn), Cons(self(arg), ALPHA0)))
            case Inj(side, _, payload) if self.by_value:
                return Mu(MConfig(self(payload), MuTilde(MConfig(MInj(side, MVar(0)), ALPHA0), "v")))
            case Inj(side, _, payload):
                return MInj(side, self(payload))
            case Case(s, b1, b2, n1, n2):
                return Mu(MConfig(self(s), MuTildeSum(MConfig(self(b1), ALPHA0),
                                                      MConfig(self(b2), ALPHA0), n1, n2)))
            case UnitIntro():
                return MUnitIntro()
            case NatLit(n):
                return MNatLit(n)
        raise TypeError(f"not a term: {t!r}")


def compile_cbn(t: Term) -> MTerm:
    return Compiler(Strategy.CBN)(t)


def compile_cbv(t: Term) -> MTerm:
    """Call-by-value: arguments and injection payloads are forced before use."""
    return Compiler(Strategy.CBV)(t)


def compile_term(t: Term, strategy: Strategy) -> MTerm:
    return Compiler(strategy)(t)


def _covars_term(t: MTerm, depth: int, out: set[int]) -> None:
    match t:
        case MVar() | MNatLit() | MUnitIntro():
            pass
        case MuCopat(body) | Mu(body):
            _covars_config(body, depth + 1, out)
        case MInj(_, payload):
            _covars_term(payload, depth, out)
        case _:
            raise TypeError(f"not a machine term: {t!r}")


def _covars_coterm(e: MCoterm, depth: int, out: set[int]) -> None:
    match e:
        case CoVar(i):
            if i >= depth:
                out.add(i - depth)
        case Cons(arg, rest):
            _covars_term(arg, depth, out)
            _covars_coterm(rest, depth, out)
        case MuTilde(body):
            _covars_config(body, depth, out)
        case MuTildeSum(c1, c2):
            _covars_config(c1, depth, out)
            _covars_config(c2, depth, out)
        case _:
            raise TypeError(f"not a machine co-term: {e!r}")


def _covars_config(c: MConfig, depth: int, out: set[int]) -> None:
    _covars_term(c.term, depth, out)
    _covars_coterm(c.coterm, depth, out)


def free_covars(t: MTerm | MCoterm | MConfig) -> set[int]:
    out: set[int] = set()
    match t:
        case MConfig():
            _covars_config(t, 0, out)
        case CoVar() | Cons() | MuTilde() | MuTildeSum():
            _covars_coterm(t, 0, out)
        case _:
            _covars_term(t, 0, out)
    return out


def count_mu_tilde(t: MTerm | MCoterm | MConfig) -> int:
    """Number of plain ``MuTilde`` binders; sum destructors are not counted."""
    plain = 0

    def term(t):
        match t:
            case MuCopat(body) | Mu(body):
                config(body)
            case MInj(_, payload):
                term(payload)

    def coterm(e):
        nonlocal plain
        match e:
            case Cons(arg, rest):
                term(arg)
                coterm(rest)
            case MuTilde(body):
                plain += 1
                config(body)
            case MuTildeSum(c1, c2):
                config(c1)
                config(c2)

    def config(c):
        term(c.term)
        coterm(c.coterm)

    match t:
        case MConfig():
            config(t)
        case CoVar() | Cons() | MuTilde() | MuTildeSum():
            coterm(t)
        case _:
            term(t)
    return plain
