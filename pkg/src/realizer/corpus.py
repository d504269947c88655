"""Test programs: a hand-written collection and a seeded random generator.

Every program is closed, well typed, and of positive type, so it can be
normalized and observed at the top-level co-variable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from realizer.core import (
    BOOL,
    NAT,
    UNIT,
    App,
    Arrow,
    Case,
    Inj,
    Lam,
    NatLit,
    Sum,
    Term,
    Type,
    UnitIntro,
    Var,
    polarity,
    Polarity,
    term_depth,
    typecheck,
)
from realizer.frontend import parse_program

NESTED_CASES = """
case (case inj1{unit+unit} () of
        { inj1 x1 -> inj2{unit+(unit+unit)} (inj2{unit+unit} x1)
        | inj2 x2 -> inj2{unit+(unit+unit)} (inj1{unit+unit} x2) })
of { inj1 y1 -> 0 | inj2 y2 -> 1 }
"""

EVALUATION_ORDER = "(fun x:nat. 0) ((fun y:nat. y) 1)"

HAND_WRITTEN: dict[str, str] = {
    "literal": "3",
    "identity": "(fun x:nat. x) 3",
    "constant": "(fun x:nat. fun y:nat. x) 1 2",
    "second": "(fun x:nat. fun y:nat. y) 1 2",
    "if-true": "if true then 4 else 7",
    "if-false": "if false then 4 else 7",
    "nested-cases": NESTED_CASES,
    "evaluation-order": EVALUATION_ORDER,
    "case-left": "case inj1{nat+unit} 3 of { inj1 x -> x | inj2 y -> 0 }",
    "case-right": "case inj2{nat+unit} () of { inj1 x -> x | inj2 y -> 0 }",
    "higher-order": "(fun f:nat->nat. f 5) (fun x:nat. x)",
    "twice": "(fun f:nat->nat. fun x:nat. f (f x)) (fun y:nat. y) 6",
    "compose": """(fun f:nat->nat. fun g:nat->nat. fun x:nat. f (g x))
                  (fun a:nat. a) (fun b:nat. 9) 1""",
    "not": "(fun b:bool. if b then false else true) true",
    "and": "(fun a:bool. fun b:bool. if a then b else false) true false",
    "or": "(fun a:bool. fun b:bool. if a then true else b) false true",
    "bool-to-nat": "(fun b:bool. if b then 1 else 0) ((fun c:bool. c) true)",
    "sum-swap": """(fun s:nat+unit. case s of { inj1 n -> inj2{unit+nat} n
                                            | inj2 u -> inj1{unit+nat} u })
                   (inj1{nat+unit} 8)""",
    "sum-of-functions": """case inj2{(nat->nat)+(unit->nat)} (fun u:unit. 2)
                           of { inj1 f -> f 0 | inj2 g -> g () }""",
    "function-in-sum": "inj1{(nat->nat)+nat} (fun x:nat. x)",
    "case-returns-function": """(case true of { inj1 a -> fun x:nat. x
                                                  | inj2 b -> fun x:nat. 0 }) 5""",
    "commuting-closed": """(case inj1{nat+nat} 3 of { inj1 x1 -> fun y:nat. x1
                                                    | inj2 x2 -> fun y:nat. y }) 5""",
    "unit-argument": "(fun u:unit. 4) ()",
    "unit-computed": "(fun u:unit. 4) ((fun v:nat. ()) 0)",
    "function-argument": "(fun f:nat->nat. f 2) ((fun g:nat->nat. g) (fun z:nat. z))",
    "nested-sum": "inj2{nat+(bool+unit)} (inj1{bool+unit} true)",
    "strict-payload": "inj1{nat+unit} ((fun x:nat. x) 3)",
    "case-of-case": """case (case true of { inj1 a -> inj2{nat+nat} 1 | inj2 b -> inj1{nat+nat} 2 })
                       of { inj1 x -> x | inj2 y -> 7 }""",
    "discarded-argument": "(fun x:nat+unit. 0) (inj1{nat+unit} ((fun y:nat. y) 3))",
    "church-like": """(fun n:(nat->nat)->nat->nat. n (fun x:nat. x) 11)
                      (fun s:nat->nat. fun z:nat. s (s z))""",
    "shadowing": "(fun x:nat. (fun x:nat. x) 2) 1",
    "deep-shadow": "(fun x:nat. fun x:nat. fun y:nat. x) 1 2 3",
    "bool-result": "(fun f:nat->bool. f 3) (fun n:nat. false)",
    "large-literal": "(fun x:nat. x) 123456789012345678901234567890",
    "case-variable-branches": """(fun s:bool+nat. case s of { inj1 b -> if b then 1 else 2
                                                          | inj2 n -> n })
                                 (inj1{bool+nat} false)""",
    "unit-in-case": """case inj1{unit+nat} ((fun n:nat. ()) 4)
                       of { inj1 u -> (fun v:unit. 10) u | inj2 m -> m }""",
    "if-of-function": "(if false then fun x:nat. x else fun x:nat. 12) 0",
}


@dataclass(frozen=True)
class Program:
    name: str
    term: Term
    ty: Type
    source: str | None = None


def hand_written() -> list[Program]:
    out = []
    for name, src in HAND_WRITTEN.items():
        t = parse_program(src)
        out.append(Program(name, t, typecheck((), t), src))
    return out


# -- random generation -------------------------------------------------------

_SMALL_TYPES = (NAT, NAT, UNIT, BOOL, Sum(NAT, UNIT), Arrow(NAT, NAT),
                Arrow(UNIT, NAT), Arrow(NAT, BOOL), Sum(NAT, Arrow(NAT, NAT)))
_TOP_TYPES = (NAT, NAT, NAT, BOOL, BOOL, Sum(NAT, UNIT), Sum(BOOL, NAT),
              Sum(NAT, Arrow(NAT, NAT)))


class Generator:
    """Type-directed generator of closed well-typed terms."""

    def __init__(self, seed: int, max_depth: int = 6):
        self.rng = random.Random(seed)
        self.max_depth = max_depth
        self.names = 0

    def fresh(self, base: str) -> str:
        self.names += 1
        return f"{base}{self.names}"

    def small_type(self) -> Type:
        return self.rng.choice(_SMALL_TYPES)

    def term(self, ty: Type, ctx: tuple, budget: int, redex: bool = False) -> Term:
        """A term of type ``ty`` whose depth is at most ``budget``.

        With ``redex`` set, an elimination is chosen whenever the budget allows.
        """
        options = []
        matching = [i for i, a in enumerate(ctx) if a == ty]
        if matching:
            options += ["var"] * 3
        if budget >= _min_depth(ty):
            options += ["intro"] * 2
        if budget >= 2 + _min_depth(ty):
            options += ["app"] * 3
        if budget >= 3 + _min_depth(ty):
            options += ["case"] * 2
        if redex and {"app", "case"} & set(options):
            options = [o for o in options if o in ("app", "case")]
        if not options:
            raise ValueError(f"depth budget {budget} too small for {ty}")
        match self.rng.choice(options):
            case "var":
                i = self.rng.choice(matching)
                return Var(i, "v")
            case "intro":
                return self.intro(ty, ctx, budget)
            case "app":
                arg_ty = self.small_type()
                if budget - 1 < 1 + _min_depth(ty) or budget - 1 < _min_depth(arg_ty):
                    arg_ty = NAT
                fn = self.term(Arrow(arg_ty, ty), ctx, budget - 1)
                arg = self.term(arg_ty, ctx, budget - 1)
                return App(fn, arg)
            case "case":
                sum_ty = self.rng.choice((BOOL, Sum(NAT, UNIT), Sum(NAT, NAT)))
                s = self.term(sum_ty, ctx, budget - 1)
                b1 = self.term(ty, (sum_ty.left,) + ctx, budget - 1)
                b2 = self.term(ty, (sum_ty.right,) + ctx, budget - 1)
                return Case(s, b1, b2, self.fresh("l"), self.fresh("r"))

    def intro(self, ty: Type, ctx: tuple, budget: int) -> Term:
        match ty:
            case Arrow(dom, cod):
                return Lam(dom, self.term(cod, (dom,) + ctx, budget - 1), self.fresh("x"))
            case Sum(left, right):
                sides = [i for i, c in ((1, left), (2, right)) if _min_depth(c) < budget]
                side = self.rng.choice(sides)
                comp = left if side == 1 else right
                return Inj(side, ty, self.term(comp, ctx, budget - 1))
            case _ if ty == NAT:
                return NatLit(self.rng.randrange(10))
            case _:
                return UnitIntro()

    def program(self, ty: Type | None = None) -> Term:
        ty = ty or self.rng.choice(_TOP_TYPES)
        low = min(self.max_depth, max(_min_depth(ty), self.max_depth - 2))
        return self.term(ty, (), self.rng.randint(low, self.max_depth), redex=True)


def _min_depth(ty: Type) -> int:
    match ty:
        case Arrow(_, cod):
            return 1 + _min_depth(cod)
        case Sum(left, right):
            return 1 + min(_min_depth(left), _min_depth(right))
    return 1


def generated(count: int = 500, seed: int = 2024, max_depth: int = 6) -> list[Program]:
    gen = Generator(seed, max_depth)
    out = []
    for i in range(count):
        t = gen.program()
        ty = typecheck((), t)
        assert polarity(ty) is Polarity.POSITIVE and term_depth(t) <= max_depth
        out.append(Program(f"gen-{seed}-{i}", t, ty))
    return out


def full_corpus(count: int = 500, seed: int = 2024) -> list[Program]:
    return hand_written() + generated(count, seed)
