import pytest

from oracle import observe_term, observe_value_term
from realizer.core import (
    BOOL,
    NAT,
    UNIT,
    App,
    Arrow,
    Case,
    Diverged,
    Inj,
    Lam,
    NatLit,
    Polarity,
    Strategy,
    Sum,
    TypeCheckError,
    UnitIntro,
    Var,
    eval_reference,
    polarity,
    shift,
    subst_top,
    typecheck,
)
from realizer.corpus import NESTED_CASES
from realizer.frontend import parse_program


def test_polarity_of_base_types():
    assert polarity(NAT) is Polarity.POSITIVE
    assert polarity(Arrow(NAT, NAT)) is Polarity.NEGATIVE
    assert polarity(Sum(UNIT, UNIT)) is Polarity.POSITIVE
    assert polarity(UNIT) is Polarity.NEGATIVE


def test_typecheck_identity():
    assert typecheck((), parse_program("fun x:nat.x")) == Arrow(NAT, NAT)


def test_typecheck_case_with_nat_branches():
    t = parse_program("case inj1{nat+unit} 3 of {inj1 x -> x | inj2 y -> 0}")
    assert typecheck((), t) == NAT


def test_applying_a_literal_is_rejected():
    t = parse_program("3 3")
    with pytest.raises(TypeCheckError) as info:
        typecheck((), t)
    assert info.value.found == NAT
    assert info.value.term == NatLit(3)
    assert info.value.span.start_offset == 0


def test_argument_mismatch_reports_both_types():
    with pytest.raises(TypeCheckError) as info:
        typecheck((), parse_program("(fun x:nat. x) ()"))
    assert info.value.expected == NAT
    assert info.value.found == UNIT


def test_injection_annotation_must_be_a_sum():
    with pytest.raises(TypeCheckError):
        typecheck((), Inj(1, NAT, NatLit(1)))


def test_branches_must_agree():
    with pytest.raises(TypeCheckError, match="disagree"):
        typecheck((), parse_program("if true then 1 else ()"))


def test_unbound_index_is_a_type_error():
    with pytest.raises(TypeCheckError, match="unbound"):
        typecheck((), Var(0))
    assert typecheck((NAT,), Var(0)) == NAT


def test_context_is_innermost_first():
    assert typecheck((NAT, UNIT), Var(1)) == UNIT


def test_shift_skips_bound_variables():
    t = Lam(NAT, App(Var(0), Var(1)))
    assert shift(t, 2) == Lam(NAT, App(Var(0), Var(3)))


def test_subst_top_avoids_capture():
    # (fun y. x)[y_free / x] must not capture the free variable
    body = Lam(NAT, Var(1))
    assert subst_top(body, Var(0)) == Lam(NAT, Var(1))


def test_beta_cbn():
    assert eval_reference(parse_program("(fun x:nat.x) 3"), Strategy.CBN) == NatLit(3)


def test_nested_cases_give_one():
    # By hand: the inner case picks inj1, giving inj2 (inj2 ()), so the outer
    # case takes its second branch.
    t = parse_program(NESTED_CASES)
    for s in Strategy:
        assert eval_reference(t, s) == NatLit(1)
        assert observe_term(t, s is Strategy.CBV) == 1


def test_if_true_cbv():
    assert eval_reference(parse_program("if true then 4 else 7"), Strategy.CBV) == NatLit(4)


def test_cbn_leaves_payloads_alone_cbv_forces_them():
    t = parse_program("inj1{nat+unit} ((fun x:nat.x) 3)")
    assert eval_reference(t, Strategy.CBN) == t
    assert eval_reference(t, Strategy.CBV) == Inj(1, Sum(NAT, UNIT), NatLit(3))


def test_fuel_exhaustion_is_reported():
    t = parse_program("(fun f:nat->nat. f (f (f 1))) (fun x:nat. x)")
    with pytest.raises(Diverged):
        eval_reference(t, Strategy.CBN, fuel=3)


def test_booleans_are_unit_sums():
    assert BOOL == Sum(UNIT, UNIT)
    assert parse_program("true") == Inj(1, BOOL, UnitIntro())
    assert parse_program("false") == Inj(2, BOOL, UnitIntro())


def test_if_is_a_case_with_ignored_binders():
    t = parse_program("fun b:bool. fun n:nat. if b then n else 0")
    assert t.body.body == Case(Var(1), Var(1), NatLit(0))


def test_reference_agrees_with_environment_oracle(programs):
    for p in programs:
        for s in Strategy:
            by_value = s is Strategy.CBV
            v = eval_reference(p.term, s)
            assert typecheck((), v) == p.ty, p.name
            assert observe_value_term(v, by_value) == observe_term(p.term, by_value), p.name


def test_cbn_and_cbv_agree_on_nat_programs(programs):
    for p in programs:
        if p.ty == NAT:
            assert eval_reference(p.term, Strategy.CBN) == eval_reference(p.term, Strategy.CBV)
