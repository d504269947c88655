import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from realizer.compile import compile_cbn
from realizer.frontend import parse_program
from realizer.machine import (
    ALPHA0,
    KAM_GRAB,
    KAM_PUSH,
    STAR,
    Cons,
    CoVar,
    FuelExhausted,
    InvalidTrace,
    KApp,
    KCons,
    KConfig,
    KLam,
    KVar,
    MachineStuck,
    MConfig,
    MInj,
    MNatLit,
    MUnitIntro,
    MVar,
    Mu,
    MuCopat,
    MuTilde,
    MuTildeSum,
    Normal,
    Reduced,
    Rule,
    Stuck,
    Trace,
    check_trace,
    erase,
    is_normal,
    kam_run,
    kam_step,
    run,
    shift_term,
    step,
    subst_config,
    subst_term,
)

X0 = MVar(0)
THREE = MNatLit(3)
BETA = CoVar(1)


def test_subst_single_variable():
    assert subst_config(MConfig(X0, ALPHA0), {0: THREE}) == MConfig(THREE, ALPHA0)


def test_subst_respects_co_binders():
    c = MConfig(Mu(MConfig(X0, CoVar(0))), ALPHA0)
    frame = Cons(THREE, CoVar(5))
    out = subst_config(c, coterm_env={0: frame})
    assert out == MConfig(Mu(MConfig(X0, CoVar(0))), frame)


def test_subst_lifts_under_binders():
    # substituting a term with a free co-variable under a mu lifts that co-variable
    c = MConfig(Mu(MConfig(X0, CoVar(0))), ALPHA0)
    out = subst_config(c, {0: Mu(MConfig(THREE, CoVar(2)))})
    assert out.term == Mu(MConfig(Mu(MConfig(THREE, CoVar(3))), CoVar(0)))


def test_identity_maps_change_nothing():
    c = MConfig(Mu(MConfig(X0, CoVar(1))), Cons(MVar(2), ALPHA0))
    assert subst_config(c, {}, {}) == c
    assert subst_config(c) == c


def test_mu_step():
    body = MConfig(THREE, CoVar(0))
    e = Cons(MUnitIntro(), ALPHA0)
    assert step(MConfig(Mu(body), e)) == Reduced(Rule.MU, MConfig(THREE, e))


def test_mu_tilde_sum_step_first_branch():
    d = MuTildeSum(MConfig(X0, ALPHA0), MConfig(MNatLit(0), ALPHA0))
    assert step(MConfig(MInj(1, THREE), d)) == Reduced(Rule.MU_TILDE_SUM, MConfig(THREE, ALPHA0))
    assert step(MConfig(MInj(2, THREE), d)) == Reduced(Rule.MU_TILDE_SUM, MConfig(MNatLit(0), ALPHA0))


def test_mu_cons_step():
    lam = MuCopat(MConfig(X0, CoVar(0)))
    assert step(MConfig(lam, Cons(THREE, ALPHA0))) == Reduced(Rule.MU_CONS, MConfig(THREE, ALPHA0))


def test_mu_tilde_step():
    c = MConfig(THREE, MuTilde(MConfig(X0, ALPHA0)))
    assert step(c) == Reduced(Rule.MU_TILDE, MConfig(THREE, ALPHA0))


def test_critical_pair_prefers_mu():
    c = MConfig(Mu(MConfig(THREE, CoVar(0))), MuTilde(MConfig(X0, ALPHA0)))
    r = step(c)
    assert r.rule is Rule.MU
    assert r.next == MConfig(THREE, MuTilde(MConfig(X0, ALPHA0)))


def test_constructor_against_frame_is_stuck():
    assert step(MConfig(MInj(1, THREE), Cons(MNatLit(2), ALPHA0))) == Stuck(
        "constructor against application frame")


@pytest.mark.parametrize("c", [
    MConfig(THREE, Cons(X0, ALPHA0)),
    MConfig(MUnitIntro(), Cons(X0, ALPHA0)),
    MConfig(MuCopat(MConfig(X0, CoVar(0))), MuTildeSum(MConfig(X0, ALPHA0), MConfig(X0, ALPHA0))),
    MConfig(THREE, MuTildeSum(MConfig(X0, ALPHA0), MConfig(X0, ALPHA0))),
    MConfig(X0, MuTildeSum(MConfig(X0, ALPHA0), MConfig(X0, ALPHA0))),
])
def test_other_stuck_shapes(c):
    assert isinstance(step(c), Stuck)
    assert not is_normal(c)


def test_literal_against_covariable_is_normal():
    assert step(MConfig(THREE, ALPHA0)) == Normal()


def test_variable_against_frame_is_normal():
    assert is_normal(MConfig(X0, Cons(THREE, ALPHA0)))


def test_mu_against_covariable_is_not_normal():
    assert not is_normal(MConfig(Mu(MConfig(THREE, CoVar(0))), BETA))


def test_injection_against_frame_is_not_normal():
    assert not is_normal(MConfig(MInj(1, THREE), Cons(THREE, ALPHA0)))


def test_run_of_a_normal_config_has_no_steps():
    tr = run(MConfig(THREE, ALPHA0))
    assert tr == Trace.empty(MConfig(THREE, ALPHA0))
    check_trace(tr)


def test_run_stuck_has_empty_partial_trace():
    with pytest.raises(MachineStuck) as info:
        run(MConfig(MInj(1, THREE), Cons(MNatLit(2), ALPHA0)))
    assert len(info.value.partial) == 0


def test_run_out_of_fuel():
    c = MConfig(compile_cbn(parse_program("(fun x:nat.x) 3")), ALPHA0)
    with pytest.raises(FuelExhausted) as info:
        run(c, fuel=1)
    assert info.value.partial.rules == [Rule.MU]


def _sample_trace():
    return run(MConfig(compile_cbn(parse_program("(fun f:nat->nat. f 2) (fun z:nat. z)")), ALPHA0))


def test_fabricated_middle_config_is_caught():
    tr = _sample_trace()
    steps = list(tr.steps)
    steps[1] = (steps[1][0], MConfig(MNatLit(99), ALPHA0))
    with pytest.raises(InvalidTrace) as info:
        check_trace(Trace(tr.initial, tuple(steps), tr.final))
    assert info.value.position == 1


def test_wrong_rule_label_is_caught():
    tr = _sample_trace()
    steps = list(tr.steps)
    steps[0] = (Rule.MU_TILDE, steps[0][1])
    with pytest.raises(InvalidTrace) as info:
        check_trace(Trace(tr.initial, tuple(steps), tr.final))
    assert info.value.position == 0


def test_truncated_trace_is_not_normal():
    tr = _sample_trace()
    cut_short = Trace(tr.initial, tr.steps[:-1], tr.steps[-2][1])
    with pytest.raises(InvalidTrace, match="not normal"):
        check_trace(cut_short)


def test_final_must_match_last_step():
    tr = _sample_trace()
    with pytest.raises(InvalidTrace):
        check_trace(Trace(tr.initial, tr.steps, MConfig(MNatLit(7), ALPHA0)))


def test_kam_example_two_steps():
    omega = KApp(KLam(KApp(KVar(0), KVar(0))), KLam(KApp(KVar(0), KVar(0))))
    t = KApp(KLam(KLam(KVar(0))), omega)
    out = kam_run(KConfig(t, STAR))
    assert out.final == KConfig(KLam(KVar(0)), STAR)
    assert out.rules == (KAM_PUSH, KAM_GRAB)


def test_kam_keeps_the_stack():
    e = KCons(KLam(KVar(0)), STAR)
    omega = KApp(KLam(KApp(KVar(0), KVar(0))), KLam(KApp(KVar(0), KVar(0))))
    out = kam_run(KConfig(KApp(KLam(KLam(KVar(0))), omega), e))
    # the identity then eats the stacked argument
    assert out.rules[:2] == (KAM_PUSH, KAM_GRAB)
    assert out.final == KConfig(KLam(KVar(0)), STAR)


def test_kam_normal_configuration():
    c = KConfig(KLam(KVar(0)), STAR)
    assert kam_step(c) is None
    assert kam_run(c).steps == 0


def test_kam_identity_applied_to_identity():
    i = KLam(KVar(0))
    out = kam_run(KConfig(KApp(i, i), STAR))
    assert out.final == KConfig(i, STAR)
    assert out.steps == 2


def test_kam_substitution_shifts():
    # (fun x. fun y. x) applied to a closed argument under a binder stays closed
    k = KLam(KLam(KVar(1)))
    out = kam_run(KConfig(KApp(k, KLam(KVar(0))), STAR))
    assert out.final == KConfig(KLam(KLam(KVar(0))), STAR)


def test_erase_rejects_sums():
    with pytest.raises(ValueError):
        erase(parse_program("inj1{nat+nat} 1"))


small_terms = st.recursive(
    st.sampled_from([MVar(0), MVar(1), MNatLit(1), MUnitIntro()]),
    lambda inner: st.one_of(
        st.builds(lambda t: MInj(1, t), inner),
        st.builds(lambda t: Mu(MConfig(t, CoVar(0))), inner),
        st.builds(lambda t, u: MuCopat(MConfig(t, Cons(u, CoVar(1)))), inner, inner),
    ),
    max_leaves=6,
)


def _closed(t):
    return subst_term(t, {0: MNatLit(0), 1: MUnitIntro()})


@settings(max_examples=80, deadline=None)
@given(small_terms, small_terms, small_terms)
def test_disjoint_substitutions_commute(body, a, b):
    a, b = _closed(a), _closed(b)
    c = MConfig(Mu(MConfig(body, CoVar(0))), Cons(MVar(1), ALPHA0))
    one = subst_config(subst_config(c, {0: a}), {1: b})
    two = subst_config(subst_config(c, {1: b}), {0: a})
    assert one == two == subst_config(c, {0: a, 1: b})


@settings(max_examples=200, deadline=None)
@given(small_terms, st.sampled_from([ALPHA0, Cons(MNatLit(2), ALPHA0),
                                     MuTilde(MConfig(MVar(0), ALPHA0)),
                                     MuTildeSum(MConfig(MVar(0), ALPHA0), MConfig(MNatLit(0), ALPHA0))]))
def test_step_is_total_and_classifies(t, e):
    c = MConfig(t, e)
    r = step(c)
    assert isinstance(r, (Reduced, Normal, Stuck))
    if isinstance(r, Normal):
        assert isinstance(e, CoVar) and not isinstance(t, Mu) or (
            isinstance(t, MVar) and not isinstance(e, (MuTilde, MuTildeSum)))
    assert step(c) == r


def test_substitution_shares_untouched_subtrees():
    closed = Mu(MConfig(MuCopat(MConfig(X0, CoVar(0))), Cons(THREE, CoVar(0))))
    c = MConfig(MVar(0), Cons(closed, ALPHA0))
    out = subst_config(c, {0: THREE}, {0: Cons(MNatLit(1), ALPHA0)})
    assert out.coterm.arg is closed


def test_shifting_a_closed_term_is_the_identity():
    closed = MuCopat(MConfig(X0, CoVar(0)))
    assert shift_term(closed, 3, 2) is closed
    assert shift_term(MVar(0), 3, 2) == MVar(3)
