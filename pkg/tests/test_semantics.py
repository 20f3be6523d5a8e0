"""Tests for the small-step computation semantics."""

import pytest
from hypothesis import given, settings

from aeff.builtins import EvalError, Store
from aeff.semantics import (
    Awaiting,
    CompResult,
    Redex,
    RunResult,
    StuckIllTyped,
    awaiting_on,
    enumerate_redexes,
    fifo_scheduler,
    make_random_scheduler,
    render_trace,
    result_status,
    run_to_result,
    step,
)
from aeff.syntax import (
    Apply,
    Await,
    BuiltinVal,
    Fulfilled,
    Fun,
    IntLit,
    Inl,
    Interrupt,
    Let,
    LetRec,
    MatchPair,
    MatchSum,
    Pair,
    Promise,
    Return,
    Signal,
    SumT,
    UNIT,
    Unit,
    UnitT,
    Var,
    alpha_eq,
    free_vars,
)

from test_syntax import comps

U = Unit()


def only_rules(m):
    return [r.rule for r in enumerate_redexes(m)]


# ---------------------------------------------------------------------------
# redex enumeration

def test_return_has_no_redexes():
    assert enumerate_redexes(Return(U)) == []


def test_matching_interrupt_over_hoistable_signal_offers_both():
    # the interrupt can descend into the handler, or the signal in the
    # continuation can first commute out past the handler
    m = Interrupt("op", U,
                  Promise("op", "x", Return(Fulfilled(U)), "p",
                          Signal("opp", U, Return(U))))
    rs = enumerate_redexes(m)
    assert Redex("intPromiseMatch", ()) in rs
    assert Redex("commuteSignalPromise", ("interrupt",)) in rs
    assert len(rs) >= 2


def test_await_on_fulfilled_is_the_only_redex():
    m = Await(Fulfilled(U), "x", Return(Var("x")))
    assert enumerate_redexes(m) == [Redex("awaitFulfilled", ())]


def test_await_blocks_its_body():
    inner = Apply(Fun("y", None, Return(Var("y"))), U)
    assert enumerate_redexes(inner) != []
    assert enumerate_redexes(Await(Var("p"), "x", inner)) == []


def test_enumeration_is_outermost_first():
    m = Let("x", Signal("op", U, Apply(Fun("y", None, Return(Var("y"))), U)),
            Return(Var("x")))
    rs = enumerate_redexes(m)
    assert rs[0] == Redex("algSignal", ())
    assert rs[1] == Redex("app", ("let", "signal"))


# ---------------------------------------------------------------------------
# single steps

def test_beta_and_let_return():
    m = Apply(Fun("x", UNIT, Return(Pair(Var("x"), Var("x")))), U)
    assert step(m, Redex("app", ())) == Return(Pair(U, U))
    m2 = Let("x", Return(IntLit(1)), Return(Var("x")))
    assert step(m2, Redex("letReturn", ())) == Return(IntLit(1))


def test_match_pair_substitutes_simultaneously():
    # the pair components mention a variable named like the second binder;
    # naive sequential substitution would smash the free y into the bound one
    m = MatchPair(Pair(Var("y"), IntLit(1)), "x", "y",
                  Return(Pair(Var("x"), Var("y"))))
    out = step(m, Redex("matchPair", ()))
    assert out == Return(Pair(Var("y"), IntLit(1)))


def test_match_sum_steps():
    m = MatchSum(Inl(U, UnitT()), "l", Return(Var("l")), "r", Return(IntLit(0)))
    assert step(m, Redex("matchInl", ())) == Return(U)


def test_letrec_unfolds_to_a_closure():
    ann = None
    m = LetRec("f", "x", ann, Return(Var("x")), Apply(Var("f"), U))
    out = step(m, Redex("letrecUnfold", ()))
    expect = Apply(Fun("x", None,
                       LetRec("f", "x", ann, Return(Var("x")), Return(Var("x")))),
                   U)
    assert alpha_eq(out, expect)


def test_interrupt_discards_at_return():
    m = Interrupt("op", U, Return(IntLit(7)))
    assert step(m, Redex("intReturn", ())) == Return(IntLit(7))


def test_interrupt_skips_other_handlers():
    pr = Promise("op", "x", Return(Fulfilled(U)), "p", Return(U))
    m = Interrupt("other", U, pr)
    out = step(m, Redex("intPromiseSkip", ()))
    assert out == Promise("op", "x", Return(Fulfilled(U)), "p",
                          Interrupt("other", U, Return(U)))


def test_signal_commutes_out_of_handler():
    m = Promise("op", "x", Return(Fulfilled(U)), "p",
                Signal("out", IntLit(2), Return(U)))
    out = step(m, Redex("commuteSignalPromise", ()))
    assert out == Signal("out", IntLit(2),
                         Promise("op", "x", Return(Fulfilled(U)), "p",
                                 Return(U)))


def test_commute_blocked_when_payload_mentions_promise():
    m = Promise("op", "x", Return(Fulfilled(U)), "p",
                Signal("out", Var("p"), Return(U)))
    assert "commuteSignalPromise" not in only_rules(m)


def test_hoisted_handler_avoids_capturing_free_promise_name():
    # let z = (promise ... as p in return p) in return p -- the trailing p
    # is a different, free variable and must survive the hoist
    m = Let("z",
            Promise("op", "x", Return(Fulfilled(U)), "p", Return(Var("p"))),
            Return(Var("p")))
    out = step(m, Redex("algPromise", ()))
    assert "p" in free_vars(out)
    expect = Promise("op", "x", Return(Fulfilled(U)), "p2",
                     Let("z", Return(Var("p2")), Return(Var("p"))))
    assert alpha_eq(out, expect)


def test_handler_match_avoids_capturing_payload_variable():
    m = Interrupt("op", Var("p"),
                  Promise("op", "x", Return(Fulfilled(Var("x"))), "p",
                          Return(Var("p"))))
    out = step(m, Redex("intPromiseMatch", ()))
    assert "p" in free_vars(out)
    expect = Let("q", Return(Fulfilled(Var("p"))),
                 Interrupt("op", Var("p"), Return(Var("q"))))
    assert alpha_eq(out, expect)


def test_step_rejects_stale_redex():
    with pytest.raises(EvalError):
        step(Return(U), Redex("app", ()))
    with pytest.raises(EvalError):
        step(Return(U), Redex("letReturn", ("let",)))


# ---------------------------------------------------------------------------
# the two-scheduler disagreement

def witness():
    # interrupt meeting a matching handler that signals, over a continuation
    # that also signals: the two signals can leave in either order
    return Interrupt(
        "op", U,
        Promise("op", "x", Signal("sigA", U, Return(Fulfilled(U))), "p",
                Signal("sigB", U, Return(U))))


def signal_spine(m):
    out = []
    while isinstance(m, Signal):
        out.append(m.op)
        m = m.cont
    return out


def test_signal_order_depends_on_scheduler():
    lifo = lambda i, m, rs: rs[-1]
    final_a, trace_a, ex_a = run_to_result(witness(), fifo_scheduler, 100)
    final_b, trace_b, ex_b = run_to_result(witness(), lifo, 100)
    assert not ex_a and not ex_b
    assert enumerate_redexes(final_a) == [] and enumerate_redexes(final_b) == []
    assert signal_spine(final_a) == ["sigA", "sigB"]
    assert signal_spine(final_b) == ["sigB", "sigA"]
    assert not alpha_eq(final_a, final_b)
    assert isinstance(result_status((), final_a), CompResult)
    assert isinstance(result_status((), final_b), CompResult)


def test_trace_replays_deterministically():
    final_a, trace, _ = run_to_result(witness(), fifo_scheduler, 100)
    m = witness()
    for r in trace:
        m = step(m, r)
    assert m == final_a


# ---------------------------------------------------------------------------
# result forms

def test_result_status_examples():
    assert isinstance(result_status((), Return(U)), RunResult)
    assert isinstance(result_status((), Signal("op", U, Return(U))), CompResult)
    blocked = Let("x", Await(Var("p"), "y", Return(Var("y"))), Return(Var("x")))
    assert result_status({"p"}, blocked) == Awaiting("p")
    assert isinstance(result_status((), blocked), StuckIllTyped)
    handler = Promise("op", "x", Return(Fulfilled(U)), "p",
                      Await(Var("p"), "y", Return(Var("y"))))
    assert isinstance(result_status((), handler), RunResult)
    assert isinstance(result_status((), Signal("op", U, handler)), CompResult)


def test_awaiting_descends_lets_and_interrupts():
    m = Interrupt("op", U,
                  Let("x", Await(Var("q"), "y", Return(Var("y"))),
                      Return(Var("x"))))
    assert awaiting_on(m) == "q"


def test_results_are_final():
    terms = [
        Return(U),
        Signal("op", U, Return(U)),
        Promise("op", "x", Return(Fulfilled(U)), "p",
                Await(Var("p"), "y", Return(Var("y")))),
        Signal("a", U, Signal("b", U, Promise("op", "x", Return(U), "p",
                                              Return(IntLit(1))))),
    ]
    for m in terms:
        status = result_status((), m)
        assert isinstance(status, (RunResult, CompResult))
        assert enumerate_redexes(m) == []


# ---------------------------------------------------------------------------
# driving

def test_fuel_zero_reports_exhaustion_iff_reducible():
    live = Apply(Fun("x", None, Return(Var("x"))), U)
    m, trace, exhausted = run_to_result(live, fifo_scheduler, 0)
    assert (m, trace, exhausted) == (live, [], True)
    m2, trace2, exhausted2 = run_to_result(Return(U), fifo_scheduler, 0)
    assert (m2, trace2, exhausted2) == (Return(U), [], False)


def test_scheduler_must_pick_an_offered_redex():
    bad = lambda i, m, rs: Redex("app", ("let",))
    with pytest.raises(EvalError):
        run_to_result(Let("x", Return(U), Return(U)), bad, 10)


def test_random_scheduler_is_reproducible():
    a = run_to_result(witness(), make_random_scheduler(11), 100)
    b = run_to_result(witness(), make_random_scheduler(11), 100)
    assert a == b


def test_trace_rendering():
    m = Let("x", Return(U), Apply(BuiltinVal("add", ()), IntLit(2)))
    final, trace, _ = run_to_result(m, fifo_scheduler, 10)
    text = render_trace(trace)
    assert text.splitlines()[0] == "1 letReturn @ root"
    assert "delta" in text and "[extension]" in text
    assert final == Return(BuiltinVal("add", (IntLit(2),)))


def test_arithmetic_reduces_via_delta():
    m = Let("f", Apply(BuiltinVal("add", ()), IntLit(2)),
            Apply(Var("f"), IntLit(3)))
    final, trace, _ = run_to_result(m, fifo_scheduler, 10)
    assert final == Return(IntLit(5))
    assert [r.rule for r in trace] == ["delta", "letReturn", "delta"]


def test_store_builtins_need_a_store():
    m = Apply(BuiltinVal("ref", ()), IntLit(1))
    with pytest.raises(EvalError):
        step(m, Redex("delta", ()))


def test_store_roundtrip_through_reduction():
    m = Let("r", Apply(BuiltinVal("ref", ()), IntLit(1)),
            Let("g", Apply(BuiltinVal("assign", ()), Var("r")),
                Let("u", Apply(Var("g"), IntLit(42)),
                    Apply(BuiltinVal("deref", ()), Var("r")))))
    final, _, exhausted = run_to_result(m, fifo_scheduler, 50, store=Store())
    assert not exhausted
    assert final == Return(IntLit(42))


# ---------------------------------------------------------------------------
# randomized properties

@settings(max_examples=200)
@given(comps)
def test_every_offered_redex_steps(m):
    for r in enumerate_redexes(m):
        step(m, r)


@settings(max_examples=200)
@given(comps)
def test_step_is_a_function(m):
    for r in enumerate_redexes(m):
        assert step(m, r) == step(m, r)


@settings(max_examples=200)
@given(comps)
def test_stepping_never_captures_new_free_variables(m):
    fv = free_vars(m)
    for r in enumerate_redexes(m):
        assert free_vars(step(m, r)) <= fv
