"""Tests for the type-and-effect checker."""

import pytest
from hypothesis import given
import hypothesis.strategies as st

from aeff.check import (
    Checker,
    TypeCheckError,
    act_process,
    signals_of,
)
from aeff.effects import (
    AnnRef,
    AnnotationEnv,
    EffectAnnotation,
    ann_map,
    effects,
    eq_e,
    eq_i,
    leq_e,
)
from aeff.syntax import (
    Apply,
    Await,
    BuiltinVal,
    CompType,
    Fulfilled,
    Fun,
    FunT,
    INT,
    IntLit,
    Inl,
    InterruptP,
    Interrupt,
    Let,
    LetRec,
    MatchEmpty,
    MatchPair,
    MatchSum,
    Pair,
    Par,
    ParT,
    ProdT,
    Promise,
    PromiseT,
    Return,
    Run,
    RunT,
    Signal,
    SignalP,
    Signature,
    SumT,
    UNIT,
    Unit,
    UnitT,
    Var,
    subst,
)

from test_effects import env_with_anns


def make_checker(signals=None, env=None):
    sig = Signature(signals or {})
    return Checker(sig, env)


def batch_checker():
    env = AnnotationEnv()
    env.define("iota_b", ann_map(
        {"batchSizeReq": (frozenset({"batchSizeResp"}), AnnRef("iota_b"))}))
    ck = make_checker({"batchSizeReq": UNIT, "batchSizeResp": INT}, env)
    return ck, AnnRef("iota_b")


# ---------------------------------------------------------------------------
# value typing

def test_infer_unit():
    ck = make_checker()
    assert ck.infer_value({}, Unit()) == UNIT


def test_infer_fulfilled_promise():
    ck = make_checker()
    assert ck.infer_value({}, Fulfilled(Unit())) == PromiseT(UNIT)


def test_infer_var_from_context():
    ck = make_checker()
    assert ck.infer_value({"x": PromiseT(INT)}, Var("x")) == PromiseT(INT)


def test_unbound_variable():
    ck = make_checker()
    with pytest.raises(TypeCheckError) as e:
        ck.infer_value({}, Var("ghost"))
    assert e.value.rule == "TyVal-Var"


def test_unannotated_lambda_needs_goal():
    ck = make_checker()
    bare = Fun("x", None, Return(Var("x")))
    with pytest.raises(TypeCheckError):
        ck.infer_value({}, bare)
    ck.check_value({}, bare, FunT(INT, CompType(INT, effects())))


def test_unannotated_injection_needs_goal():
    ck = make_checker()
    bare = Inl(Unit(), None)
    with pytest.raises(TypeCheckError):
        ck.infer_value({}, bare)
    ck.check_value({}, bare, SumT(UNIT, INT))


# ---------------------------------------------------------------------------
# computation typing

def test_check_return_unit():
    ck = make_checker()
    ck.check_comp({}, Return(Unit()), CompType(UNIT, effects()))


def test_signal_outside_annotation_rejected():
    ck = make_checker({"op": UNIT})
    term = Signal("op", Unit(), Return(Unit()))
    with pytest.raises(TypeCheckError) as e:
        ck.check_comp({}, term, CompType(UNIT, effects()))
    assert e.value.rule == "TyComp-Signal"
    assert str(e.value).startswith("<term>:0:0 [TyComp-Signal]")


def test_signal_inside_annotation_accepted():
    ck = make_checker({"op": UNIT})
    term = Signal("op", Unit(), Return(Unit()))
    ck.check_comp({}, term, CompType(UNIT, effects({"op"})))
    got = ck.infer_comp({}, term)
    assert got.effects.signals == frozenset({"op"})


def test_undeclared_signal_rejected():
    ck = make_checker()
    term = Signal("mystery", Unit(), Return(Unit()))
    with pytest.raises(TypeCheckError):
        ck.infer_comp({}, term)


def test_recursive_handler_checks_at_recursive_annotation():
    # let rec waitForBatchSize u =
    #   promise (batchSizeReq x -> send batchSizeResp n; waitForBatchSize ())
    #   as p in return p
    ck, ib = batch_checker()
    ann = FunT(UNIT, CompType(PromiseT(UNIT), effects((), ib)))
    fbody = Promise(
        "batchSizeReq", "x",
        Signal("batchSizeResp", Var("n"),
               Apply(Var("waitForBatchSize"), Unit())),
        "p", Return(Var("p")))
    term = LetRec("waitForBatchSize", "u", ann, fbody,
                  Apply(Var("waitForBatchSize"), Unit()))
    got = ck.infer_comp({"n": INT}, term)
    assert got.result == PromiseT(UNIT)
    assert eq_e(ck.env, got.effects, effects((), ib))


def test_recursive_handler_wrong_signal_rejected():
    ck, ib = batch_checker()
    ann = FunT(UNIT, CompType(PromiseT(UNIT), effects((), ib)))
    # handler stays silent where the annotation promises batchSizeResp: fine;
    # but signalling an op the entry does not allow must fail
    fbody = Promise(
        "batchSizeReq", "x",
        Signal("batchSizeReq", Unit(),
               Apply(Var("w"), Unit())),
        "p", Return(Var("p")))
    term = LetRec("w", "u", ann, fbody, Apply(Var("w"), Unit()))
    with pytest.raises(TypeCheckError):
        ck.infer_comp({}, term)


def test_interrupt_acts_on_inferred_effects():
    # inversion: the payload of a well-typed interrupt types at the
    # signature's payload type, and the effects are acted upon
    ck, ib = batch_checker()
    inner = Promise("batchSizeReq", "x",
                    Signal("batchSizeResp", IntLit(3), Return(Fulfilled(Unit()))),
                    "p", Return(Unit()))
    term = Interrupt("batchSizeReq", Unit(), inner)
    got = ck.infer_comp({}, term)
    assert "batchSizeResp" in got.effects.signals


def test_interrupt_payload_mismatch():
    ck, _ = batch_checker()
    term = Interrupt("batchSizeResp", Unit(), Return(Unit()))  # payload is int
    with pytest.raises(TypeCheckError):
        ck.infer_comp({}, term)


def test_promise_goal_must_handle_op():
    ck = make_checker({"op": UNIT})
    term = Promise("op", "x", Return(Fulfilled(Unit())), "p", Return(Unit()))
    with pytest.raises(TypeCheckError) as e:
        ck.check_comp({}, term, CompType(UNIT, effects()))
    assert e.value.rule == "TyComp-Promise"
    assert "does not handle" in e.value.message


def test_promise_infers_least_entry():
    ck = make_checker({"op": UNIT, "out": UNIT})
    term = Promise("op", "x", Signal("out", Unit(), Return(Fulfilled(Unit()))),
                   "p", Return(Var("p")))
    got = ck.infer_comp({}, term)
    assert got.result == PromiseT(UNIT)
    entry = ck.env.resolve(got.effects.handlers).get("op")
    assert entry is not None and entry[0] == frozenset({"out"})


def test_await_types_body_under_payload():
    ck = make_checker()
    term = Await(Var("p"), "x", Return(Var("x")))
    got = ck.infer_comp({"p": PromiseT(INT)}, term)
    assert got.result == INT


def test_match_pair_and_sum():
    ck = make_checker()
    pair = MatchPair(Var("v"), "a", "b", Return(Var("b")))
    assert ck.infer_comp({"v": ProdT(INT, UNIT)}, pair).result == UNIT
    summ = MatchSum(Var("s"), "l", Return(IntLit(1)), "r", Return(Var("r")))
    assert ck.infer_comp({"s": SumT(UNIT, INT)}, summ).result == INT


def test_match_empty_needs_annotation():
    from aeff.syntax import EmptyT
    ck = make_checker()
    with pytest.raises(TypeCheckError):
        ck.infer_comp({"v": EmptyT()}, MatchEmpty(Var("v"), None))
    goal = CompType(INT, effects())
    ck.check_comp({"v": EmptyT()}, MatchEmpty(Var("v"), None), goal)
    assert ck.infer_comp({"v": EmptyT()}, MatchEmpty(Var("v"), goal)) == goal


def test_letrec_needs_annotation_outside_guard_shape():
    ck = make_checker()
    term = LetRec("f", "x", None, Apply(Var("f"), Var("x")),
                  Apply(Var("f"), Unit()))
    with pytest.raises(TypeCheckError) as e:
        ck.infer_comp({}, term)
    assert "annotation" in e.value.message


def test_guarded_loop_annotation_synthesized():
    # let rec wait u = promise (op x ->
    #     let g = gt x in let b = g 0 in let s = bool2sum b in
    #     match s { inl t -> return <x> | inr e -> wait () }) as p in return p
    # in let q = wait () in await q until x2 in return x2
    ck = make_checker({"op": INT})
    fbody = Promise(
        "op", "x",
        Let("g", Apply(BuiltinVal("gt", ()), Var("x")),
            Let("b", Apply(Var("g"), IntLit(0)),
                Let("s", Apply(BuiltinVal("bool2sum", ()), Var("b")),
                    MatchSum(Var("s"),
                             "t", Return(Fulfilled(Var("x"))),
                             "e", Apply(Var("wait"), Unit()))))),
        "p", Return(Var("p")))
    term = LetRec("wait", "u", None, fbody,
                  Let("q", Apply(Var("wait"), Unit()),
                      Await(Var("q"), "x2", Return(Var("x2")))))
    got = ck.infer_comp({}, term)
    assert got.result == INT
    # the synthesized annotation is the self-referential single-entry map
    env2 = AnnotationEnv()
    env2.define("w", ann_map({"op": (frozenset(), AnnRef("w"))}))
    ck.env.defs.update(env2.defs)
    assert eq_i(ck.env, got.effects.handlers, AnnRef("w"))


def test_subsumption_widens_goals():
    ck, ib = batch_checker()
    term = Signal("batchSizeResp", IntLit(1), Return(Unit()))
    small = CompType(UNIT, effects({"batchSizeResp"}))
    big = CompType(UNIT, effects({"batchSizeResp", "batchSizeReq"}, ib))
    assert leq_e(ck.env, small.effects, big.effects)
    ck.check_comp({}, term, small)
    ck.check_comp({}, term, big)


def test_substitution_preserves_types():
    ck = make_checker()
    body = Let("y", Return(Var("x")), Return(Pair(Var("y"), Var("y"))))
    goal = CompType(ProdT(INT, INT), effects())
    ck.check_comp({"x": INT}, body, goal)
    ck.check_comp({}, subst(body, "x", IntLit(5)), goal)


# ---------------------------------------------------------------------------
# process typing

def test_run_process_type():
    ck = make_checker()
    got = ck.infer_process({}, Run(Return(Unit())))
    assert got == RunT(UNIT, effects())


def test_par_process_type():
    ck = make_checker()
    got = ck.infer_process({}, Par(Run(Return(Unit())), Run(Return(IntLit(1)))))
    assert isinstance(got, ParT)
    assert got.left == RunT(UNIT, effects())
    assert got.right == RunT(INT, effects())


def test_process_signal_requires_membership():
    ck = make_checker({"op": UnitT()})
    bad = SignalP("op", Unit(), Run(Return(Unit())))
    with pytest.raises(TypeCheckError) as e:
        ck.infer_process({}, bad)
    assert e.value.rule == "TyProc-Signal"
    good = SignalP("op", Unit(), Run(Signal("op", Unit(), Return(Unit()))))
    got = ck.infer_process({}, good)
    assert signals_of(got) == frozenset({"op"})


def test_process_interrupt_acts_leafwise():
    ck, ib = batch_checker()
    leafy = Promise("batchSizeReq", "x",
                    Signal("batchSizeResp", IntLit(0), Return(Fulfilled(Unit()))),
                    "p", Return(Unit()))
    proc = InterruptP("batchSizeReq", Unit(),
                      Par(Run(leafy), Run(Return(Unit()))))
    got = ck.infer_process({}, proc)
    assert isinstance(got, ParT)
    assert "batchSizeResp" in got.left.effects.signals
    assert got.right == RunT(UNIT, effects())


def test_signals_of_and_act_process():
    env = AnnotationEnv()
    a = RunT(UNIT, effects({"x"}, ann_map({"op": (frozenset({"y"}), ann_map({}))})))
    b = RunT(INT, effects({"z"}))
    c = ParT(a, b)
    assert signals_of(c) == frozenset({"x", "z"})
    acted = act_process(env, "op", c)
    assert signals_of(acted) == frozenset({"x", "y", "z"})


@given(env_with_anns(count=2), st.sampled_from(["opA", "opB", "opC"]))
def test_signals_never_shrink_under_process_action(pack, op):
    env, i1, i2 = pack
    c = ParT(RunT(UNIT, EffectAnnotation(frozenset({"s"}), i1)),
             RunT(INT, EffectAnnotation(frozenset(), i2)))
    assert signals_of(c) <= signals_of(act_process(env, op, c))
