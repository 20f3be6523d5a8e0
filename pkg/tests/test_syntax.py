"""Tests for the term syntax: substitution, free variables, alpha equivalence."""

import hypothesis.strategies as st
from hypothesis import given

from aeff.syntax import (
    Apply,
    Await,
    Fulfilled,
    Fun,
    IntLit,
    Inl,
    Let,
    LetRec,
    ListVal,
    MatchPair,
    MatchSum,
    Pair,
    Promise,
    Return,
    Signal,
    Unit,
    Var,
    alpha_eq,
    free_vars,
    fresh,
    subst,
)

# ---------------------------------------------------------------------------
# substitution examples

def test_subst_direct_replacement():
    out = subst(Return(Var("x")), "x", Fulfilled(Unit()))
    assert out == Return(Fulfilled(Unit()))


def test_subst_freshens_capturing_binder():
    # substituting y for x under a y-binder must rename the binder
    before = Fun("y", None, Return(Var("x")))
    out = subst(before, "x", Var("y"))
    assert isinstance(out, Fun)
    assert out.param != "y"
    assert out.body == Return(Var("y"))
    assert free_vars(out) == {"y"}


def test_subst_reaches_under_promise_and_await():
    before = Promise(
        "op", "z", Return(Fulfilled(Var("z"))),
        "p", Await(Var("p"), "w", Return(Var("x"))),
    )
    expected = Promise(
        "op", "z", Return(Fulfilled(Var("z"))),
        "p", Await(Var("p"), "w", Return(Unit())),
    )
    assert subst(before, "x", Unit()) == expected


def test_subst_shadowed_is_untouched():
    before = Let("x", Return(Var("x")), Return(Var("x")))
    out = subst(before, "x", Unit())
    # the bound occurrence survives; only the right-hand side is open
    assert out == Let("x", Return(Unit()), Return(Var("x")))


# ---------------------------------------------------------------------------
# free variable examples

def test_free_vars_of_open_return():
    assert free_vars(Return(Var("x"))) == {"x"}


def test_free_vars_closed_by_fun():
    assert free_vars(Fun("x", None, Return(Var("x")))) == frozenset()


def test_free_vars_promise_binders_close():
    term = Promise("op", "x", Return(Fulfilled(Var("x"))), "p", Return(Var("p")))
    assert free_vars(term) == frozenset()


def test_free_vars_letrec():
    term = LetRec("f", "n", None,
                  Apply(Var("f"), Var("n")),
                  Apply(Var("f"), Var("k")))
    assert free_vars(term) == {"k"}


# ---------------------------------------------------------------------------
# alpha equivalence examples

def test_alpha_eq_renamed_binder():
    assert alpha_eq(Fun("x", None, Return(Var("x"))),
                    Fun("y", None, Return(Var("y"))))


def test_alpha_eq_distinguishes_free_names():
    assert not alpha_eq(Return(Var("x")), Return(Var("y")))


def test_alpha_eq_distinguishes_signal_order():
    # the two normal forms of the signal/interrupt commutation race differ
    # only in which signal sits outermost; they must not be identified
    inner = Let("p", Return(Unit()), Return(Unit()))
    one = Signal("opPrime", Unit(), Signal("opSecond", Unit(), inner))
    other = Signal("opSecond", Unit(), Signal("opPrime", Unit(), inner))
    assert not alpha_eq(one, other)
    assert alpha_eq(one, one)


def test_alpha_eq_respects_annotations():
    from aeff.syntax import UNIT
    annotated = Fun("x", UNIT, Return(Var("x")))
    bare = Fun("x", None, Return(Var("x")))
    assert not alpha_eq(annotated, bare)


def test_fresh_generates_primed_names():
    assert fresh("p", set()) == "p"
    assert fresh("p", {"p"}) == "p'"
    assert fresh("p'", {"p", "p'"}) == "p'2"


# ---------------------------------------------------------------------------
# randomized properties

NAMES = ["x", "y", "z", "w", "p", "q"]
name_st = st.sampled_from(NAMES)
op_st = st.sampled_from(["opA", "opB"])

values = st.deferred(lambda: st.one_of(
    name_st.map(Var),
    st.just(Unit()),
    st.integers(min_value=-3, max_value=3).map(IntLit),
    st.builds(Pair, values, values),
    st.builds(lambda v: Inl(v), values),
    st.builds(Fulfilled, values),
    st.builds(lambda items: ListVal(tuple(items)), st.lists(values, max_size=2)),
    st.builds(lambda p, b: Fun(p, None, b), name_st, comps),
))

distinct_pair = st.tuples(name_st, name_st).filter(lambda ab: ab[0] != ab[1])

comps = st.deferred(lambda: st.one_of(
    st.builds(Return, values),
    st.builds(Let, name_st, comps, comps),
    st.builds(Apply, values, values),
    st.builds(lambda v, ab, m: MatchPair(v, ab[0], ab[1], m),
              values, distinct_pair, comps),
    st.builds(lambda v, a, m, b, n: MatchSum(v, a, m, b, n),
              values, name_st, comps, name_st, comps),
    st.builds(Signal, op_st, values, comps),
    st.builds(lambda op, xh, h, pv, c: Promise(op, xh, h, pv, c),
              op_st, name_st, comps, name_st, comps),
    st.builds(Await, values, name_st, comps),
    st.builds(lambda fx, ty, fb, b: LetRec(fx[0], fx[1], ty, fb, b),
              distinct_pair, st.none(), comps, comps),
))

terms = st.one_of(values, comps)


@given(terms, name_st, values)
def test_subst_free_vars_bound(t, x, v):
    out = subst(t, x, v)
    assert free_vars(out) <= (free_vars(t) - {x}) | free_vars(v)


@given(terms, name_st, values)
def test_subst_identity_outside_free_vars(t, x, v):
    if x not in free_vars(t):
        assert subst(t, x, v) == t


@given(terms, name_st, values)
def test_subst_removes_the_variable(t, x, v):
    if x in free_vars(v):
        return
    assert x not in free_vars(subst(t, x, v))


@given(terms)
def test_alpha_eq_reflexive(t):
    assert alpha_eq(t, t)


@given(terms, terms)
def test_alpha_eq_symmetric(a, b):
    assert alpha_eq(a, b) == alpha_eq(b, a)


def _prime_binders(t):
    """Rename every binder to a primed variant, giving an alpha-variant."""
    ren = {n: n + "'" for n in NAMES}

    def go(t):
        match t:
            case Fun(p, ty, b):
                return Fun(ren[p], ty, go(subst(b, p, Var(ren[p]))))
            case Let(n, m, b):
                return Let(ren[n], go(m), go(subst(b, n, Var(ren[n]))))
            case LetRec(f, y, ty, fb, b):
                fb2 = subst(subst(fb, y, Var(ren[y])), f, Var(ren[f]))
                return LetRec(ren[f], ren[y], ty, go(fb2), go(subst(b, f, Var(ren[f]))))
            case MatchPair(v, a, b_, m):
                m2 = subst(subst(m, b_, Var(ren[b_])), a, Var(ren[a]))
                return MatchPair(go(v), ren[a], ren[b_], go(m2))
            case MatchSum(v, a, m, b_, n):
                return MatchSum(go(v), ren[a], go(subst(m, a, Var(ren[a]))),
                                ren[b_], go(subst(n, b_, Var(ren[b_]))))
            case Promise(op, xh, h, pv, c):
                return Promise(op, ren[xh], go(subst(h, xh, Var(ren[xh]))),
                               ren[pv], go(subst(c, pv, Var(ren[pv]))))
            case Await(v, n, m):
                return Await(go(v), ren[n], go(subst(m, n, Var(ren[n]))))
            case Signal(op, v, c):
                return Signal(op, go(v), go(c))
            case Return(v):
                return Return(go(v))
            case Apply(f, a):
                return Apply(go(f), go(a))
            case Pair(a, b_):
                return Pair(go(a), go(b_))
            case Inl(v, ann):
                return Inl(go(v), ann)
            case Fulfilled(v):
                return Fulfilled(go(v))
            case ListVal(items):
                return ListVal(tuple(go(i) for i in items))
            case _:
                return t

    return go(t)


@given(comps)
def test_alpha_eq_closed_under_renaming(t):
    # primed names never collide with the generator's name pool, so the
    # renaming above is itself capture avoiding
    variant = _prime_binders(t)
    assert alpha_eq(t, variant)


@given(comps, name_st, values)
def test_subst_congruent_modulo_alpha(t, x, v):
    if x in free_vars(v):
        return
    variant = _prime_binders(t)
    assert alpha_eq(subst(t, x, v), subst(variant, x, v))
