"""Tests for builtin primitives: first-order deltas, the store, and the heap."""

import pytest

from aeff.builtins import BUILTINS, EvalError, Store, builtin_type, delta, arity
from aeff.syntax import (
    BoolLit,
    HeapLocVal,
    HeapVal,
    IntLit,
    Inl,
    Inr,
    ListVal,
    Pair,
    StrLit,
    Unit,
    UnitT,
)


def run_delta(name, *args, store=None):
    return delta(name, tuple(args), store if store is not None else Store())


def ints(*ns):
    return ListVal(tuple(IntLit(n) for n in ns))


def test_arithmetic():
    assert run_delta("add", IntLit(2), IntLit(3)) == IntLit(5)
    assert run_delta("sub", IntLit(2), IntLit(3)) == IntLit(-1)
    assert run_delta("mul", IntLit(4), IntLit(3)) == IntLit(12)
    assert run_delta("div", IntLit(7), IntLit(2)) == IntLit(3)
    assert run_delta("mod", IntLit(7), IntLit(2)) == IntLit(1)


def test_division_by_zero():
    with pytest.raises(EvalError):
        run_delta("div", IntLit(1), IntLit(0))
    with pytest.raises(EvalError):
        run_delta("mod", IntLit(1), IntLit(0))


def test_comparisons_and_logic():
    assert run_delta("eq", IntLit(3), IntLit(3)) == BoolLit(True)
    assert run_delta("lt", IntLit(2), IntLit(3)) == BoolLit(True)
    assert run_delta("gt", IntLit(2), IntLit(3)) == BoolLit(False)
    assert run_delta("and", BoolLit(True), BoolLit(False)) == BoolLit(False)
    assert run_delta("or", BoolLit(True), BoolLit(False)) == BoolLit(True)
    assert run_delta("not", BoolLit(False)) == BoolLit(True)


def test_bool2sum():
    assert run_delta("bool2sum", BoolLit(True)) == Inl(Unit(), UnitT())
    assert run_delta("bool2sum", BoolLit(False)) == Inr(Unit(), UnitT())


def test_strings():
    assert run_delta("toString", IntLit(42)) == StrLit("42")
    assert run_delta("concat", StrLit("a"), StrLit("b")) == StrLit("ab")


def test_list_basics():
    assert run_delta("cons", IntLit(1), ints(2, 3)) == ints(1, 2, 3)
    assert run_delta("append", ints(1), ints(2, 3)) == ints(1, 2, 3)
    assert run_delta("length", ints(5, 6, 7)) == IntLit(3)
    assert run_delta("nth", ints(5, 6, 7), IntLit(1)) == IntLit(6)


def test_range_is_inclusive():
    assert run_delta("range", IntLit(1), IntLit(3)) == ints(1, 2, 3)
    assert run_delta("range", IntLit(2), IntLit(1)) == ListVal(())


def test_nth_out_of_range():
    with pytest.raises(EvalError):
        run_delta("nth", ints(1, 2), IntLit(5))


def test_store_roundtrip():
    store = Store()
    loc = store.alloc(IntLit(10))
    assert run_delta("deref", loc, store=store) == IntLit(10)
    assert run_delta("assign", loc, IntLit(20), store=store) == Unit()
    assert run_delta("deref", loc, store=store) == IntLit(20)


def test_ref_allocates():
    store = Store()
    loc = run_delta("ref", IntLit(1), store=store)
    loc2 = run_delta("ref", IntLit(2), store=store)
    assert loc != loc2
    assert store.read(loc) == IntLit(1)


def test_store_snapshot_is_independent():
    store = Store()
    loc = store.alloc(IntLit(1))
    snap = store.snapshot()
    store.write(loc, IntLit(99))
    assert snap.read(loc) == IntLit(1)


def test_heap_alloc_then_lookup():
    out = run_delta("allocHeap", HeapVal(()), IntLit(7))
    assert out == Pair(HeapVal((IntLit(7),)), HeapLocVal(0))
    heap, loc = out.fst, out.snd
    assert run_delta("lookupHeap", heap, loc) == IntLit(7)


def test_heap_update_then_lookup():
    heap = HeapVal((IntLit(1), IntLit(2)))
    heap2 = run_delta("updateHeap", heap, HeapLocVal(1), IntLit(9))
    assert run_delta("lookupHeap", heap2, HeapLocVal(1)) == IntLit(9)
    # original heap untouched
    assert run_delta("lookupHeap", heap, HeapLocVal(1)) == IntLit(2)


def test_heap_matches_plain_map_oracle():
    # replay a random alloc/update/lookup script against a dict
    import random

    rng = random.Random(7)
    heap, model, locs = HeapVal(()), {}, []
    for _ in range(100):
        action = rng.choice(["alloc", "update", "lookup"] if locs else ["alloc"])
        if action == "alloc":
            v = rng.randrange(100)
            out = run_delta("allocHeap", heap, IntLit(v))
            heap, loc = out.fst, out.snd
            model[loc.index] = v
            locs.append(loc)
        elif action == "update":
            loc, v = rng.choice(locs), rng.randrange(100)
            heap = run_delta("updateHeap", heap, loc, IntLit(v))
            model[loc.index] = v
        else:
            loc = rng.choice(locs)
            assert run_delta("lookupHeap", heap, loc) == IntLit(model[loc.index])


def test_heap_errors():
    with pytest.raises(EvalError):
        run_delta("lookupHeap", HeapVal(()), HeapLocVal(0))
    with pytest.raises(EvalError):
        run_delta("updateHeap", HeapVal(()), HeapLocVal(0), IntLit(1))


def test_every_builtin_declares_arity_and_type():
    for name in BUILTINS:
        assert arity(name) >= 1
        ty = builtin_type(name)
        assert ty is not None or name in ("ref", "deref", "assign")
