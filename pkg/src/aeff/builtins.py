"""Builtin primitives: arithmetic, booleans, strings, lists, references, and
a functional heap.

Builtins are curried constants.  Applying one either extends its argument
tuple (partial application) or, once saturated, fires ``delta``.  First order
primitives compute a value directly; the higher order list primitives (map,
filter, fold) instead return an unfolded core computation that the stepper
continues to reduce, so their function arguments can perform effects.

Mutable references live in a ``Store``; all other primitives are pure.  The
heap primitives operate on immutable heap values, threading the new heap
through their results.
"""

from __future__ import annotations

from typing import Optional, Union

from .effects import PURE
from .syntax import (
    BOOL,
    INT,
    STRING,
    HEAP,
    LOC,
    UNIT,
    Apply,
    BoolLit,
    BuiltinVal,
    CompType,
    Computation,
    FunT,
    HeapLocVal,
    HeapVal,
    IntLit,
    Inl,
    Inr,
    Let,
    ListT,
    ListVal,
    LocVal,
    MatchSum,
    Pair,
    ProdT,
    RefT,
    StrLit,
    SumT,
    UnitT,
    Unit,
    Value,
    ValueType,
    Var,
)


class EvalError(Exception):
    """A runtime fault in a builtin (division by zero, bad index, ...)."""


class Store:
    """Mutable reference cells, confined to one stepping loop."""

    def __init__(self, cells: Optional[dict] = None) -> None:
        self.cells: dict = dict(cells) if cells else {}
        self._next = max(self.cells, default=-1) + 1

    def alloc(self, v: Value) -> LocVal:
        loc = LocVal(self._next)
        self.cells[self._next] = v
        self._next += 1
        return loc

    def read(self, loc: LocVal) -> Value:
        try:
            return self.cells[loc.index]
        except KeyError:
            raise EvalError(f"dangling reference {loc.index}") from None

    def write(self, loc: LocVal, v: Value) -> None:
        if loc.index not in self.cells:
            raise EvalError(f"dangling reference {loc.index}")
        self.cells[loc.index] = v

    def snapshot(self) -> "Store":
        return Store(self.cells)


def _fn(*types) -> ValueType:
    """Right-nested pure function type from a list of value types."""
    out = types[-1]
    for ty in reversed(types[:-1]):
        out = FunT(ty, CompType(out, PURE))
    return out


INT_LIST = ListT(INT)
BOOL_SUM = SumT(UnitT(), UnitT())

#: builtin name -> (arity, curried type or None when typed at the call site)
BUILTINS: dict = {
    "add": (2, _fn(INT, INT, INT)),
    "sub": (2, _fn(INT, INT, INT)),
    "mul": (2, _fn(INT, INT, INT)),
    "div": (2, _fn(INT, INT, INT)),
    "mod": (2, _fn(INT, INT, INT)),
    "eq": (2, _fn(INT, INT, BOOL)),
    "lt": (2, _fn(INT, INT, BOOL)),
    "gt": (2, _fn(INT, INT, BOOL)),
    "and": (2, _fn(BOOL, BOOL, BOOL)),
    "or": (2, _fn(BOOL, BOOL, BOOL)),
    "not": (1, _fn(BOOL, BOOL)),
    "bool2sum": (1, _fn(BOOL, BOOL_SUM)),
    "toString": (1, _fn(INT, STRING)),
    "concat": (2, _fn(STRING, STRING, STRING)),
    "cons": (2, _fn(INT, INT_LIST, INT_LIST)),
    "append": (2, _fn(INT_LIST, INT_LIST, INT_LIST)),
    "length": (1, _fn(INT_LIST, INT)),
    "nth": (2, _fn(INT_LIST, INT, INT)),
    "range": (2, _fn(INT, INT, INT_LIST)),
    "map": (2, _fn(_fn(INT, INT), INT_LIST, INT_LIST)),
    "filter": (2, _fn(_fn(INT, BOOL), INT_LIST, INT_LIST)),
    "fold": (3, _fn(_fn(INT, INT, INT), INT, INT_LIST, INT)),
    "emptyHeap": (1, _fn(UNIT, HEAP)),
    "allocHeap": (2, _fn(HEAP, INT, ProdT(HEAP, LOC))),
    "lookupHeap": (2, _fn(HEAP, LOC, INT)),
    "updateHeap": (3, _fn(HEAP, LOC, INT, HEAP)),
    # reference ops are ad-hoc polymorphic: the checker types each
    # application from its argument
    "ref": (1, None),
    "deref": (1, None),
    "assign": (2, None),
}


def is_builtin(name: str) -> bool:
    return name in BUILTINS


def arity(name: str) -> int:
    return BUILTINS[name][0]


def builtin_type(name: str) -> Optional[ValueType]:
    return BUILTINS[name][1]


def _int(v: Value) -> int:
    if not isinstance(v, IntLit):
        raise EvalError(f"expected an integer, got {v!r}")
    return v.value


def _bool(v: Value) -> bool:
    if not isinstance(v, BoolLit):
        raise EvalError(f"expected a boolean, got {v!r}")
    return v.value


def _str(v: Value) -> str:
    if not isinstance(v, StrLit):
        raise EvalError(f"expected a string, got {v!r}")
    return v.value


def _list(v: Value) -> tuple:
    if not isinstance(v, ListVal):
        raise EvalError(f"expected a list, got {v!r}")
    return v.items


def _heap(v: Value) -> tuple:
    if not isinstance(v, HeapVal):
        raise EvalError(f"expected a heap, got {v!r}")
    return v.cells


def delta(name: str, args: tuple, store: Store) -> Union[Value, Computation]:
    """Apply a saturated builtin.  Returns the result value, or a core
    computation for primitives that must call back into the language."""
    match name:
        case "add":
            return IntLit(_int(args[0]) + _int(args[1]))
        case "sub":
            return IntLit(_int(args[0]) - _int(args[1]))
        case "mul":
            return IntLit(_int(args[0]) * _int(args[1]))
        case "div":
            if _int(args[1]) == 0:
                raise EvalError("division by zero")
            a, b = _int(args[0]), _int(args[1])
            return IntLit(int(a / b))  # truncate toward zero
        case "mod":
            if _int(args[1]) == 0:
                raise EvalError("modulo by zero")
            a, b = _int(args[0]), _int(args[1])
            return IntLit(a - b * int(a / b))
        case "eq":
            return BoolLit(_int(args[0]) == _int(args[1]))
        case "lt":
            return BoolLit(_int(args[0]) < _int(args[1]))
        case "gt":
            return BoolLit(_int(args[0]) > _int(args[1]))
        case "and":
            return BoolLit(_bool(args[0]) and _bool(args[1]))
        case "or":
            return BoolLit(_bool(args[0]) or _bool(args[1]))
        case "not":
            return BoolLit(not _bool(args[0]))
        case "bool2sum":
            return Inl(Unit(), UnitT()) if _bool(args[0]) else Inr(Unit(), UnitT())
        case "toString":
            return StrLit(str(_int(args[0])))
        case "concat":
            return StrLit(_str(args[0]) + _str(args[1]))
        case "cons":
            return ListVal((args[0],) + _list(args[1]))
        case "append":
            return ListVal(_list(args[0]) + _list(args[1]))
        case "length":
            return IntLit(len(_list(args[0])))
        case "nth":
            items, i = _list(args[0]), _int(args[1])
            if not 0 <= i < len(items):
                raise EvalError(f"nth: index {i} out of range for length {len(items)}")
            return items[i]
        case "range":
            lo, hi = _int(args[0]), _int(args[1])
            return ListVal(tuple(IntLit(i) for i in range(lo, hi + 1)))
        case "map":
            f, items = args[0], _list(args[1])
            if not items:
                return ListVal(())
            rest = ListVal(items[1:])
            return Let("hd", Apply(f, items[0]),
                       Let("tl", Apply(BuiltinVal("map", (f,)), rest),
                           Apply(BuiltinVal("cons", (Var("hd"),)), Var("tl"))))
        case "filter":
            f, items = args[0], _list(args[1])
            if not items:
                return ListVal(())
            head, rest = items[0], ListVal(items[1:])
            keep_rest = Apply(BuiltinVal("filter", (f,)), rest)
            return Let("keep", Apply(f, head),
                       Let("sel", Apply(BuiltinVal("bool2sum", ()), Var("keep")),
                           MatchSum(Var("sel"),
                                    "u", Let("tl", keep_rest,
                                             Apply(BuiltinVal("cons", (head,)), Var("tl"))),
                                    "u", keep_rest)))
        case "fold":
            f, acc, items = args[0], args[1], _list(args[2])
            if not items:
                return acc
            rest = ListVal(items[1:])
            return Let("pf", Apply(f, acc),
                       Let("acc2", Apply(Var("pf"), items[0]),
                           Apply(BuiltinVal("fold", (f, Var("acc2"))), rest)))
        case "emptyHeap":
            return HeapVal(())
        case "allocHeap":
            cells, v = _heap(args[0]), args[1]
            return Pair(HeapVal(cells + (v,)), HeapLocVal(len(cells)))
        case "lookupHeap":
            cells, loc = _heap(args[0]), args[1]
            if not isinstance(loc, HeapLocVal) or not 0 <= loc.index < len(cells):
                raise EvalError("lookupHeap: no such location")
            return cells[loc.index]
        case "updateHeap":
            cells, loc, v = _heap(args[0]), args[1], args[2]
            if not isinstance(loc, HeapLocVal) or not 0 <= loc.index < len(cells):
                raise EvalError("updateHeap: no such location")
            return HeapVal(cells[: loc.index] + (v,) + cells[loc.index + 1:])
        case "ref":
            return store.alloc(args[0])
        case "deref":
            if not isinstance(args[0], LocVal):
                raise EvalError(f"expected a reference, got {args[0]!r}")
            return store.read(args[0])
        case "assign":
            if not isinstance(args[0], LocVal):
                raise EvalError(f"expected a reference, got {args[0]!r}")
            store.write(args[0], args[1])
            return Unit()
    raise EvalError(f"unknown builtin {name!r}")


def uses_store(name: str) -> bool:
    return name in ("ref", "deref", "assign")


def call_site_type(name: str, arg_types: tuple) -> Optional[ValueType]:
    """Result type of applying an ad-hoc polymorphic builtin partial
    application (already holding ``len(arg_types) - 1`` earlier arguments) to
    a final argument; None when the arguments do not fit."""
    match name, arg_types:
        case "ref", (x,):
            return RefT(x)
        case "deref", (RefT(x),):
            return x
        case "assign", (RefT(x),):
            return FunT(x, CompType(UNIT, PURE))
        case "assign", (RefT(x), y):
            return UnitT() if x == y else None
    return None
