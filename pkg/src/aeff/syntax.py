"""Core abstract syntax: types, values, computations, and processes.

The term language is fine-grain call-by-value: values and computations are
separate syntactic classes, application and elimination forms take values, and
sequencing happens only through ``let``.  Asynchrony enters through three
computation forms: ``Signal`` (an outgoing signal that keeps computing),
``Interrupt`` (an incoming interrupt propagating inward), and ``Promise`` (an
installed interrupt handler whose continuation runs immediately; the handler
variable is fulfilled once the interrupt arrives).  ``Await`` is the only
blocking construct.

Processes are parallel compositions of running computations, with process
level signal and interrupt nodes produced by hoisting and broadcasting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .effects import EffectAnnotation

Name = str


# ---------------------------------------------------------------------------
# types

class ValueType:
    __slots__ = ()


@dataclass(frozen=True)
class Base(ValueType):
    name: str


@dataclass(frozen=True)
class UnitT(ValueType):
    pass


@dataclass(frozen=True)
class EmptyT(ValueType):
    pass


@dataclass(frozen=True)
class ProdT(ValueType):
    fst: ValueType
    snd: ValueType


@dataclass(frozen=True)
class SumT(ValueType):
    left: ValueType
    right: ValueType


@dataclass(frozen=True)
class ListT(ValueType):
    # builtin extension: homogeneous lists
    elem: ValueType


@dataclass(frozen=True)
class FunT(ValueType):
    arg: ValueType
    result: "CompType"


@dataclass(frozen=True)
class PromiseT(ValueType):
    elem: ValueType


@dataclass(frozen=True)
class RefT(ValueType):
    # untracked extension: mutable references
    elem: ValueType


@dataclass(frozen=True)
class CompType:
    result: ValueType
    effects: EffectAnnotation


class ProcessType:
    __slots__ = ()


@dataclass(frozen=True)
class RunT(ProcessType):
    result: ValueType
    effects: EffectAnnotation


@dataclass(frozen=True)
class ParT(ProcessType):
    left: ProcessType
    right: ProcessType


INT = Base("int")
BOOL = Base("bool")
STRING = Base("string")
LOC = Base("loc")
HEAP = Base("heap")

UNIT = UnitT()
EMPTY = EmptyT()

#: base type names that may appear in ground (payload) positions
GROUND_BASES = {"int", "bool", "string", "loc", "heap"}


def is_ground(ty: ValueType) -> bool:
    """Ground types can travel in signal/interrupt payloads: base types and
    unit/empty/product/sum/list combinations of them.  Functions, promises,
    and references are not ground."""
    match ty:
        case Base(name):
            return name in GROUND_BASES
        case UnitT() | EmptyT():
            return True
        case ProdT(a, b) | SumT(a, b):
            return is_ground(a) and is_ground(b)
        case ListT(elem):
            return is_ground(elem)
        case _:
            return False


class SignatureError(Exception):
    pass


class Signature:
    """Declared signal/interrupt names with their (ground) payload types."""

    def __init__(self, entries: Optional[dict] = None) -> None:
        self.entries: dict = {}
        if entries:
            for op, ty in entries.items():
                self.declare(op, ty)

    def declare(self, op: str, payload: ValueType) -> None:
        if not is_ground(payload):
            raise SignatureError(f"payload type of {op!r} is not ground")
        if op in self.entries:
            raise SignatureError(f"signal {op!r} declared twice")
        self.entries[op] = payload

    def payload(self, op: str) -> Optional[ValueType]:
        return self.entries.get(op)

    def ops(self) -> tuple:
        return tuple(self.entries)

    def __contains__(self, op: str) -> bool:
        return op in self.entries


# ---------------------------------------------------------------------------
# values

class Value:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Value):
    name: Name


@dataclass(frozen=True)
class Unit(Value):
    pass


@dataclass(frozen=True)
class Pair(Value):
    fst: Value
    snd: Value


@dataclass(frozen=True)
class Inl(Value):
    value: Value
    right: Optional[ValueType] = None  # type of the absent summand


@dataclass(frozen=True)
class Inr(Value):
    value: Value
    left: Optional[ValueType] = None


@dataclass(frozen=True)
class Fun(Value):
    param: Name
    param_type: Optional[ValueType]
    body: "Computation"


@dataclass(frozen=True)
class Fulfilled(Value):
    """A fulfilled promise carrying its payload."""

    value: Value


@dataclass(frozen=True)
class IntLit(Value):
    value: int


@dataclass(frozen=True)
class BoolLit(Value):
    value: bool


@dataclass(frozen=True)
class StrLit(Value):
    value: str


@dataclass(frozen=True)
class ListVal(Value):
    items: tuple = ()


@dataclass(frozen=True)
class BuiltinVal(Value):
    """A builtin primitive, possibly partially applied."""

    name: str
    args: tuple = ()


@dataclass(frozen=True)
class LocVal(Value):
    """A mutable-store location (runtime only)."""

    index: int


@dataclass(frozen=True)
class HeapVal(Value):
    """A functional heap value: cell i holds cells[i]."""

    cells: tuple = ()


@dataclass(frozen=True)
class HeapLocVal(Value):
    index: int


UNIT_VAL = Unit()


# ---------------------------------------------------------------------------
# computations

class Computation:
    __slots__ = ()


@dataclass(frozen=True)
class Return(Computation):
    value: Value


@dataclass(frozen=True)
class Let(Computation):
    name: Name
    bound: Computation
    body: Computation


@dataclass(frozen=True)
class LetRec(Computation):
    fname: Name
    param: Name
    fun_type: Optional[FunT]
    fbody: Computation
    body: Computation


@dataclass(frozen=True)
class Apply(Computation):
    fn: Value
    arg: Value


@dataclass(frozen=True)
class MatchPair(Computation):
    scrutinee: Value
    fst: Name
    snd: Name
    body: Computation


@dataclass(frozen=True)
class MatchEmpty(Computation):
    scrutinee: Value
    result_type: Optional[CompType] = None


@dataclass(frozen=True)
class MatchSum(Computation):
    scrutinee: Value
    lname: Name
    lbody: Computation
    rname: Name
    rbody: Computation


@dataclass(frozen=True)
class Signal(Computation):
    op: str
    payload: Value
    cont: Computation


@dataclass(frozen=True)
class Interrupt(Computation):
    op: str
    payload: Value
    cont: Computation


@dataclass(frozen=True)
class Promise(Computation):
    """``promise (op param -> handler) as pvar in cont``"""

    op: str
    param: Name
    handler: Computation
    pvar: Name
    cont: Computation


@dataclass(frozen=True)
class Await(Computation):
    subject: Value
    param: Name
    body: Computation


# ---------------------------------------------------------------------------
# processes

class Process:
    __slots__ = ()


@dataclass(frozen=True)
class Run(Process):
    comp: Computation


@dataclass(frozen=True)
class Par(Process):
    left: Process
    right: Process


@dataclass(frozen=True)
class SignalP(Process):
    op: str
    payload: Value
    cont: Process


@dataclass(frozen=True)
class InterruptP(Process):
    op: str
    payload: Value
    cont: Process


Term = Union[Value, Computation, Process]


# ---------------------------------------------------------------------------
# free variables

def free_vars(t: Term) -> frozenset:
    match t:
        case Var(x):
            return frozenset((x,))
        case Unit() | IntLit() | BoolLit() | StrLit() | LocVal() | HeapVal() | HeapLocVal():
            return frozenset()
        case Pair(a, b):
            return free_vars(a) | free_vars(b)
        case Inl(v, _) | Inr(v, _) | Fulfilled(v):
            return free_vars(v)
        case Fun(x, _, body):
            return free_vars(body) - {x}
        case ListVal(items) | BuiltinVal(_, items):
            out = frozenset()
            for item in items:
                out |= free_vars(item)
            return out
        case Return(v):
            return free_vars(v)
        case Let(x, bound, body):
            return free_vars(bound) | (free_vars(body) - {x})
        case LetRec(f, x, _, fbody, body):
            return (free_vars(fbody) - {f, x}) | (free_vars(body) - {f})
        case Apply(fn, arg):
            return free_vars(fn) | free_vars(arg)
        case MatchPair(v, a, b, body):
            return free_vars(v) | (free_vars(body) - {a, b})
        case MatchEmpty(v, _):
            return free_vars(v)
        case MatchSum(v, lx, lb, rx, rb):
            return free_vars(v) | (free_vars(lb) - {lx}) | (free_vars(rb) - {rx})
        case Signal(_, payload, cont) | Interrupt(_, payload, cont):
            return free_vars(payload) | free_vars(cont)
        case Promise(_, x, handler, p, cont):
            return (free_vars(handler) - {x}) | (free_vars(cont) - {p})
        case Await(subject, x, body):
            return free_vars(subject) | (free_vars(body) - {x})
        case Run(comp):
            return free_vars(comp)
        case Par(left, right):
            return free_vars(left) | free_vars(right)
        case SignalP(_, payload, cont) | InterruptP(_, payload, cont):
            return free_vars(payload) | free_vars(cont)
    raise TypeError(f"free_vars: not a term: {t!r}")


def fresh(base: Name, avoid) -> Name:
    """A name not in ``avoid``, derived from ``base``."""
    if base not in avoid:
        return base
    stem = base.rstrip("'0123456789") or base
    candidate = stem + "'"
    if candidate not in avoid:
        return candidate
    i = 2
    while f"{stem}'{i}" in avoid:
        i += 1
    return f"{stem}'{i}"


# ---------------------------------------------------------------------------
# substitution

def subst(t: Term, x: Name, v: Value) -> Term:
    """Capture-avoiding substitution of value ``v`` for variable ``x``."""
    fv_v = free_vars(v)

    def freshen(binder: Name, body_fv) -> Name:
        return fresh(binder, fv_v | body_fv | {x})

    def go(t: Term) -> Term:
        match t:
            case Var(y):
                return v if y == x else t
            case Unit() | IntLit() | BoolLit() | StrLit() | LocVal() | HeapVal() | HeapLocVal():
                return t
            case Pair(a, b):
                return Pair(go(a), go(b))
            case Inl(w, ann):
                return Inl(go(w), ann)
            case Inr(w, ann):
                return Inr(go(w), ann)
            case Fulfilled(w):
                return Fulfilled(go(w))
            case ListVal(items):
                return ListVal(tuple(go(i) for i in items))
            case BuiltinVal(name, args):
                return BuiltinVal(name, tuple(go(a) for a in args))
            case Fun(y, ty, body):
                if y == x:
                    return t
                if y in fv_v and x in free_vars(body):
                    y2 = freshen(y, free_vars(body))
                    body = subst(body, y, Var(y2))
                    return Fun(y2, ty, go(body))
                return Fun(y, ty, go(body))
            case Return(w):
                return Return(go(w))
            case Let(y, bound, body):
                bound2 = go(bound)
                if y == x:
                    return Let(y, bound2, body)
                if y in fv_v and x in free_vars(body):
                    y2 = freshen(y, free_vars(body))
                    body = subst(body, y, Var(y2))
                    return Let(y2, bound2, go(body))
                return Let(y, bound2, go(body))
            case LetRec(f, y, ty, fbody, body):
                # f scopes over fbody and body; y scopes over fbody and
                # shadows f there if the names collide
                sub_fbody = f != x and y != x and x in free_vars(fbody)
                sub_body = f != x and x in free_vars(body)
                if not sub_fbody and not sub_body:
                    return t
                if f in fv_v:
                    f2 = freshen(f, free_vars(fbody) | free_vars(body) | {y})
                    if f != y:
                        fbody = subst(fbody, f, Var(f2))
                    body = subst(body, f, Var(f2))
                    f = f2
                if y in fv_v and sub_fbody:
                    y2 = freshen(y, free_vars(fbody) | {f})
                    fbody = subst(fbody, y, Var(y2))
                    y = y2
                return LetRec(f, y, ty,
                              go(fbody) if sub_fbody else fbody,
                              go(body) if sub_body else body)
            case Apply(fn, arg):
                return Apply(go(fn), go(arg))
            case MatchPair(w, a, b, body):
                w2 = go(w)
                if a == x or b == x:
                    return MatchPair(w2, a, b, body)
                if a == b:
                    # degenerate pattern: the second binder wins
                    if b in fv_v and x in free_vars(body):
                        b2 = freshen(b, free_vars(body))
                        body = subst(body, b, Var(b2))
                        a = b = b2
                    return MatchPair(w2, a, b, go(body))
                if (a in fv_v or b in fv_v) and x in free_vars(body):
                    if a in fv_v:
                        a2 = freshen(a, free_vars(body) | {b})
                        body = subst(body, a, Var(a2))
                        a = a2
                    if b in fv_v:
                        b2 = freshen(b, free_vars(body) | {a})
                        body = subst(body, b, Var(b2))
                        b = b2
                return MatchPair(w2, a, b, go(body))
            case MatchEmpty(w, ty):
                return MatchEmpty(go(w), ty)
            case MatchSum(w, lx, lb, rx, rb):
                w2 = go(w)
                if lx == x:
                    lb2 = lb
                elif lx in fv_v and x in free_vars(lb):
                    lx2 = freshen(lx, free_vars(lb))
                    lb2 = go(subst(lb, lx, Var(lx2)))
                    lx = lx2
                else:
                    lb2 = go(lb)
                if rx == x:
                    rb2 = rb
                elif rx in fv_v and x in free_vars(rb):
                    rx2 = freshen(rx, free_vars(rb))
                    rb2 = go(subst(rb, rx, Var(rx2)))
                    rx = rx2
                else:
                    rb2 = go(rb)
                return MatchSum(w2, lx, lb2, rx, rb2)
            case Signal(op, payload, cont):
                return Signal(op, go(payload), go(cont))
            case Interrupt(op, payload, cont):
                return Interrupt(op, go(payload), go(cont))
            case Promise(op, y, handler, p, cont):
                if y == x:
                    handler2 = handler
                elif y in fv_v and x in free_vars(handler):
                    y2 = freshen(y, free_vars(handler))
                    handler2 = go(subst(handler, y, Var(y2)))
                    y = y2
                else:
                    handler2 = go(handler)
                if p == x:
                    cont2 = cont
                elif p in fv_v and x in free_vars(cont):
                    p2 = freshen(p, free_vars(cont))
                    cont2 = go(subst(cont, p, Var(p2)))
                    p = p2
                else:
                    cont2 = go(cont)
                return Promise(op, y, handler2, p, cont2)
            case Await(subject, y, body):
                subject2 = go(subject)
                if y == x:
                    return Await(subject2, y, body)
                if y in fv_v and x in free_vars(body):
                    y2 = freshen(y, free_vars(body))
                    body = subst(body, y, Var(y2))
                    y = y2
                return Await(subject2, y, go(body))
            case Run(comp):
                return Run(go(comp))
            case Par(left, right):
                return Par(go(left), go(right))
            case SignalP(op, payload, cont):
                return SignalP(op, go(payload), go(cont))
            case InterruptP(op, payload, cont):
                return InterruptP(op, go(payload), go(cont))
        raise TypeError(f"subst: not a term: {t!r}")

    return go(t)


# ---------------------------------------------------------------------------
# alpha equivalence

def alpha_eq(a: Term, b: Term) -> bool:
    return _alpha(a, b, {}, {})


def _alpha(a: Term, b: Term, la: dict, lb: dict) -> bool:
    """Compare modulo bound names. ``la``/``lb`` map binders to shared levels."""
    if type(a) is not type(b):
        return False

    def var_eq(x: Name, y: Name) -> bool:
        ix, iy = la.get(x), lb.get(y)
        if ix is None and iy is None:
            return x == y
        return ix is not None and ix == iy

    def under(pairs, ka: dict, kb: dict):
        ka, kb = dict(ka), dict(kb)
        level = 1 + max([*ka.values(), *kb.values()], default=0)
        for x, y in pairs:
            ka[x] = level
            kb[y] = level
            level += 1
        return ka, kb

    match a, b:
        case Var(x), Var(y):
            return var_eq(x, y)
        case (Unit(), Unit()):
            return True
        case (IntLit(x), IntLit(y)) | (StrLit(x), StrLit(y)) | (BoolLit(x), BoolLit(y)):
            return x == y
        case (LocVal(x), LocVal(y)) | (HeapLocVal(x), HeapLocVal(y)):
            return x == y
        case HeapVal(xs), HeapVal(ys):
            return len(xs) == len(ys) and all(_alpha(p, q, la, lb) for p, q in zip(xs, ys))
        case Pair(a1, a2), Pair(b1, b2):
            return _alpha(a1, b1, la, lb) and _alpha(a2, b2, la, lb)
        case Inl(v, t1), Inl(w, t2):
            return t1 == t2 and _alpha(v, w, la, lb)
        case Inr(v, t1), Inr(w, t2):
            return t1 == t2 and _alpha(v, w, la, lb)
        case Fulfilled(v), Fulfilled(w):
            return _alpha(v, w, la, lb)
        case ListVal(xs), ListVal(ys):
            return len(xs) == len(ys) and all(_alpha(p, q, la, lb) for p, q in zip(xs, ys))
        case BuiltinVal(n1, xs), BuiltinVal(n2, ys):
            return n1 == n2 and len(xs) == len(ys) and all(
                _alpha(p, q, la, lb) for p, q in zip(xs, ys)
            )
        case Fun(x, t1, m), Fun(y, t2, n):
            if t1 != t2:
                return False
            ka, kb = under([(x, y)], la, lb)
            return _alpha(m, n, ka, kb)
        case Return(v), Return(w):
            return _alpha(v, w, la, lb)
        case Let(x, m1, m2), Let(y, n1, n2):
            if not _alpha(m1, n1, la, lb):
                return False
            ka, kb = under([(x, y)], la, lb)
            return _alpha(m2, n2, ka, kb)
        case LetRec(f1, x1, t1, m1, m2), LetRec(f2, x2, t2, n1, n2):
            if t1 != t2:
                return False
            ka, kb = under([(f1, f2), (x1, x2)], la, lb)
            if not _alpha(m1, n1, ka, kb):
                return False
            ka, kb = under([(f1, f2)], la, lb)
            return _alpha(m2, n2, ka, kb)
        case Apply(f1, a1), Apply(f2, a2):
            return _alpha(f1, f2, la, lb) and _alpha(a1, a2, la, lb)
        case MatchPair(v1, a1, b1, m1), MatchPair(v2, a2, b2, m2):
            if not _alpha(v1, v2, la, lb):
                return False
            ka, kb = under([(a1, a2), (b1, b2)], la, lb)
            return _alpha(m1, m2, ka, kb)
        case MatchEmpty(v1, t1), MatchEmpty(v2, t2):
            return t1 == t2 and _alpha(v1, v2, la, lb)
        case MatchSum(v1, lx1, lb1, rx1, rb1), MatchSum(v2, lx2, lb2, rx2, rb2):
            if not _alpha(v1, v2, la, lb):
                return False
            ka, kb = under([(lx1, lx2)], la, lb)
            if not _alpha(lb1, lb2, ka, kb):
                return False
            ka, kb = under([(rx1, rx2)], la, lb)
            return _alpha(rb1, rb2, ka, kb)
        case Signal(o1, p1, c1), Signal(o2, p2, c2):
            return o1 == o2 and _alpha(p1, p2, la, lb) and _alpha(c1, c2, la, lb)
        case Interrupt(o1, p1, c1), Interrupt(o2, p2, c2):
            return o1 == o2 and _alpha(p1, p2, la, lb) and _alpha(c1, c2, la, lb)
        case Promise(o1, x1, h1, p1, c1), Promise(o2, x2, h2, p2, c2):
            if o1 != o2:
                return False
            ka, kb = under([(x1, x2)], la, lb)
            if not _alpha(h1, h2, ka, kb):
                return False
            ka, kb = under([(p1, p2)], la, lb)
            return _alpha(c1, c2, ka, kb)
        case Await(s1, x1, m1), Await(s2, x2, m2):
            if not _alpha(s1, s2, la, lb):
                return False
            ka, kb = under([(x1, x2)], la, lb)
            return _alpha(m1, m2, ka, kb)
        case Run(c1), Run(c2):
            return _alpha(c1, c2, la, lb)
        case Par(l1, r1), Par(l2, r2):
            return _alpha(l1, l2, la, lb) and _alpha(r1, r2, la, lb)
        case SignalP(o1, p1, c1), SignalP(o2, p2, c2):
            return o1 == o2 and _alpha(p1, p2, la, lb) and _alpha(c1, c2, la, lb)
        case InterruptP(o1, p1, c1), InterruptP(o2, p2, c2):
            return o1 == o2 and _alpha(p1, p2, la, lb) and _alpha(c1, c2, la, lb)
    return False
