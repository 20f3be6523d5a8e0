"""Printers for core terms, in the same notation the parser reads.

``comp_str`` and ``process_str`` emit source the parser accepts again, and
reparsing their output yields the original term up to renaming of bound
variables.  That round trip only holds for terms that could have come from
source text: values that exist only at runtime (partially applied builtins,
reference locations, heaps) print in a readable but unparseable form.

``layout_process`` renders a whole process while recording the character
spans of every node a reduction step can target: process nodes at their
process path, and for each ``run`` leaf the spine of evaluation positions
inside its computation, addressed as path + ("run",) + inner path.  Those
are exactly the addresses redexes carry, so a caller can highlight the
subterm a step will rewrite.
"""

from __future__ import annotations

from dataclasses import dataclass

from .effects import AnnMap, AnnRef, EffectAnnotation
from .syntax import (
    Apply,
    Await,
    Base,
    BoolLit,
    BuiltinVal,
    CompType,
    Computation,
    EmptyT,
    Fulfilled,
    Fun,
    FunT,
    HeapLocVal,
    HeapVal,
    Inl,
    Inr,
    Interrupt,
    InterruptP,
    IntLit,
    Let,
    LetRec,
    ListT,
    ListVal,
    LocVal,
    MatchEmpty,
    MatchPair,
    MatchSum,
    Pair,
    Par,
    ProcessType,
    ProdT,
    Promise,
    PromiseT,
    ParT,
    RefT,
    Return,
    Run,
    RunT,
    Signal,
    SignalP,
    StrLit,
    SumT,
    UnitT,
    Unit,
    Value,
    Var,
)

# ---------------------------------------------------------------------------
# types and effect annotations


def signal_set_str(ops) -> str:
    return "{" + ", ".join(sorted(ops)) + "}"


def imap_str(ann) -> str:
    if isinstance(ann, AnnRef):
        return ann.name
    parts = [f"{op} -> ({signal_set_str(o)}, {imap_str(i)})"
             for op, (o, i) in ann.entries]
    return "{" + ", ".join(parts) + "}"


def effect_str(eff: EffectAnnotation) -> str:
    return f"({signal_set_str(eff.signals)}, {imap_str(eff.handlers)})"


def type_str(ty) -> str:
    """Value types, in the surface grammar (re-parseable)."""
    return _ty(ty, 0)


def comp_type_str(ct: CompType) -> str:
    return f"{_ty(ct.result, 1)} ! {effect_str(ct.effects)}"


def process_type_str(pt: ProcessType) -> str:
    if isinstance(pt, RunT):
        return f"{_ty(pt.result, 1)} !! {effect_str(pt.effects)}"
    if isinstance(pt, ParT):
        return f"({process_type_str(pt.left)} || {process_type_str(pt.right)})"
    return str(pt)


# precedence levels: 0 arrow, 1 sum, 2 product, 3 postfix/atom
def _ty(ty, level: int) -> str:
    if isinstance(ty, FunT):
        s = f"{_ty(ty.arg, 1)} -> {comp_type_str(ty.result)}"
        return f"({s})" if level > 0 else s
    if isinstance(ty, SumT):
        s = f"{_ty(ty.left, 2)} + {_ty(ty.right, 1)}"
        return f"({s})" if level > 1 else s
    if isinstance(ty, ProdT):
        s = f"{_ty(ty.fst, 3)} * {_ty(ty.snd, 2)}"
        return f"({s})" if level > 2 else s
    if isinstance(ty, ListT):
        # the postfix is left recursive, so a list elem needs no parens
        s = f"{_ty(ty.elem, 3)} list"
        return f"({s})" if level > 3 else s
    if isinstance(ty, PromiseT):
        return f"<<{_ty(ty.elem, 0)}>>"
    if isinstance(ty, RefT):
        return f"ref {_ty(ty.elem, 4)}"
    if isinstance(ty, UnitT):
        return "unit"
    if isinstance(ty, EmptyT):
        return "empty"
    if isinstance(ty, Base):
        return ty.name
    return str(ty)


# ---------------------------------------------------------------------------
# values


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"') \
            .replace("\n", "\\n").replace("\t", "\\t")


def value_str(v: Value, tight: bool = False) -> str:
    """A value; with tight=True, parenthesized unless atomic."""
    if isinstance(v, Var):
        return v.name
    if isinstance(v, Unit):
        return "()"
    if isinstance(v, IntLit):
        return str(v.value)
    if isinstance(v, BoolLit):
        return "true" if v.value else "false"
    if isinstance(v, StrLit):
        return f'"{_escape(v.value)}"'
    if isinstance(v, Pair):
        return f"({value_str(v.fst)}, {value_str(v.snd)})"
    if isinstance(v, Fulfilled):
        return f"<<{value_str(v.value)}>>"
    if isinstance(v, ListVal):
        return "[" + ", ".join(value_str(x) for x in v.items) + "]"
    if isinstance(v, Inl):
        return _wrap(f"inl {value_str(v.value, True)}", tight)
    if isinstance(v, Inr):
        return _wrap(f"inr {value_str(v.value, True)}", tight)
    if isinstance(v, Fun):
        if v.param_type is None:
            param = v.param
        else:
            param = f"({v.param} : {type_str(v.param_type)})"
        return _wrap(f"fun {param} |-> {comp_str(v.body)}", tight)
    if isinstance(v, BuiltinVal):
        if not v.args:
            return v.name
        s = " ".join([v.name] + [value_str(a, True) for a in v.args])
        return _wrap(s, tight)
    # runtime-only store values; readable but not reparseable
    if isinstance(v, LocVal):
        return f"loc#{v.index}"
    if isinstance(v, HeapLocVal):
        return f"cell#{v.index}"
    if isinstance(v, HeapVal):
        return "heap#[" + ", ".join(value_str(c) for c in v.cells) + "]"
    return str(v)


def _wrap(s: str, tight: bool) -> str:
    return f"({s})" if tight else s


# ---------------------------------------------------------------------------
# computations and processes, single line

def comp_str(m: Computation) -> str:
    buf = _Buf()
    _comp(buf, m, None, None)
    return buf.text()


class _Buf:
    def __init__(self):
        self.parts: list = []
        self.n = 0

    def emit(self, s: str):
        self.parts.append(s)
        self.n += len(s)

    def text(self) -> str:
        return "".join(self.parts)


def _mark_start(buf, spans, key):
    if spans is not None and key is not None:
        return buf.n
    return None


def _comp(buf: _Buf, m: Computation, spans, key):
    """Append m; record spans for evaluation positions under key."""
    start = _mark_start(buf, spans, key)
    if isinstance(m, Return):
        buf.emit(f"return {value_str(m.value, True)}")
    elif isinstance(m, Let):
        buf.emit(f"let {m.name} = ")
        _comp(buf, m.bound, spans, key + ("let",) if key is not None else None)
        buf.emit(" in ")
        _comp(buf, m.body, None, None)
    elif isinstance(m, LetRec):
        if m.fun_type is None:
            buf.emit(f"let rec {m.fname} {m.param} = ")
        else:
            buf.emit(f"let rec {m.fname} ({m.param} : "
                     f"{type_str(m.fun_type.arg)}) : "
                     f"{comp_type_str(m.fun_type.result)} = ")
        _comp(buf, m.fbody, None, None)
        buf.emit(" in ")
        _comp(buf, m.body, None, None)
    elif isinstance(m, Apply):
        buf.emit(f"{value_str(m.fn, True)} {value_str(m.arg, True)}")
    elif isinstance(m, MatchPair):
        buf.emit(f"match {value_str(m.scrutinee)} with {{ "
                 f"({m.fst}, {m.snd}) |-> ")
        _comp(buf, m.body, None, None)
        buf.emit(" }")
    elif isinstance(m, MatchEmpty):
        buf.emit(f"match {value_str(m.scrutinee)} with {{}}")
    elif isinstance(m, MatchSum):
        buf.emit(f"match {value_str(m.scrutinee)} with {{ inl {m.lname} |-> ")
        _comp(buf, m.lbody, None, None)
        buf.emit(f" | inr {m.rname} |-> ")
        _comp(buf, m.rbody, None, None)
        buf.emit(" }")
    elif isinstance(m, Signal):
        buf.emit(f"↑{m.op}({value_str(m.payload)}, ")
        _comp(buf, m.cont, spans,
              key + ("signal",) if key is not None else None)
        buf.emit(")")
    elif isinstance(m, Interrupt):
        buf.emit(f"interrupt {m.op} {value_str(m.payload, True)} into ")
        _comp(buf, m.cont, spans,
              key + ("interrupt",) if key is not None else None)
    elif isinstance(m, Promise):
        buf.emit(f"promise ({m.op} {m.param} |-> ")
        _comp(buf, m.handler, None, None)
        buf.emit(f") as {m.pvar} in ")
        _comp(buf, m.cont, spans,
              key + ("promise",) if key is not None else None)
    elif isinstance(m, Await):
        buf.emit(f"await {value_str(m.subject, True)} until "
                 f"<<{m.param}>> in ")
        _comp(buf, m.body, None, None)
    else:
        buf.emit(str(m))
    if start is not None:
        spans[key] = (start, buf.n)


def _proc(buf: _Buf, p, spans, key):
    start = _mark_start(buf, spans, key)
    if isinstance(p, Run):
        buf.emit("run (")
        _comp(buf, p.comp, spans,
              key + ("run",) if key is not None else None)
        buf.emit(")")
    elif isinstance(p, Par):
        left_parens = isinstance(p.left, (SignalP, InterruptP))
        if left_parens:
            buf.emit("(")
        _proc(buf, p.left, spans,
              key + ("parL",) if key is not None else None)
        if left_parens:
            buf.emit(")")
        buf.emit(" || ")
        right_parens = isinstance(p.right, (Par, SignalP, InterruptP))
        if right_parens:
            buf.emit("(")
        _proc(buf, p.right, spans,
              key + ("parR",) if key is not None else None)
        if right_parens:
            buf.emit(")")
    elif isinstance(p, SignalP):
        buf.emit(f"↑{p.op}({value_str(p.payload)}, ")
        _proc(buf, p.cont, spans,
              key + ("sig",) if key is not None else None)
        buf.emit(")")
    elif isinstance(p, InterruptP):
        buf.emit(f"interrupt {p.op} {value_str(p.payload, True)} into ")
        _proc(buf, p.cont, spans,
              key + ("int",) if key is not None else None)
    else:
        buf.emit(str(p))
    if start is not None:
        spans[key] = (start, buf.n)


def process_str(p) -> str:
    buf = _Buf()
    _proc(buf, p, None, None)
    return buf.text()


@dataclass(frozen=True)
class Layout:
    text: str
    spans: dict  # path tuple -> (start, end) character offsets


def layout_process(p) -> Layout:
    spans: dict = {}
    buf = _Buf()
    _proc(buf, p, spans, ())
    return Layout(buf.text(), spans)


def layout_comp(m: Computation) -> Layout:
    spans: dict = {}
    buf = _Buf()
    _comp(buf, m, spans, ())
    return Layout(buf.text(), spans)
