"""Type-and-effect checker for values, computations, and processes.

The discipline is bidirectional.  Values infer their types, except that
composite values with omitted annotations (bare lambdas, unannotated sum
injections, empty lists) can be checked against a pushed goal.  Computations
support both directions: ``infer_comp`` produces the least type derivable
given the program's mandatory annotations, and ``check_comp`` pushes a goal
structurally, falling back to inference plus subsumption where the goal gives
no leverage.  Subsumption only widens effect annotations; value types are
compared up to bisimilarity of the annotations inside them, never deepened.

Process typing mirrors process structure and has no subsumption rule of its
own; ``check_process_at`` (in the process module) re-checks process states
against externally supplied leaf types.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import builtins as bi
from .effects import (
    AnnMap,
    AnnRef,
    AnnotationEnv,
    EffectAnnotation,
    act,
    effects,
    eq_e,
    join_e,
    leq_e,
    lookup_ann,
)
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
    IntLit,
    Inl,
    Inr,
    InterruptP,
    Interrupt,
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
    ParT,
    ProcessType,
    ProdT,
    Promise,
    PromiseT,
    RefT,
    Return,
    Run,
    RunT,
    Signal,
    SignalP,
    Signature,
    StrLit,
    SumT,
    UnitT,
    Unit,
    UNIT,
    Value,
    ValueType,
    Var,
    INT,
    BOOL,
    STRING,
    LOC,
    HEAP,
)


@dataclass(frozen=True)
class Loc:
    file: str
    line: int
    col: int

    def render(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


NOWHERE = Loc("<term>", 0, 0)


class TypeCheckError(Exception):
    def __init__(self, rule: str, message: str, loc: Loc = NOWHERE,
                 expected: Optional[str] = None, found: Optional[str] = None):
        self.rule = rule
        self.message = message
        self.loc = loc
        self.expected = expected
        self.found = found
        super().__init__(self.render())

    def render(self) -> str:
        parts = [f"{self.loc.render()} [{self.rule}]"]
        if self.expected is not None:
            parts.append(f"expected {self.expected}")
        if self.found is not None:
            parts.append(f"found {self.found}")
        if self.expected is None and self.found is None:
            parts.append(self.message)
        return " ".join(parts)


def type_name(ty) -> str:
    """Readable rendering of a type, used in diagnostics."""
    match ty:
        case None:
            return "?"
        case Base(name):
            return name
        case UnitT():
            return "unit"
        case EmptyT():
            return "empty"
        case ProdT(a, b):
            return f"({type_name(a)} * {type_name(b)})"
        case SumT(a, b):
            return f"({type_name(a)} + {type_name(b)})"
        case ListT(a):
            return f"list {type_name(a)}"
        case FunT(a, c):
            return f"({type_name(a)} -> {type_name(c)})"
        case PromiseT(a):
            return f"<{type_name(a)}>"
        case RefT(a):
            return f"ref {type_name(a)}"
        case CompType(result, eff):
            return f"{type_name(result)} ! {ann_name(eff)}"
        case RunT(result, eff):
            return f"{type_name(result)} !! {ann_name(eff)}"
        case ParT(l, r):
            return f"({type_name(l)} || {type_name(r)})"
    return repr(ty)


def ann_name(eff: EffectAnnotation) -> str:
    sigs = "{" + ", ".join(sorted(eff.signals)) + "}"
    match eff.handlers:
        case AnnRef(name):
            return f"({sigs}, {name})"
        case AnnMap(entries):
            body = ", ".join(
                f"{op} -> ({{{', '.join(sorted(o))}}}, ...)" if isinstance(i, AnnMap) and i.entries
                else f"{op} -> ({{{', '.join(sorted(o))}}}, {i.name if isinstance(i, AnnRef) else '{}'})"
                for op, (o, i) in entries
            )
            return f"({sigs}, {{{body}}})"
    return f"({sigs}, ?)"


class Checker:
    """Typechecker for one program, sharing a signature and annotation
    environment across all its judgements."""

    def __init__(self, signature: Signature, env: Optional[AnnotationEnv] = None,
                 locs: Optional[dict] = None,
                 ascriptions: Optional[dict] = None):
        self.signature = signature
        self.env = env if env is not None else AnnotationEnv()
        self.locs = locs or {}
        # id(node) -> CompType; the active set keeps the check-then-return
        # fallback in infer_comp from recursing through itself
        self.ascriptions = ascriptions if ascriptions is not None else {}
        self._asc_active: set = set()
        self.used_rules: set = set()

    # -- plumbing -----------------------------------------------------------

    def loc(self, node) -> Loc:
        return self.locs.get(id(node), NOWHERE)

    def fail(self, rule: str, node, message: str = "",
             expected=None, found=None):
        exp = type_name(expected) if not isinstance(expected, (str, type(None))) else expected
        fnd = type_name(found) if not isinstance(found, (str, type(None))) else found
        raise TypeCheckError(rule, message, self.loc(node), exp, fnd)

    def payload_type(self, op: str, node) -> ValueType:
        ty = self.signature.payload(op)
        if ty is None:
            self.fail("TyComp-Signal", node,
                      f"signal {op!r} is not declared in the signature")
        return ty

    def types_equal(self, a: ValueType, b: ValueType) -> bool:
        """Structural equality with effect annotations compared by mutual
        inclusion (bisimilarity), not by representation."""
        match a, b:
            case Base(x), Base(y):
                return x == y
            case UnitT(), UnitT():
                return True
            case EmptyT(), EmptyT():
                return True
            case ProdT(a1, a2), ProdT(b1, b2):
                return self.types_equal(a1, b1) and self.types_equal(a2, b2)
            case SumT(a1, a2), SumT(b1, b2):
                return self.types_equal(a1, b1) and self.types_equal(a2, b2)
            case ListT(a1), ListT(b1):
                return self.types_equal(a1, b1)
            case PromiseT(a1), PromiseT(b1):
                return self.types_equal(a1, b1)
            case RefT(a1), RefT(b1):
                return self.types_equal(a1, b1)
            case FunT(a1, c1), FunT(b1, c2):
                return (self.types_equal(a1, b1)
                        and self.types_equal(c1.result, c2.result)
                        and eq_e(self.env, c1.effects, c2.effects))
        return False

    def comp_leq(self, a: CompType, b: CompType) -> bool:
        return self.types_equal(a.result, b.result) and leq_e(self.env, a.effects, b.effects)

    # -- values -------------------------------------------------------------

    def infer_value(self, ctx: dict, v: Value) -> ValueType:
        match v:
            case Var(x):
                ty = ctx.get(x)
                if ty is None:
                    self.fail("TyVal-Var", v, f"unbound variable {x!r}")
                self.used_rules.add("TyVal-Var")
                return ty
            case Unit():
                self.used_rules.add("TyVal-Unit")
                return UNIT
            case IntLit():
                return INT
            case BoolLit():
                return BOOL
            case StrLit():
                return STRING
            case LocVal():
                self.fail("TyVal-Var", v,
                          "store locations cannot be typed without a store typing")
            case HeapVal(cells):
                for c in cells:
                    got = self.infer_value(ctx, c)
                    if not self.types_equal(got, INT):
                        self.fail("TyVal-Var", v, expected=INT, found=got)
                return HEAP
            case HeapLocVal():
                return LOC
            case Pair(a, b):
                self.used_rules.add("TyVal-Pair")
                return ProdT(self.infer_value(ctx, a), self.infer_value(ctx, b))
            case Inl(w, right):
                if right is None:
                    self.fail("TyVal-Inl", v,
                              "sum injection needs a type annotation here")
                self.used_rules.add("TyVal-Inl")
                return SumT(self.infer_value(ctx, w), right)
            case Inr(w, left):
                if left is None:
                    self.fail("TyVal-Inr", v,
                              "sum injection needs a type annotation here")
                self.used_rules.add("TyVal-Inr")
                return SumT(left, self.infer_value(ctx, w))
            case Fulfilled(w):
                self.used_rules.add("TyVal-Promise")
                return PromiseT(self.infer_value(ctx, w))
            case Fun(x, ann, body):
                if ann is None:
                    self.fail("TyVal-Fun", v,
                              "function parameter needs a type annotation here")
                self.used_rules.add("TyVal-Fun")
                inner = dict(ctx)
                inner[x] = ann
                return FunT(ann, self.infer_comp(inner, body))
            case ListVal(items):
                if not items:
                    return ListT(INT)
                tys = [self.infer_value(ctx, i) for i in items]
                for t in tys[1:]:
                    if not self.types_equal(tys[0], t):
                        self.fail("TyVal-Pair", v, "list elements disagree",
                                  expected=tys[0], found=t)
                return ListT(tys[0])
            case BuiltinVal(name, args):
                ty = bi.builtin_type(name)
                if ty is None:
                    got = tuple(self.infer_value(ctx, a) for a in args)
                    out = bi.call_site_type(name, got) if got else None
                    if out is None:
                        self.fail("TyVal-Var", v,
                                  f"builtin {name!r} cannot be typed before application")
                    return out
                for a in args:
                    if not isinstance(ty, FunT):
                        self.fail("TyComp-Apply", v, f"builtin {name!r} over-applied")
                    got = self.infer_value(ctx, a)
                    if not self.types_equal(got, ty.arg):
                        self.fail("TyComp-Apply", v, expected=ty.arg, found=got)
                    ty = ty.result.result
                return ty
        self.fail("TyVal-Var", v, f"not a value: {v!r}")

    def check_value(self, ctx: dict, v: Value, goal: ValueType) -> None:
        match v, goal:
            case Fun(x, ann, body), FunT(arg, cty):
                if ann is not None and not self.types_equal(ann, arg):
                    self.fail("TyVal-Fun", v, expected=arg, found=ann)
                self.used_rules.add("TyVal-Fun")
                inner = dict(ctx)
                inner[x] = arg
                self.check_comp(inner, body, cty)
                return
            case Pair(a, b), ProdT(x, y):
                self.used_rules.add("TyVal-Pair")
                self.check_value(ctx, a, x)
                self.check_value(ctx, b, y)
                return
            case Inl(w, right), SumT(x, y):
                if right is not None and not self.types_equal(right, y):
                    self.fail("TyVal-Inl", v, expected=y, found=right)
                self.used_rules.add("TyVal-Inl")
                self.check_value(ctx, w, x)
                return
            case Inr(w, left), SumT(x, y):
                if left is not None and not self.types_equal(left, x):
                    self.fail("TyVal-Inr", v, expected=x, found=left)
                self.used_rules.add("TyVal-Inr")
                self.check_value(ctx, w, y)
                return
            case Fulfilled(w), PromiseT(x):
                self.used_rules.add("TyVal-Promise")
                self.check_value(ctx, w, x)
                return
            case ListVal(items), ListT(elem):
                for i in items:
                    self.check_value(ctx, i, elem)
                return
        got = self.infer_value(ctx, v)
        if not self.types_equal(got, goal):
            self.fail("TyVal-Var", v, expected=goal, found=got)

    # -- computations -------------------------------------------------------

    def infer_comp(self, ctx: dict, m: Computation) -> CompType:
        if self.ascriptions:
            asc = self.ascriptions.get(id(m))
            if asc is not None and id(m) not in self._asc_active:
                self._asc_active.add(id(m))
                try:
                    self.check_comp(ctx, m, asc)
                finally:
                    self._asc_active.discard(id(m))
                self.used_rules.add("TyComp-Subsume")
                return asc
        match m:
            case Return(v):
                self.used_rules.add("TyComp-Return")
                return CompType(self.infer_value(ctx, v), effects())
            case Let(x, bound, body):
                self.used_rules.add("TyComp-Let")
                c1 = self.infer_comp(ctx, bound)
                inner = dict(ctx)
                inner[x] = c1.result
                c2 = self.infer_comp(inner, body)
                return CompType(c2.result, join_e(self.env, c1.effects, c2.effects))
            case LetRec(f, x, ann, fbody, body):
                if ann is None:
                    ann = self.elaborate_guarded_loop(ctx, m)
                self.used_rules.add("TyComp-LetRec")
                inner = dict(ctx)
                inner[f] = ann
                inner[x] = ann.arg
                self.check_comp(inner, fbody, ann.result)
                outer = dict(ctx)
                outer[f] = ann
                return self.infer_comp(outer, body)
            case Apply(fn, arg):
                self.used_rules.add("TyComp-Apply")
                return self.apply_type(ctx, m, fn, arg)
            case MatchPair(v, x, y, body):
                self.used_rules.add("TyComp-MatchPair")
                vt = self.infer_value(ctx, v)
                if not isinstance(vt, ProdT):
                    self.fail("TyComp-MatchPair", m, expected="a product type", found=vt)
                inner = dict(ctx)
                inner[x] = vt.fst
                inner[y] = vt.snd
                return self.infer_comp(inner, body)
            case MatchEmpty(v, ann):
                self.used_rules.add("TyComp-MatchEmpty")
                vt = self.infer_value(ctx, v)
                if not isinstance(vt, EmptyT):
                    self.fail("TyComp-MatchEmpty", m, expected="empty", found=vt)
                if ann is None:
                    self.fail("TyComp-MatchEmpty", m,
                              "empty match needs a result type annotation here")
                return ann
            case MatchSum(v, lx, lb, rx, rb):
                self.used_rules.add("TyComp-MatchSum")
                vt = self.infer_value(ctx, v)
                if not isinstance(vt, SumT):
                    self.fail("TyComp-MatchSum", m, expected="a sum type", found=vt)
                lctx = dict(ctx)
                lctx[lx] = vt.left
                c1 = self.infer_comp(lctx, lb)
                rctx = dict(ctx)
                rctx[rx] = vt.right
                c2 = self.infer_comp(rctx, rb)
                if not self.types_equal(c1.result, c2.result):
                    self.fail("TyComp-MatchSum", m, expected=c1.result, found=c2.result)
                return CompType(c1.result, join_e(self.env, c1.effects, c2.effects))
            case Signal(op, payload, cont):
                self.used_rules.add("TyComp-Signal")
                self.check_value(ctx, payload, self.payload_type(op, m))
                c = self.infer_comp(ctx, cont)
                return CompType(
                    c.result,
                    EffectAnnotation(c.effects.signals | {op}, c.effects.handlers),
                )
            case Interrupt(op, payload, cont):
                self.used_rules.add("TyComp-Interrupt")
                self.check_value(ctx, payload, self.payload_type(op, m))
                c = self.infer_comp(ctx, cont)
                return CompType(c.result, act(self.env, op, c.effects))
            case Promise(op, x, handler, p, cont):
                self.used_rules.add("TyComp-Promise")
                hctx = dict(ctx)
                hctx[x] = self.payload_type(op, m)
                hty = self.infer_comp(hctx, handler)
                if not isinstance(hty.result, PromiseT):
                    self.fail("TyComp-Promise", m,
                              expected="a fulfilled promise in the handler", found=hty.result)
                cctx = dict(ctx)
                cctx[p] = hty.result
                c = self.infer_comp(cctx, cont)
                entry = AnnMap(((op, (hty.effects.signals, hty.effects.handlers)),))
                return CompType(
                    c.result,
                    join_e(self.env, c.effects, EffectAnnotation(frozenset(), entry)),
                )
            case Await(v, x, body):
                self.used_rules.add("TyComp-Await")
                vt = self.infer_value(ctx, v)
                if not isinstance(vt, PromiseT):
                    self.fail("TyComp-Await", m, expected="a promise type", found=vt)
                inner = dict(ctx)
                inner[x] = vt.elem
                return self.infer_comp(inner, body)
        self.fail("TyComp-Return", m, f"not a computation: {m!r}")

    def apply_type(self, ctx: dict, node, fn: Value, arg: Value) -> CompType:
        # ad-hoc polymorphic builtins are typed from their arguments
        if isinstance(fn, BuiltinVal) and bi.builtin_type(fn.name) is None:
            got = tuple(self.infer_value(ctx, a) for a in fn.args)
            got += (self.infer_value(ctx, arg),)
            out = bi.call_site_type(fn.name, got)
            if out is None:
                self.fail("TyComp-Apply", node,
                          f"builtin {fn.name!r} does not apply to "
                          + ", ".join(type_name(t) for t in got))
            return CompType(out, effects())
        fty = self.infer_value(ctx, fn)
        if not isinstance(fty, FunT):
            self.fail("TyComp-Apply", node, expected="a function type", found=fty)
        self.check_value(ctx, arg, fty.arg)
        return fty.result

    def check_comp(self, ctx: dict, m: Computation, goal: CompType) -> None:
        match m:
            case Return(v):
                self.used_rules.add("TyComp-Return")
                self.used_rules.add("TyComp-Subsume")
                self.check_value(ctx, v, goal.result)
                return
            case Let(x, bound, body):
                self.used_rules.add("TyComp-Let")
                c1 = self.infer_comp(ctx, bound)
                if not leq_e(self.env, c1.effects, goal.effects):
                    self.used_rules.add("TyComp-Subsume")
                    self.fail("TyComp-Let", m,
                              expected=CompType(c1.result, goal.effects), found=c1)
                inner = dict(ctx)
                inner[x] = c1.result
                self.check_comp(inner, body, goal)
                return
            case LetRec(f, x, ann, fbody, body):
                if ann is None:
                    ann = self.elaborate_guarded_loop(ctx, m)
                self.used_rules.add("TyComp-LetRec")
                inner = dict(ctx)
                inner[f] = ann
                inner[x] = ann.arg
                self.check_comp(inner, fbody, ann.result)
                outer = dict(ctx)
                outer[f] = ann
                self.check_comp(outer, body, goal)
                return
            case MatchPair(v, x, y, body):
                self.used_rules.add("TyComp-MatchPair")
                vt = self.infer_value(ctx, v)
                if not isinstance(vt, ProdT):
                    self.fail("TyComp-MatchPair", m, expected="a product type", found=vt)
                inner = dict(ctx)
                inner[x] = vt.fst
                inner[y] = vt.snd
                self.check_comp(inner, body, goal)
                return
            case MatchEmpty(v, ann):
                self.used_rules.add("TyComp-MatchEmpty")
                vt = self.infer_value(ctx, v)
                if not isinstance(vt, EmptyT):
                    self.fail("TyComp-MatchEmpty", m, expected="empty", found=vt)
                if ann is not None and not self.comp_leq(ann, goal):
                    self.fail("TyComp-MatchEmpty", m, expected=goal, found=ann)
                return
            case MatchSum(v, lx, lb, rx, rb):
                self.used_rules.add("TyComp-MatchSum")
                vt = self.infer_value(ctx, v)
                if not isinstance(vt, SumT):
                    self.fail("TyComp-MatchSum", m, expected="a sum type", found=vt)
                lctx = dict(ctx)
                lctx[lx] = vt.left
                self.check_comp(lctx, lb, goal)
                rctx = dict(ctx)
                rctx[rx] = vt.right
                self.check_comp(rctx, rb, goal)
                return
            case Signal(op, payload, cont):
                self.used_rules.add("TyComp-Signal")
                if op not in goal.effects.signals:
                    self.fail("TyComp-Signal", m,
                              expected=f"a signal set containing {op!r}",
                              found="{" + ", ".join(sorted(goal.effects.signals)) + "}")
                self.check_value(ctx, payload, self.payload_type(op, m))
                self.check_comp(ctx, cont, goal)
                return
            case Promise(op, x, handler, p, cont):
                self.used_rules.add("TyComp-Promise")
                entry = lookup_ann(self.env, goal.effects.handlers, op)
                if entry is None:
                    self.fail("TyComp-Promise", m,
                              f"the goal annotation does not handle interrupt {op!r}")
                o2, i2 = entry
                hctx = dict(ctx)
                hctx[x] = self.payload_type(op, m)
                hty = self.infer_comp(hctx, handler)
                if not isinstance(hty.result, PromiseT):
                    self.fail("TyComp-Promise", m,
                              expected="a fulfilled promise in the handler",
                              found=hty.result)
                if not leq_e(self.env, hty.effects, EffectAnnotation(o2, i2)):
                    self.used_rules.add("TyComp-Subsume")
                    self.fail("TyComp-Promise", m,
                              expected=CompType(hty.result, EffectAnnotation(o2, i2)),
                              found=hty)
                self.used_rules.add("TyComp-Subsume")
                cctx = dict(ctx)
                cctx[p] = hty.result
                self.check_comp(cctx, cont, goal)
                return
            case Await(v, x, body):
                self.used_rules.add("TyComp-Await")
                vt = self.infer_value(ctx, v)
                if not isinstance(vt, PromiseT):
                    self.fail("TyComp-Await", m, expected="a promise type", found=vt)
                inner = dict(ctx)
                inner[x] = vt.elem
                self.check_comp(inner, body, goal)
                return
        # Apply, Interrupt: infer then subsume
        got = self.infer_comp(ctx, m)
        self.used_rules.add("TyComp-Subsume")
        if not self.comp_leq(got, goal):
            self.fail("TyComp-Subsume", m, expected=goal, found=got)

    # -- guarded handler loops ---------------------------------------------

    def elaborate_guarded_loop(self, ctx: dict, m: LetRec) -> FunT:
        """Synthesize the annotation for the canonical expansion of a guarded
        interrupt handler: ``let rec wait u = promise (op x -> H) as p in
        return p``, where H tests a guard and either produces the result or
        calls ``wait ()`` again.  The loop's handler annotation is the least
        fixed point {op -> (o, join(i, SELF))} of the then-branch's effects,
        which is constructible by name exactly when the then-branch does not
        itself handle ``op``."""
        shape = self._guarded_shape(m)
        if shape is None:
            self.fail("TyComp-LetRec", m,
                      "recursive definition needs a type annotation here")
        op, guard_binds, then_arm, hparam = shape
        payload = self.payload_type(op, m)
        hctx = dict(ctx)
        hctx[m.param] = UNIT
        hctx[hparam] = payload
        for ext in guard_binds:
            if ext[0] == "let":
                _, name, bound = ext
                hctx[name] = self._guard_binding_type(hctx, bound)
            else:
                _, subj, a, b = ext
                sty = hctx.get(subj)
                if not isinstance(sty, ProdT):
                    self.fail("TyComp-MatchPair", m,
                              expected="a product type", found=sty)
                hctx[a] = sty.fst
                hctx[b] = sty.snd
        then_ty = self.infer_comp(hctx, then_arm)
        if not isinstance(then_ty.result, PromiseT):
            self.fail("TyComp-Promise", m,
                      expected="a fulfilled promise in the handler",
                      found=then_ty.result)
        if lookup_ann(self.env, then_ty.effects.handlers, op) is not None:
            self.fail("TyComp-LetRec", m,
                      f"guarded handler for {op!r} re-handles its own interrupt; "
                      "annotate the recursive definition explicitly")
        name = self.env.fresh_name("guard")
        base = self.env.resolve(then_ty.effects.handlers)
        body = AnnMap(base.entries + ((op, (then_ty.effects.signals, AnnRef(name))),))
        body = AnnMap(tuple(sorted(body.entries)))
        self.env.define(name, body)
        return FunT(UNIT, CompType(then_ty.result, effects((), AnnRef(name))))

    def _guarded_shape(self, m: LetRec):
        """Match ``let rec f u = promise (op x -> H) as p in return p`` where
        descending H through lets and pair splits reaches a sum match whose
        right arm is ``f ()``.  Returns (op, guard bindings, then arm,
        handler param); bindings are tagged ("let", ...) or ("split", ...)."""
        match m.fbody:
            case Promise(op, x, handler, p, Return(Var(pv))) if pv == p:
                pass
            case _:
                return None
        exts = []
        node = handler
        while True:
            match node:
                case Let(y, bound, body):
                    exts.append(("let", y, bound))
                    node = body
                case MatchPair(Var(subj), a, b, body):
                    exts.append(("split", subj, a, b))
                    node = body
                case MatchSum(_, lx, lb, rx, rb):
                    if rb == Apply(Var(m.fname), Unit()):
                        return (op, tuple(exts), lb, x)
                    return None
                case _:
                    return None

    def _guard_binding_type(self, ctx: dict, bound: Computation) -> ValueType:
        # guard prefixes are pure let bindings; their effects must be empty
        ty = self.infer_comp(ctx, bound)
        if ty.effects.signals or self.env.resolve(ty.effects.handlers).entries:
            self.fail("TyComp-LetRec", bound,
                      "guard expressions must be pure")
        return ty.result

    # -- processes ----------------------------------------------------------

    def infer_process(self, ctx: dict, p) -> ProcessType:
        match p:
            case Run(comp):
                self.used_rules.add("TyProc-Run")
                c = self.infer_comp(ctx, comp)
                return RunT(c.result, c.effects)
            case Par(left, right):
                self.used_rules.add("TyProc-Par")
                return ParT(self.infer_process(ctx, left), self.infer_process(ctx, right))
            case SignalP(op, payload, cont):
                self.used_rules.add("TyProc-Signal")
                self.check_value(ctx, payload, self.payload_type(op, p))
                c = self.infer_process(ctx, cont)
                if op not in signals_of(c):
                    self.fail("TyProc-Signal", p,
                              expected=f"a process type emitting {op!r}",
                              found=c)
                return c
            case InterruptP(op, payload, cont):
                self.used_rules.add("TyProc-Interrupt")
                self.check_value(ctx, payload, self.payload_type(op, p))
                c = self.infer_process(ctx, cont)
                return act_process(self.env, op, c)
        self.fail("TyProc-Run", p, f"not a process: {p!r}")


def signals_of(c: ProcessType) -> frozenset:
    match c:
        case RunT(_, eff):
            return eff.signals
        case ParT(left, right):
            return signals_of(left) | signals_of(right)
    raise TypeError(f"not a process type: {c!r}")


def act_process(env: AnnotationEnv, op: str, c: ProcessType) -> ProcessType:
    match c:
        case RunT(result, eff):
            return RunT(result, act(env, op, eff))
        case ParT(left, right):
            return ParT(act_process(env, op, left), act_process(env, op, right))
    raise TypeError(f"not a process type: {c!r}")


#: every computation typing rule label, for coverage accounting
COMP_RULES = {
    "TyComp-Return", "TyComp-Let", "TyComp-LetRec", "TyComp-Apply",
    "TyComp-MatchPair", "TyComp-MatchEmpty", "TyComp-MatchSum",
    "TyComp-Signal", "TyComp-Interrupt", "TyComp-Promise", "TyComp-Await",
    "TyComp-Subsume",
}

VALUE_RULES = {
    "TyVal-Var", "TyVal-Unit", "TyVal-Pair", "TyVal-Promise",
    "TyVal-Inl", "TyVal-Inr", "TyVal-Fun",
}

PROC_RULES = {"TyProc-Run", "TyProc-Par", "TyProc-Signal", "TyProc-Interrupt"}
