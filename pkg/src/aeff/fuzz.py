"""Random generation of well-typed programs and annotations.

The generators here back the dynamic metatheory checks: progress and
preservation are not proved, they are hammered.  Everything is seeded, so
a failing case reproduces from its seed alone.

Generated terms are type-directed on the *result* type only; effect
annotations fall out of inference afterwards.  That keeps the generators
total: every emitted term is closed and inferable by construction, and the
test drivers treat an inference failure as a generator bug, not a skip.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .check import Checker, signals_of
from .effects import (
    AnnMap,
    AnnotationEnv,
    AnnRef,
    EffectAnnotation,
    ann_map,
    effects,
)
from .process import (
    ProcessShadow,
    check_process_at,
    enumerate_proc_redexes,
    proc_result_status,
    step_proc,
    type_reduces,
)
from .semantics import (
    StuckIllTyped,
    enumerate_redexes,
    result_status,
    step,
)
from .syntax import (
    BOOL,
    BoolLit,
    CompType,
    Fulfilled,
    Fun,
    FunT,
    INT,
    IntLit,
    Interrupt,
    InterruptP,
    Let,
    MatchPair,
    MatchSum,
    Pair,
    Par,
    ProdT,
    Promise,
    PromiseT,
    Return,
    Run,
    Signal,
    Signature,
    SumT,
    UNIT,
    Unit,
    Inl,
    Inr,
    Apply,
    Await,
    Var,
    ValueType,
)

# the harness signature: three interrupt/signal names with ground payloads
OPS = ("opA", "opB", "opC")
_PAYLOADS = {"opA": INT, "opB": UNIT, "opC": BOOL}


def harness_signature() -> Signature:
    sig = Signature()
    for op in OPS:
        sig.declare(op, _PAYLOADS[op])
    return sig


def harness_checker() -> Checker:
    return Checker(harness_signature(), AnnotationEnv())


# ---------------------------------------------------------------------------
# value and computation generation

_GROUND = (INT, UNIT, BOOL)


def _gen_data_type(rng: random.Random, depth: int) -> ValueType:
    """A first-order value type: ground, products, sums, promises."""
    if depth <= 0 or rng.random() < 0.55:
        return rng.choice(_GROUND)
    k = rng.randrange(3)
    if k == 0:
        return ProdT(_gen_data_type(rng, depth - 1), _gen_data_type(rng, depth - 1))
    if k == 1:
        return SumT(_gen_data_type(rng, depth - 1), _gen_data_type(rng, depth - 1))
    return PromiseT(_gen_data_type(rng, depth - 1))


def _vars_of(ctx: dict, ty: ValueType) -> list:
    return [name for name, t in ctx.items() if t == ty]


def gen_value(rng: random.Random, ctx: dict, ty: ValueType, depth: int):
    """A closed-under-ctx value of exactly the given data type."""
    hits = _vars_of(ctx, ty)
    if hits and rng.random() < 0.4:
        return Var(rng.choice(hits))
    if ty == INT:
        return IntLit(rng.randrange(-9, 100))
    if ty == UNIT:
        return Unit()
    if ty == BOOL:
        return BoolLit(rng.random() < 0.5)
    if isinstance(ty, ProdT):
        return Pair(gen_value(rng, ctx, ty.fst, depth - 1),
                    gen_value(rng, ctx, ty.snd, depth - 1))
    if isinstance(ty, SumT):
        if rng.random() < 0.5:
            return Inl(gen_value(rng, ctx, ty.left, depth - 1), right=ty.right)
        return Inr(gen_value(rng, ctx, ty.right, depth - 1), left=ty.left)
    if isinstance(ty, PromiseT):
        return Fulfilled(gen_value(rng, ctx, ty.elem, depth - 1))
    raise AssertionError(f"no generator for value type {ty!r}")


def gen_comp(rng: random.Random, ctx: dict, ty: ValueType, depth: int,
             fresh: list):
    """A computation whose inferred result type is exactly ty.

    ctx maps variables to their data types.  Function-typed variables are
    tracked separately in the closure of the caller (see _let_fun), since
    their full types carry effect components unknown until inference.
    """
    if depth <= 0:
        return Return(gen_value(rng, ctx, ty, 2))
    roll = rng.random()
    if roll < 0.22:
        return Return(gen_value(rng, ctx, ty, min(depth, 3)))
    if roll < 0.38:
        # let over a fresh data type
        s = _gen_data_type(rng, 2)
        bound = gen_comp(rng, ctx, s, depth - 1, fresh)
        x = _fresh(fresh, "x")
        inner = dict(ctx)
        inner[x] = s
        return Let(x, bound, gen_comp(rng, inner, ty, depth - 1, fresh))
    if roll < 0.50:
        op = rng.choice(OPS)
        payload = gen_value(rng, ctx, _PAYLOADS[op], 2)
        return Signal(op, payload, gen_comp(rng, ctx, ty, depth - 1, fresh))
    if roll < 0.60:
        op = rng.choice(OPS)
        payload = gen_value(rng, ctx, _PAYLOADS[op], 2)
        return Interrupt(op, payload, gen_comp(rng, ctx, ty, depth - 1, fresh))
    if roll < 0.74:
        # install a handler; the handler body must produce a fulfilled promise
        op = rng.choice(OPS)
        elem = _gen_data_type(rng, 1)
        x = _fresh(fresh, "h")
        hctx = dict(ctx)
        hctx[x] = _PAYLOADS[op]
        handler = gen_comp(rng, hctx, PromiseT(elem), depth - 2, fresh)
        p = _fresh(fresh, "p")
        cctx = dict(ctx)
        cctx[p] = PromiseT(elem)
        return Promise(op, x, handler, p, gen_comp(rng, cctx, ty, depth - 1, fresh))
    if roll < 0.82:
        # await either a context promise or a fulfilled literal
        promises = [(n, t) for n, t in ctx.items() if isinstance(t, PromiseT)]
        x = _fresh(fresh, "a")
        if promises and rng.random() < 0.6:
            name, pt = rng.choice(promises)
            subject, elem = Var(name), pt.elem
        else:
            elem = _gen_data_type(rng, 1)
            subject = Fulfilled(gen_value(rng, ctx, elem, 2))
        inner = dict(ctx)
        inner[x] = elem
        return Await(subject, x, gen_comp(rng, inner, ty, depth - 1, fresh))
    if roll < 0.90:
        # direct beta redex with an annotated parameter
        a = _gen_data_type(rng, 1)
        x = _fresh(fresh, "f")
        inner = dict(ctx)
        inner[x] = a
        body = gen_comp(rng, inner, ty, depth - 1, fresh)
        return Apply(Fun(x, a, body), gen_value(rng, ctx, a, 2))
    if roll < 0.96:
        l, r = _gen_data_type(rng, 1), _gen_data_type(rng, 1)
        scr = gen_value(rng, ctx, SumT(l, r), 2)
        lx, rx = _fresh(fresh, "l"), _fresh(fresh, "r")
        lctx = dict(ctx)
        lctx[lx] = l
        rctx = dict(ctx)
        rctx[rx] = r
        return MatchSum(scr, lx, gen_comp(rng, lctx, ty, depth - 1, fresh),
                        rx, gen_comp(rng, rctx, ty, depth - 1, fresh))
    l, r = _gen_data_type(rng, 1), _gen_data_type(rng, 1)
    scr = gen_value(rng, ctx, ProdT(l, r), 2)
    a, b = _fresh(fresh, "u"), _fresh(fresh, "v")
    inner = dict(ctx)
    inner[a] = l
    inner[b] = r
    return MatchPair(scr, a, b, gen_comp(rng, inner, ty, depth - 1, fresh))


def _fresh(counter: list, prefix: str) -> str:
    counter[0] += 1
    return f"{prefix}{counter[0]}"


def gen_computation(seed: int, depth: int = 8):
    """A closed well-typed computation plus its inferred type."""
    rng = random.Random(seed)
    ty = _gen_data_type(rng, 2)
    m = gen_comp(rng, {}, ty, depth, [0])
    ck = harness_checker()
    inferred = ck.infer_comp({}, m)
    assert inferred.result == ty, (inferred.result, ty)
    return m, inferred


def gen_process(seed: int, leaves: Optional[int] = None):
    """A closed well-typed process of 2 or 3 run leaves.

    Returns (process, [leaf computation types]).  Some processes carry an
    outer interrupt so propagation rules get exercised from the start.
    """
    rng = random.Random(seed)
    n = leaves if leaves is not None else rng.choice((2, 3))
    ck = harness_checker()
    comps, types = [], []
    for i in range(n):
        ty = _gen_data_type(rng, 1)
        m = gen_comp(rng, {}, ty, 5, [0])
        comps.append(m)
        types.append(ck.infer_comp({}, m))
    p = Run(comps[0])
    for m in comps[1:]:
        p = Par(p, Run(m))
    if rng.random() < 0.3:
        op = rng.choice(OPS)
        payload = gen_value(rng, {}, _PAYLOADS[op], 1)
        p = InterruptP(op, payload, p)
    return p, types


# ---------------------------------------------------------------------------
# metatheory drivers

def check_progress(m, psi=frozenset()) -> bool:
    """Progress: a well-typed computation has a redex or is a result."""
    if enumerate_redexes(m):
        return True
    return not isinstance(result_status(psi, m), StuckIllTyped)


def drive_progress(seed: int, fuel: int = 300):
    """Generate from seed, run under a seeded random scheduler, and check
    progress at every state along the way.  Returns the step count."""
    m, _ = gen_computation(seed)
    rng = random.Random(seed ^ 0x5EED)
    steps = 0
    while steps < fuel:
        assert check_progress(m), f"progress violated at seed {seed}: {m!r}"
        redexes = enumerate_redexes(m)
        if not redexes:
            return steps
        m = step(m, rng.choice(redexes))
        steps += 1
    return steps


def drive_preservation(seed: int, fuel: int = 200):
    """Preservation: the original inferred type keeps checking along a
    random reduction path.  Returns the step count."""
    m, ty = gen_computation(seed)
    ck = harness_checker()
    rng = random.Random(seed ^ 0xCAFE)
    steps = 0
    while steps < fuel:
        ck.check_comp({}, m, ty)
        redexes = enumerate_redexes(m)
        if not redexes:
            return steps
        m = step(m, rng.choice(redexes))
        steps += 1
    ck.check_comp({}, m, ty)
    return steps


def drive_process_preservation(seed: int, fuel: int = 200):
    """Process preservation along a random path.

    Checks at each step that the reduct types against the evolved leaf
    goals, that the process type moves along the type-reduction relation,
    and that the signal set never shrinks.  Returns the step count.
    """
    p, leaf_types = gen_process(seed)
    ck = harness_checker()
    shadow = ProcessShadow(ck.env, leaf_types)
    # standing interrupt wrappers predate the run; record them innermost
    # first so the shadow's pending region matches the tree
    wrappers = []
    node = p
    while isinstance(node, InterruptP):
        wrappers.append(node.op)
        node = node.cont
    for op in reversed(wrappers):
        shadow.inject(op)
    c = check_process_at(ck, {}, p, shadow.leaf_goals())
    rng = random.Random(seed ^ 0xF00D)
    steps = 0
    while steps < fuel:
        redexes = enumerate_proc_redexes(p)
        if not redexes:
            return steps
        r = rng.choice(redexes)
        q = step_proc(p, r)
        hints = shadow.evolve(p, r)
        d = check_process_at(ck, {}, q, shadow.leaf_goals())
        assert type_reduces(ck.env, c, d, hints=hints), (seed, r)
        assert signals_of(c) <= signals_of(d), (seed, r)
        p, c = q, d
        steps += 1
    return steps


# ---------------------------------------------------------------------------
# random effect annotations

def gen_ann_env(rng: random.Random, ops=OPS, defs: int = 2) -> AnnotationEnv:
    """An annotation environment with up to `defs` recursive names."""
    env = AnnotationEnv()
    names = [f"r{i}" for i in range(rng.randrange(defs + 1))]
    for i, name in enumerate(names):
        # a definition may reference itself or earlier names
        visible = names[: i + 1]
        env.define(name, _gen_imap(rng, ops, 2, visible))
    env.validate()
    return env


def _gen_imap(rng: random.Random, ops, depth: int, visible) -> AnnMap:
    entries = {}
    for op in ops:
        if rng.random() < 0.45:
            continue
        sigset = frozenset(o for o in ops if rng.random() < 0.4)
        if depth <= 0 or (visible and rng.random() < 0.5):
            inner = AnnRef(rng.choice(visible)) if visible else ann_map({})
        else:
            inner = _gen_imap(rng, ops, depth - 1, visible)
        entries[op] = (sigset, inner)
    return ann_map(entries)


def gen_annotation(rng: random.Random, env: AnnotationEnv, ops=OPS,
                   depth: int = 3) -> EffectAnnotation:
    """A random effect annotation over ops, valid in env."""
    visible = list(env.defs)
    sigset = frozenset(o for o in ops if rng.random() < 0.4)
    if visible and rng.random() < 0.3:
        return EffectAnnotation(sigset, AnnRef(rng.choice(visible)))
    return EffectAnnotation(sigset, _gen_imap(rng, ops, depth, visible))
