"""Small-step reduction of computations.

A redex is a (rule, path) pair: the rule names the rewrite and the path
walks evaluation-context frames down to the subterm where the rule's
left-hand side matches. Evaluation contexts have one hole slot per frame
(the bound computation of a let, the continuation of a signal, interrupt
or handler), so a path is just a sequence of frame tags. Awaiting is
deliberately not a frame: a blocked computation only resumes via the
await rule firing at an evaluation position above it.
"""

from dataclasses import dataclass
import random
from typing import Callable, Optional

from .builtins import EvalError, Store, arity, delta, is_builtin, uses_store
from .syntax import (
    Apply,
    Await,
    BuiltinVal,
    Computation,
    Fulfilled,
    Fun,
    Inl,
    Inr,
    Interrupt,
    Let,
    LetRec,
    MatchPair,
    MatchSum,
    Pair,
    Promise,
    Return,
    Signal,
    Var,
    free_vars,
    fresh,
    subst,
)

FRAME_LET = "let"
FRAME_SIGNAL = "signal"
FRAME_INTERRUPT = "interrupt"
FRAME_PROMISE = "promise"


@dataclass(frozen=True)
class Redex:
    rule: str
    path: tuple


RULES = frozenset({
    "app", "letReturn", "matchPair", "matchInl", "matchInr", "letrecUnfold",
    "algSignal", "algPromise", "commuteSignalPromise",
    "intReturn", "intSignal", "intPromiseMatch", "intPromiseSkip",
    "awaitFulfilled", "delta",
})


def match_rule(m: Computation) -> Optional[str]:
    """Name of the rule whose left-hand side matches at this node, if any."""
    if isinstance(m, Apply):
        if isinstance(m.fn, Fun):
            return "app"
        if isinstance(m.fn, BuiltinVal) and is_builtin(m.fn.name) \
                and len(m.fn.args) < arity(m.fn.name):
            return "delta"
        return None
    if isinstance(m, Let):
        b = m.bound
        if isinstance(b, Return):
            return "letReturn"
        if isinstance(b, Signal):
            return "algSignal"
        if isinstance(b, Promise):
            return "algPromise"
        return None
    if isinstance(m, MatchPair):
        return "matchPair" if isinstance(m.scrutinee, Pair) else None
    if isinstance(m, MatchSum):
        if isinstance(m.scrutinee, Inl):
            return "matchInl"
        if isinstance(m.scrutinee, Inr):
            return "matchInr"
        return None
    if isinstance(m, LetRec):
        return "letrecUnfold"
    if isinstance(m, Interrupt):
        c = m.cont
        if isinstance(c, Return):
            return "intReturn"
        if isinstance(c, Signal):
            return "intSignal"
        if isinstance(c, Promise):
            return "intPromiseMatch" if c.op == m.op else "intPromiseSkip"
        return None
    if isinstance(m, Promise):
        c = m.cont
        # hoisting a signal past the handler must not capture the promise
        # variable inside the payload
        if isinstance(c, Signal) and m.pvar not in free_vars(c.payload):
            return "commuteSignalPromise"
        return None
    if isinstance(m, Await):
        return "awaitFulfilled" if isinstance(m.subject, Fulfilled) else None
    return None


def _e_child(m: Computation):
    if isinstance(m, Let):
        return FRAME_LET, m.bound
    if isinstance(m, Signal):
        return FRAME_SIGNAL, m.cont
    if isinstance(m, Interrupt):
        return FRAME_INTERRUPT, m.cont
    if isinstance(m, Promise):
        return FRAME_PROMISE, m.cont
    return None


def enumerate_redexes(m: Computation) -> list:
    """All redexes of m, leftmost-outermost first.

    Every evaluation frame has a single hole, so the listing walks the
    context spine top-down, offering the rule matching at each node before
    the ones below it.
    """
    out = []
    node, path = m, ()
    while True:
        rule = match_rule(node)
        if rule is not None:
            out.append(Redex(rule, path))
        slot = _e_child(node)
        if slot is None:
            return out
        tag, child = slot
        node, path = child, path + (tag,)


def subterm_at(m: Computation, path: tuple) -> Computation:
    node = m
    for tag in path:
        slot = _e_child(node)
        if slot is None or slot[0] != tag:
            raise EvalError(f"path {'.'.join(path) or 'root'} does not select "
                            "an evaluation position")
        node = slot[1]
    return node


def replace_at(m: Computation, path: tuple, new: Computation) -> Computation:
    if not path:
        return new
    tag = path[0]
    slot = _e_child(m)
    if slot is None or slot[0] != tag:
        raise EvalError(f"path frame {tag} does not match the term")
    child = replace_at(slot[1], path[1:], new)
    if tag == FRAME_LET:
        return Let(m.name, child, m.body)
    if tag == FRAME_SIGNAL:
        return Signal(m.op, m.payload, child)
    if tag == FRAME_INTERRUPT:
        return Interrupt(m.op, m.payload, child)
    return Promise(m.op, m.param, m.handler, m.pvar, child)


def _subst_pair(body, a, v, b, w):
    # simultaneous [v/a, w/b]; with duplicate binders the inner (second)
    # pattern variable shadows the first
    if a == b:
        return subst(body, b, w)
    if b in free_vars(v):
        b2 = fresh(b, free_vars(body) | free_vars(v) | free_vars(w) | {a})
        body = subst(body, b, Var(b2))
        b = b2
    return subst(subst(body, a, v), b, w)


def apply_rule(m: Computation, rule: str, store: Optional[Store]) -> Computation:
    if rule == "app":
        return subst(m.fn.body, m.fn.param, m.arg)
    if rule == "delta":
        b = m.fn
        args = b.args + (m.arg,)
        if len(args) < arity(b.name):
            return Return(BuiltinVal(b.name, args))
        if uses_store(b.name) and store is None:
            raise EvalError(f"builtin {b.name} needs a store; "
                            "step it inside a run")
        result = delta(b.name, args, store)
        return result if isinstance(result, Computation) else Return(result)
    if rule == "letReturn":
        return subst(m.body, m.name, m.bound.value)
    if rule == "matchPair":
        s = m.scrutinee
        return _subst_pair(m.body, m.fst, s.fst, m.snd, s.snd)
    if rule == "matchInl":
        return subst(m.lbody, m.lname, m.scrutinee.value)
    if rule == "matchInr":
        return subst(m.rbody, m.rname, m.scrutinee.value)
    if rule == "letrecUnfold":
        arg_ty = m.fun_type.arg if m.fun_type is not None else None
        unfolded = Fun(m.param, arg_ty,
                       LetRec(m.fname, m.param, m.fun_type, m.fbody, m.fbody))
        return subst(m.body, m.fname, unfolded)
    if rule == "algSignal":
        s = m.bound
        return Signal(s.op, s.payload, Let(m.name, s.cont, m.body))
    if rule == "algPromise":
        pr = m.bound
        p, inner = pr.pvar, pr.cont
        if p in free_vars(m.body):
            p2 = fresh(p, free_vars(inner) | free_vars(m.body)
                       | free_vars(pr.handler))
            inner = subst(inner, p, Var(p2))
            p = p2
        return Promise(pr.op, pr.param, pr.handler, p,
                       Let(m.name, inner, m.body))
    if rule == "commuteSignalPromise":
        s = m.cont
        return Signal(s.op, s.payload,
                      Promise(m.op, m.param, m.handler, m.pvar, s.cont))
    if rule == "intReturn":
        return m.cont
    if rule == "intSignal":
        s = m.cont
        return Signal(s.op, s.payload, Interrupt(m.op, m.payload, s.cont))
    if rule in ("intPromiseMatch", "intPromiseSkip"):
        pr = m.cont
        v = m.payload
        p, inner = pr.pvar, pr.cont
        if p in free_vars(v):
            p2 = fresh(p, free_vars(inner) | free_vars(v)
                       | free_vars(pr.handler))
            inner = subst(inner, p, Var(p2))
            p = p2
        if rule == "intPromiseMatch":
            return Let(p, subst(pr.handler, pr.param, v),
                       Interrupt(m.op, v, inner))
        return Promise(pr.op, pr.param, pr.handler, p,
                       Interrupt(m.op, v, inner))
    if rule == "awaitFulfilled":
        return subst(m.body, m.param, m.subject.value)
    raise EvalError(f"unknown rule {rule}")


def step(m: Computation, redex: Redex, store: Optional[Store] = None) -> Computation:
    """Apply one reduction at the redex. The redex must be live in m."""
    target = subterm_at(m, redex.path)
    if match_rule(target) != redex.rule:
        raise EvalError(f"rule {redex.rule} does not match at "
                        f"{'.'.join(redex.path) or 'root'}")
    return replace_at(m, redex.path, apply_rule(target, redex.rule, store))


# ---------------------------------------------------------------------------
# result forms

@dataclass(frozen=True)
class CompResult:
    kind = "compResult"
    psi: frozenset


@dataclass(frozen=True)
class RunResult:
    kind = "runResult"
    psi: frozenset


@dataclass(frozen=True)
class Awaiting:
    kind = "awaiting"
    promise: str


@dataclass(frozen=True)
class StuckIllTyped:
    kind = "stuckIllTyped"


def awaiting_on(m: Computation) -> Optional[str]:
    """The promise variable the whole computation is blocked on, if any."""
    if isinstance(m, Await) and isinstance(m.subject, Var):
        return m.subject.name
    if isinstance(m, Let):
        return awaiting_on(m.bound)
    if isinstance(m, Interrupt):
        return awaiting_on(m.cont)
    return None


def _run_res(psi: frozenset, m: Computation) -> bool:
    if isinstance(m, Return):
        return True
    if isinstance(m, Promise):
        return _run_res(psi | {m.pvar}, m.cont)
    p = awaiting_on(m)
    return p is not None and p in psi


def result_status(psi, m: Computation):
    """Classify m against the result-form judgements.

    psi is the set of promise variables bound by interrupt handlers
    enveloping m; it must be passed explicitly since an open term does not
    know its context. Returns the most specific status: a computation
    blocked as a whole reports the awaited promise, a signal-free result
    reports runResult, signals over a result report compResult, and
    anything else is stuck (never the case for well-typed redex-free
    terms).
    """
    psi = frozenset(psi)
    p = awaiting_on(m)
    if p is not None and p in psi:
        return Awaiting(p)
    if _run_res(psi, m):
        return RunResult(psi)
    n = m
    stripped = False
    while isinstance(n, Signal):
        n = n.cont
        stripped = True
    if stripped and _run_res(psi, n):
        return CompResult(psi)
    return StuckIllTyped()


# ---------------------------------------------------------------------------
# driving

Scheduler = Callable[[int, Computation, list], Redex]


def fifo_scheduler(index: int, m: Computation, redexes: list) -> Redex:
    return redexes[0]


def make_random_scheduler(seed: int) -> Scheduler:
    rng = random.Random(seed)

    def pick(index: int, m: Computation, redexes: list) -> Redex:
        return rng.choice(redexes)

    return pick


def run_to_result(m: Computation, scheduler: Scheduler, fuel: int,
                  store: Optional[Store] = None):
    """Iterate scheduler-chosen steps until no redex remains or fuel runs out.

    Returns (final computation, trace of applied redexes, exhausted flag).
    Replaying the trace with step() from the initial computation is
    deterministic.
    """
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    trace = []
    current = m
    for _ in range(fuel):
        redexes = enumerate_redexes(current)
        if not redexes:
            return current, trace, False
        choice = scheduler(len(trace), current, redexes)
        if choice not in redexes:
            raise EvalError(f"scheduler chose a redex not offered: {choice}")
        current = step(current, choice, store)
        trace.append(choice)
    return current, trace, bool(enumerate_redexes(current))


def render_path(path: tuple) -> str:
    return ".".join(path) if path else "root"


def render_trace(trace) -> str:
    """One line per step: ``<n> <rule> @ <path>``, numbering from 1.

    The delta rule is not part of the core reduction relation, so its
    lines carry an [extension] marker.
    """
    lines = []
    for i, r in enumerate(trace, 1):
        flag = " [extension]" if r.rule == "delta" else ""
        lines.append(f"{i} {r.rule} @ {render_path(r.path)}{flag}")
    return "\n".join(lines)
