"""Small-step reduction of parallel processes and process-level metatheory.

Processes reduce by stepping individual computations, hoisting signals out
of runs, broadcasting hoisted signals to sibling processes as interrupts,
and propagating interrupts inward. Process evaluation frames do not bind
variables, so paths are plain selector sequences: parL/parR under a
parallel node, sig/int under outgoing signals and incoming interrupts.
"""

from dataclasses import dataclass
from typing import Optional

from .builtins import EvalError, Store
from .check import Checker, TypeCheckError, act_process, signals_of, type_name
from .effects import act, act_list, eq_e
from .semantics import (
    Redex,
    enumerate_redexes,
    render_path,
    result_status,
    RunResult,
    step,
)
from .syntax import (
    CompType,
    Computation,
    Interrupt,
    InterruptP,
    Par,
    ParT,
    Process,
    ProcessType,
    Run,
    RunT,
    Signal,
    SignalP,
    Value,
)

FRAME_PARL = "parL"
FRAME_PARR = "parR"
FRAME_SIG = "sig"
FRAME_INT = "int"


@dataclass(frozen=True)
class ProcRedex:
    rule: str
    path: tuple
    inner: Optional[Redex] = None


PROC_RULES = frozenset({
    "innerComp", "hoistSignal", "broadcastLeft", "broadcastRight",
    "intIntoRun", "intIntoPar", "intPastSignal",
})


def _f_children(p: Process):
    if isinstance(p, Par):
        return ((FRAME_PARL, p.left), (FRAME_PARR, p.right))
    if isinstance(p, SignalP):
        return ((FRAME_SIG, p.cont),)
    if isinstance(p, InterruptP):
        return ((FRAME_INT, p.cont),)
    return ()


def _node_redexes(p: Process, path: tuple) -> list:
    out = []
    if isinstance(p, Run):
        if isinstance(p.comp, Signal):
            out.append(ProcRedex("hoistSignal", path))
        for r in enumerate_redexes(p.comp):
            out.append(ProcRedex("innerComp", path, r))
    elif isinstance(p, Par):
        if isinstance(p.left, SignalP):
            out.append(ProcRedex("broadcastLeft", path))
        if isinstance(p.right, SignalP):
            out.append(ProcRedex("broadcastRight", path))
    elif isinstance(p, InterruptP):
        c = p.cont
        if isinstance(c, Run):
            out.append(ProcRedex("intIntoRun", path))
        elif isinstance(c, Par):
            out.append(ProcRedex("intIntoPar", path))
        elif isinstance(c, SignalP):
            out.append(ProcRedex("intPastSignal", path))
    return out


def enumerate_proc_redexes(p: Process) -> list:
    """All process redexes, outermost first, left branches before right."""
    out = _node_redexes(p, ())
    stack = [(tag, child, (tag,)) for tag, child in reversed(_f_children(p))]
    while stack:
        _, node, path = stack.pop()
        out.extend(_node_redexes(node, path))
        for tag, child in reversed(_f_children(node)):
            stack.append((tag, child, path + (tag,)))
    return out


def proc_subterm_at(p: Process, path: tuple) -> Process:
    node = p
    for tag in path:
        for t, child in _f_children(node):
            if t == tag:
                node = child
                break
        else:
            raise EvalError(f"path {render_path(path)} does not select "
                            "a process position")
    return node


def _proc_replace_at(p: Process, path: tuple, new: Process) -> Process:
    if not path:
        return new
    tag = path[0]
    if isinstance(p, Par) and tag == FRAME_PARL:
        return Par(_proc_replace_at(p.left, path[1:], new), p.right)
    if isinstance(p, Par) and tag == FRAME_PARR:
        return Par(p.left, _proc_replace_at(p.right, path[1:], new))
    if isinstance(p, SignalP) and tag == FRAME_SIG:
        return SignalP(p.op, p.payload, _proc_replace_at(p.cont, path[1:], new))
    if isinstance(p, InterruptP) and tag == FRAME_INT:
        return InterruptP(p.op, p.payload,
                          _proc_replace_at(p.cont, path[1:], new))
    raise EvalError(f"path frame {tag} does not match the process")


def count_run_leaves(p: Process) -> int:
    if isinstance(p, Run):
        return 1
    return sum(count_run_leaves(child) for _, child in _f_children(p))


def leaf_index_at(p: Process, path: tuple) -> int:
    """Index (left to right) of the run leaf selected by path."""
    index = 0
    node = p
    for tag in path:
        if isinstance(node, Par) and tag == FRAME_PARR:
            index += count_run_leaves(node.left)
        node = proc_subterm_at(node, (tag,))
    if not isinstance(node, Run):
        raise EvalError("path does not select a run leaf")
    return index


def _apply_proc_rule(p: Process, r: ProcRedex,
                     store: Optional[Store]) -> Process:
    rule = r.rule
    if rule == "innerComp":
        if not (isinstance(p, Run) and r.inner is not None):
            raise EvalError("innerComp redex does not match")
        return Run(step(p.comp, r.inner, store))
    if rule == "hoistSignal":
        if not (isinstance(p, Run) and isinstance(p.comp, Signal)):
            raise EvalError("hoistSignal redex does not match")
        s = p.comp
        return SignalP(s.op, s.payload, Run(s.cont))
    if rule == "broadcastLeft":
        if not (isinstance(p, Par) and isinstance(p.left, SignalP)):
            raise EvalError("broadcastLeft redex does not match")
        s = p.left
        return SignalP(s.op, s.payload,
                       Par(s.cont, InterruptP(s.op, s.payload, p.right)))
    if rule == "broadcastRight":
        if not (isinstance(p, Par) and isinstance(p.right, SignalP)):
            raise EvalError("broadcastRight redex does not match")
        s = p.right
        return SignalP(s.op, s.payload,
                       Par(InterruptP(s.op, s.payload, p.left), s.cont))
    if not isinstance(p, InterruptP):
        raise EvalError(f"{rule} redex does not match")
    c = p.cont
    if rule == "intIntoRun" and isinstance(c, Run):
        return Run(Interrupt(p.op, p.payload, c.comp))
    if rule == "intIntoPar" and isinstance(c, Par):
        return Par(InterruptP(p.op, p.payload, c.left),
                   InterruptP(p.op, p.payload, c.right))
    if rule == "intPastSignal" and isinstance(c, SignalP):
        return SignalP(c.op, c.payload, InterruptP(p.op, p.payload, c.cont))
    raise EvalError(f"{rule} redex does not match")


def step_proc(p: Process, r: ProcRedex,
              stores: Optional[list] = None) -> Process:
    """Apply one process reduction.

    stores, when given, holds one builtin store per run leaf in
    left-to-right order; reduction rules never create, drop, or reorder
    leaves, so positional identity is stable along a reduction sequence.
    """
    target = proc_subterm_at(p, r.path)
    store = None
    if r.rule == "innerComp" and stores is not None:
        store = stores[leaf_index_at(p, r.path)]
    return _proc_replace_at(p, r.path, _apply_proc_rule(target, r, store))


# ---------------------------------------------------------------------------
# result forms

@dataclass(frozen=True)
class ProcResult:
    kind = "procResult"


@dataclass(frozen=True)
class ParResult:
    kind = "parResult"


@dataclass(frozen=True)
class NotResult:
    kind = "notResult"


def _par_res(p: Process) -> bool:
    if isinstance(p, Run):
        return isinstance(result_status((), p.comp), RunResult)
    if isinstance(p, Par):
        return _par_res(p.left) and _par_res(p.right)
    return False


def proc_result_status(p: Process):
    """Classify p: signal spine over parallel leaves of computation results.

    A run leaf only counts once its signals have been hoisted out, so
    run(signal...) is not a result even though the computation inside is.
    """
    if _par_res(p):
        return ParResult()
    n = p
    while isinstance(n, SignalP):
        n = n.cont
    if n is not p and _par_res(n):
        return ProcResult()
    return NotResult()


# ---------------------------------------------------------------------------
# interrupts from the outside world

def inject_interrupt(checker: Checker, p: Process, op: str,
                     payload: Value) -> Process:
    """Wrap p in an interrupt arriving from the environment.

    The payload must be a closed value of the operation's declared type.
    """
    expected = checker.payload_type(op, p)
    got = checker.infer_value({}, payload)
    if not checker.types_equal(got, expected):
        raise TypeCheckError("TyProc-Interrupt",
                             f"payload for interrupt {op}",
                             expected=type_name(expected),
                             found=type_name(got))
    return InterruptP(op, payload, p)


# ---------------------------------------------------------------------------
# process type reduction

def _leaf_anns(c: ProcessType) -> list:
    if isinstance(c, RunT):
        return [c]
    return _leaf_anns(c.left) + _leaf_anns(c.right)


def type_reduces(env, c: ProcessType, d: ProcessType, ops=(),
                 hints: Optional[dict] = None) -> bool:
    """Decide whether the process type c reduces to d.

    Each leaf may stay unchanged or absorb one freshly introduced
    interrupt action under an enveloping prefix of existing actions.
    Without hints the search tries prefix-free introductions drawn from
    ops; a hint (prefix_ops, op, base_effects) for a leaf index pins down
    the claimed decomposition exactly, which is how the reduction harness
    verifies broadcasts that happen under pending interrupts.
    """
    cl, dl = _leaf_anns(c), _leaf_anns(d)
    if len(cl) != len(dl):
        return False

    def structure(t):
        return t.__class__ if isinstance(t, RunT) else \
            (structure(t.left), structure(t.right))

    if structure(c) != structure(d):
        return False
    for i, (a, b) in enumerate(zip(cl, dl)):
        if a.result != b.result:
            return False
        if eq_e(env, a.effects, b.effects):
            continue
        hint = (hints or {}).get(i)
        if hint is not None:
            prefix, op, base = hint
            if eq_e(env, a.effects, act_list(env, list(prefix), base)) and \
                    eq_e(env, b.effects,
                         act_list(env, list(prefix), act(env, op, base))):
                continue
            return False
        if any(eq_e(env, b.effects, act(env, op, a.effects)) for op in ops):
            continue
        return False
    return True


# ---------------------------------------------------------------------------
# push-mode typing of reducts

def check_process_at(checker: Checker, ctx: dict, p: Process,
                     leaf_goals: list) -> ProcessType:
    """Type p against one computation goal per run leaf, left to right.

    Least-type inference cannot follow reducts whose hoisted signals are no
    longer inside the leaf that produced them; checking each leaf against
    its goal restores derivability through computation-level subsumption.
    Interrupt and signal nodes above the leaves are typed by the walk
    itself, so a goal describes the leaf computation as it currently is,
    including any interrupts already absorbed into it.
    """
    goals = list(leaf_goals)
    if count_run_leaves(p) != len(goals):
        raise EvalError("one goal type per run leaf is required")
    counter = [0]

    def walk(node: Process) -> ProcessType:
        if isinstance(node, Run):
            goal = goals[counter[0]]
            counter[0] += 1
            checker.check_comp(ctx, node.comp, goal)
            return RunT(goal.result, goal.effects)
        if isinstance(node, Par):
            return ParT(walk(node.left), walk(node.right))
        if isinstance(node, SignalP):
            sub = walk(node.cont)
            checker.check_value(ctx, node.payload,
                                checker.payload_type(node.op, node))
            if node.op not in signals_of(sub):
                raise TypeCheckError(
                    "TyProc-Signal",
                    f"signal {node.op} is not offered by the process type "
                    f"{type_name(sub)}")
            return sub
        if isinstance(node, InterruptP):
            sub = walk(node.cont)
            checker.check_value(ctx, node.payload,
                                checker.payload_type(node.op, node))
            return act_process(checker.env, node.op, sub)
        raise EvalError(f"not a process: {node!r}")

    return walk(p)


class ProcessShadow:
    """Evolves per-leaf goal types along a process reduction.

    Each leaf keeps its base computation type plus the list of interrupt
    actions that have reached it, outermost first. The first pending[i]
    of those are still standing as interrupt nodes above the leaf (the
    typing walk applies them itself), the rest have been absorbed into
    the leaf computation and so belong in its goal type. A broadcast
    inserts its action directly under the interrupts enveloping the
    broadcast site; those form a shared prefix of every affected leaf's
    action list, which keeps the pending region contiguous.

    leaf_goals() feeds check_process_at, and evolve() returns the hints
    type_reduces needs to verify the same step.
    """

    def __init__(self, env, leaf_types: list):
        self.env = env
        self.bases = [CompType(t.result, t.effects) for t in leaf_types]
        self.acts = [[] for _ in leaf_types]
        self.pending = [0 for _ in leaf_types]

    def leaf_goals(self) -> list:
        return [CompType(b.result, act_list(self.env, a[k:], b.effects))
                for b, a, k in zip(self.bases, self.acts, self.pending)]

    def _hint(self, i: int, depth: int, op: str):
        rest = act_list(self.env, self.acts[i][depth:],
                        self.bases[i].effects)
        return (tuple(self.acts[i][:depth]), op, rest)

    def inject(self, op: str) -> dict:
        """Record an interrupt arriving at the root of the process."""
        hints = {}
        for i in range(len(self.acts)):
            hints[i] = self._hint(i, 0, op)
            self.acts[i].insert(0, op)
            self.pending[i] += 1
        return hints

    def evolve(self, p: Process, r: ProcRedex) -> dict:
        """Account for one step of p; returns type_reduces hints."""
        if r.rule == "intIntoRun":
            i = leaf_index_at(p, r.path + (FRAME_INT,))
            node = proc_subterm_at(p, r.path)
            k = self.pending[i]
            if k < 1 or self.acts[i][k - 1] != node.op:
                raise EvalError("absorbed interrupt does not match the "
                                "innermost recorded pending action")
            self.pending[i] -= 1
            return {}
        if r.rule not in ("broadcastLeft", "broadcastRight"):
            return {}
        prefix = []
        node, offset = p, 0
        for tag in r.path:
            if isinstance(node, InterruptP):
                prefix.append(node.op)
            if isinstance(node, Par) and tag == FRAME_PARR:
                offset += count_run_leaves(node.left)
            node = proc_subterm_at(node, (tag,))
        par = node
        if r.rule == "broadcastLeft":
            op = par.left.op
            first = offset + count_run_leaves(par.left)
            affected = range(first, first + count_run_leaves(par.right))
        else:
            op = par.right.op
            affected = range(offset, offset + count_run_leaves(par.left))
        k = len(prefix)
        hints = {}
        for i in affected:
            if self.acts[i][:k] != prefix:
                raise EvalError("pending interrupts above the broadcast do "
                                "not match the recorded actions")
            hints[i] = self._hint(i, k, op)
            self.acts[i].insert(k, op)
            self.pending[i] += 1
        return hints


# ---------------------------------------------------------------------------
# driving and traces

def run_proc_to_result(p: Process, scheduler, fuel: int,
                       stores: Optional[list] = None):
    """Like the computation driver, over process redexes."""
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    trace = []
    current = p
    for _ in range(fuel):
        redexes = enumerate_proc_redexes(current)
        if not redexes:
            return current, trace, False
        choice = scheduler(len(trace), current, redexes)
        if choice not in redexes:
            raise EvalError(f"scheduler chose a redex not offered: {choice}")
        current = step_proc(current, choice, stores)
        trace.append(choice)
    return current, trace, bool(enumerate_proc_redexes(current))


def render_proc_redex(r: ProcRedex) -> str:
    if r.rule == "innerComp":
        path = r.path + ("run",) + r.inner.path
        flag = " [extension]" if r.inner.rule == "delta" else ""
        return f"innerComp({r.inner.rule}) @ {render_path(path)}{flag}"
    return f"{r.rule} @ {render_path(r.path)}"


def render_proc_trace(trace) -> str:
    """One line per step, numbered from 1, same shape as computation traces."""
    return "\n".join(f"{i} {render_proc_redex(r)}"
                     for i, r in enumerate(trace, 1))
