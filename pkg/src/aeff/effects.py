"""Effect annotations: signal sets paired with interrupt-handler maps.

A computation's effect information is a pair ``(o, i)``: ``o`` is the set of
signal names the computation may emit, and ``i`` describes which interrupts it
may react to.  ``i`` is a finite map from interrupt names to further ``(o, i)``
pairs (the effects of the installed handler), and may be recursive: a named
annotation defined in an :class:`AnnotationEnv` can mention itself, or other
named annotations, inside its entries.  Annotations are therefore regular
trees, and both the order ``leq_i`` and the join ``join_i`` are computed
coinductively: ``leq_i`` by a memoized assumed-pairs walk of the product
graph, ``join_i`` by materializing fresh named definitions for joins of named
annotations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

SignalSet = frozenset

EMPTY_SIGNALS: SignalSet = frozenset()


class AnnotationError(Exception):
    """Configuration error in an annotation environment (unresolved name,
    unguarded definition, malformed entry)."""


@dataclass(frozen=True)
class AnnMap:
    """A finite interrupt-handler map. ``entries`` is sorted by op name."""

    entries: tuple = ()

    def get(self, op: str) -> Optional[tuple]:
        for name, payload in self.entries:
            if name == op:
                return payload
        return None

    def ops(self) -> tuple:
        return tuple(name for name, _ in self.entries)


@dataclass(frozen=True)
class AnnRef:
    """Reference to a named annotation in an AnnotationEnv."""

    name: str


Ann = Union[AnnMap, AnnRef]

BOTTOM: AnnMap = AnnMap()


def ann_map(entries: dict) -> AnnMap:
    """Build an AnnMap from ``{op: (signal_set, ann)}``, normalizing order."""
    items = []
    for op in sorted(entries):
        signals, ann = entries[op]
        items.append((op, (frozenset(signals), ann)))
    return AnnMap(tuple(items))


class AnnotationEnv:
    """Named annotation definitions, append-only within one checking run.

    Every definition body must be a finite map (references are guarded: a name
    may only occur inside an entry of some map), so unfolding a reference one
    level always yields an AnnMap.
    """

    def __init__(self) -> None:
        self.defs: dict = {}
        self._fresh = 0

    def define(self, name: str, body: AnnMap) -> None:
        if not isinstance(body, AnnMap):
            raise AnnotationError(
                f"annotation {name!r} must be defined by a finite map"
            )
        if name in self.defs:
            raise AnnotationError(f"annotation {name!r} is already defined")
        self.defs[name] = body

    def resolve(self, ann: Ann) -> AnnMap:
        if isinstance(ann, AnnMap):
            return ann
        body = self.defs.get(ann.name)
        if body is None:
            raise AnnotationError(f"unresolved annotation name {ann.name!r}")
        return body

    def validate(self) -> None:
        """Check that every reference reachable from a definition resolves."""
        for name, body in list(self.defs.items()):
            for ref in _refs_of(body):
                if ref not in self.defs:
                    raise AnnotationError(
                        f"annotation {name!r} mentions undefined name {ref!r}"
                    )

    def fresh_name(self, hint: str) -> str:
        while True:
            self._fresh += 1
            candidate = f"{hint}#{self._fresh}"
            if candidate not in self.defs:
                return candidate


def _refs_of(ann: Ann) -> Iterable[str]:
    if isinstance(ann, AnnRef):
        yield ann.name
        return
    for _, (_, child) in ann.entries:
        yield from _refs_of(child)


@dataclass(frozen=True)
class EffectAnnotation:
    """The ``(o, i)`` pair decorating a computation type."""

    signals: SignalSet
    handlers: Ann

    def __iter__(self):
        return iter((self.signals, self.handlers))


PURE = EffectAnnotation(EMPTY_SIGNALS, BOTTOM)


def effects(signals: Iterable = (), handlers: Optional[Ann] = None) -> EffectAnnotation:
    return EffectAnnotation(frozenset(signals), handlers if handlers is not None else BOTTOM)


def lookup_ann(env: AnnotationEnv, ann: Ann, op: str) -> Optional[tuple]:
    """The entry of ``ann`` at ``op``: ``(signal_set, ann)`` or None."""
    return env.resolve(ann).get(op)


# ---------------------------------------------------------------------------
# order and join on signal sets

def leq_o(a: SignalSet, b: SignalSet) -> bool:
    return a <= b


def join_o(a: SignalSet, b: SignalSet) -> SignalSet:
    return a | b


# ---------------------------------------------------------------------------
# coinductive order on handler annotations

def _key(ann: Ann) -> tuple:
    # Named nodes are keyed by name; anonymous maps by object identity.  The
    # anonymous nodes reachable during a comparison are exactly the stored
    # subterms of the inputs and of the environment bodies, a finite set, so
    # memoizing on these keys makes the walk terminate.
    if isinstance(ann, AnnRef):
        return ("r", ann.name)
    return ("m", id(ann))


def leq_i(env: AnnotationEnv, a: Ann, b: Ann, _assumed: Optional[set] = None) -> bool:
    """Decide ``a`` below ``b``: every op handled by ``a`` is handled by ``b``
    with pointwise-larger effects (coinductively)."""
    if _assumed is None:
        _assumed = set()
    pair = (_key(a), _key(b))
    if pair in _assumed:
        return True
    _assumed.add(pair)
    ma, mb = env.resolve(a), env.resolve(b)
    for op, (o1, i1) in ma.entries:
        hit = mb.get(op)
        if hit is None:
            return False
        o2, i2 = hit
        if not (o1 <= o2 and leq_i(env, i1, i2, _assumed)):
            return False
    return True


def eq_i(env: AnnotationEnv, a: Ann, b: Ann) -> bool:
    return leq_i(env, a, b) and leq_i(env, b, a)


# ---------------------------------------------------------------------------
# join on handler annotations

def join_i(env: AnnotationEnv, a: Ann, b: Ann) -> Ann:
    """Pointwise join over the product of the two regular trees.

    The walk memoizes on pairs of nodes; a pair revisited during its own
    computation marks a cycle, which is tied off by materializing a named
    definition in the environment.  Acyclic joins stay anonymous, except
    that a pair of named annotations is always given the canonical name
    ``a|b`` so repeated joins reuse one definition.
    """
    return _join(env, a, b, {})


def _join(env: AnnotationEnv, a: Ann, b: Ann, state: dict) -> Ann:
    if isinstance(a, AnnMap) and not a.entries:
        return b
    if isinstance(b, AnnMap) and not b.entries:
        return a
    if a == b:
        return a
    named = isinstance(a, AnnRef) and isinstance(b, AnnRef)
    if named:
        first, second = sorted((a.name, b.name))
        canonical = f"{first}|{second}"
        if canonical in env.defs:
            return AnnRef(canonical)
    key = (_key(a), _key(b))
    slot = state.get(key)
    if slot is not None:
        if slot[0] == "done":
            return slot[1]
        # revisited while in progress: a cycle passes through this pair
        if slot[1] is None:
            slot[1] = canonical if named else env.fresh_name("join")
        return AnnRef(slot[1])
    slot = state[key] = ["open", canonical if named else None]
    body = _join_maps(env, env.resolve(a), env.resolve(b), state)
    name = slot[1]
    if name is not None:
        if name not in env.defs:
            env.define(name, body)
        result: Ann = AnnRef(name)
    else:
        result = body
    state[key] = ["done", result]
    return result


def _join_maps(env: AnnotationEnv, ma: AnnMap, mb: AnnMap,
               state: dict) -> AnnMap:
    out = {}
    ops = sorted(set(ma.ops()) | set(mb.ops()))
    for op in ops:
        ea, eb = ma.get(op), mb.get(op)
        if ea is not None and eb is not None:
            out[op] = (ea[0] | eb[0], _join(env, ea[1], eb[1], state))
        else:
            out[op] = ea if ea is not None else eb
    return ann_map(out)


# ---------------------------------------------------------------------------
# order and join on full effect annotations

def leq_e(env: AnnotationEnv, a: EffectAnnotation, b: EffectAnnotation) -> bool:
    return leq_o(a.signals, b.signals) and leq_i(env, a.handlers, b.handlers)


def eq_e(env: AnnotationEnv, a: EffectAnnotation, b: EffectAnnotation) -> bool:
    return leq_e(env, a, b) and leq_e(env, b, a)


def join_e(env: AnnotationEnv, a: EffectAnnotation, b: EffectAnnotation) -> EffectAnnotation:
    return EffectAnnotation(a.signals | b.signals, join_i(env, a.handlers, b.handlers))


# ---------------------------------------------------------------------------
# interrupt action

def remove_op(env: AnnotationEnv, ann: Ann, op: str) -> AnnMap:
    """The map ``ann`` with its entry at ``op`` dropped (set to bottom)."""
    resolved = env.resolve(ann)
    return AnnMap(tuple((name, payload) for name, payload in resolved.entries if name != op))


def act(env: AnnotationEnv, op: str, eff: EffectAnnotation) -> EffectAnnotation:
    """The action of interrupt ``op`` on ``(o, i)``: if ``i`` handles ``op``
    with ``(o', i')``, the handler's effects are released into the result and
    the spent entry is dropped; otherwise the annotation is unchanged."""
    hit = lookup_ann(env, eff.handlers, op)
    if hit is None:
        return eff
    o2, i2 = hit
    return EffectAnnotation(eff.signals | o2, join_i(env, remove_op(env, eff.handlers, op), i2))


def act_list(env: AnnotationEnv, ops: Iterable, eff: EffectAnnotation) -> EffectAnnotation:
    """Fold a list of interrupt actions, rightmost applied first:
    ``act_list([a, b], e) == act(a, act(b, e))``."""
    result = eff
    for op in reversed(list(ops)):
        result = act(env, op, result)
    return result
