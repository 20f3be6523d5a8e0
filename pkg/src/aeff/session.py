"""Stepping sessions: the protocol-independent core behind the HTTP API.

A session wraps one running process with a redex menu, bounded undo
history, and interrupt injection.  Redex ids are valid exactly until the
next mutation; a stale id is rejected without touching the session.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass
from typing import Optional

from .builtins import EvalError, Store
from .check import TypeCheckError
from .effects import AnnotationError
from .parser import ParseError, parse_module, parse_value
from .pretty import layout_process, type_str, value_str
from .process import (
    count_run_leaves,
    enumerate_proc_redexes,
    inject_interrupt,
    proc_result_status,
    step_proc,
)
from .semantics import StuckIllTyped, enumerate_redexes, result_status
from .syntax import InterruptP, Par, Process, Run, SignalP

PREVIEW_LIMIT = 120


class SessionError(Exception):
    """Protocol-level failure; status hints at the HTTP code."""

    def __init__(self, kind: str, message: str, status: int = 400,
                 location: Optional[dict] = None):
        self.kind = kind
        self.message = message
        self.status = status
        self.location = location
        super().__init__(message)


def _location_of(e) -> Optional[dict]:
    if isinstance(e, ParseError):
        return {"file": e.filename, "line": e.line, "col": e.col}
    if isinstance(e, TypeCheckError) and e.loc.line:
        return {"file": e.loc.file, "line": e.loc.line, "col": e.loc.col}
    return None


def _wrap_error(e) -> SessionError:
    if isinstance(e, ParseError):
        return SessionError("parse", e.message, 400, _location_of(e))
    if isinstance(e, TypeCheckError):
        return SessionError(e.rule, str(e), 400, _location_of(e))
    if isinstance(e, (AnnotationError, EvalError)):
        return SessionError("semantics", str(e), 400)
    return SessionError("internal", str(e), 500)


@dataclass
class _Snapshot:
    process: Process
    stores: list
    step_count: int
    applied: list


class Session:
    """One stepped process.  All public methods must be called under lock."""

    def __init__(self, source: str, history_limit: int = 1000):
        self.id = secrets.token_hex(8)
        self.source = source
        self.lock = threading.Lock()
        self.history_limit = history_limit
        self.history: list = []
        self.step_count = 0
        self.revision = 0
        self.applied: list = []
        self.last_touch = time.monotonic()
        try:
            mod = parse_module(source, "<session>")
            self.checker = mod.checker()
            mod.check_defs(self.checker)
            self.current = mod.main_process()
            self.checker.infer_process({}, self.current)
        except (ParseError, TypeCheckError, AnnotationError, EvalError) as e:
            raise _wrap_error(e) from None
        self.signature = [{"op": op, "payload": type_str(ty)}
                          for op, ty in mod.signature.entries.items()]
        self.stores = [Store() for _ in range(count_run_leaves(self.current))]

    def touch(self) -> None:
        self.last_touch = time.monotonic()

    # -- views ---------------------------------------------------------------

    def _redexes(self) -> list:
        return enumerate_proc_redexes(self.current)

    def _preview(self, redex) -> str:
        # previews never mutate: step against throwaway store copies
        scratch = [s.snapshot() for s in self.stores]
        try:
            q = step_proc(self.current, redex, scratch)
        except EvalError as e:
            return f"(stuck: {e})"
        from .pretty import process_str
        text = process_str(q)
        if len(text) > PREVIEW_LIMIT:
            text = text[: PREVIEW_LIMIT - 1] + "…"
        return text

    def state_view(self) -> dict:
        lay = layout_process(self.current)
        redexes = []
        for k, r in enumerate(self._redexes()):
            path = r.path
            rule = r.rule
            if rule == "innerComp":
                path = r.path + ("run",) + r.inner.path
                rule = f"innerComp({r.inner.rule})"
            redexes.append({
                "id": f"{self.revision}:{k}",
                "rule": rule,
                "path": ".".join(path) or "root",
                "preview": self._preview(r),
            })
        return {
            "processTree": _tree(self.current, (), lay.spans),
            "text": lay.text,
            "spans": {".".join(k) or "root": list(v)
                      for k, v in lay.spans.items()},
            "redexes": redexes,
            "signature": list(self.signature),
            "stepCount": self.step_count,
            "resultStatus": self._leaf_statuses(),
            "processResult": proc_result_status(self.current).kind,
            "applied": list(self.applied),
            "canUndo": bool(self.history),
        }

    def _leaf_statuses(self) -> list:
        out = []
        for m in _leaf_comps(self.current):
            st = result_status(frozenset(), m)
            if isinstance(st, StuckIllTyped):
                out.append("unfinished" if enumerate_redexes(m) else "stuck")
            else:
                out.append(st.kind)
        return out

    # -- mutations -----------------------------------------------------------

    def _push_history(self) -> None:
        snap = _Snapshot(self.current, [s.snapshot() for s in self.stores],
                         self.step_count, list(self.applied))
        self.history.append(snap)
        if len(self.history) > self.history_limit:
            self.history.pop(0)

    def apply_step(self, redex_id: str) -> None:
        rev, sep, idx = redex_id.partition(":")
        if not sep:
            raise SessionError("badRequest", f"malformed redex id {redex_id!r}")
        if rev != str(self.revision):
            raise SessionError(
                "stale", "the redex menu changed; reload the state", 409)
        redexes = self._redexes()
        try:
            k = int(idx)
            redex = redexes[k]
        except (ValueError, IndexError):
            raise SessionError(
                "stale", f"no redex {redex_id!r} in the current menu", 409)
        self._push_history()
        try:
            self.current = step_proc(self.current, redex, self.stores)
        except EvalError as e:
            self.history.pop()
            raise _wrap_error(e) from None
        self.step_count += 1
        self.revision += 1
        self.applied.append({"type": "step", "redex": k})

    def inject(self, op: str, payload_literal: str) -> None:
        try:
            payload = parse_value(payload_literal)
            wrapped = inject_interrupt(self.checker, self.current, op, payload)
        except (ParseError, TypeCheckError) as e:
            raise _wrap_error(e) from None
        self._push_history()
        self.current = wrapped
        self.revision += 1
        self.applied.append(
            {"type": "inject", "op": op, "payload": payload_literal})

    def undo(self) -> bool:
        if not self.history:
            return False
        snap = self.history.pop()
        self.current = snap.process
        self.stores = snap.stores
        self.step_count = snap.step_count
        self.applied = snap.applied
        self.revision += 1
        return True


def _leaf_comps(p: Process) -> list:
    if isinstance(p, Run):
        return [p.comp]
    if isinstance(p, Par):
        return _leaf_comps(p.left) + _leaf_comps(p.right)
    if isinstance(p, (SignalP, InterruptP)):
        return _leaf_comps(p.cont)
    return []


def _tree(p: Process, path: tuple, spans: dict, leaf_counter=None) -> dict:
    if leaf_counter is None:
        leaf_counter = [0]
    span = list(spans.get(path, (0, 0)))
    if isinstance(p, Par):
        return {"kind": "par", "label": "||", "span": span,
                "children": [_tree(p.left, path + ("parL",), spans, leaf_counter),
                             _tree(p.right, path + ("parR",), spans, leaf_counter)]}
    if isinstance(p, SignalP):
        return {"kind": "signal", "label": f"↑{p.op} {value_str(p.payload)}",
                "op": p.op, "payload": value_str(p.payload), "span": span,
                "children": [_tree(p.cont, path + ("sig",), spans, leaf_counter)]}
    if isinstance(p, InterruptP):
        return {"kind": "interrupt", "label": f"↓{p.op} {value_str(p.payload)}",
                "op": p.op, "payload": value_str(p.payload), "span": span,
                "children": [_tree(p.cont, path + ("int",), spans, leaf_counter)]}
    if isinstance(p, Run):
        leaf = leaf_counter[0]
        leaf_counter[0] += 1
        return {"kind": "run", "label": f"run #{leaf}", "span": span,
                "leaf": leaf, "children": []}
    return {"kind": "unknown", "label": repr(p), "span": span, "children": []}


class SessionStore:
    """In-memory session registry with idle expiry."""

    def __init__(self, idle_timeout: float = 1800.0,
                 history_limit: int = 1000):
        self.idle_timeout = idle_timeout
        self.history_limit = history_limit
        self._sessions: dict = {}
        self._lock = threading.Lock()

    def create(self, source: str) -> Session:
        session = Session(source, history_limit=self.history_limit)
        with self._lock:
            self._purge()
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            self._purge()
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionError("notFound", f"no session {session_id!r}", 404)
        return session

    def drop(self, session_id: str) -> None:
        with self._lock:
            self._sessions.pop(session_id, None)

    def _purge(self) -> None:
        now = time.monotonic()
        dead = [sid for sid, s in self._sessions.items()
                if now - s.last_touch > self.idle_timeout]
        for sid in dead:
            del self._sessions[sid]
