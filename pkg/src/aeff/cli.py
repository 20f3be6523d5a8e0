"""Command line driver: ``aeff check | run | serve``.

Exit codes: 0 success, 1 type or runtime error, 2 usage or IO error,
3 serve failure.
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .builtins import EvalError, Store
from .check import TypeCheckError
from .effects import AnnMap, AnnotationError
from .parser import Module, ParseError, parse_module, parse_value
from .pretty import effect_str, process_type_str, type_str, value_str
from .process import (
    count_run_leaves,
    enumerate_proc_redexes,
    inject_interrupt,
    proc_result_status,
    render_proc_redex,
    step_proc,
)
from .semantics import StuckIllTyped, awaiting_on, enumerate_redexes, result_status
from .syntax import (
    Interrupt,
    InterruptP,
    Par,
    Promise,
    Return,
    Run,
    SignalP,
)


@dataclass
class RunConfig:
    scheduler: str = "fifo"
    seed: int = 0
    fuel: int = 1000
    trace: bool = False
    # (after N steps, op, payload value)
    injections: list = field(default_factory=list)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    if args.command == "check":
        return cmd_check(args.file)
    if args.command == "run":
        try:
            injections = [_parse_injection(s) for s in args.inject]
        except ValueError as e:
            print(f"aeff: {e}", file=sys.stderr)
            return 2
        cfg = RunConfig(scheduler=args.scheduler, seed=args.seed,
                        fuel=args.fuel, trace=args.trace,
                        injections=injections)
        return cmd_run(args.file, cfg)
    return cmd_serve(args.port, args.static)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="aeff",
        description="typecheck, run, or interactively serve programs of "
                    "asynchronous signals and interrupts")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="typecheck a module and print its types")
    c.add_argument("file")

    r = sub.add_parser("run", help="reduce the main process of a module")
    r.add_argument("file")
    r.add_argument("--scheduler", choices=("fifo", "random", "interactive"),
                   default="fifo",
                   help="redex choice strategy (default: fifo)")
    r.add_argument("--seed", type=int, default=0,
                   help="seed for the random scheduler")
    r.add_argument("--fuel", type=int, default=1000,
                   help="maximum number of steps (default: 1000)")
    r.add_argument("--trace", action="store_true",
                   help="print one line per reduction step")
    r.add_argument("--inject", action="append", default=[],
                   metavar="OP:LIT@N",
                   help="inject interrupt OP with literal payload LIT after "
                        "N steps; repeatable")

    s = sub.add_parser("serve", help="serve the interactive stepper")
    s.add_argument("--port", type=int, default=8765)
    s.add_argument("--static", default=None,
                   help="directory with the browser UI bundle")
    return p


def _parse_injection(spec: str):
    body, sep, at = spec.rpartition("@")
    if not sep:
        raise ValueError(f"bad --inject {spec!r}: expected OP:LIT@N")
    try:
        step_no = int(at)
    except ValueError:
        raise ValueError(f"bad --inject {spec!r}: step must be an integer")
    if step_no < 0:
        raise ValueError(f"bad --inject {spec!r}: step must be nonnegative")
    op, sep, lit = body.partition(":")
    if not sep or not op:
        raise ValueError(f"bad --inject {spec!r}: expected OP:LIT@N")
    try:
        payload = parse_value(lit)
    except ParseError as e:
        raise ValueError(f"bad --inject payload {lit!r}: {e.message}")
    return (step_no, op, payload)


# ---------------------------------------------------------------------------
# check

def _load(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        print(f"aeff: {e}", file=sys.stderr)
        return None
    return parse_module(text, path)


def _pure(eff) -> bool:
    return (not eff.signals and isinstance(eff.handlers, AnnMap)
            and not eff.handlers.entries)


def cmd_check(path: str) -> int:
    try:
        mod = _load(path)
        if mod is None:
            return 2
        ck = mod.checker()
        rows = mod.check_defs(ck)
        main_ty = None
        if mod.main is not None:
            main_ty = ck.infer_process({}, mod.main_process())
    except (ParseError, TypeCheckError, AnnotationError, EvalError) as e:
        print(str(e), file=sys.stderr)
        return 1
    for name, ty, eff in rows:
        if _pure(eff):
            print(f"{name} : {type_str(ty)}")
        else:
            print(f"{name} : {type_str(ty)} ! {effect_str(eff)}")
    if main_ty is not None:
        print(f"main : {process_type_str(main_ty)}")
    return 0


# ---------------------------------------------------------------------------
# run

def _root_signals(p) -> list:
    """Signals that have hoisted to the top of the process, outermost
    first.  Interrupt wrappers still sinking inward are skipped."""
    out = []
    while True:
        if isinstance(p, SignalP):
            out.append((p.op, p.payload))
            p = p.cont
        elif isinstance(p, InterruptP):
            p = p.cont
        else:
            return out


def _leaves(p) -> list:
    if isinstance(p, Run):
        return [p.comp]
    if isinstance(p, Par):
        return _leaves(p.left) + _leaves(p.right)
    if isinstance(p, (SignalP, InterruptP)):
        return _leaves(p.cont)
    return []


def _leaf_line(m) -> str:
    st = result_status(frozenset(), m)
    if isinstance(st, StuckIllTyped):
        return "unfinished" if enumerate_redexes(m) else "stuck"
    core = m
    while isinstance(core, (Promise, Interrupt)):
        core = core.cont
    if isinstance(core, Return):
        return f"{st.kind} {value_str(core.value)}"
    pv = awaiting_on(core)
    if pv is not None:
        return f"{st.kind} awaiting {pv}"
    return st.kind


def _make_scheduler(cfg: RunConfig, err):
    if cfg.scheduler == "fifo":
        return lambda i, p, rs: rs[0]
    if cfg.scheduler == "random":
        rng = random.Random(cfg.seed)
        return lambda i, p, rs: rng.choice(rs)

    def interactive(i, p, rs):
        print(f"step {i}: choose a redex", file=err)
        for k, r in enumerate(rs):
            print(f"  [{k}] {render_proc_redex(r)}", file=err)
        while True:
            line = sys.stdin.readline()
            if not line:
                return None
            line = line.strip()
            if line in ("q", "quit"):
                return None
            if not line:
                continue
            try:
                k = int(line)
            except ValueError:
                print("enter a redex number, or q to stop", file=err)
                continue
            if 0 <= k < len(rs):
                return rs[k]
            print(f"out of range (0..{len(rs) - 1})", file=err)

    return interactive


def cmd_run(path: str, cfg: RunConfig) -> int:
    try:
        mod = _load(path)
        if mod is None:
            return 2
        ck = mod.checker()
        mod.check_defs(ck)
        p = mod.main_process()
        ck.infer_process({}, p)
    except (ParseError, TypeCheckError, AnnotationError, EvalError) as e:
        print(str(e), file=sys.stderr)
        return 1
    if cfg.fuel < 0:
        print("aeff: fuel must be nonnegative", file=sys.stderr)
        return 2

    out, err = sys.stdout, sys.stderr
    scheduler = _make_scheduler(cfg, err)
    pending = sorted(cfg.injections, key=lambda inj: inj[0])
    stores = [Store() for _ in range(count_run_leaves(p))]
    seen = 0
    steps = 0
    stopped = False

    def flush_signals(p):
        nonlocal seen
        spine = _root_signals(p)
        for op, v in spine[seen:]:
            print(f"signal {op} {value_str(v)}", file=out)
        seen = max(seen, len(spine))

    try:
        flush_signals(p)
        while steps < cfg.fuel:
            while pending and pending[0][0] <= steps:
                _, op, payload = pending.pop(0)
                p = inject_interrupt(ck, p, op, payload)
                if cfg.trace:
                    print(f"- inject {op} {value_str(payload)}", file=out)
            redexes = enumerate_proc_redexes(p)
            if not redexes:
                if pending:
                    # blocked until the outside world acts; deliver the
                    # next injection ahead of its schedule
                    _, op, payload = pending.pop(0)
                    p = inject_interrupt(ck, p, op, payload)
                    if cfg.trace:
                        print(f"- inject {op} {value_str(payload)}", file=out)
                    continue
                break
            choice = scheduler(steps, p, redexes)
            if choice is None:
                stopped = True
                break
            p = step_proc(p, choice, stores)
            steps += 1
            if cfg.trace:
                print(f"{steps} {render_proc_redex(choice)}", file=out)
            flush_signals(p)
    except (EvalError, TypeCheckError) as e:
        print(str(e), file=err)
        return 1

    if stopped:
        print(f"stopped after {steps} steps", file=out)
    elif steps >= cfg.fuel and enumerate_proc_redexes(p):
        print(f"fuel exhausted after {steps} steps", file=out)
    else:
        print(f"result: {proc_result_status(p).kind}", file=out)
    for i, m in enumerate(_leaves(p), 1):
        print(f"process {i}: {_leaf_line(m)}", file=out)
    return 0


# ---------------------------------------------------------------------------
# serve

def cmd_serve(port: int, static_dir) -> int:
    from .server import serve
    try:
        serve(port=port, static_dir=static_dir)
    except OSError as e:
        print(f"aeff: cannot serve on port {port}: {e}", file=sys.stderr)
        return 3
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
