"""Surface syntax: lexer, parser, and desugaring into the core calculus.

The surface language is an ML-flavoured notation in which values and
computations mix freely.  Parsing elaborates it into fine-grain call-by-value
core terms: compound expressions are named apart with fresh ``let`` bindings,
operators become builtin applications, and the structured sugars (``send``,
``if``, sequencing, tuple patterns, guarded interrupt handlers, promise
post-processing) expand to their core encodings here, so later stages only
ever see core syntax.

A module is a sequence of signal declarations, recursive effect-annotation
definitions, and top-level bindings, optionally followed by one main process.
Top-level bindings are not global state; they are re-bound at the head of
every ``run`` leaf when the main process is assembled, so each leaf evaluates
its own copy (and its own reference cells).
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

from .builtins import is_builtin
from .check import Checker, Loc
from .effects import AnnMap, AnnRef, AnnotationEnv, AnnotationError, ann_map, effects
from .syntax import (
    Apply,
    Await,
    BoolLit,
    BuiltinVal,
    CompType,
    Computation,
    Fulfilled,
    Fun,
    FunT,
    EMPTY,
    HEAP,
    INT,
    BOOL,
    Inl,
    Inr,
    Interrupt,
    InterruptP,
    SignalP,
    IntLit,
    Let,
    LetRec,
    ListT,
    ListVal,
    LOC,
    MatchEmpty,
    MatchPair,
    MatchSum,
    Pair,
    Par,
    ProdT,
    Process,
    Promise,
    PromiseT,
    RefT,
    Return,
    Run,
    Signal,
    Signature,
    SignatureError,
    STRING,
    StrLit,
    SumT,
    UNIT,
    Unit,
    Value,
    ValueType,
    Var,
)


class ParseError(Exception):
    def __init__(self, message: str, filename: str = "<input>",
                 line: int = 0, col: int = 0):
        super().__init__(f"{filename}:{line}:{col}: {message}")
        self.message = message
        self.filename = filename
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# lexer

KEYWORDS = frozenset(
    "let rec in return match with promise as await until send run interrupt "
    "into if then else fun signal effect when process true false not ref "
    "inl inr mod".split()
)

# multi-character operators first so maximal munch wins
PUNCT = (
    "|->", "<<", ">>", "||", ":=", "->", "&&",
    "(", ")", "{", "}", "[", "]", ",", ";", ":", "=", "|", "!", "@",
    "+", "-", "*", "/", "<", ">", "↑",
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "int" | "string" | "wild" | "eof" | keyword | punct
    text: str
    line: int
    col: int


def lex(text: str, filename: str = "<input>") -> list:
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)

    def err(msg, l=None, c=None):
        raise ParseError(msg, filename, l if l is not None else line,
                         c if c is not None else col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("(*", i):
            l0, c0 = line, col
            depth, i, col = 1, i + 2, col + 2
            while i < n and depth:
                if text.startswith("(*", i):
                    depth += 1
                    i += 2
                    col += 2
                elif text.startswith("*)", i):
                    depth -= 1
                    i += 2
                    col += 2
                elif text[i] == "\n":
                    i += 1
                    line += 1
                    col = 1
                else:
                    i += 1
                    col += 1
            if depth:
                err("unterminated comment", l0, c0)
            continue
        if ch == '"':
            l0, c0 = line, col
            j, out = i + 1, []
            c2 = col + 1
            while True:
                if j >= n or text[j] == "\n":
                    err("unterminated string literal", l0, c0)
                if text[j] == '"':
                    break
                if text[j] == "\\":
                    if j + 1 >= n or text[j + 1] not in _ESCAPES:
                        err("unknown escape in string literal", line, c2)
                    out.append(_ESCAPES[text[j + 1]])
                    j += 2
                    c2 += 2
                else:
                    out.append(text[j])
                    j += 1
                    c2 += 1
            toks.append(Token("string", "".join(out), l0, c0))
            i, col = j + 1, c2 + 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            word = text[i:j]
            if word == "_":
                kind = "wild"
            elif word in KEYWORDS:
                kind = word
            else:
                kind = "ident"
            toks.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                toks.append(Token(p, p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            err(f"unexpected character {ch!r}")
    toks.append(Token("eof", "", line, col))
    return toks


def _describe(tok: Token) -> str:
    if tok.kind == "eof":
        return "end of input"
    return repr(tok.text)


# ---------------------------------------------------------------------------
# modules

@dataclass
class Module:
    """A parsed source file.

    ``defs`` holds the top-level bindings in order, as ("let", name, comp)
    or ("letrec", name, param, fun_type, fbody) entries.  ``main`` is the
    optional process at the end of the file.
    """

    signature: Signature
    env: AnnotationEnv
    defs: tuple = ()
    main: Optional[Process] = None
    locs: dict = field(default_factory=dict)
    ascriptions: dict = field(default_factory=dict)
    def_locs: dict = field(default_factory=dict)
    source: str = ""
    filename: str = "<input>"

    def wrap(self, comp: Computation) -> Computation:
        """Prefix a computation with all top-level bindings."""
        out = comp
        for d in reversed(self.defs):
            if d[0] == "let":
                out = Let(d[1], d[2], out)
            else:
                out = LetRec(d[1], d[2], d[3], d[4], out)
        return out

    def main_process(self) -> Process:
        if self.main is None:
            raise ParseError("module has no main process", self.filename)
        return self._wrap_proc(self.main)

    def _wrap_proc(self, p: Process) -> Process:
        if isinstance(p, Run):
            return Run(self.wrap(p.comp))
        if isinstance(p, Par):
            return Par(self._wrap_proc(p.left), self._wrap_proc(p.right))
        if isinstance(p, InterruptP):
            return InterruptP(p.op, p.payload, self._wrap_proc(p.cont))
        return p

    def checker(self) -> Checker:
        return Checker(self.signature, self.env, locs=self.locs,
                       ascriptions=self.ascriptions)

    def check_defs(self, ck: Optional[Checker] = None) -> list:
        """Type every top-level binding in order.

        Returns [(name, ValueType, EffectAnnotation)] where the annotation is
        the effect of evaluating the binding itself (usually empty).
        """
        ck = ck or self.checker()
        ctx: dict = {}
        out = []
        for d in self.defs:
            if d[0] == "let":
                _, name, comp = d
                ct = ck.infer_comp(ctx, comp)
                ctx[name] = ct.result
                out.append((name, ct.result, ct.effects))
            else:
                _, name, param, ft, fbody = d
                probe = LetRec(name, param, ft, fbody, Return(Var(name)))
                loc = self.def_locs.get(name)
                if loc is not None:
                    self.locs[id(probe)] = loc
                ct = ck.infer_comp(ctx, probe)
                ctx[name] = ct.result
                out.append((name, ct.result, ct.effects))
        return out


# ---------------------------------------------------------------------------
# parser

ATOM_STARTERS = frozenset(
    ("ident", "int", "string", "true", "false", "(", "[", "<<", "fun"))

_TYPE_NAMES = {
    "unit": UNIT, "int": INT, "bool": BOOL, "string": STRING,
    "loc": LOC, "empty": EMPTY, "heap": HEAP,
}

_CMP_OPS = {"=": "eq", "<": "lt", ">": "gt"}
_ADD_OPS = {"+": "add", "-": "sub", "@": "append"}
_MUL_OPS = {"*": "mul", "/": "div", "mod": "mod"}


class Parser:
    def __init__(self, text: str, filename: str = "<input>"):
        self.toks = lex(text, filename)
        self.pos = 0
        self.filename = filename
        self.locs: dict = {}
        self.ascriptions: dict = {}
        self._fresh = 0
        self._scope: list = []

    # -- token stream -------------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        j = self.pos + k
        return self.toks[j] if j < len(self.toks) else self.toks[-1]

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    def advance(self) -> Token:
        tok = self.toks[self.pos]
        if self.pos < len(self.toks) - 1:
            self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.err(f"expected {kind!r}, found {_describe(tok)}", tok)
        return self.advance()

    def err(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        raise ParseError(msg, self.filename, tok.line, tok.col)

    def fresh(self, prefix: str = "_x") -> str:
        self._fresh += 1
        return f"{prefix}{self._fresh}"

    def loc(self, node, tok: Token):
        self.locs[id(node)] = Loc(self.filename, tok.line, tok.col)
        return node

    @contextmanager
    def scoped(self, *names):
        names = [x for x in names if x]
        self._scope.extend(names)
        try:
            yield
        finally:
            if names:
                del self._scope[-len(names):]

    # -- binder patterns ----------------------------------------------------
    # patterns are tuples: ("var", x) | ("wild",) | ("unit",) | ("pair", p, q)

    def parse_pattern(self):
        pats = [self.parse_atom_pattern()]
        while self.at(","):
            self.advance()
            pats.append(self.parse_atom_pattern())
        return self._nest_pats(pats)

    def _nest_pats(self, pats):
        out = pats[-1]
        for p in reversed(pats[:-1]):
            out = ("pair", p, out)
        return out

    def parse_atom_pattern(self):
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            return ("var", tok.text)
        if tok.kind == "wild":
            self.advance()
            return ("wild",)
        if tok.kind == "(":
            self.advance()
            if self.at(")"):
                self.advance()
                return ("unit",)
            inner = self.parse_pattern()
            self.expect(")")
            return inner
        self.err("expected a binder pattern")

    def _pat_name(self, pat) -> str:
        return pat[1] if pat[0] == "var" else self.fresh("_p")

    def _pat_names(self, pat) -> tuple:
        if pat[0] == "var":
            return (pat[1],)
        if pat[0] == "pair":
            return self._pat_names(pat[1]) + self._pat_names(pat[2])
        return ()

    def bind_pattern(self, pat, subject: Value, body: Computation,
                     tok: Token) -> Computation:
        """Deconstruct ``subject`` (a value) according to ``pat`` over body."""
        if pat[0] in ("wild", "unit"):
            return body
        if pat[0] == "var":
            return self.loc(
                Let(pat[1], self.loc(Return(subject), tok), body), tok)
        _, p, q = pat
        a, b = self._pat_name(p), self._pat_name(q)
        inner = body
        if q[0] == "pair":
            inner = self.bind_pattern(q, Var(b), inner, tok)
        if p[0] == "pair":
            inner = self.bind_pattern(p, Var(a), inner, tok)
        return self.loc(MatchPair(subject, a, b, inner), tok)

    # -- types --------------------------------------------------------------

    def parse_vtype(self) -> ValueType:
        left = self.parse_type_sum()
        if self.at("->"):
            self.advance()
            return FunT(left, self.parse_ctype())
        return left

    def parse_type_sum(self) -> ValueType:
        parts = [self.parse_type_prod()]
        while self.at("+"):
            self.advance()
            parts.append(self.parse_type_prod())
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = SumT(p, out)
        return out

    def parse_type_prod(self) -> ValueType:
        parts = [self.parse_type_postfix()]
        while self.at("*"):
            self.advance()
            parts.append(self.parse_type_postfix())
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = ProdT(p, out)
        return out

    def parse_type_postfix(self) -> ValueType:
        t = self.parse_type_atom()
        while self.at("ident") and self.peek().text == "list":
            self.advance()
            t = ListT(t)
        return t

    def parse_type_atom(self) -> ValueType:
        tok = self.peek()
        if tok.kind == "<<":
            self.advance()
            t = self.parse_vtype()
            self.expect(">>")
            return PromiseT(t)
        if tok.kind == "ref":
            self.advance()
            return RefT(self.parse_type_atom())
        if tok.kind == "(":
            self.advance()
            t = self.parse_vtype()
            self.expect(")")
            return t
        if tok.kind == "ident":
            base = _TYPE_NAMES.get(tok.text)
            if base is None:
                self.err(f"unknown type {tok.text!r}", tok)
            self.advance()
            return base
        self.err(f"expected a type, found {_describe(tok)}", tok)

    def parse_ctype(self) -> CompType:
        vt = self.parse_vtype()
        if self.at("!"):
            self.advance()
            o, i = self.parse_effect_pair()
            return CompType(vt, effects(o, i))
        return CompType(vt, effects())

    def parse_effect_pair(self):
        if self.at("("):
            self.advance()
            o = self.parse_signal_set()
            self.expect(",")
            i = self.parse_imap()
            self.expect(")")
            return o, i
        if self.at("{"):
            # a bare {...} is a signal set unless it maps operations
            save = self.pos
            try:
                return self.parse_signal_set(), ann_map({})
            except ParseError:
                self.pos = save
                return frozenset(), self.parse_imap()
        if self.at("ident"):
            return frozenset(), AnnRef(self.advance().text)
        self.err("expected an effect annotation")

    def parse_signal_set(self) -> frozenset:
        self.expect("{")
        ops = []
        if not self.at("}"):
            ops.append(self.expect("ident").text)
            while self.at(","):
                self.advance()
                ops.append(self.expect("ident").text)
        self.expect("}")
        return frozenset(ops)

    def parse_imap(self):
        if self.at("ident"):
            return AnnRef(self.advance().text)
        self.expect("{")
        entries: dict = {}
        while not self.at("}"):
            tok = self.peek()
            op = self.expect("ident").text
            if op in entries:
                self.err(f"duplicate interrupt {op!r} in annotation", tok)
            self.expect("->")
            self.expect("(")
            o = self.parse_signal_set()
            self.expect(",")
            i = self.parse_imap()
            self.expect(")")
            entries[op] = (o, i)
            if self.at(","):
                self.advance()
            else:
                break
        self.expect("}")
        return ann_map(entries)

    # -- expressions --------------------------------------------------------
    # expression parsers return (binds, value): a list of pending
    # (name, computation, token) bindings and the value of the whole
    # expression under them, in order

    def _bind_app(self, binds, fn: Value, args, tok: Token):
        cur = fn
        for a in args:
            app = self.loc(Apply(cur, a), tok)
            name = self.fresh()
            binds.append((name, app, tok))
            cur = Var(name)
        return binds, cur

    def parse_expr(self):
        binds, v = self.parse_band()
        if self.at(":="):
            tok = self.advance()
            b2, w = self.parse_band()
            binds += b2
            return self._bind_app(binds, BuiltinVal("assign"), [v, w], tok)
        return binds, v

    def parse_band(self):
        binds, v = self.parse_cmp()
        while self.at("&&"):
            tok = self.advance()
            b2, w = self.parse_cmp()
            binds += b2
            binds, v = self._bind_app(binds, BuiltinVal("and"), [v, w], tok)
        return binds, v

    def parse_cmp(self):
        binds, v = self.parse_add()
        if self.peek().kind in _CMP_OPS:
            tok = self.advance()
            b2, w = self.parse_add()
            binds += b2
            return self._bind_app(
                binds, BuiltinVal(_CMP_OPS[tok.kind]), [v, w], tok)
        return binds, v

    def parse_add(self):
        binds, v = self.parse_mul()
        while self.peek().kind in _ADD_OPS:
            tok = self.advance()
            b2, w = self.parse_mul()
            binds += b2
            binds, v = self._bind_app(
                binds, BuiltinVal(_ADD_OPS[tok.kind]), [v, w], tok)
        return binds, v

    def parse_mul(self):
        binds, v = self.parse_unary()
        while self.peek().kind in _MUL_OPS:
            tok = self.advance()
            b2, w = self.parse_unary()
            binds += b2
            binds, v = self._bind_app(
                binds, BuiltinVal(_MUL_OPS[tok.kind]), [v, w], tok)
        return binds, v

    def parse_unary(self):
        tok = self.peek()
        if tok.kind == "!":
            self.advance()
            binds, v = self.parse_unary()
            return self._bind_app(binds, BuiltinVal("deref"), [v], tok)
        if tok.kind == "not":
            self.advance()
            binds, v = self.parse_unary()
            return self._bind_app(binds, BuiltinVal("not"), [v], tok)
        if tok.kind == "ref":
            self.advance()
            binds, v = self.parse_unary()
            return self._bind_app(binds, BuiltinVal("ref"), [v], tok)
        if tok.kind in ("inl", "inr"):
            self.advance()
            binds, v = self.parse_atom_expr()
            node = Inl(v) if tok.kind == "inl" else Inr(v)
            return binds, self.loc(node, tok)
        return self.parse_app()

    def parse_app(self):
        binds, v = self.parse_atom_expr()
        while self.peek().kind in ATOM_STARTERS and self.peek().kind != "fun":
            tok = self.peek()
            b2, w = self.parse_atom_expr()
            binds += b2
            binds, v = self._bind_app(binds, v, [w], tok)
        return binds, v

    def parse_atom_expr(self):
        tok = self.peek()
        k = tok.kind
        if k == "int":
            self.advance()
            return [], self.loc(IntLit(int(tok.text)), tok)
        if k == "string":
            self.advance()
            return [], self.loc(StrLit(tok.text), tok)
        if k in ("true", "false"):
            self.advance()
            return [], self.loc(BoolLit(k == "true"), tok)
        if k == "ident":
            self.advance()
            if tok.text not in self._scope and is_builtin(tok.text):
                return [], self.loc(BuiltinVal(tok.text), tok)
            return [], self.loc(Var(tok.text), tok)
        if k == "<<":
            self.advance()
            binds, v = self.parse_expr()
            self.expect(">>")
            return binds, self.loc(Fulfilled(v), tok)
        if k == "[":
            self.advance()
            binds: list = []
            items = []
            if not self.at("]"):
                b, w = self.parse_expr()
                binds += b
                items.append(w)
                while self.at(","):
                    self.advance()
                    b, w = self.parse_expr()
                    binds += b
                    items.append(w)
            self.expect("]")
            return binds, self.loc(ListVal(tuple(items)), tok)
        if k == "fun":
            return [], self.parse_fun()
        if k == "(":
            self.advance()
            if self.at(")"):
                self.advance()
                return [], self.loc(Unit(), tok)
            binds, v = self.parse_expr()
            if self.at(","):
                items = [v]
                while self.at(","):
                    self.advance()
                    b, w = self.parse_expr()
                    binds += b
                    items.append(w)
                self.expect(")")
                out = items[-1]
                for p in reversed(items[:-1]):
                    out = Pair(p, out)
                return binds, self.loc(out, tok)
            if self.at(":"):
                # ascription: pin the elaborated computation's type
                self.advance()
                ct = self.parse_ctype()
                self.expect(")")
                return self._ascribe(binds, v, ct, tok)
            self.expect(")")
            return binds, v
        self.err(f"expected an expression, found {_describe(tok)}", tok)

    def _ascribe(self, binds, v, ct: CompType, tok: Token):
        if binds and isinstance(v, Var) and v.name == binds[-1][0] \
                and v.name.startswith("_x"):
            self.ascriptions[id(binds[-1][1])] = ct
            return binds, v
        name = self.fresh()
        ret = self.loc(Return(v), tok)
        self.ascriptions[id(ret)] = ct
        binds.append((name, ret, tok))
        return binds, Var(name)

    # -- functions ----------------------------------------------------------
    # parameters are (name, type | None, pattern-to-split | None)

    def parse_param(self):
        tok = self.peek()
        if tok.kind == "ident":
            self.advance()
            return (tok.text, None, None)
        if tok.kind == "wild":
            self.advance()
            return (self.fresh("_w"), None, None)
        if tok.kind == "(":
            self.advance()
            if self.at(")"):
                self.advance()
                return (self.fresh("_u"), UNIT, None)
            if self.at("ident") and self.peek(1).kind == ":":
                name = self.advance().text
                self.advance()
                ty = self.parse_vtype()
                self.expect(")")
                return (name, ty, None)
            pat = self.parse_pattern()
            self.expect(")")
            if pat[0] == "var":
                return (pat[1], None, None)
            return (self.fresh("_p"), None, pat)
        self.err(f"expected a parameter, found {_describe(tok)}", tok)

    def _param_names(self, params) -> tuple:
        out = []
        for name, _ty, pat in params:
            out.append(name)
            if pat is not None:
                out.extend(self._pat_names(pat))
        return tuple(out)

    def _curry(self, params, body: Computation, tok: Token) -> Fun:
        for name, ty, pat in reversed(params[1:]):
            if pat is not None:
                body = self.bind_pattern(pat, Var(name), body, tok)
            body = self.loc(Return(self.loc(Fun(name, ty, body), tok)), tok)
        name, ty, pat = params[0]
        if pat is not None:
            body = self.bind_pattern(pat, Var(name), body, tok)
        return self.loc(Fun(name, ty, body), tok)

    def parse_fun(self) -> Fun:
        tok = self.expect("fun")
        params = [self.parse_param()]
        while not self.at("|->"):
            params.append(self.parse_param())
        self.expect("|->")
        with self.scoped(*self._param_names(params)):
            body = self.parse_comp()
        return self._curry(params, body, tok)

    # -- computations -------------------------------------------------------

    def parse_comp(self) -> Computation:
        m = self.parse_comp_one()
        if self.at(";"):
            tok = self.advance()
            rest = self.parse_comp()
            return self.loc(Let(self.fresh("_s"), m, rest), tok)
        return m

    def parse_comp_one(self) -> Computation:
        tok = self.peek()
        k = tok.kind
        if k == "return":
            self.advance()
            binds, v = self.parse_expr()
            return self._build(binds, self.loc(Return(v), tok))
        if k == "let":
            return self.parse_let()
        if k == "if":
            return self.parse_if()
        if k == "match":
            return self.parse_match()
        if k == "promise":
            return self.parse_promise()
        if k == "await":
            return self.parse_await()
        if k == "send":
            self.advance()
            op = self.expect("ident").text
            binds, v = self.parse_expr()
            sig = self.loc(
                Signal(op, v, self.loc(Return(Unit()), tok)), tok)
            return self._build(binds, sig)
        if k == "↑":
            self.advance()
            op = self.expect("ident").text
            self.expect("(")
            binds, v = self.parse_expr()
            self.expect(",")
            m = self.parse_comp()
            self.expect(")")
            return self._build(binds, self.loc(Signal(op, v, m), tok))
        if k == "interrupt":
            self.advance()
            op = self.expect("ident").text
            binds, v = self.parse_expr()
            self.expect("into")
            m = self.parse_comp()
            return self._build(binds, self.loc(Interrupt(op, v, m), tok))
        if k == "process":
            return self.parse_process_sugar()
        if k == "(":
            # committed last: a parenthesized group is an expression unless
            # its inside only parses as a computation
            save = self.pos
            asc_keys = set(self.ascriptions)
            try:
                binds, v = self.parse_expr()
                return self._as_tail(binds, v, tok)
            except ParseError:
                self.pos = save
                for stale in set(self.ascriptions) - asc_keys:
                    del self.ascriptions[stale]
            self.advance()
            m = self.parse_comp()
            if self.at(":"):
                self.advance()
                self.ascriptions[id(m)] = self.parse_ctype()
            self.expect(")")
            return m
        binds, v = self.parse_expr()
        return self._as_tail(binds, v, tok)

    def _build(self, binds, tail: Computation) -> Computation:
        for name, comp, tok in reversed(binds):
            tail = self.loc(Let(name, comp, tail), tok)
        return tail

    def _as_tail(self, binds, v: Value, tok: Token) -> Computation:
        if binds and isinstance(v, Var) and v.name == binds[-1][0] \
                and v.name.startswith("_x"):
            return self._build(binds[:-1], binds[-1][1])
        self.err("a value cannot stand alone as a computation; "
                 "write `return ...`", tok)

    def parse_let(self) -> Computation:
        tok = self.expect("let")
        if self.at("rec"):
            self.advance()
            name, pname, ft, fbody = self.parse_letrec_decl(tok)
            self.expect("in")
            with self.scoped(name):
                body = self.parse_comp()
            return self.loc(LetRec(name, pname, ft, fbody, body), tok)
        decl = self.parse_let_decl(tok)
        self.expect("in")
        if decl[0] == "fun":
            names: tuple = (decl[1],)
        else:
            names = self._pat_names(decl[1])
        with self.scoped(*names):
            body = self.parse_comp()
        return self._finish_let(decl, body, tok)

    def parse_let_decl(self, tok: Token):
        """After ``let``: either a function definition or a pattern binding.

        Returns ("fun", name, comp) or ("val", pattern, comp).
        """
        t0 = self.peek()
        if t0.kind == "ident" and self.peek(1).kind in ("ident", "wild", "("):
            name = self.advance().text
            params = [self.parse_param()]
            while not self.at("="):
                params.append(self.parse_param())
            self.expect("=")
            with self.scoped(*self._param_names(params)):
                body = self.parse_comp()
            fn = self._curry(params, body, tok)
            return ("fun", name, self.loc(Return(fn), tok))
        pat = self.parse_pattern()
        self.expect("=")
        return ("val", pat, self.parse_comp())

    def _finish_let(self, decl, body: Computation, tok: Token) -> Computation:
        if decl[0] == "fun":
            return self.loc(Let(decl[1], decl[2], body), tok)
        _, pat, rhs = decl
        if pat[0] == "var":
            return self.loc(Let(pat[1], rhs, body), tok)
        if pat[0] in ("wild", "unit"):
            return self.loc(Let(self.fresh("_w"), rhs, body), tok)
        t = self.fresh("_p")
        return self.loc(
            Let(t, rhs, self.bind_pattern(pat, Var(t), body, tok)), tok)

    def parse_letrec_decl(self, tok: Token):
        name = self.expect("ident").text
        pname, pty, ppat = self.parse_param()
        if not (self.at(":") or self.at("=")):
            self.err("recursive definitions take exactly one parameter")
        ft = None
        if self.at(":"):
            self.advance()
            if pty is None:
                self.err("an annotated recursive definition needs a typed "
                         "parameter, as in (x : int)", tok)
            ft = FunT(pty, self.parse_ctype())
        elif pty is not None and pty != UNIT:
            self.err("a recursive definition with a typed parameter needs "
                     "a result annotation", tok)
        self.expect("=")
        pnames = (pname,) + (self._pat_names(ppat) if ppat else ())
        with self.scoped(name, *pnames):
            fbody = self.parse_comp()
        if ppat is not None:
            fbody = self.bind_pattern(ppat, Var(pname), fbody, tok)
        return (name, pname, ft, fbody)

    def parse_if(self) -> Computation:
        tok = self.expect("if")
        binds, v = self.parse_expr()
        self.expect("then")
        then = self.parse_comp()
        self.expect("else")
        other = self.parse_comp()
        return self._build(binds, self._if_node(v, then, other, tok))

    def _if_node(self, v: Value, then: Computation, other: Computation,
                 tok: Token) -> Computation:
        s = self.fresh("_g")
        app = self.loc(Apply(BuiltinVal("bool2sum"), v), tok)
        m = self.loc(
            MatchSum(Var(s), self.fresh("_w"), then, self.fresh("_w"), other),
            tok)
        return self.loc(Let(s, app, m), tok)

    def parse_match(self) -> Computation:
        tok = self.expect("match")
        binds, v = self.parse_expr()
        self.expect("with")
        self.expect("{")
        if self.at("}"):
            self.advance()
            return self._build(binds, self.loc(MatchEmpty(v), tok))
        if self.at("|"):
            self.advance()
        if self.at("inl") or self.at("inr"):
            flipped = self.at("inr")
            self.advance()
            p1 = self.parse_atom_pattern()
            self.expect("|->")
            n1 = self._pat_name(p1)
            with self.scoped(*self._pat_names(p1)):
                b1 = self.parse_comp()
            if p1[0] == "pair":
                b1 = self.bind_pattern(p1, Var(n1), b1, tok)
            self.expect("|")
            self.expect("inl" if flipped else "inr")
            p2 = self.parse_atom_pattern()
            self.expect("|->")
            n2 = self._pat_name(p2)
            with self.scoped(*self._pat_names(p2)):
                b2 = self.parse_comp()
            if p2[0] == "pair":
                b2 = self.bind_pattern(p2, Var(n2), b2, tok)
            self.expect("}")
            if flipped:
                node = MatchSum(v, n2, b2, n1, b1)
            else:
                node = MatchSum(v, n1, b1, n2, b2)
            return self._build(binds, self.loc(node, tok))
        pat = self.parse_atom_pattern()
        if pat[0] != "pair":
            self.err("a match needs inl/inr arms, a pair pattern, or {}", tok)
        self.expect("|->")
        _, p, q = pat
        a, b = self._pat_name(p), self._pat_name(q)
        with self.scoped(*self._pat_names(pat)):
            body = self.parse_comp()
        self.expect("}")
        inner = body
        if q[0] == "pair":
            inner = self.bind_pattern(q, Var(b), inner, tok)
        if p[0] == "pair":
            inner = self.bind_pattern(p, Var(a), inner, tok)
        return self._build(binds, self.loc(MatchPair(v, a, b, inner), tok))

    def parse_promise(self) -> Computation:
        tok = self.expect("promise")
        self.expect("(")
        op = self.expect("ident").text
        pat = self.parse_atom_pattern()
        guard = None
        with self.scoped(*self._pat_names(pat)):
            if self.at("when"):
                self.advance()
                guard = self.parse_expr()
            self.expect("|->")
            handler = self.parse_comp()
        self.expect(")")
        self.expect("as")
        ptok = self.peek()
        if ptok.kind == "wild":
            self.advance()
            pvar = self.fresh("_q")
        else:
            pvar = self.expect("ident").text
        self.expect("in")
        with self.scoped(pvar):
            cont = self.parse_comp()
        if guard is None:
            hx = self._pat_name(pat)
            body = handler
            if pat[0] == "pair":
                body = self.bind_pattern(pat, Var(hx), body, tok)
            return self.loc(Promise(op, hx, body, pvar, cont), tok)
        return self._guarded(op, pat, guard, handler, pvar, cont, tok)

    def _guarded(self, op: str, pat, guard, then: Computation,
                 pvar: str, cont: Computation, tok: Token) -> Computation:
        """A guarded handler reinstalls itself until its guard holds:

            promise (op x when g |-> M) as p in N

        becomes a recursive unit-function that matches the interrupt, tests
        g, and either runs M or waits for the next ``op``.  The recursive
        call must be literally ``f ()`` so the checker can recognize the
        loop and synthesize its annotation.
        """
        wfg = self.fresh("_wait")
        hx = self._pat_name(pat)
        p2 = self.fresh("_q")
        gbinds, gv = guard
        again = self.loc(Apply(Var(wfg), Unit()), tok)
        body = self._if_node(gv, then, again, tok)
        for name, comp, btok in reversed(gbinds):
            body = self.loc(Let(name, comp, body), btok)
        if pat[0] == "pair":
            body = self.bind_pattern(pat, Var(hx), body, tok)
        inner = self.loc(
            Promise(op, hx, body, p2, self.loc(Return(Var(p2)), tok)), tok)
        call = self.loc(Apply(Var(wfg), Unit()), tok)
        outer = self.loc(Let(pvar, call, cont), tok)
        return self.loc(
            LetRec(wfg, self.fresh("_u"), None, inner, outer), tok)

    def parse_await(self) -> Computation:
        tok = self.expect("await")
        binds, v = self.parse_expr()
        self.expect("until")
        self.expect("<<")
        ntok = self.peek()
        if ntok.kind == "wild":
            self.advance()
            name = self.fresh("_w")
        else:
            name = self.expect("ident").text
        self.expect(">>")
        self.expect("in")
        with self.scoped(name):
            body = self.parse_comp()
        return self._build(binds, self.loc(Await(v, name, body), tok))

    def parse_process_sugar(self) -> Computation:
        """``process op p with (<<x>> |-> M) as q in N`` chains a handler
        for ``op`` onto an existing promise p: when the interrupt arrives it
        awaits p, post-processes the result with M, and fulfils q."""
        tok = self.expect("process")
        op = self.expect("ident").text
        binds, pv = self.parse_expr()
        self.expect("with")
        self.expect("(")
        self.expect("<<")
        x = self.expect("ident").text
        self.expect(">>")
        self.expect("|->")
        with self.scoped(x):
            comp = self.parse_comp()
        self.expect(")")
        self.expect("as")
        qtok = self.peek()
        if qtok.kind == "wild":
            self.advance()
            q = self.fresh("_q")
        else:
            q = self.expect("ident").text
        self.expect("in")
        with self.scoped(q):
            cont = self.parse_comp()
        y = self.fresh("_y")
        inner = self.loc(
            Await(pv, x,
                  self.loc(Let(y, comp,
                               self.loc(Return(Fulfilled(Var(y))), tok)),
                           tok)),
            tok)
        node = self.loc(Promise(op, self.fresh("_w"), inner, q, cont), tok)
        return self._build(binds, node)

    # -- processes ----------------------------------------------------------

    def parse_process(self) -> Process:
        left = self.parse_process_one()
        while self.at("||"):
            tok = self.advance()
            right = self.parse_process_one()
            left = self.loc(Par(left, right), tok)
        return left

    def parse_process_one(self) -> Process:
        tok = self.peek()
        if tok.kind == "run":
            self.advance()
            comp = self.parse_comp()
            return self.loc(Run(comp), tok)
        if tok.kind == "interrupt":
            self.advance()
            op = self.expect("ident").text
            binds, v = self.parse_expr()
            if binds:
                self.err("interrupt payloads must be literal values", tok)
            self.expect("into")
            cont = self.parse_process()
            return self.loc(InterruptP(op, v, cont), tok)
        if tok.kind == "↑":
            # hoisted signals show up when reprinting mid-run states
            self.advance()
            op = self.expect("ident").text
            self.expect("(")
            binds, v = self.parse_expr()
            if binds:
                self.err("signal payloads must be literal values", tok)
            self.expect(",")
            cont = self.parse_process()
            self.expect(")")
            return self.loc(SignalP(op, v, cont), tok)
        if tok.kind == "(":
            self.advance()
            p = self.parse_process()
            self.expect(")")
            return p
        self.err(f"expected a process, found {_describe(tok)}", tok)

    # -- modules ------------------------------------------------------------

    def parse_module(self, source: str = "") -> Module:
        sig = Signature()
        env = AnnotationEnv()
        defs: list = []
        def_locs: dict = {}
        main: Optional[Process] = None
        while not self.at("eof"):
            tok = self.peek()
            if tok.kind == "signal":
                self.advance()
                op = self.expect("ident").text
                self.expect(":")
                ty = self.parse_vtype()
                try:
                    sig.declare(op, ty)
                except SignatureError as e:
                    self.err(str(e), tok)
                continue
            if tok.kind == "effect":
                self.advance()
                self.expect("rec")
                name = self.expect("ident").text
                self.expect("=")
                if not self.at("{"):
                    self.err("an effect definition must be a literal "
                             "annotation map")
                body = self.parse_imap()
                try:
                    env.define(name, body)
                except AnnotationError as e:
                    self.err(str(e), tok)
                continue
            if tok.kind == "let":
                if main is not None:
                    self.err("declarations must come before the main process",
                             tok)
                self.advance()
                if self.at("rec"):
                    self.advance()
                    name, pname, ft, fbody = self.parse_letrec_decl(tok)
                    defs.append(("letrec", name, pname, ft, fbody))
                else:
                    decl = self.parse_let_decl(tok)
                    if decl[0] == "fun":
                        name = decl[1]
                        defs.append(("let", name, decl[2]))
                    else:
                        if decl[1][0] != "var":
                            self.err("top-level bindings need a simple name",
                                     tok)
                        name = decl[1][1]
                        defs.append(("let", name, decl[2]))
                def_locs[name] = Loc(self.filename, tok.line, tok.col)
                self._scope.append(name)
                continue
            if tok.kind in ("run", "interrupt", "(", "↑"):
                if main is not None:
                    self.err("a module has exactly one main process", tok)
                main = self.parse_process()
                continue
            self.err(f"unexpected {_describe(tok)} at top level", tok)
        try:
            env.validate()
        except AnnotationError as e:
            raise ParseError(str(e), self.filename) from None
        return Module(signature=sig, env=env, defs=tuple(defs), main=main,
                      locs=self.locs, ascriptions=self.ascriptions,
                      def_locs=def_locs, source=source,
                      filename=self.filename)


# ---------------------------------------------------------------------------
# entry points

def parse_module(text: str, filename: str = "<input>") -> Module:
    return Parser(text, filename).parse_module(source=text)


def parse_computation(text: str, filename: str = "<input>") -> Computation:
    p = Parser(text, filename)
    m = p.parse_comp()
    p.expect("eof")
    return m


def parse_process(text: str, filename: str = "<input>") -> Process:
    p = Parser(text, filename)
    proc = p.parse_process()
    p.expect("eof")
    return proc


def parse_value(text: str, filename: str = "<payload>") -> Value:
    """Parse a closed value literal, as used for interrupt payloads."""
    p = Parser(text, filename)
    binds, v = p.parse_expr()
    p.expect("eof")
    if binds:
        raise ParseError("expected a value literal, found a computation",
                         filename, binds[0][2].line, binds[0][2].col)
    return v
