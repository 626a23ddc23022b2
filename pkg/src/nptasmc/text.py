"""Line-oriented model format (``.nptam``), queries (``.npq``) and run traces (``.nprun``).

Model grammar, one declaration per line, ``#`` starts a comment::

    network <id>
    automaton <id>
      clock <id> ...
      int <id> [<lo>,<hi>] = <init>
      action out <id> ...
      action in <id> ...
      location <id> [inv <upper-conj>] [rate <clock>=<nat> ...] [exprate <num>[/<den>]]
      initial <id>
      edge <src> -> <dst> on <action>! [guard <conj>] [weight <n>] [reset <clock> ...]
           [set <int> = <expr>] ... [goto <dst>]
      edge <src> -> <dst> on <action>! [guard <conj>] { <branch items> } { ... } ...
      edge <src> -> <dst> on <action>? [guard <conj>] [reset ...] [set ...]
    end

Queries::

    Pr[<clock><=<bound>](<> <phi>) [<rel> <p>]
    Pr[<clock><=<bound>]([] <phi>) [<rel> <p>]
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .engine import Run, Step
from .model import (TIME, Atom, Branch, Component, Edge, IntVar, Location, ModelDocument, ModelError,
                    NetworkState, Update)


class ParseError(ModelError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        self.message = message
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


class ModelSyntaxError(ParseError):
    pass


class DuplicateIdentifier(ParseError):
    pass


class UnresolvedReference(ParseError):
    pass


class UnknownObserver(ParseError):
    pass


class ProbabilityOutOfRange(ParseError):
    pass


KEYWORDS = frozenset({
    "network", "automaton", "end", "clock", "int", "action", "location", "inv", "rate",
    "exprate", "initial", "edge", "on", "guard", "weight", "reset", "set", "goto", "true",
    "false", "Pr",
})

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\f\v]+)
  | (?P<num>[0-9]+(?:\.[0-9]+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|!=|->|&&|\|\||<>|\[\]|[<>=!?{}\[\](),.+\-/~])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str, line: int) -> list[Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ModelSyntaxError(f"unexpected character {text[pos]!r}", line, pos + 1)
        if m.lastgroup != "ws":
            toks.append(Tok(m.lastgroup, m.group(), line, pos + 1))
        pos = m.end()
    return toks


class _Cursor:
    def __init__(self, toks: list[Tok], line: int, eol_col: int):
        self.toks = toks
        self.i = 0
        self.line = line
        self.eol_col = eol_col

    def peek(self, offset: int = 0) -> Tok | None:
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else None

    def at(self, *texts: str) -> bool:
        t = self.peek()
        return t is not None and t.text in texts

    def done(self) -> bool:
        return self.i >= len(self.toks)

    def fail(self, msg: str):
        t = self.peek()
        if t is None:
            raise ModelSyntaxError(f"{msg} at end of line", self.line, self.eol_col)
        raise ModelSyntaxError(f"{msg}, found {t.text!r}", t.line, t.col)

    def next(self, what: str = "token") -> Tok:
        t = self.peek()
        if t is None:
            self.fail(f"expected {what}")
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        t = self.peek()
        if t is None or t.text != text:
            self.fail(f"expected {text!r}")
        self.i += 1
        return t

    def ident(self, what: str = "identifier") -> Tok:
        t = self.peek()
        if t is None or t.kind != "id" or t.text in KEYWORDS:
            self.fail(f"expected {what}")
        self.i += 1
        return t

    def integer(self) -> int:
        sign = 1
        if self.at("-"):
            self.i += 1
            sign = -1
        t = self.peek()
        if t is None or t.kind != "num" or "." in t.text:
            self.fail("expected integer")
        self.i += 1
        return sign * int(t.text)

    def number(self) -> Fraction:
        t = self.peek()
        if t is None or t.kind != "num":
            self.fail("expected number")
        self.i += 1
        return Fraction(t.text)

    def end(self):
        if not self.done():
            self.fail("unexpected trailing input")


def _lines(text: str) -> Iterator[tuple[int, str]]:
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    for n, raw in enumerate(text.split("\n"), start=1):
        yield n, raw.split("#", 1)[0]


def _cursor(n: int, line: str) -> _Cursor:
    return _Cursor(_tokenize(line, n), n, len(line.rstrip()) + 1)


# --------------------------------------------------------------------------
# model documents


_GUARD_OPS = ("<", "<=", ">", ">=", "==")
_EDGE_STOP = ("weight", "reset", "set", "goto", "{", "}")


def _conj(cur: _Cursor, refs: list, stop: tuple[str, ...]) -> tuple[Atom, ...]:
    atoms = []
    while True:
        name = cur.ident("clock or integer")
        op = cur.next("relation")
        if op.text not in _GUARD_OPS:
            raise ModelSyntaxError(f"bad relation {op.text!r}", op.line, op.col)
        atoms.append(Atom(name.text, op.text, cur.integer()))
        refs.append((name, "name"))
        if not cur.at("&&"):
            break
        cur.i += 1
    if not cur.done() and not cur.at(*stop):
        cur.fail("expected '&&'")
    return tuple(atoms)


def _update(cur: _Cursor, refs: list) -> Update:
    var = cur.ident("integer variable")
    refs.append((var, "int"))
    cur.expect("=")
    terms = []
    sign = 1
    if cur.at("-"):
        cur.i += 1
        sign = -1
    while True:
        t = cur.peek()
        if t is not None and t.kind == "num" and "." not in t.text:
            cur.i += 1
            terms.append((sign, int(t.text)))
        else:
            operand = cur.ident("operand")
            refs.append((operand, "int"))
            terms.append((sign, operand.text))
        if cur.at("+", "-"):
            sign = 1 if cur.next().text == "+" else -1
        else:
            break
    return Update(var.text, tuple(terms))


def _branch_items(cur: _Cursor, default_target: str, refs: list, in_block: bool):
    weight, resets, updates, target = 1, [], [], default_target
    stop = ("}",) if in_block else ("{",)
    while not cur.done() and not cur.at(*stop):
        kw = cur.next()
        if kw.text == "weight":
            weight = cur.integer()
        elif kw.text == "reset":
            first = True
            while first or (not cur.done() and cur.peek().kind == "id" and cur.peek().text not in KEYWORDS):
                x = cur.ident("clock")
                refs.append((x, "own_clock"))
                resets.append(x.text)
                first = False
        elif kw.text == "set":
            updates.append(_update(cur, refs))
        elif kw.text == "goto":
            t = cur.ident("location")
            refs.append((t, "loc"))
            target = t.text
        else:
            raise ModelSyntaxError(f"unexpected {kw.text!r} in edge", kw.line, kw.col)
    return Branch(target, weight, tuple(resets), tuple(updates))


class _CompBuilder:
    def __init__(self, name: Tok):
        self.tok = name
        self.name = name.text
        self.clocks: list[str] = []
        self.ints: list[IntVar] = []
        self.outputs: list[str] = []
        self.inputs: list[str] = []
        self.locations: list[Location] = []
        self.initial: Tok | None = None
        self.edges: list[Edge] = []
        self.refs: list = []  # (token, kind)
        self.declared: dict[str, set[str]] = {"loc": set(), "clock": set(), "int": set(), "action": set()}

    def declare(self, kind: str, tok: Tok):
        scope = self.declared[kind]
        if tok.text in scope:
            raise DuplicateIdentifier(f"{self.name}: {kind} {tok.text} declared twice", tok.line, tok.col)
        scope.add(tok.text)

    def line(self, cur: _Cursor):
        kw = cur.next()
        if kw.text == "clock":
            cur.ident("clock")
            cur.i -= 1
            while not cur.done():
                t = cur.ident("clock")
                self.declare("clock", t)
                self.clocks.append(t.text)
        elif kw.text == "int":
            t = cur.ident("integer variable")
            cur.expect("[")
            lo = cur.integer()
            cur.expect(",")
            hi = cur.integer()
            cur.expect("]")
            cur.expect("=")
            init = cur.integer()
            cur.end()
            self.declare("int", t)
            self.ints.append(IntVar(t.text, lo, hi, init))
        elif kw.text == "action":
            d = cur.next("'out' or 'in'")
            if d.text not in ("out", "in"):
                raise ModelSyntaxError("expected 'out' or 'in'", d.line, d.col)
            cur.ident("action")
            cur.i -= 1
            while not cur.done():
                t = cur.ident("action")
                self.declare("action", t)
                (self.outputs if d.text == "out" else self.inputs).append(t.text)
        elif kw.text == "location":
            self.location(cur)
        elif kw.text == "initial":
            if self.initial is not None:
                raise DuplicateIdentifier(f"{self.name}: initial declared twice", kw.line, kw.col)
            self.initial = cur.ident("location")
            cur.end()
        elif kw.text == "edge":
            self.edge(cur)
        else:
            raise ModelSyntaxError(f"unexpected {kw.text!r} inside automaton", kw.line, kw.col)

    def location(self, cur: _Cursor):
        t = cur.ident("location")
        self.declare("loc", t)
        inv, rates, exprate = (), [], None
        seen = set()
        while not cur.done():
            kw = cur.next()
            if kw.text in seen:
                raise ModelSyntaxError(f"{kw.text!r} given twice", kw.line, kw.col)
            seen.add(kw.text)
            if kw.text == "inv":
                inv = _conj(cur, self.refs, ("rate", "exprate"))
            elif kw.text == "rate":
                while True:
                    x = cur.ident("clock")
                    cur.expect("=")
                    r = cur.integer()
                    self.refs.append((x, "own_clock"))
                    rates.append((x.text, r))
                    nxt = cur.peek()
                    if nxt is None or nxt.kind != "id" or nxt.text in KEYWORDS:
                        break
            elif kw.text == "exprate":
                num = cur.number()
                if cur.at("/"):
                    cur.i += 1
                    den = cur.number()
                    if den == 0:
                        raise ModelSyntaxError("zero denominator", kw.line, kw.col)
                    num = num / den
                exprate = num
            else:
                raise ModelSyntaxError(f"unexpected {kw.text!r} in location", kw.line, kw.col)
        self.locations.append(Location(t.text, inv, tuple(rates), exprate))

    def edge(self, cur: _Cursor):
        src = cur.ident("source location")
        cur.expect("->")
        dst = cur.ident("target location")
        cur.expect("on")
        act = cur.ident("action")
        d = cur.next("'!' or '?'")
        if d.text not in ("!", "?"):
            raise ModelSyntaxError("expected '!' or '?'", d.line, d.col)
        self.refs += [(src, "loc"), (dst, "loc"), (act, "out" if d.text == "!" else "in")]
        guard = ()
        if cur.at("guard"):
            cur.i += 1
            guard = _conj(cur, self.refs, _EDGE_STOP)
        if cur.at("{"):
            branches = []
            while cur.at("{"):
                cur.i += 1
                branches.append(_branch_items(cur, dst.text, self.refs, in_block=True))
                cur.expect("}")
            cur.end()
        else:
            branches = [_branch_items(cur, dst.text, self.refs, in_block=False)]
            cur.end()
        self.edges.append(Edge(src.text, act.text, d.text, guard, tuple(branches)))

    def build(self, end_line: int) -> Component:
        if self.initial is None:
            raise ModelSyntaxError(f"automaton {self.name} has no initial location", end_line, 1)
        self.refs.append((self.initial, "loc"))
        return Component(self.name, tuple(self.locations), self.initial.text, tuple(self.clocks),
                         tuple(self.ints), tuple(self.edges), tuple(self.outputs), tuple(self.inputs))


def parse_model(text: str) -> ModelDocument:
    """Parse a model document; raises a :class:`ParseError` subclass with position."""
    name = None
    builders: list[_CompBuilder] = []
    current: _CompBuilder | None = None
    last = 0
    for n, line in _lines(text):
        last = n
        cur = _cursor(n, line)
        if cur.done():
            continue
        head = cur.peek()
        if current is None:
            kw = cur.next()
            if kw.text == "network":
                if name is not None:
                    raise ModelSyntaxError("network declared twice", kw.line, kw.col)
                name = cur.ident("network name").text
                cur.end()
            elif kw.text == "automaton":
                if name is None:
                    raise ModelSyntaxError("expected 'network' first", kw.line, kw.col)
                t = cur.ident("automaton name")
                cur.end()
                if any(b.name == t.text for b in builders):
                    raise DuplicateIdentifier(f"automaton {t.text} declared twice", t.line, t.col)
                current = _CompBuilder(t)
            else:
                raise ModelSyntaxError(f"unexpected {kw.text!r}", kw.line, kw.col)
        elif head.text == "end":
            cur.next()
            cur.end()
            builders.append(current)
            current = None
        else:
            current.line(cur)
    if name is None:
        raise ModelSyntaxError("empty document: expected 'network'", max(last, 1), 1)
    if current is not None:
        raise ModelSyntaxError(f"automaton {current.name} not closed with 'end'", max(last, 1), 1)

    components = [b.build(last) for b in builders]
    clocks = {TIME} | {x for c in components for x in c.clocks}
    ints = {v.name for c in components for v in c.ints}
    for b, c in zip(builders, components):
        for tok, kind in b.refs:
            ok = {
                "loc": lambda: tok.text in b.declared["loc"],
                "own_clock": lambda: tok.text in b.declared["clock"],
                "int": lambda: tok.text in ints,
                "name": lambda: tok.text in clocks or tok.text in ints,
                "out": lambda: tok.text in c.outputs,
                "in": lambda: tok.text in c.inputs,
            }[kind]()
            if not ok:
                raise UnresolvedReference(f"{b.name}: unresolved {kind} reference {tok.text!r}",
                                          tok.line, tok.col)
    return ModelDocument(name, tuple(components))


def _atoms(atoms) -> str:
    return " && ".join(str(a) for a in atoms)


def _branch_text(b: Branch, with_goto: bool) -> str:
    parts = []
    if b.weight != 1 or with_goto:
        parts.append(f"weight {b.weight}")
    if b.resets:
        parts.append("reset " + " ".join(b.resets))
    parts += [f"set {u}" for u in b.updates]
    if with_goto:
        parts.append(f"goto {b.target}")
    return " ".join(parts)


def serialize_model(doc) -> str:
    """Inverse of :func:`parse_model`; synthesized input loops are omitted."""
    out = [f"network {doc.name}"]
    for c in doc.components:
        out.append(f"automaton {c.name}")
        if c.clocks:
            out.append("  clock " + " ".join(c.clocks))
        for v in c.ints:
            out.append(f"  int {v.name} [{v.lo},{v.hi}] = {v.init}")
        if c.outputs:
            out.append("  action out " + " ".join(c.outputs))
        if c.inputs:
            out.append("  action in " + " ".join(c.inputs))
        for loc in c.locations:
            s = f"  location {loc.name}"
            if loc.invariant:
                s += " inv " + _atoms(loc.invariant)
            if loc.rates:
                s += " rate " + " ".join(f"{x}={r}" for x, r in loc.rates)
            if loc.exprate is not None:
                f = Fraction(loc.exprate)
                s += f" exprate {f.numerator}" + (f"/{f.denominator}" if f.denominator != 1 else "")
            out.append(s)
        out.append(f"  initial {c.initial}")
        for e in c.edges:
            if e.synthesized:
                continue
            s = f"  edge {e.source} -> {e.branches[0].target} on {e.action}{e.direction}"
            if e.guard:
                s += " guard " + _atoms(e.guard)
            if len(e.branches) == 1:
                body = _branch_text(e.branches[0], with_goto=False)
                if body:
                    s += " " + body
            else:
                s += " " + " ".join("{ " + _branch_text(b, with_goto=True) + " }" for b in e.branches)
            out.append(s)
        out.append("end")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# state properties and queries


@dataclass(frozen=True)
class LocAtom:
    component: str
    location: str

    def __str__(self):
        return f"{self.component}.{self.location}"


@dataclass(frozen=True)
class Cmp:
    name: str
    op: str
    const: int

    def __str__(self):
        if self.op == "!=" and self.const == 0:
            return self.name
        return f"{self.name}{self.op}{self.const}"


@dataclass(frozen=True)
class BoolConst:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Not:
    arg: object

    def __str__(self):
        return f"!{_paren(self.arg)}"


@dataclass(frozen=True)
class And:
    args: tuple

    def __str__(self):
        return " && ".join(_paren(a) for a in self.args)


@dataclass(frozen=True)
class Or:
    args: tuple

    def __str__(self):
        return " || ".join(_paren(a) for a in self.args)


StateProperty = LocAtom | Cmp | BoolConst | Not | And | Or


def _paren(p) -> str:
    return f"({p})" if isinstance(p, (And, Or)) else str(p)


def negate(p) -> Not:
    return Not(p)


def has_clock_atoms(p, clocks) -> bool:
    if isinstance(p, Cmp):
        return p.name in clocks
    if isinstance(p, Not):
        return has_clock_atoms(p.arg, clocks)
    if isinstance(p, (And, Or)):
        return any(has_clock_atoms(a, clocks) for a in p.args)
    return False


@dataclass(frozen=True)
class PwctlQuery:
    operator: str  # "diamond" | "box"
    observer: str
    bound: int
    phi: object
    comparison: tuple[str, float] | None = None

    def __str__(self):
        op = "<>" if self.operator == "diamond" else "[]"
        s = f"Pr[{self.observer}<={self.bound}]({op} {self.phi})"
        if self.comparison:
            s += f" {self.comparison[0]} {self.comparison[1]!r}"
        return s


_REL = {">=": ">=", "<=": "<=", ">": ">", "<": "<", "=": "=", "==": "="}


def _phi_or(cur):
    args = [_phi_and(cur)]
    while cur.at("||"):
        cur.i += 1
        args.append(_phi_and(cur))
    return args[0] if len(args) == 1 else Or(tuple(args))


def _phi_and(cur):
    args = [_phi_unary(cur)]
    while cur.at("&&"):
        cur.i += 1
        args.append(_phi_unary(cur))
    return args[0] if len(args) == 1 else And(tuple(args))


def _phi_unary(cur):
    if cur.at("!"):
        cur.i += 1
        return Not(_phi_unary(cur))
    if cur.at("("):
        cur.i += 1
        p = _phi_or(cur)
        cur.expect(")")
        return p
    t = cur.peek()
    if t is not None and t.text in ("true", "false"):
        cur.i += 1
        return BoolConst(t.text == "true")
    name = cur.ident("state property")
    if cur.at("."):
        cur.i += 1
        loc = cur.ident("location")
        return LocAtom(name.text, loc.text)
    if cur.at("<", "<=", ">", ">=", "==", "!="):
        op = cur.next().text
        return Cmp(name.text, op, cur.integer())
    return Cmp(name.text, "!=", 0)


def parse_query(text: str, doc=None) -> PwctlQuery:
    """Parse one query; when ``doc`` is given, resolve its identifiers."""
    lines = [(n, l) for n, l in _lines(text) if l.strip()]
    if len(lines) != 1:
        raise ModelSyntaxError("expected exactly one query", lines[1][0] if lines else 1, 1)
    n, line = lines[0]
    cur = _cursor(n, line)
    pr = cur.next("'Pr'")
    if pr.text != "Pr":
        raise ModelSyntaxError("expected 'Pr'", pr.line, pr.col)
    cur.expect("[")
    obs = cur.ident("observer clock")
    cur.expect("<=")
    bound = cur.integer()
    if bound <= 0:
        raise ModelSyntaxError("bound must be a positive integer", obs.line, obs.col)
    cur.expect("]")
    cur.expect("(")
    op = cur.next("'<>' or '[]'")
    if op.text not in ("<>", "[]"):
        raise ModelSyntaxError("expected '<>' or '[]'", op.line, op.col)
    phi = _phi_or(cur)
    cur.expect(")")
    comparison = None
    if not cur.done():
        rel = cur.next()
        if rel.text not in _REL:
            raise ModelSyntaxError(f"bad comparison {rel.text!r}", rel.line, rel.col)
        sign = 1
        if cur.at("-"):
            cur.i += 1
            sign = -1
        p = sign * float(cur.number())
        cur.end()
        if not 0.0 <= p <= 1.0:
            raise ProbabilityOutOfRange(f"probability {p} outside [0,1]", rel.line, rel.col)
        comparison = (_REL[rel.text], p)
    q = PwctlQuery("diamond" if op.text == "<>" else "box", obs.text, bound, phi, comparison)
    if doc is not None:
        resolve_query(q, doc, line=n)
    return q


def parse_queries(text: str, doc=None) -> list[PwctlQuery]:
    return [parse_query(line, doc) for _, line in _lines(text) if line.strip()]


def resolve_query(q: PwctlQuery, doc, line: int = 0) -> None:
    clocks = {TIME} | {x for c in doc.components for x in c.clocks}
    ints = {v.name for c in doc.components for v in c.ints}
    locs = {c.name: set(c.location_names) for c in doc.components}
    if q.observer not in clocks:
        raise UnknownObserver(f"observer {q.observer} is not a declared clock", line, 1)

    def walk(p):
        if isinstance(p, LocAtom):
            if p.component not in locs or p.location not in locs[p.component]:
                raise UnresolvedReference(f"unknown location {p}", line, 1)
        elif isinstance(p, Cmp):
            if p.name in clocks:
                if p.op in ("==", "!="):
                    raise ModelSyntaxError(f"clock (in)equality {p} not allowed in state properties", line, 1)
            elif p.name not in ints:
                raise UnresolvedReference(f"unknown identifier {p.name}", line, 1)
        elif isinstance(p, Not):
            walk(p.arg)
        elif isinstance(p, (And, Or)):
            for a in p.args:
                walk(a)

    walk(q.phi)


# --------------------------------------------------------------------------
# runs


def _state_text(model, s: NetworkState) -> str:
    locs = " ".join(f"{c}={l}" for c, l in model.location_names(s).items())
    clocks = " ".join(f"{x}={v!r}" for x, v in model.valuation(s).items())
    ints = " ".join(f"{x}={v}" for x, v in model.int_valuation(s).items())
    return f"{locs} ; {clocks} ; {ints}".rstrip()


def serialize_run(run: Run, model=None) -> str:
    model = model or run.model
    out = [f"run {model.name} observer {run.observer} bound {run.bound!r} truncation {run.truncation}",
           "init " + _state_text(model, run.initial)]
    for st in run.steps:
        out.append(f"delay {st.delay!r}")
        if st.action is not None:
            out.append(f"output {st.action} by {model.components[st.component].name}")
        out.append("state " + _state_text(model, st.state))
    return "\n".join(out) + "\n"


def _parse_state(model, body: str, n: int) -> NetworkState:
    parts = body.split(";")
    if len(parts) != 3:
        raise ModelSyntaxError("state needs three ';'-separated sections", n, 1)

    def pairs(section):
        out = {}
        for item in section.split():
            if "=" not in item:
                raise ModelSyntaxError(f"bad state item {item!r}", n, 1)
            k, v = item.split("=", 1)
            out[k] = v
        return out

    try:
        locs = pairs(parts[0])
        clocks = {k: float(v) for k, v in pairs(parts[1]).items()}
        ints = {k: int(v) for k, v in pairs(parts[2]).items()}
        return model.state_from_names(locs, clocks, ints)
    except (ValueError, KeyError, ModelError) as exc:
        raise ModelSyntaxError(f"bad state: {exc}", n, 1) from None


def parse_run(text: str, model) -> Run:
    lines = [(n, l.strip()) for n, l in _lines(text) if l.strip()]
    if len(lines) < 2 or not lines[0][1].startswith("run "):
        raise ModelSyntaxError("expected 'run' header and 'init' line", 1, 1)
    head = lines[0][1].split()
    if len(head) != 8 or head[2] != "observer" or head[4] != "bound" or head[6] != "truncation":
        raise ModelSyntaxError("malformed run header", lines[0][0], 1)
    try:
        observer, bound, truncation = head[3], float(head[5]), head[7]
    except ValueError:
        raise ModelSyntaxError("bad bound", lines[0][0], 1) from None
    n, first = lines[1]
    if not first.startswith("init "):
        raise ModelSyntaxError("expected 'init'", n, 1)
    initial = _parse_state(model, first[5:], n)
    steps = []
    i = 2
    while i < len(lines):
        n, l = lines[i]
        if not l.startswith("delay "):
            raise ModelSyntaxError("expected 'delay'", n, 1)
        try:
            delay = float(l.split()[1])
        except (ValueError, IndexError):
            raise ModelSyntaxError("bad delay", n, 1) from None
        i += 1
        action = comp = None
        if i < len(lines) and lines[i][1].startswith("output "):
            n, l = lines[i]
            words = l.split()
            if len(words) != 4 or words[2] != "by":
                raise ModelSyntaxError("malformed output line", n, 1)
            if words[3] not in model.component_index:
                raise ModelSyntaxError(f"unknown component {words[3]}", n, 1)
            action, comp = words[1], model.component_index[words[3]]
            i += 1
        if i >= len(lines) or not lines[i][1].startswith("state "):
            raise ModelSyntaxError("expected 'state'", lines[i - 1][0], 1)
        state = _parse_state(model, lines[i][1][6:], lines[i][0])
        i += 1
        steps.append(Step(delay, action, comp, state))
    return Run(initial, tuple(steps), truncation, observer, bound, model)
