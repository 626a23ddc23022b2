"""Networks of priced timed automata: syntax, validation and composition.

Components own disjoint clocks and a disjoint set of output actions.  Every
clock grows at an integer rate chosen by the current location of its owner
(rate 1 unless overridden).  A reserved clock ``time`` with rate 1 everywhere
is always present so that plain time bounds can be observed.

Bounded integer variables are declared inside components but live in a single
network-wide namespace: any component may read them in guards and write them
in updates.  They are constant while time elapses.
"""

from __future__ import annotations

import operator
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

TIME = "time"

LOWER_OPS = frozenset({">", ">="})
UPPER_OPS = frozenset({"<", "<="})
INT_OPS = frozenset({"<", "<=", ">", ">=", "=="})

OPS = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}


class ModelError(Exception):
    """Base class for everything that can go wrong with a model."""


class UnknownClock(ModelError):
    pass


class UnknownIdentifier(ModelError):
    pass


class NotComposable(ModelError):
    pass


class DeterminismViolation(ModelError):
    pass


class NoEnabledOutput(ModelError):
    pass


class VariableOutOfBounds(ModelError):
    pass


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class ValidationError(ModelError):
    def __init__(self, diagnostics: Sequence[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))

    @property
    def codes(self) -> set[str]:
        return {d.code for d in self.diagnostics}


# --------------------------------------------------------------------------
# syntax


@dataclass(frozen=True)
class Atom:
    """``name op const``; ``name`` is a clock or an integer variable."""

    name: str
    op: str
    const: int

    def __str__(self) -> str:
        return f"{self.name}{self.op}{self.const}"


@dataclass(frozen=True)
class Update:
    """``var = ±t1 ± t2 ...`` where each term is a variable name or an int."""

    var: str
    terms: tuple[tuple[int, str | int], ...]

    def __str__(self) -> str:
        out = []
        for i, (sign, operand) in enumerate(self.terms):
            if i == 0:
                out.append(("-" if sign < 0 else "") + str(operand))
            else:
                out.append(("- " if sign < 0 else "+ ") + str(operand))
        return f"{self.var} = {' '.join(out)}"

    def evaluate(self, lookup: Mapping[str, int]) -> int:
        return sum(sign * (operand if isinstance(operand, int) else lookup[operand])
                   for sign, operand in self.terms)


@dataclass(frozen=True)
class Branch:
    target: str
    weight: int = 1
    resets: tuple[str, ...] = ()
    updates: tuple[Update, ...] = ()


@dataclass(frozen=True)
class Edge:
    source: str
    action: str
    direction: str  # "!" output, "?" input
    guard: tuple[Atom, ...] = ()
    branches: tuple[Branch, ...] = ()
    synthesized: bool = False

    @property
    def is_output(self) -> bool:
        return self.direction == "!"


@dataclass(frozen=True)
class Location:
    name: str
    invariant: tuple[Atom, ...] = ()
    rates: tuple[tuple[str, int], ...] = ()
    exprate: Fraction | None = None

    def rate(self, clock: str) -> int:
        for name, r in self.rates:
            if name == clock:
                return r
        return 1


@dataclass(frozen=True)
class IntVar:
    name: str
    lo: int
    hi: int
    init: int


@dataclass(frozen=True)
class Component:
    name: str
    locations: tuple[Location, ...]
    initial: str
    clocks: tuple[str, ...] = ()
    ints: tuple[IntVar, ...] = ()
    edges: tuple[Edge, ...] = ()
    outputs: tuple[str, ...] = ()
    inputs: tuple[str, ...] = ()

    def location(self, name: str) -> Location:
        for loc in self.locations:
            if loc.name == name:
                return loc
        raise UnknownIdentifier(f"{self.name} has no location {name!r}")

    @property
    def location_names(self) -> tuple[str, ...]:
        return tuple(loc.name for loc in self.locations)


@dataclass(frozen=True)
class ModelDocument:
    name: str
    components: tuple[Component, ...]


# --------------------------------------------------------------------------
# valuations


def advance(nu: Mapping[str, float], rates: Mapping[str, int], d: float) -> dict[str, float]:
    """Let ``d`` time units elapse; clocks missing from ``rates`` run at rate 1."""
    if d < 0:
        raise ValueError(f"negative delay {d}")
    return {x: v + rates.get(x, 1) * d for x, v in nu.items()}


def reset(nu: Mapping[str, float], clocks: Iterable[str]) -> dict[str, float]:
    clocks = set(clocks)
    unknown = clocks - nu.keys()
    if unknown:
        raise UnknownClock(f"unknown clocks {sorted(unknown)}")
    return {x: (0.0 if x in clocks else v) for x, v in nu.items()}


def _atom_holds(value: float, op: str, const: int, eps: float = 0.0) -> bool:
    if eps:
        slack = eps * max(1.0, abs(const))
        if op in LOWER_OPS:
            value += slack
        elif op in UPPER_OPS:
            value -= slack
    return OPS[op](value, const)


# --------------------------------------------------------------------------
# compiled network


class _Out:
    __slots__ = ("edge", "action", "clock_atoms", "int_atoms", "branches", "weights", "total")

    def __init__(self, edge, action, clock_atoms, int_atoms, branches):
        self.edge = edge
        self.action = action
        self.clock_atoms = clock_atoms  # ((clock idx, strict, const), ...)
        self.int_atoms = int_atoms  # ((var idx, op fn, const), ...)
        self.branches = branches  # ((target idx, reset idxs, updates), ...)
        self.weights = tuple(b.weight for b in edge.branches)
        self.total = sum(self.weights)


class _Loc:
    __slots__ = ("name", "invariant", "outs", "inputs", "exprate", "rates")

    def __init__(self, name, invariant, outs, inputs, exprate, rates):
        self.name = name
        self.invariant = invariant  # ((clock idx, const), ...)
        self.outs = outs
        self.inputs = inputs  # action -> (_Out, ...)
        self.exprate = exprate
        self.rates = rates  # ((clock idx, rate), ...) for owned clocks


@dataclass(frozen=True)
class NetworkState:
    """Location vector, full clock valuation and integer valuation."""

    locs: tuple[int, ...]
    clocks: tuple[float, ...]
    ints: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """A validated, input-complete network; immutable and shareable."""

    name: str
    components: tuple[Component, ...]

    def __eq__(self, other):
        if not isinstance(other, NetworkModel):
            return NotImplemented
        return (self.name, self.components) == (other.name, other.components)

    def __hash__(self):
        return hash((self.name, self.components))

    def __getstate__(self):
        return {"name": self.name, "components": self.components}

    def __setstate__(self, state):
        object.__setattr__(self, "name", state["name"])
        object.__setattr__(self, "components", state["components"])

    # -- symbol tables ------------------------------------------------------

    @cached_property
    def clock_names(self) -> tuple[str, ...]:
        return (TIME,) + tuple(x for c in self.components for x in c.clocks)

    @cached_property
    def clock_index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.clock_names)}

    @cached_property
    def clock_owner(self) -> dict[str, int]:
        return {x: i for i, c in enumerate(self.components) for x in c.clocks}

    @cached_property
    def int_vars(self) -> tuple[IntVar, ...]:
        return tuple(v for c in self.components for v in c.ints)

    @cached_property
    def int_index(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.int_vars)}

    @cached_property
    def component_index(self) -> dict[str, int]:
        return {c.name: i for i, c in enumerate(self.components)}

    @cached_property
    def actions(self) -> tuple[str, ...]:
        return tuple(a for c in self.components for a in c.outputs)

    @cached_property
    def action_owner(self) -> dict[str, int]:
        return {a: i for i, c in enumerate(self.components) for a in c.outputs}

    @cached_property
    def loc_index(self) -> tuple[dict[str, int], ...]:
        return tuple({loc.name: j for j, loc in enumerate(c.locations)} for c in self.components)

    def initial_state(self) -> NetworkState:
        return NetworkState(
            tuple(self.loc_index[i][c.initial] for i, c in enumerate(self.components)),
            (0.0,) * len(self.clock_names),
            tuple(v.init for v in self.int_vars),
        )

    # -- compiled tables used by the simulator -------------------------------

    @cached_property
    def compiled(self) -> tuple[tuple[_Loc, ...], ...]:
        cidx, iidx = self.clock_index, self.int_index

        def compile_edge(comp_locs, e):
            clock_atoms, int_atoms = [], []
            for a in e.guard:
                if a.name in cidx:
                    clock_atoms.append((cidx[a.name], a.op == ">", a.const))
                else:
                    int_atoms.append((iidx[a.name], OPS[a.op], a.const))
            branches = tuple(
                (
                    comp_locs[b.target],
                    tuple(cidx[x] for x in b.resets),
                    tuple(
                        (iidx[u.var], tuple((s, iidx[o] if isinstance(o, str) else None,
                                             o if isinstance(o, int) else 0) for s, o in u.terms))
                        for u in b.updates
                    ),
                )
                for b in e.branches
            )
            return _Out(e, e.action, tuple(clock_atoms), tuple(int_atoms), branches)

        table = []
        for c in self.components:
            comp_locs = {loc.name: j for j, loc in enumerate(c.locations)}
            locs = []
            for loc in c.locations:
                outs, inputs = [], {}
                for e in c.edges:
                    if e.source != loc.name:
                        continue
                    ce = compile_edge(comp_locs, e)
                    if e.is_output:
                        outs.append(ce)
                    else:
                        inputs.setdefault(e.action, []).append(ce)
                locs.append(_Loc(
                    loc.name,
                    tuple((cidx[a.name], a.const) for a in loc.invariant),
                    tuple(outs),
                    {a: tuple(es) for a, es in inputs.items()},
                    float(loc.exprate) if loc.exprate is not None else 0.0,
                    tuple((cidx[x], loc.rate(x)) for x in c.clocks),
                ))
            table.append(tuple(locs))
        return tuple(table)

    @cached_property
    def _rate_cache(self) -> dict:
        return {}

    def rates_for(self, locs: Sequence[int]) -> tuple[int, ...]:
        """Network rate vector (indexed like ``clock_names``) in ``locs``."""
        key = tuple(locs)
        cached = self._rate_cache.get(key)
        if cached is None:
            rates = [1] * len(self.clock_names)
            compiled = self.compiled
            for i, j in enumerate(key):
                for x, r in compiled[i][j].rates:
                    rates[x] = r
            cached = self._rate_cache[key] = tuple(rates)
        return cached

    # -- named views ---------------------------------------------------------

    def valuation(self, state: NetworkState) -> dict[str, float]:
        return dict(zip(self.clock_names, state.clocks))

    def int_valuation(self, state: NetworkState) -> dict[str, int]:
        return {v.name: x for v, x in zip(self.int_vars, state.ints)}

    def location_names(self, state: NetworkState) -> dict[str, str]:
        return {c.name: c.locations[j].name for c, j in zip(self.components, state.locs)}

    def rates(self, state: NetworkState) -> dict[str, int]:
        return dict(zip(self.clock_names, self.rates_for(state.locs)))

    def state_from_names(self, locations: Mapping[str, str], clocks: Mapping[str, float] | None = None,
                         ints: Mapping[str, int] | None = None) -> NetworkState:
        clocks = clocks or {}
        ints = ints or {}
        for name in clocks:
            if name not in self.clock_index:
                raise UnknownClock(name)
        for name in ints:
            if name not in self.int_index:
                raise UnknownIdentifier(name)
        base = self.initial_state()
        return NetworkState(
            tuple(self.loc_index[i][locations.get(c.name, c.initial)] for i, c in enumerate(self.components)),
            tuple(float(clocks.get(x, 0.0)) for x in self.clock_names),
            tuple(ints.get(v.name, x) for v, x in zip(self.int_vars, base.ints)),
        )

    def invariant_holds(self, state: NetworkState, component: int, eps: float = 1e-9) -> bool:
        c = self.components[component]
        loc = c.locations[state.locs[component]]
        return eval_guard(loc.invariant, state, self, eps=eps)


def eval_guard(guard: Iterable[Atom], state: NetworkState, model: NetworkModel, eps: float = 0.0) -> bool:
    """Conjunction of ``guard`` in ``state``; the empty guard is true.

    ``eps`` widens clock bounds by a relative slack to absorb rounding.
    """
    cidx, iidx = model.clock_index, model.int_index
    for a in guard:
        if a.name in cidx:
            if not _atom_holds(state.clocks[cidx[a.name]], a.op, a.const, eps):
                return False
        elif a.name in iidx:
            if not OPS[a.op](state.ints[iidx[a.name]], a.const):
                return False
        else:
            raise UnknownIdentifier(a.name)
    return True


def enabled_outputs(model: NetworkModel, state: NetworkState, component: int,
                    eps: float = 0.0) -> dict[str, Edge]:
    """Output actions of ``component`` whose edge guard holds in ``state``."""
    loc = model.compiled[component][state.locs[component]]
    found: dict[str, Edge] = {}
    for out in _enabled(loc.outs, state.clocks, state.ints, eps):
        if out.action in found:
            raise DeterminismViolation(
                f"{model.components[component].name}: two edges on {out.action}! enabled in {loc.name}")
        found[out.action] = out.edge
    return found


def _enabled(outs, clocks, ints, eps):
    for out in outs:
        ok = True
        for v, fn, n in out.int_atoms:
            if not fn(ints[v], n):
                ok = False
                break
        if ok:
            for x, strict, n in out.clock_atoms:
                value = clocks[x] + eps * max(1.0, abs(n))
                if (value <= n) if strict else (value < n):
                    ok = False
                    break
        if ok:
            yield out


# --------------------------------------------------------------------------
# validation


def _guard_names(guard):
    return [a.name for a in guard]


def validate(doc) -> NetworkModel:
    """Check composability and well-formedness, then complete inputs.

    Accepts a :class:`ModelDocument` or an already validated
    :class:`NetworkModel`.  Raises :class:`ValidationError` carrying every
    diagnostic found.
    """
    diags: list[Diagnostic] = []

    def err(code, msg):
        diags.append(Diagnostic(code, msg))

    comps = tuple(doc.components)
    seen_names = set()
    for c in comps:
        if c.name in seen_names:
            err("DuplicateIdentifier", f"component {c.name} declared twice")
        seen_names.add(c.name)

    clock_owner: dict[str, str] = {}
    for c in comps:
        for x in c.clocks:
            if x == TIME:
                err("ClockOverlap", f"{c.name} declares reserved clock {TIME}")
            elif x in clock_owner:
                err("ClockOverlap", f"clock {x} declared by {clock_owner[x]} and {c.name}")
            else:
                clock_owner[x] = c.name
    clocks = set(clock_owner) | {TIME}

    int_owner: dict[str, str] = {}
    for c in comps:
        for v in c.ints:
            if v.name in int_owner or v.name in clocks:
                err("DuplicateIdentifier", f"integer {v.name} in {c.name} clashes with another identifier")
            int_owner[v.name] = c.name
            if not v.lo <= v.init <= v.hi:
                err("IntBounds", f"{c.name}.{v.name} initial value {v.init} outside [{v.lo},{v.hi}]")
    ints = set(int_owner)

    out_owner: dict[str, str] = {}
    for c in comps:
        for a in c.outputs:
            if a in out_owner:
                err("OutputPartitionViolation", f"output {a} emitted by both {out_owner[a]} and {c.name}")
            else:
                out_owner[a] = c.name
    sigma = tuple(dict.fromkeys(a for c in comps for a in c.outputs))

    for c in comps:
        own_clocks = set(c.clocks)
        loc_names = set(c.location_names)
        if c.initial not in loc_names:
            err("UnresolvedReference", f"{c.name}: initial location {c.initial} undeclared")
        for a in c.inputs:
            if a in c.outputs:
                err("OutputPartitionViolation", f"{c.name} declares {a} as both input and output")
            elif a not in out_owner:
                err("OutputPartitionViolation", f"{c.name}: input {a} is not an output of any component")
        for loc in c.locations:
            for a in loc.invariant:
                if a.name in ints:
                    err("GuardKindViolation", f"{c.name}.{loc.name}: integer atom {a} in invariant")
                elif a.name not in own_clocks and a.name != TIME:
                    if a.name in clocks:
                        err("GuardKindViolation", f"{c.name}.{loc.name}: invariant on foreign clock {a.name}")
                    else:
                        err("UnresolvedReference", f"{c.name}.{loc.name}: unknown clock {a.name}")
                elif a.op not in UPPER_OPS:
                    err("GuardKindViolation", f"{c.name}.{loc.name}: invariant atom {a} is not an upper bound")
            for x, r in loc.rates:
                if x not in own_clocks:
                    err("UnresolvedReference", f"{c.name}.{loc.name}: rate for foreign or unknown clock {x}")
                if r < 0:
                    err("GuardKindViolation", f"{c.name}.{loc.name}: negative rate for {x}")
            if loc.exprate is not None and loc.exprate <= 0:
                err("MissingExpRate", f"{c.name}.{loc.name}: exponential rate must be positive")
            bounded = any(a.name == TIME or (a.name in own_clocks and loc.rate(a.name) > 0)
                          for a in loc.invariant)
            has_output = any(e.source == loc.name and e.is_output for e in c.edges)
            if not bounded and has_output and loc.exprate is None:
                err("MissingExpRate", f"{c.name}.{loc.name}: unbounded invariant, output edges, no exprate")

        for e in c.edges:
            where = f"{c.name}: edge {e.source} on {e.action}{e.direction}"
            if e.source not in loc_names:
                err("UnresolvedReference", f"{where}: unknown source location")
            if e.is_output and e.action not in c.outputs:
                err("UnresolvedReference", f"{where}: action not declared as output")
            if not e.is_output and e.action not in c.inputs and e.action not in out_owner:
                err("UnresolvedReference", f"{where}: action not declared as input")
            if not e.is_output and e.action in c.outputs:
                err("OutputPartitionViolation", f"{where}: component listens to its own output")
            for a in e.guard:
                if a.name in clocks:
                    if a.op not in LOWER_OPS:
                        err("GuardKindViolation", f"{where}: clock atom {a} is not a lower bound")
                elif a.name in ints:
                    if a.op not in INT_OPS:
                        err("GuardKindViolation", f"{where}: bad integer relation in {a}")
                else:
                    err("UnresolvedReference", f"{where}: unknown identifier {a.name}")
            if not e.branches:
                err("InvalidBranch", f"{where}: no branches")
            if not e.is_output and (len(e.branches) > 1 or any(b.weight != 1 for b in e.branches)):
                err("InputBranching", f"{where}: input edges cannot branch probabilistically")
            for b in e.branches:
                if b.weight <= 0:
                    err("InvalidBranch", f"{where}: non-positive weight {b.weight}")
                if b.target not in loc_names:
                    err("UnresolvedReference", f"{where}: unknown target {b.target}")
                for x in b.resets:
                    if x not in own_clocks:
                        err("UnresolvedReference", f"{where}: reset of foreign or unknown clock {x}")
                for u in b.updates:
                    if u.var not in ints:
                        err("UnresolvedReference", f"{where}: assignment to unknown integer {u.var}")
                    for _, o in u.terms:
                        if isinstance(o, str) and o not in ints:
                            err("UnresolvedReference", f"{where}: unknown integer {o} in update")

    if diags:
        raise ValidationError(diags)

    completed = []
    for c in comps:
        inputs = tuple(a for a in sigma if a not in c.outputs)
        present = {(e.source, e.action) for e in c.edges if not e.is_output}
        loops = tuple(
            Edge(loc.name, a, "?", (), (Branch(loc.name),), synthesized=True)
            for loc in c.locations
            for a in inputs
            if (loc.name, a) not in present
        )
        completed.append(replace(c, inputs=inputs, edges=c.edges + loops))
    return NetworkModel(doc.name, tuple(completed))


# --------------------------------------------------------------------------
# composition


def _implicit_or_edges(c: Component, loc: str, action: str) -> list[Edge] | None:
    """Edges of ``c`` on ``action`` out of ``loc``; an implicit self-loop when
    ``action`` is an input with no explicit edge; None when nothing fires."""
    edges = [e for e in c.edges if e.source == loc and e.action == action]
    if edges:
        return edges
    if action in c.outputs:
        return None
    return [Edge(loc, action, "?", (), (Branch(loc),), synthesized=True)]


def syntactic_compose(c1: Component, c2: Component) -> Component:
    """Product automaton of two composable components.

    Locations are pairs named ``<l1>_<l2>``; clock rates come from the owner,
    invariants are conjoined and edges synchronise on shared actions.  The
    exponential rate of a product location is the sum of the factors' rates
    (the minimum of two independent exponentials).
    """
    problems = []
    if c1.name == c2.name:
        problems.append("same component name")
    if set(c1.clocks) & set(c2.clocks):
        problems.append(f"shared clocks {sorted(set(c1.clocks) & set(c2.clocks))}")
    if set(c1.outputs) & set(c2.outputs):
        problems.append(f"shared outputs {sorted(set(c1.outputs) & set(c2.outputs))}")
    if {v.name for v in c1.ints} & {v.name for v in c2.ints}:
        problems.append("shared integer variables")
    if problems:
        raise NotComposable(f"{c1.name} and {c2.name}: " + ", ".join(problems))

    def pname(a, b):
        return f"{a}_{b}"

    outputs = tuple(dict.fromkeys(c1.outputs + c2.outputs))
    inputs = tuple(a for a in dict.fromkeys(c1.inputs + c2.inputs) if a not in outputs)
    locations = []
    for l1 in c1.locations:
        for l2 in c2.locations:
            if l1.exprate is not None and l2.exprate is not None:
                exprate = l1.exprate + l2.exprate
            else:
                exprate = l1.exprate if l1.exprate is not None else l2.exprate
            locations.append(Location(pname(l1.name, l2.name), l1.invariant + l2.invariant,
                                      l1.rates + l2.rates, exprate))

    actions = tuple(dict.fromkeys(outputs + inputs + tuple(
        e.action for e in c1.edges + c2.edges)))
    edges = []
    for l1 in c1.locations:
        for l2 in c2.locations:
            for a in actions:
                e1s = _implicit_or_edges(c1, l1.name, a)
                e2s = _implicit_or_edges(c2, l2.name, a)
                if e1s is None or e2s is None:
                    continue
                direction = "!" if a in outputs else "?"
                for e1 in e1s:
                    for e2 in e2s:
                        if e1.synthesized and e2.synthesized:
                            continue
                        branches = tuple(
                            Branch(pname(b1.target, b2.target), b1.weight * b2.weight,
                                   b1.resets + b2.resets, b1.updates + b2.updates)
                            for b1 in e1.branches for b2 in e2.branches
                        )
                        edges.append(Edge(pname(l1.name, l2.name), a, direction,
                                          e1.guard + e2.guard, branches))
    return Component(
        name=f"{c1.name}_{c2.name}",
        locations=tuple(locations),
        initial=pname(c1.initial, c2.initial),
        clocks=c1.clocks + c2.clocks,
        ints=c1.ints + c2.ints,
        edges=tuple(edges),
        outputs=outputs,
        inputs=inputs,
    )


def reachable_locations(c: Component) -> set[str]:
    """Locations reachable from the initial one, ignoring guards."""
    seen = {c.initial}
    queue = deque([c.initial])
    while queue:
        loc = queue.popleft()
        for e in c.edges:
            if e.source == loc:
                for b in e.branches:
                    if b.target not in seen:
                        seen.add(b.target)
                        queue.append(b.target)
    return seen
