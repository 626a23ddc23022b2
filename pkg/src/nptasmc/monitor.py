"""Satisfaction of cost-bounded reachability and safety on finite runs.

Within one delay every clock moves linearly, so each clock atom of a state
property flips truth value at most once.  Cutting the delay at those flip
points (and at the instant the observer reaches its bound) leaves finitely
many points and open gaps on which the property is constant.  Scanning them
in order gives the exact first instant at which the property holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import OPS, ModelError, NetworkModel
from .text import And, BoolConst, Cmp, LocAtom, Not, Or, has_clock_atoms

INF = math.inf


class ObserverMismatch(ModelError):
    pass


@dataclass(frozen=True)
class Outcome:
    satisfied: bool
    hit_cost: float | None = None
    hit_time: float | None = None

    def row(self) -> dict:
        return {"satisfied": self.satisfied, "hit_cost": self.hit_cost, "hit_time": self.hit_time}


# --------------------------------------------------------------------------
# compiled properties
#
# nodes: ("const", b) ("loc", comp, loc) ("int", var, fn, n) ("clk", clock, op, n)
#        ("not", node) ("and", nodes) ("or", nodes)


def compile_property(phi, model: NetworkModel):
    def go(p):
        if isinstance(p, BoolConst):
            return ("const", p.value)
        if isinstance(p, LocAtom):
            ci = model.component_index[p.component]
            return ("loc", ci, model.loc_index[ci][p.location])
        if isinstance(p, Cmp):
            if p.name in model.clock_index:
                if p.op not in ("<", "<=", ">", ">="):
                    raise ModelError(f"clock atom {p} must use <, <=, > or >=")
                return ("clk", model.clock_index[p.name], p.op, p.const)
            if p.name in model.int_index:
                return ("int", model.int_index[p.name], OPS[p.op], p.const)
            raise ModelError(f"unknown identifier {p.name}")
        if isinstance(p, Not):
            return ("not", go(p.arg))
        if isinstance(p, And):
            return ("and", tuple(go(a) for a in p.args))
        if isinstance(p, Or):
            return ("or", tuple(go(a) for a in p.args))
        raise TypeError(f"not a state property: {p!r}")

    return go(phi)


def _clock_atoms(node, acc):
    tag = node[0]
    if tag == "clk":
        acc.append(node)
    elif tag == "not":
        _clock_atoms(node[1], acc)
    elif tag in ("and", "or"):
        for a in node[1]:
            _clock_atoms(a, acc)
    return acc


def _eval(node, locs, ints, clk):
    tag = node[0]
    if tag == "loc":
        return locs[node[1]] == node[2]
    if tag == "int":
        return node[2](ints[node[1]], node[3])
    if tag == "clk":
        return clk(node)
    if tag == "const":
        return node[1]
    if tag == "not":
        return not _eval(node[1], locs, ints, clk)
    if tag == "and":
        return all(_eval(a, locs, ints, clk) for a in node[1])
    return any(_eval(a, locs, ints, clk) for a in node[1])


def state_predicate(phi, model: NetworkModel):
    """Fast ``state -> bool`` for properties without clock atoms."""
    node = compile_property(phi, model)
    if _clock_atoms(node, []):
        raise ValueError("property reads clocks; use the segment monitor")

    def holds(state):
        return _eval(node, state.locs, state.ints, None)

    return holds


def _crossing(v0, r, n):
    """Delay at which a clock valued ``v0`` growing at ``r`` reaches ``n``; None if never."""
    if r == 0:
        return None
    return (n - v0) / r


def _atom_at(op, v0, r, n, tau, t, at_point):
    """Truth of ``clock op n`` at delay ``t`` (a breakpoint iff ``at_point``)."""
    if tau is None:
        value = v0
        return {"<": value < n, "<=": value <= n, ">": value > n, ">=": value >= n}[op]
    if at_point and t == tau:
        return op in ("<=", ">=")
    above = t > tau  # clock has passed n
    return above if op in (">", ">=") else not above


def _segment_hit(node, atoms, locs, ints, clocks, rates, length, obs, c):
    """Earliest delay in [0, length] where ``node`` holds and observer <= c, else None."""
    cuts = {0.0}
    info = {}
    for atom in atoms:
        _, x, op, n = atom
        tau = _crossing(clocks[x], rates[x], n)
        info[atom] = (clocks[x], rates[x], tau)
        if tau is not None and 0.0 < tau < length:
            cuts.add(tau)
    tau_c = _crossing(clocks[obs], rates[obs], c)
    if tau_c is not None:
        if tau_c < 0:
            return None
        if tau_c < length:
            length = tau_c
    elif clocks[obs] > c:
        return None
    cuts = sorted(t for t in cuts if t <= length)
    if length < INF and cuts[-1] != length:
        cuts.append(length)

    def holds(t, at_point):
        def clk(atom):
            v0, r, tau = info[atom]
            return _atom_at(atom[2], v0, r, atom[3], tau, t, at_point)
        return _eval(node, locs, ints, clk)

    for i, t in enumerate(cuts):
        if holds(t, True):
            return t
        if i + 1 < len(cuts):
            if holds((t + cuts[i + 1]) / 2, False):
                return t
        elif length == INF and holds(t + 1.0, False):
            return t
    return None


class Monitor:
    """Reusable checker for one property over runs of one model."""

    def __init__(self, model: NetworkModel, phi):
        self.model = model
        self.phi = phi
        self.node = compile_property(phi, model)
        self.atoms = tuple(dict.fromkeys(_clock_atoms(self.node, [])))
        self.time = model.clock_index["time"]

    @property
    def location_only(self) -> bool:
        return not self.atoms

    def diamond(self, run, observer: str, c: float) -> Outcome:
        if observer != run.observer or c > run.bound:
            raise ObserverMismatch(
                f"run observes {run.observer}<={run.bound}, query asks {observer}<={c}")
        obs = self.model.clock_index[observer]
        node, atoms = self.node, self.atoms
        states = run.states
        if not atoms:
            for s in states:
                if s.clocks[obs] > c:
                    break
                if _eval(node, s.locs, s.ints, None):
                    return Outcome(True, s.clocks[obs], s.clocks[self.time])
            return Outcome(False)
        segments = [(states[k], step.delay) for k, step in enumerate(run.steps)]
        segments.append((states[-1], INF if run.truncation == "blocked" else 0.0))
        for s, length in segments:
            rates = self.model.rates_for(s.locs)
            t = _segment_hit(node, atoms, s.locs, s.ints, s.clocks, rates, length, obs, c)
            if t is not None:
                cost = s.clocks[obs] + rates[obs] * t
                return Outcome(True, min(cost, float(c)), s.clocks[self.time] + t)
        return Outcome(False)


def check_diamond(run, phi, observer: str, c: float, model: NetworkModel | None = None) -> Outcome:
    """First satisfaction of ``phi`` along ``run`` while ``observer <= c``."""
    return Monitor(model or run.model, phi).diamond(run, observer, c)


def check_box(run, phi, observer: str, c: float, model: NetworkModel | None = None) -> Outcome:
    """``phi`` holds everywhere along ``run`` while ``observer <= c``.

    Safety outcomes carry no hit point.
    """
    return Outcome(not check_diamond(run, Not(phi), observer, c, model).satisfied)


def uses_clocks(phi, model: NetworkModel) -> bool:
    return has_clock_atoms(phi, set(model.clock_index))
