"""Numerical reference values for small networks.

The probability of reaching ``phi`` before the observer passes its bound is
computed by recursion over discrete events.  From a state ``s`` where every
component ``j`` has delay distribution ``tau_j``::

    P(s) = sum_k  int_0^H f_k(t) prod_{j != k} S_j(t) G_k(t) dt
           + [phi reachable by delay alone at h] prod_j P(tau_j >= h)

where ``H = min(h, bound crossing)``, ``f``/``S`` are density and survival,
and ``G_k(t)`` averages ``P`` over the successors of component ``k`` firing
at ``t`` (uniform over enabled actions, weighted over branches).  Point
masses (degenerate uniform windows) contribute atoms, with ties split
evenly as the simulator does.  Each integral is evaluated by adaptive
Simpson between breakpoints; inner integrals get half the outer tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import BLOCKED, EPS, EXPONENTIAL, UNIFORM, _window, fire
from .model import DeterminismViolation, ModelError, NetworkModel, NetworkState, _enabled
from .monitor import INF, Monitor, _segment_hit
from .text import Not, PwctlQuery

DEFAULT_TOLERANCE = 1e-6
DEFAULT_DEPTH = 12
MAX_SIMPSON_LEVEL = 40


class DepthExceeded(ModelError):
    pass


class UnsupportedStructure(ModelError):
    pass


@dataclass(frozen=True)
class OracleResult:
    probability: float
    error_bound: float


def adaptive_simpson(f, a: float, b: float, tol: float, min_pieces: int = 4) -> tuple[float, float]:
    """Integral of ``f`` over [a, b] and an error estimate."""
    if b <= a:
        return 0.0, 0.0
    total = err = 0.0
    width = (b - a) / min_pieces
    for i in range(min_pieces):
        lo = a + i * width
        hi = b if i == min_pieces - 1 else lo + width
        flo, fhi, fm = f(lo), f(hi), f((lo + hi) / 2)
        whole = (hi - lo) / 6 * (flo + 4 * fm + fhi)
        v, e = _simpson(f, lo, hi, flo, fm, fhi, whole, tol / min_pieces, 0)
        total += v
        err += e
    return total, err


def _simpson(f, a, b, fa, fm, fb, whole, tol, level):
    m = (a + b) / 2
    lm, rm = (a + m) / 2, (m + b) / 2
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6 * (fa + 4 * flm + fm)
    right = (b - m) / 6 * (fm + 4 * frm + fb)
    delta = left + right - whole
    if abs(delta) <= 15 * tol or level >= MAX_SIMPSON_LEVEL or m - a <= 1e-12 * max(1.0, abs(m)):
        return left + right + delta / 15, abs(delta) / 15
    lv, le = _simpson(f, a, m, fa, flm, fm, left, tol / 2, level + 1)
    rv, re = _simpson(f, m, b, fm, frm, fb, right, tol / 2, level + 1)
    return lv + rv, le + re


# --------------------------------------------------------------------------
# per-component delay laws


def _survival(dist, t):
    kind, lo, hi = dist
    if kind == BLOCKED:
        return 1.0
    if kind == EXPONENTIAL:
        return 1.0 if t <= lo else math.exp(-hi * (t - lo))
    if lo == hi:
        return 1.0 if t < lo else 0.0
    if t <= lo:
        return 1.0
    if t >= hi:
        return 0.0
    return (hi - t) / (hi - lo)


def _density(dist, t):
    kind, lo, hi = dist
    if kind == EXPONENTIAL:
        return hi * math.exp(-hi * (t - lo)) if t >= lo else 0.0
    if kind == UNIFORM and lo < hi:
        return 1.0 / (hi - lo) if lo <= t <= hi else 0.0
    return 0.0


def _is_atom(dist):
    return dist[0] == UNIFORM and dist[1] == dist[2]


class _Oracle:
    def __init__(self, model: NetworkModel, phi, observer: str, bound: float, max_depth: int):
        self.model = model
        self.monitor = Monitor(model, phi)
        self.obs = model.clock_index[observer]
        self.bound = float(bound)
        self.max_depth = max_depth
        self.error = 0.0

    def prob(self, state: NetworkState, depth: int, tol: float, path: frozenset) -> float:
        model, obs, c = self.model, self.obs, self.bound
        key = (state.locs, state.ints)
        if key in path:
            raise UnsupportedStructure(
                f"configuration {model.location_names(state)} repeats; the event tree is not finite")
        path = path | {key}
        rates = model.rates_for(state.locs)
        mon = self.monitor
        h = _segment_hit(mon.node, mon.atoms, state.locs, state.ints, state.clocks, rates, INF, obs, c)
        if h == 0.0:
            return 1.0
        if depth >= self.max_depth:
            raise DepthExceeded(f"more than {self.max_depth} events needed")
        robs = rates[obs]
        t_c = (c - state.clocks[obs]) / robs if robs > 0 else INF
        upper = t_c if h is None else min(h, t_c)

        compiled = model.compiled
        dists = [_window(compiled[i][state.locs[i]], state.clocks, state.ints, rates)
                 for i in range(len(state.locs))]
        atoms = sorted({d[1] for d in dists if _is_atom(d)})
        first_atom = atoms[0] if atoms else INF

        inner_tol = tol / 2
        total = 0.0

        def successor_value(k, t):
            return self._fire(state, rates, k, t, depth, inner_tol, path)

        for k, dk in enumerate(dists):
            if dk[0] == BLOCKED or _is_atom(dk):
                continue
            lo = dk[1]
            hi = dk[2] if dk[0] == UNIFORM else INF
            top = min(upper, hi, first_atom)
            if dk[0] == EXPONENTIAL and top == INF:
                top = lo + math.log(10.0 / tol) / dk[2]
                self.error += math.exp(-dk[2] * (top - lo))
            if top <= lo:
                continue
            others = [d for j, d in enumerate(dists) if j != k]
            cuts = {lo, top}
            for d in others:
                if d[0] != BLOCKED:
                    for p in (d[1], d[2] if d[0] == UNIFORM else d[1]):
                        if lo < p < top:
                            cuts.add(p)
            cuts = sorted(cuts)

            def integrand(t, k=k, dk=dk, others=others):
                w = _density(dk, t)
                for d in others:
                    w *= _survival(d, t)
                    if w == 0.0:
                        return 0.0
                return w * successor_value(k, t)

            piece_tol = tol / (2 * len(dists) * (len(cuts) - 1))
            for a, b in zip(cuts, cuts[1:]):
                v, e = adaptive_simpson(integrand, a, b, piece_tol)
                total += v
                self.error += e

        if first_atom < upper:
            a = first_atom
            tied = [k for k, d in enumerate(dists) if _is_atom(d) and d[1] == a]
            w = 1.0 / len(tied)
            for d in dists:
                if not _is_atom(d):
                    w *= _survival(d, a)
            if w > 0.0:
                total += w * sum(successor_value(k, a) for k in tied)

        if h is not None and h <= t_c:
            stay = 1.0
            for d in dists:
                stay *= (1.0 if d[1] >= h else 0.0) if _is_atom(d) else _survival(d, h)
            total += stay
        return total

    def _fire(self, state, rates, k, t, depth, tol, path):
        model = self.model
        clocks = [v + r * t for v, r in zip(state.clocks, rates)]
        loc = model.compiled[k][state.locs[k]]
        by_action = {}
        for out in _enabled(loc.outs, clocks, state.ints, EPS):
            if out.action in by_action:
                raise DeterminismViolation(f"two edges on {out.action}! enabled in {loc.name}")
            by_action[out.action] = out
        if not by_action:
            return 0.0
        value = 0.0
        for out in by_action.values():
            for b, w in enumerate(out.weights):
                locs, cl, ints = list(state.locs), list(clocks), list(state.ints)
                fire(model, k, out, b, locs, cl, ints)
                nxt = NetworkState(tuple(locs), tuple(cl), tuple(ints))
                value += w / out.total * self.prob(nxt, depth + 1, tol, path)
        return value / len(by_action)


def exact_probability(model: NetworkModel, query: PwctlQuery, tolerance: float = DEFAULT_TOLERANCE,
                      depth: int = DEFAULT_DEPTH) -> OracleResult:
    """Probability of ``query`` (its comparison, if any, is ignored)."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    box = query.operator == "box"
    oracle = _Oracle(model, Not(query.phi) if box else query.phi, query.observer, query.bound, depth)
    p = oracle.prob(model.initial_state(), 0, tolerance, frozenset())
    p = min(1.0, max(0.0, p))
    return OracleResult(1.0 - p if box else p, oracle.error)
