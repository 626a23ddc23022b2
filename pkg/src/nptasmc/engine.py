"""Race semantics and random run generation.

In every round each component samples a delay from its current state:
uniform on ``[d, D]`` when its invariant bounds the delay, ``d`` plus an
exponential draw when it does not, and never (blocked) when no output can
become enabled in time.  The smallest delay wins; the winner picks an
enabled output uniformly, a branch by weight, and broadcasts the action.
All delays are re-sampled from the resulting state.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import (DeterminismViolation, ModelError, NetworkModel, NetworkState, NoEnabledOutput,
                    UnknownClock, VariableOutOfBounds, _enabled)

INF = math.inf
EPS = 1e-9  # relative slack when checking guards at the sampled instant

UNIFORM, EXPONENTIAL, BLOCKED = 0, 1, 2


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float


@dataclass(frozen=True)
class Exponential:
    shift: float
    rate: float


@dataclass(frozen=True)
class Blocked:
    pass


DelayDistribution = Uniform | Exponential | Blocked


class RngStream:
    """Reproducible uniform stream for run ``index`` under ``seed``.

    Streams are spawned from :class:`numpy.random.SeedSequence`, so distinct
    keys give independent PCG64 generators.  Draws are buffered.
    """

    __slots__ = ("seed", "key", "gen", "_buf", "_pos", "draws")
    BUFFER = 32

    def __init__(self, seed: int, *key: int):
        self.seed = seed
        self.key = key
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
        self._buf = ()
        self._pos = 0
        self.draws = 0

    def random(self) -> float:
        """Uniform on [0, 1)."""
        if self._pos >= len(self._buf):
            self._buf = self.gen.random(self.BUFFER).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        self.draws += 1
        return u

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def exponential(self, rate: float) -> float:
        return -math.log1p(-self.random()) / rate

    def choice(self, n: int) -> int:
        return min(int(self.random() * n), n - 1)

    def weighted(self, weights, total) -> int:
        target = self.random() * total
        acc = 0
        for i, w in enumerate(weights):
            acc += w
            if target < acc:
                return i
        return len(weights) - 1


def substream(seed: int, index: int, *sub: int) -> RngStream:
    return RngStream(seed, index, *sub)


# --------------------------------------------------------------------------
# delay windows


def _window(loc, clocks, ints, rates):
    """(kind, lo, hi) for one component; hi is the exponential rate for EXPONENTIAL."""
    d = INF
    for out in loc.outs:
        ok = True
        for v, fn, n in out.int_atoms:
            if not fn(ints[v], n):
                ok = False
                break
        if not ok:
            continue
        de = 0.0
        for x, strict, n in out.clock_atoms:
            value = clocks[x]
            if value > n or (value == n and not strict):
                continue
            r = rates[x]
            if r == 0:
                de = INF
                break
            t = (n - value) / r
            if t > de:
                de = t
        if de < d:
            d = de
            if d == 0.0:
                break
    if d == INF:
        return BLOCKED, INF, INF
    big_d = INF
    for x, n in loc.invariant:
        r = rates[x]
        if r == 0:
            if clocks[x] > n:
                big_d = -INF
            continue
        t = (n - clocks[x]) / r
        if t < big_d:
            big_d = t
    if big_d == INF:
        if loc.exprate <= 0:
            raise ModelError(f"location {loc.name} needs an exponential rate")
        return EXPONENTIAL, d, loc.exprate
    if d > big_d:
        return BLOCKED, INF, big_d
    return UNIFORM, d, big_d


def delay_distribution(model: NetworkModel, state: NetworkState, component: int) -> DelayDistribution:
    loc = model.compiled[component][state.locs[component]]
    kind, lo, hi = _window(loc, state.clocks, state.ints, model.rates_for(state.locs))
    if kind == UNIFORM:
        return Uniform(lo, hi)
    if kind == EXPONENTIAL:
        return Exponential(lo, hi)
    return Blocked()


def sample_delay(dist: DelayDistribution, rng: RngStream) -> float:
    if isinstance(dist, Uniform):
        return dist.lo if dist.lo == dist.hi else rng.uniform(dist.lo, dist.hi)
    if isinstance(dist, Exponential):
        return dist.shift + rng.exponential(dist.rate)
    return INF


# --------------------------------------------------------------------------
# discrete steps


def _pick_output(model, k, locs, clocks, ints, rng):
    """Choose (edge, branch index) for the race winner ``k``."""
    loc = model.compiled[k][locs[k]]
    by_action: dict[str, object] = {}
    for out in _enabled(loc.outs, clocks, ints, EPS):
        if out.action in by_action:
            raise DeterminismViolation(
                f"{model.components[k].name}: two edges on {out.action}! enabled in {loc.name}")
        by_action[out.action] = out
    if not by_action:
        raise NoEnabledOutput(f"{model.components[k].name} has no enabled output in {loc.name}")
    outs = list(by_action.values())
    out = outs[0] if len(outs) == 1 else outs[rng.choice(len(outs))]
    b = 0 if len(out.weights) == 1 else rng.weighted(out.weights, out.total)
    return out, b


def _apply_updates(model, updates, ints):
    for v, terms in updates:
        value = 0
        for sign, var, const in terms:
            value += sign * (ints[var] if var is not None else const)
        iv = model.int_vars[v]
        if not iv.lo <= value <= iv.hi:
            raise VariableOutOfBounds(f"{iv.name} := {value} outside [{iv.lo},{iv.hi}]")
        ints[v] = value


def fire(model: NetworkModel, k: int, out, branch: int, locs: list, clocks: list, ints: list) -> None:
    """Broadcast ``out`` emitted by component ``k`` in place.

    Guards are read at the current clocks.  The sender's updates run first,
    receivers follow in component order, each seeing the integer values left
    by the previous ones.  Resets are applied last.
    """
    target, resets, updates = out.branches[branch]
    all_resets = list(resets)
    locs[k] = target
    _apply_updates(model, updates, ints)
    compiled = model.compiled
    for j in range(len(locs)):
        if j == k:
            continue
        edges = compiled[j][locs[j]].inputs.get(out.action)
        if not edges:
            continue
        chosen = None
        for e in _enabled(edges, clocks, ints, EPS):
            if chosen is not None:
                raise DeterminismViolation(
                    f"{model.components[j].name}: two edges on {out.action}? enabled")
            chosen = e
        if chosen is None:
            continue
        t, rs, us = chosen.branches[0]
        locs[j] = t
        all_resets.extend(rs)
        _apply_updates(model, us, ints)
    for x in all_resets:
        clocks[x] = 0.0


def sample_output(model: NetworkModel, state: NetworkState, component: int, rng: RngStream):
    """(action, branch) chosen by ``component`` at ``state``."""
    out, b = _pick_output(model, component, state.locs, state.clocks, state.ints, rng)
    return out.action, out.edge.branches[b]


# --------------------------------------------------------------------------
# runs


@dataclass(frozen=True)
class Step:
    delay: float
    action: str | None
    component: int | None
    state: NetworkState
    samples: tuple[float, ...] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Run:
    initial: NetworkState
    steps: tuple[Step, ...]
    truncation: str  # "bound" | "blocked" | "stopped"
    observer: str
    bound: float
    model: object = field(default=None, compare=False, repr=False)

    @property
    def states(self) -> list[NetworkState]:
        return [self.initial] + [s.state for s in self.steps]


class RunLengthExceeded(ModelError):
    pass


def random_run(model: NetworkModel, observer: str, bound: float, rng: RngStream, *,
               stop: Callable[[NetworkState], bool] | None = None,
               record_samples: bool = False,
               diagnostics: Counter | None = None,
               max_steps: int = 1_000_000) -> Run:
    """Generate one run until ``observer`` reaches ``bound``.

    ``stop`` may end the run early after any discrete step (truncation
    ``"stopped"``).  When every component is blocked and the observer does
    not progress the run ends with truncation ``"blocked"``.
    """
    if observer not in model.clock_index:
        raise UnknownClock(observer)
    obs = model.clock_index[observer]
    compiled = model.compiled
    n = len(model.components)
    init = model.initial_state()
    locs, clocks, ints = list(init.locs), list(init.clocks), list(init.ints)
    steps = []
    truncation = "bound"
    if stop is not None and stop(init):
        return Run(init, (), "stopped", observer, float(bound), model)
    while clocks[obs] < bound:
        if len(steps) >= max_steps:
            raise RunLengthExceeded(f"more than {max_steps} steps before {observer} reached {bound}")
        rates = model.rates_for(locs)
        best = INF
        winners = None
        samples = [] if record_samples else None
        for i in range(n):
            kind, lo, hi = _window(compiled[i][locs[i]], clocks, ints, rates)
            if kind == UNIFORM:
                d = lo if lo == hi else lo + (hi - lo) * rng.random()
            elif kind == EXPONENTIAL:
                d = lo + rng.exponential(hi)
            else:
                d = INF
                if diagnostics is not None:
                    diagnostics["blocked_samples"] += 1
                    if hi < INF:
                        diagnostics["blocked_with_invariant"] += 1
            if samples is not None:
                samples.append(d)
            if d < best:
                best = d
                winners = [i]
            elif d == best and d < INF:
                winners.append(i)
        robs = rates[obs]
        if best == INF or clocks[obs] + best * robs >= bound:
            if robs == 0:
                truncation = "blocked"
                break
            d = (bound - clocks[obs]) / robs
            for x in range(len(clocks)):
                clocks[x] += rates[x] * d
            clocks[obs] = float(bound)
            steps.append(Step(d, None, None, NetworkState(tuple(locs), tuple(clocks), tuple(ints)),
                              tuple(samples) if samples is not None else None))
            break
        k = winners[0] if len(winners) == 1 else winners[rng.choice(len(winners))]
        if diagnostics is not None and len(winners) > 1:
            diagnostics["ties"] += 1
        for x in range(len(clocks)):
            clocks[x] += rates[x] * best
        out, b = _pick_output(model, k, locs, clocks, ints, rng)
        fire(model, k, out, b, locs, clocks, ints)
        state = NetworkState(tuple(locs), tuple(clocks), tuple(ints))
        steps.append(Step(best, out.action, k, state, tuple(samples) if samples is not None else None))
        if stop is not None and stop(state):
            truncation = "stopped"
            break
    return Run(init, tuple(steps), truncation, observer, float(bound), model)
