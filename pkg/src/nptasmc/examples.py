"""Generators for the benchmark model families.

* ``gen_abt``: three small networks built from racers A, B, B_r, AB and a
  passive observer T whose cost clock ``C`` grows at rate 4 until ``a`` is
  seen and at rate 2 afterwards.
* ``gen_traingate``: N trains sharing a one-track bridge guarded by a gate.
* ``gen_dpa``: duration probabilistic automata (sequential task chains with
  uniform durations) competing for resources under a fixed-priority
  scheduler.

Every generator writes model text and parses it, so the returned document
is always something the parser accepts.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction

from .model import ModelDocument, ModelError
from .text import parse_model

ABT_VARIANTS = ("ABT", "AB_T", "ABrT")

_A = """\
automaton A
  clock x
  action out a
  action in b
  location A0 inv x<=1
  location A1
  initial A0
  edge A0 -> A1 on a!
end
"""

_B = """\
automaton B
  clock y
  action out b
  action in a
  location B0 inv y<=2
  location B1
  initial B0
  edge B0 -> B1 on b!
end
"""

_BR = """\
automaton Br
  action out b
  action in a
  location B0 exprate 1/2
  location B1
  initial B0
  edge B0 -> B1 on b!
end
"""

_AB = """\
automaton AB
  clock z
  action out a b
  location AB0 inv z<=2
  location AB1 inv z<=2
  location AB2
  initial AB0
  edge AB0 -> AB1 on a! reset z
  edge AB1 -> AB2 on b!
end
"""

_T = """\
automaton T
  clock C
  action in a b
  location T0 rate C=4
  location T1 rate C=2
  location T2 rate C=2
  location T3 rate C=2
  initial T0
  edge T0 -> T1 on a?
  edge T0 -> T2 on b?
  edge T1 -> T3 on b?
end
"""

ABT_QUERIES = ("Pr[time<=2](<> T.T3)", "Pr[C<=6](<> T.T3)")

# closed forms for the two queries above
ABT_EXACT = {
    "ABT": (0.75, 0.75),
    "AB_T": (0.5, 0.5),
    "ABrT": (2 * (1 - math.exp(-0.5)) - math.exp(-1),
             2 * (1 - math.exp(-0.5)) - 2 * (math.exp(-1) - math.exp(-1.5))),
}


def abt_text(variant: str = "ABT") -> str:
    parts = {"ABT": (_A, _B), "AB_T": (_AB,), "ABrT": (_A, _BR)}
    if variant not in parts:
        raise ValueError(f"unknown variant {variant!r}; choose from {ABT_VARIANTS}")
    return f"network {variant}\n" + "".join(parts[variant]) + _T


def gen_abt(variant: str = "ABT") -> ModelDocument:
    return parse_model(abt_text(variant))


# --------------------------------------------------------------------------
# train-gate


def traingate_text(n: int) -> str:
    if n < 2:
        raise ValueError("train-gate needs at least two trains")
    lines = [f"network TrainGate{n}"]
    for i in range(n):
        rate = Fraction(i + 1, n)
        ex = f"{rate.numerator}" + (f"/{rate.denominator}" if rate.denominator != 1 else "")
        lines += [
            f"automaton Train{i}",
            "  clock x" + str(i),
            f"  action out appr{i} go{i} stop{i} restart{i} leave{i}",
            f"  location Safe exprate {ex}",
            f"  location Appr inv x{i}<=20",
            "  location Stop exprate 1",
            f"  location Cross inv x{i}<=5",
            "  initial Safe",
            f"  edge Safe -> Appr on appr{i}! reset x{i}",
            f"  edge Appr -> Cross on go{i}! guard x{i}>=10 && free==1 reset x{i}",
            f"  edge Appr -> Stop on stop{i}! guard free==0",
            f"  edge Stop -> Appr on restart{i}! guard free==1 reset x{i}",
            f"  edge Cross -> Safe on leave{i}! guard x{i}>=3",
            "end",
        ]
    lines += [
        "automaton Gate",
        "  int free [0,1] = 1",
        f"  int queue [0,{n}] = 0",
        "  action in " + " ".join(f"appr{i} go{i} stop{i} restart{i} leave{i}" for i in range(n)),
        "  location Free",
        "  initial Free",
    ]
    for i in range(n):
        lines += [
            f"  edge Free -> Free on go{i}? set free = 0",
            f"  edge Free -> Free on leave{i}? set free = 1",
            f"  edge Free -> Free on stop{i}? set queue = queue + 1",
            f"  edge Free -> Free on restart{i}? set queue = queue - 1",
        ]
    lines.append("end")
    return "\n".join(lines) + "\n"


def gen_traingate(n: int) -> ModelDocument:
    return parse_model(traingate_text(n))


def traingate_query(train: int, bound: int) -> str:
    return f"Pr[time<={bound}](<> Train{train}.Cross)"


# --------------------------------------------------------------------------
# duration probabilistic automata


class InfeasibleDemand(ModelError):
    pass


@dataclass(frozen=True)
class DpaSpec:
    """Job-shop instance; ``None`` fields are drawn from the generator seed.

    ``durations[i][j]`` is the (lo, hi) interval of task j of SDPA i and
    ``demands[i][j][r]`` the units of resource r it holds while running.
    ``priority`` lists SDPA indices from most to least favoured.
    """

    n: int
    k: int
    m: int = 0
    capacities: tuple[int, ...] | None = None
    durations: tuple[tuple[tuple[int, int], ...], ...] | None = None
    demands: tuple[tuple[tuple[int, ...], ...], ...] | None = None
    priority: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n < 1 or self.k < 1 or self.m < 0:
            raise ValueError("need n >= 1, k >= 1, m >= 0")


def _fill(spec: DpaSpec, rng: random.Random) -> DpaSpec:
    caps = spec.capacities
    if caps is None:
        caps = tuple(rng.randint(1, 3) for _ in range(spec.m))
    durs = spec.durations
    if durs is None:
        durs = []
        for _ in range(spec.n):
            row = []
            for _ in range(spec.k):
                lo = rng.randint(1, 10)
                row.append((lo, lo + rng.randint(0, 10)))
            durs.append(tuple(row))
        durs = tuple(durs)
    dem = spec.demands
    if dem is None:
        dem = tuple(tuple(tuple(rng.randint(0, c) for c in caps) for _ in range(spec.k))
                    for _ in range(spec.n))
    prio = spec.priority if spec.priority is not None else tuple(range(spec.n))
    return replace(spec, capacities=tuple(caps), durations=durs, demands=dem, priority=tuple(prio))


def random_dpa_spec(n: int, k: int, m: int, seed: int = 0) -> DpaSpec:
    return _fill(DpaSpec(n, k, m), random.Random(seed))


def dpa_text(spec: DpaSpec, seed: int = 0) -> str:
    spec = _fill(spec, random.Random(seed))
    n, k, m = spec.n, spec.k, spec.m
    if len(spec.capacities) != m or sorted(spec.priority) != list(range(n)):
        raise ValueError("capacities must have m entries and priority must permute 0..n-1")
    if len(spec.durations) != n or any(len(row) != k for row in spec.durations):
        raise ValueError("durations must be n rows of k intervals")
    if len(spec.demands) != n or any(len(row) != k or any(len(d) != m for d in row) for row in spec.demands):
        raise ValueError("demands must be n x k x m")
    for i, row in enumerate(spec.durations):
        for j, (lo, hi) in enumerate(row):
            if not 0 <= lo <= hi:
                raise ValueError(f"task {i}.{j}: need 0 <= lo <= hi")
    for i, row in enumerate(spec.demands):
        for j, dem in enumerate(row):
            for r, (d, c) in enumerate(zip(dem, spec.capacities)):
                if not 0 <= d <= c:
                    raise InfeasibleDemand(f"task {i}.{j} needs {d} of resource {r}, capacity {c}")

    ends = [f"end{i}_{j}" for i in range(n) for j in range(k)]
    lines = [f"network DPA{n}x{k}x{m}", "automaton Sched", "  clock s"]
    lines += [f"  int res{r} [0,{c}] = {c}" for r, c in enumerate(spec.capacities)]
    lines += ["  action out dispatch", "  action in " + " ".join(ends),
              "  location Dispatch inv s<=0", "  location Busy", "  initial Dispatch",
              "  edge Dispatch -> Busy on dispatch!"]
    lines += [f"  edge Busy -> Dispatch on {e}? reset s" for e in ends]
    lines.append("end")
    for i in spec.priority:
        own = [f"end{i}_{j}" for j in range(k)]
        lines += [f"automaton S{i}", f"  clock c{i}", "  action out " + " ".join(own), "  action in dispatch"]
        for j, (lo, hi) in enumerate(spec.durations[i]):
            lines += [f"  location W{j}", f"  location B{j} inv c{i}<={hi}"]
        lines += ["  location Done", "  initial W0"]
        for j, (lo, hi) in enumerate(spec.durations[i]):
            dem = spec.demands[i][j]
            need = [f"res{r}>={d}" for r, d in enumerate(dem) if d > 0]
            take = [f"set res{r} = res{r} - {d}" for r, d in enumerate(dem) if d > 0]
            give = [f"set res{r} = res{r} + {d}" for r, d in enumerate(dem) if d > 0]
            guard = " guard " + " && ".join(need) if need else ""
            nxt = f"W{j + 1}" if j + 1 < k else "Done"
            lines.append(f"  edge W{j} -> B{j} on dispatch?{guard} reset c{i}" + "".join(" " + t for t in take))
            end_guard = f" guard c{i}>={lo}" if lo > 0 else ""
            lines.append(f"  edge B{j} -> {nxt} on end{i}_{j}!{end_guard}" + "".join(" " + g for g in give))
        lines.append("end")
    return "\n".join(lines) + "\n"


def gen_dpa(spec: DpaSpec, seed: int = 0) -> ModelDocument:
    return parse_model(dpa_text(spec, seed))


def dpa_query(n: int, bound: int) -> str:
    return f"Pr[time<={bound}](<> " + " && ".join(f"S{i}.Done" for i in range(n)) + ")"


# --------------------------------------------------------------------------
# catalog used by the ``examples`` subcommand


def catalog() -> dict[str, tuple[str, list[str]]]:
    """name -> (model text, query lines)."""
    out = {v.lower(): (abt_text(v), list(ABT_QUERIES)) for v in ABT_VARIANTS}
    out["traingate6"] = (traingate_text(6), [traingate_query(0, 100), traingate_query(5, 100)])
    out["dpa_1_1_0"] = (dpa_text(DpaSpec(1, 1, 0, durations=(((2, 4),),))), [dpa_query(1, 3)])
    out["dpa_4_4_3"] = (dpa_text(random_dpa_spec(4, 4, 3, seed=1)), [dpa_query(4, 100)])
    return out
