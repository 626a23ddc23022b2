"""Outcome streams: run index -> Outcome, optionally across worker processes.

Run ``i`` always draws from ``substream(seed, i)`` (or ``(i, side)`` for the
two halves of a compared pair), so the outcome sequence does not depend on
how many workers produce it.  Streams are consumed strictly in index order
and diagnostics are only counted for consumed runs.
"""

from __future__ import annotations

import itertools
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Iterator

from .engine import random_run, substream
from .model import NetworkModel
from .monitor import Monitor, Outcome, _eval
from .text import Not, PwctlQuery

CHUNK = 256
DIAG_KEYS = ("blocked_samples", "ties")


class QueryRunner:
    """Generates and checks runs of ``model`` against ``query``."""

    def __init__(self, model: NetworkModel, query: PwctlQuery):
        self.model = model
        self.query = query
        self.box = query.operator == "box"
        self.monitor = Monitor(model, Not(query.phi) if self.box else query.phi)
        self.diagnostics: Counter = Counter()
        self.stop = None
        if self.monitor.location_only:
            node = self.monitor.node
            self.stop = lambda state: _eval(node, state.locs, state.ints, None)

    def __getstate__(self):
        return {"model": self.model, "query": self.query}

    def __setstate__(self, state):
        self.__init__(state["model"], state["query"])

    def run(self, seed: int, index: int, *side: int):
        q = self.query
        return random_run(self.model, q.observer, q.bound, substream(seed, index, *side),
                          stop=self.stop, diagnostics=self.diagnostics)

    def outcome(self, seed: int, index: int, *side: int) -> Outcome:
        hit = self.monitor.diamond(self.run(seed, index, *side), self.query.observer, self.query.bound)
        return Outcome(not hit.satisfied) if self.box else hit

    def counted(self, seed: int, index: int, *side: int):
        """(outcome, diagnostic increments) for one run."""
        d = self.diagnostics
        before = tuple(d[k] for k in DIAG_KEYS)
        out = self.outcome(seed, index, *side)
        return out, tuple(d[k] - b for k, b in zip(DIAG_KEYS, before))


def _single(runner: QueryRunner, seed: int, i: int):
    return runner.counted(seed, i)


def _paired(r1: QueryRunner, r2: QueryRunner, seed: int, i: int):
    o1, d1 = r1.counted(seed, i, 0)
    o2, d2 = r2.counted(seed, i, 1)
    return (o1, o2), tuple(a + b for a, b in zip(d1, d2))


def _work(item, lo: int, hi: int):
    return [item(i) for i in range(lo, hi)]


class OutcomeStream:
    """Ordered, endless iterator over per-index items."""

    def __init__(self, item, jobs: int = 1, chunk: int = CHUNK):
        self.item = item
        self.jobs = max(1, int(jobs))
        self.chunk = chunk
        self.consumed = 0
        self.diagnostics: Counter = Counter()

    def _take(self, value, diag):
        self.consumed += 1
        for k, v in zip(DIAG_KEYS, diag):
            if v:
                self.diagnostics[k] += v
        return value

    def __iter__(self) -> Iterator:
        if self.jobs == 1:
            for i in itertools.count():
                yield self._take(*self.item(i))
        with ProcessPoolExecutor(self.jobs) as pool:
            starts = itertools.count(0, self.chunk)
            pending = [pool.submit(_work, self.item, s, s + self.chunk)
                       for s in itertools.islice(starts, 2 * self.jobs)]
            try:
                while True:
                    batch = pending.pop(0).result()
                    s = next(starts)
                    pending.append(pool.submit(_work, self.item, s, s + self.chunk))
                    for value, diag in batch:
                        yield self._take(value, diag)
            finally:
                for f in pending:
                    f.cancel()


def outcomes(runner: QueryRunner, seed: int, jobs: int = 1) -> OutcomeStream:
    """Outcomes for run indices 0, 1, 2, ..."""
    return OutcomeStream(partial(_single, runner, seed), jobs)


def paired_outcomes(r1: QueryRunner, r2: QueryRunner, seed: int, jobs: int = 1) -> OutcomeStream:
    """(outcome1, outcome2) pairs from independent runs, indices 0, 1, 2, ..."""
    return OutcomeStream(partial(_paired, r1, r2, seed), jobs)
