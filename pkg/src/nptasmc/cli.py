"""Command-line front end.

Every command prints one artifact (JSON by default, CSV with ``--format
csv``) to standard output or ``--out``.  Artifacts echo all parameters that
influence the result and contain no timings, so equal command lines give
byte-identical files.  Exit status: 0 success, 1 model error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import examples as ex
from .engine import random_run, substream
from .model import ModelError, ValidationError, validate
from .monitor import Monitor, check_box
from .oracle import DEFAULT_DEPTH, DEFAULT_TOLERANCE, exact_probability
from .sampling import QueryRunner, outcomes, paired_outcomes
from .stats import (MAX_SAMPLES, CompareParams, EstimateParams, SprtParams, compare, compare_param,
                    estimate, sprt)
from .text import ParseError, PwctlQuery, parse_model, parse_queries, serialize_run


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# histograms


@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]
    counts: tuple[int, ...]
    unsatisfied: int

    @property
    def total(self) -> int:
        return sum(self.counts) + self.unsatisfied

    @property
    def frequencies(self) -> tuple[float, ...]:
        n = self.total
        return tuple(k / n if n else 0.0 for k in self.counts)

    @property
    def cumulative(self) -> tuple[float, ...]:
        out, acc = [], 0
        n = self.total
        for k in self.counts:
            acc += k
            out.append(acc / n if n else 0.0)
        return tuple(out)

    def rows(self) -> list[dict]:
        return [{"bin": i, "lo": self.edges[i], "hi": self.edges[i + 1], "count": k,
                 "frequency": f, "cumulative": cf}
                for i, (k, f, cf) in enumerate(zip(self.counts, self.frequencies, self.cumulative))]


def histogram(outcomes_, bins: int, c: float) -> Histogram:
    """Bucket hit costs of satisfied outcomes into ``bins`` equal bins over [0, c].

    Bins are left-inclusive; a hit exactly at ``c`` lands in the last bin.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    width = c / bins
    counts = [0] * bins
    unsat = 0
    for o in outcomes_:
        if not o.satisfied:
            unsat += 1
            continue
        counts[min(int(o.hit_cost / width), bins - 1)] += 1
    edges = tuple(i * width for i in range(bins)) + (float(c),)
    return Histogram(edges, tuple(counts), unsat)


# --------------------------------------------------------------------------
# loading


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def load_model(path: str | None):
    if not path:
        raise UsageError("--model is required")
    doc = parse_model(_read(path))
    return doc, validate(doc)


def load_query(spec: str | None, doc, flag: str = "--query") -> PwctlQuery:
    if not spec:
        raise UsageError(f"{flag} is required")
    text = spec if spec.lstrip().startswith("Pr") else _read(spec)
    qs = parse_queries(text, doc)
    if not qs:
        raise UsageError(f"{flag}: no query found")
    return qs[0]


# --------------------------------------------------------------------------
# output


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: "" if v is None else v for k, v in r.items()})
    return buf.getvalue()


def _flat(record: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in record.items():
        if isinstance(v, dict):
            out.update(_flat(v, f"{prefix}{k}."))
        elif isinstance(v, (list, tuple)):
            out[prefix + k] = " ".join(str(x) for x in v)
        else:
            out[prefix + k] = v
    return out


def emit(args, record: dict, rows: list[dict] | None = None) -> None:
    if args.format == "json":
        text = json.dumps(record if rows is None else {**record, "rows": rows}, sort_keys=True, indent=2) + "\n"
    else:
        text = _csv(rows if rows is not None else [dict(sorted(_flat(record).items()))])
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _echo(args, *names) -> dict:
    return {n: getattr(args, n) for n in ("seed",) + names}


# --------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    doc, model = load_model(args.model)
    emit(args, {
        "command": "validate", "network": model.name, "valid": True,
        "components": [c.name for c in model.components],
        "clocks": list(model.clock_names),
        "actions": list(model.actions),
    })
    return 0


def cmd_simulate(args) -> int:
    doc, model = load_model(args.model)
    query = load_query(args.query, doc) if args.query else None
    observer = args.observer or (query.observer if query else "time")
    bound = args.bound if args.bound is not None else (query.bound if query else None)
    if bound is None:
        raise UsageError("simulate needs --bound or --query")
    mon = Monitor(model, query.phi) if query and query.operator == "diamond" else None
    records = []
    for i in range(args.runs):
        run = random_run(model, observer, bound, substream(args.seed, i))
        rec = {"index": i, "trace": serialize_run(run)}
        if query is not None:
            if mon is not None:
                rec["outcome"] = mon.diamond(run, observer, query.bound).row()
            else:
                rec["outcome"] = check_box(run, query.phi, observer, query.bound, model).row()
        records.append(rec)
    if args.format == "json":
        emit(args, {"command": "simulate", "network": model.name, "observer": observer,
                    "bound": bound, "seed": args.seed, "runs": records})
    else:
        text = "\n".join(r["trace"] for r in records)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8", newline="")
        else:
            sys.stdout.write(text)
    return 0


def _stream(args, model, query):
    return outcomes(QueryRunner(model, query), args.seed, args.jobs)


def cmd_estimate(args) -> int:
    doc, model = load_model(args.model)
    query = load_query(args.query, doc)
    params = EstimateParams(args.delta, args.epsilon)
    stream = _stream(args, model, query)
    res = estimate(stream, params)
    lo, hi = res.interval
    emit(args, {
        "command": "estimate", "network": model.name, "query": str(query),
        "params": {**_echo(args, "delta", "epsilon")},
        "p_hat": res.p_hat, "N": res.samples, "successes": res.successes,
        "interval": [lo, hi], "diagnostics": dict(sorted(stream.diagnostics.items())),
    })
    return 0


_HOLDS = {">=": True, ">": True, "<=": False, "<": False}


def cmd_test(args) -> int:
    doc, model = load_model(args.model)
    query = load_query(args.query, doc)
    theta = args.theta
    if theta is None:
        if query.comparison is None:
            raise UsageError("test needs --theta or a query with a probability comparison")
        theta = query.comparison[1]
    params = SprtParams(theta, args.delta0, args.delta1, args.alpha, args.beta)
    stream = _stream(args, model, query)
    v = sprt(stream, params, args.max_samples)
    holds = None
    if query.comparison is not None and query.comparison[0] in _HOLDS and v.decision != "undecided":
        holds = (v.decision == "H0") == _HOLDS[query.comparison[0]]
    emit(args, {
        "command": "test", "network": model.name, "query": str(query),
        "params": {**_echo(args, "alpha", "beta", "delta0", "delta1", "max_samples"), "theta": theta,
                   "p0": params.p0, "p1": params.p1},
        "decision": v.decision, "holds": holds, "samples": v.samples, "successes": v.successes,
        "llr": v.llr, "diagnostics": dict(sorted(stream.diagnostics.items())),
    })
    return 0


def _pair(args):
    doc1, m1 = load_model(args.model)
    q1 = load_query(args.query, doc1)
    doc2, m2 = load_model(args.model2) if args.model2 else (doc1, m1)
    q2 = load_query(args.query2, doc2, "--query2") if args.query2 else q1
    if args.model2 is None and args.query2 is None:
        raise UsageError("compare needs --model2 and/or --query2")
    params = CompareParams(args.u0, args.u1, args.alpha, args.beta, args.p0eq, args.p1eq)
    stream = paired_outcomes(QueryRunner(m1, q1), QueryRunner(m2, q2), args.seed, args.jobs)
    head = {
        "network1": m1.name, "network2": m2.name, "query1": str(q1), "query2": str(q2),
        "params": {**_echo(args, "u0", "u1", "alpha", "beta", "p0eq", "p1eq", "max_samples"),
                   **params.constants()},
    }
    return q1, q2, params, stream, head


def cmd_compare(args) -> int:
    q1, q2, params, stream, head = _pair(args)
    v = compare(stream, params, args.max_samples)
    emit(args, {"command": "compare", **head, "verdict": v.value, "informative": v.informative,
                "pairs": v.total, "wins2": v.wins,
                "diagnostics": dict(sorted(stream.diagnostics.items()))})
    return 0


def cmd_pcompare(args) -> int:
    q1, q2, params, stream, head = _pair(args)
    if q1.operator != "diamond" or q2.operator != "diamond":
        raise UsageError("pcompare needs reachability (<>) queries")
    if q1.bound != q2.bound or q1.observer != q2.observer:
        raise UsageError("pcompare needs both queries on the same observer and bound")
    res = compare_param(stream, q1.bound, args.N, params, args.max_samples)
    rows = [{"index": i + 1, "bound": b, "result": r, "verdict": v, "informative": k}
            for i, (b, r, v, k) in enumerate(zip(res.bounds, res.results, res.verdicts, res.informative))]
    head["params"]["N"] = args.N
    emit(args, {"command": "pcompare", **head, "pairs": res.pairs,
                "diagnostics": dict(sorted(stream.diagnostics.items()))}, rows)
    return 0


def cmd_oracle(args) -> int:
    doc, model = load_model(args.model)
    query = load_query(args.query, doc)
    res = exact_probability(model, query, args.tolerance, args.depth)
    emit(args, {"command": "oracle", "network": model.name, "query": str(query),
                "params": {"tolerance": args.tolerance, "depth": args.depth},
                "probability": res.probability, "error_bound": res.error_bound})
    return 0


def cmd_hist(args) -> int:
    doc, model = load_model(args.model)
    query = load_query(args.query, doc)
    if query.operator != "diamond":
        raise UsageError("hist needs a reachability (<>) query")
    stream = _stream(args, model, query)
    it = iter(stream)
    hist = histogram((next(it) for _ in range(args.runs)), args.bins, query.bound)
    emit(args, {"command": "hist", "network": model.name, "query": str(query),
                "params": _echo(args, "bins", "runs"), "unsatisfied": hist.unsatisfied,
                "total": hist.total}, hist.rows())
    return 0


def cmd_examples(args) -> int:
    cat = ex.catalog()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, (model_text, queries) in cat.items():
            (out / f"{name}.nptam").write_text(model_text, encoding="utf-8", newline="")
            (out / f"{name}.npq").write_text("\n".join(queries) + "\n", encoding="utf-8", newline="")
        return 0
    rows = [{"name": n, "queries": " | ".join(q)} for n, (_, q) in cat.items()]
    if args.format == "json":
        sys.stdout.write(json.dumps({"command": "examples", "examples": rows}, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(_csv(rows))
    return 0


COMMANDS = {
    "validate": (cmd_validate, "parse and validate a model"),
    "simulate": (cmd_simulate, "emit random run traces"),
    "estimate": (cmd_estimate, "estimate a probability"),
    "test": (cmd_test, "sequential hypothesis test"),
    "compare": (cmd_compare, "compare two probabilities"),
    "pcompare": (cmd_pcompare, "compare two probabilities at N bounds"),
    "oracle": (cmd_oracle, "numerical probability for small models"),
    "examples": (cmd_examples, "list or write the bundled example models"),
    "hist": (cmd_hist, "histogram of hit costs"),
}


def _default_seed() -> int:
    try:
        return int(os.environ.get("NPTASMC_SEED", "0"))
    except ValueError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model")
    common.add_argument("--model2")
    common.add_argument("--query", help="query file or literal query text")
    common.add_argument("--query2")
    common.add_argument("--seed", type=int, default=_default_seed())
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out")
    common.add_argument("--alpha", type=float, default=0.05)
    common.add_argument("--beta", type=float, default=0.05)
    common.add_argument("--theta", type=float)
    common.add_argument("--delta0", type=float, default=0.01)
    common.add_argument("--delta1", type=float, default=0.01)
    common.add_argument("--epsilon", type=float, default=0.05)
    common.add_argument("--delta", type=float, default=0.05)
    common.add_argument("--u0", type=float, default=0.5)
    common.add_argument("--u1", type=float, default=2.0)
    common.add_argument("--p0eq", type=float, default=0.99)
    common.add_argument("--p1eq", type=float, default=0.95)
    common.add_argument("--bins", type=int, default=50)
    common.add_argument("--N", type=int, default=20)
    common.add_argument("--max-samples", type=int, default=MAX_SAMPLES)
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    common.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    common.add_argument("--runs", type=int)
    common.add_argument("--observer")
    common.add_argument("--bound", type=float)

    parser = argparse.ArgumentParser(prog="nptasmc", description="Statistical model checking of priced timed automata networks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.runs is None:
        args.runs = 1 if args.command == "simulate" else 10_000
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        return COMMANDS[args.command][0](args)
    except ValidationError as exc:
        for d in exc.diagnostics:
            print(f"error: {d}", file=sys.stderr)
        return 1
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ModelError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
