"""Baseline enumeration engine: exact, deterministic, and the oracle the
other engines are validated against."""

from __future__ import annotations

from ..family import Family, Realisation, enumerate_realisations, realise
from ..model import check, compare
from .base import (EngineError, Stats, SynthesisOutcome, SynthesisQuery, Timer,
                   query_cost)

ENUM_BOUND = 10 ** 6


def _values(fam: Family, q: SynthesisQuery, stats: Stats):
    """Yield (realisation, value, cost) in lexicographic candidate order."""
    goal = q.goal if q.goal is not None else q.spec.goal
    count = 0
    for r in enumerate_realisations(fam):
        count += 1
        if count > ENUM_BOUND:
            raise EngineError("family exceeds enumeration bound %d" % ENUM_BOUND)
        stats.candidates += 1
        mc = realise(fam, r)
        from ..model import reach_probability
        value = float(reach_probability(mc, goal)[mc.init])
        stats.checks += 1
        c = query_cost(fam, q, r) if (q.budget is not None or q.optimise_cost) \
            else None
        yield r, value, c


def enum_solve(fam: Family, q: SynthesisQuery) -> SynthesisOutcome:
    """Solve any synthesis query by checking every realisation."""
    stats = Stats()
    timer = Timer().__enter__()
    try:
        if q.kind == "feasible":
            return _feasible(fam, q, stats)
        if q.kind == "partition":
            return _partition(fam, q, stats)
        return _optimise(fam, q, stats)
    finally:
        timer.stamp(stats)


def _feasible(fam, q, stats):
    if q.optimise_cost:
        return cost_optimal(fam, q.spec, q, stats)
    for r, value, c in _values(fam, q, stats):
        stats.iterations += 1
        if compare(value, q.spec.op, q.spec.threshold, q.tolerance) and \
                (q.budget is None or c <= q.budget):
            return SynthesisOutcome("witness", witness=r, value=value, cost=c,
                                    stats=stats)
    return SynthesisOutcome("unsat", stats=stats)


def _partition(fam, q, stats):
    T, F = [], []
    for r, value, c in _values(fam, q, stats):
        stats.iterations += 1
        sat = compare(value, q.spec.op, q.spec.threshold, q.tolerance)
        if sat and (q.budget is None or c <= q.budget):
            T.append(r)
        else:
            F.append(r)
    return SynthesisOutcome("partition", T=T, F=F, stats=stats)


def _optimise(fam, q, stats):
    best = None  # (realisation, value, cost)
    better = (lambda v, b: v > b + 1e-12) if q.kind == "max" \
        else (lambda v, b: v < b - 1e-12)
    entries = []
    for r, value, c in _values(fam, q, stats):
        stats.iterations += 1
        if q.budget is not None and c > q.budget:
            continue
        entries.append((r, value, c))
        if best is None or better(value, best[1]):
            best = (r, value, c)
    if best is None:
        return SynthesisOutcome("unsat", stats=stats)
    r, value, c = best
    if q.epsilon is not None:
        # eps-optimal: lexicographically first realisation close enough
        bound = (1.0 - q.epsilon) * value if q.kind == "max" else \
            value / (1.0 - q.epsilon)
        for r2, v2, c2 in entries:
            ok = v2 >= bound - 1e-12 if q.kind == "max" else v2 <= bound + 1e-12
            if ok:
                r, value, c = r2, v2, c2
                break
    elif q.optimise_cost:
        # minimal-cost realisation among the value-optimal ones
        for r2, v2, c2 in entries:
            if abs(v2 - value) <= 1e-9 and (c2 or 0) < (c if c is not None
                                                        else float("inf")):
                r, value, c = r2, v2, c2
    return SynthesisOutcome("witness", witness=r, value=value, cost=c,
                            stats=stats)


def cost_optimal(fam: Family, spec, q: SynthesisQuery = None,
                 stats: Stats = None) -> SynthesisOutcome:
    """Minimal-cost realisation among those satisfying the specification."""
    own = stats is None
    if q is None:
        q = SynthesisQuery("feasible", spec=spec, optimise_cost=True)
    if own:
        stats = Stats()
        timer = Timer().__enter__()
    best = None
    goalq = SynthesisQuery("feasible", spec=spec, budget=q.budget,
                           cost_model=q.cost_model, optimise_cost=True,
                           tolerance=q.tolerance)
    for r in enumerate_realisations(fam):
        stats.candidates += 1
        mc = realise(fam, r)
        sat, value = check(mc, spec, q.tolerance)
        stats.checks += 1
        if not sat:
            continue
        c = query_cost(fam, goalq, r)
        if q.budget is not None and c > q.budget:
            continue
        if best is None or c < best[2]:
            best = (r, value, c)
    if own:
        timer.stamp(stats)
    if best is None:
        return SynthesisOutcome("unsat", stats=stats)
    return SynthesisOutcome("witness", witness=best[0], value=best[1],
                            cost=best[2], stats=stats)
