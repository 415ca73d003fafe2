"""Shared query/outcome types and statistics for the synthesis engines."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from ..family import Family, Realisation, cost as realisation_cost
from ..model import COMPARISON_TOL, Specification

KINDS = ("feasible", "partition", "max", "min")


class EngineError(ValueError):
    pass


@dataclass(frozen=True)
class SynthesisQuery:
    kind: str  # one of KINDS
    spec: Optional[Specification] = None  # feasibility/partition
    goal: Optional[frozenset] = None  # max/min carry only the goal set
    epsilon: Optional[float] = None  # eps-optimal slack for max/min
    budget: Optional[int] = None
    cost_model: Optional[str] = None  # None: family default
    optimise_cost: bool = False  # cost-optimal variant
    tolerance: float = COMPARISON_TOL

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EngineError("unknown query kind %r" % self.kind)
        if self.kind in ("feasible", "partition") and self.spec is None:
            raise EngineError("%s query needs a specification" % self.kind)
        if self.kind in ("max", "min") and self.goal is None:
            raise EngineError("%s query needs a goal set" % self.kind)
        if self.epsilon is not None and not (0.0 < self.epsilon <= 1.0):
            raise EngineError("epsilon must lie in (0, 1]")


@dataclass
class Stats:
    candidates: int = 0
    checks: int = 0
    iterations: int = 0
    wall_ms: float = 0.0
    trace: list = field(default_factory=list)

    def as_dict(self):
        return {"candidates": self.candidates, "checks": self.checks,
                "iterations": self.iterations, "wall_ms": self.wall_ms}


@dataclass
class SynthesisOutcome:
    kind: str  # "witness" | "unsat" | "partition"
    witness: Optional[Realisation] = None
    value: Optional[float] = None
    cost: Optional[int] = None
    T: Optional[list] = None  # list[Realisation]
    F: Optional[list] = None
    stats: Stats = field(default_factory=Stats)

    @property
    def satisfiable(self) -> bool:
        return self.kind != "unsat"


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = (time.perf_counter() - self.start) * 1000.0

    def stamp(self, stats: Stats):
        stats.wall_ms = (time.perf_counter() - self.start) * 1000.0


def query_cost(fam: Family, q: SynthesisQuery, r: Realisation) -> int:
    return realisation_cost(fam, r, q.cost_model)


def within_budget(fam: Family, q: SynthesisQuery, r: Realisation) -> bool:
    return q.budget is None or query_cost(fam, q, r) <= q.budget
