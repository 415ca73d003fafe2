"""Seeded random generators: chains and families for cross-validation, plus
hand-shaped benchmark families with large but highly prunable option spaces."""

from __future__ import annotations

import random

from .constraints import Atom, Not
from .family import Family, Fixed, Hole, HoleRef
from .model import Distribution, MarkovChain, Specification


def random_chain(rng: random.Random, max_states: int = 40) -> MarkovChain:
    """Random sparse chain with integer-weight branch probabilities."""
    n = rng.randint(2, max_states)
    rows = []
    for s in range(n):
        degree = rng.randint(1, min(3, n))
        targets = rng.sample(range(n), degree)
        weights = [rng.randint(1, 5) for _ in targets]
        total = sum(weights)
        rows.append(Distribution.from_pairs(
            [(t, w / total) for t, w in zip(targets, weights)]))
    return MarkovChain(n, 0, tuple(rows))


def random_goal(rng: random.Random, n_states: int) -> frozenset:
    k = rng.randint(1, max(1, n_states // 4))
    return frozenset(rng.sample(range(n_states), k))


def random_critical(rng: random.Random, mc: MarkovChain) -> frozenset:
    states = sorted(mc.reachable())
    k = rng.randint(1, len(states))
    picked = set(rng.sample(states, k))
    picked.add(mc.init)
    return frozenset(picked)


def random_family(rng: random.Random, max_states: int = 30,
                  max_realisations: int = 1000,
                  allow_constraints: bool = True) -> Family:
    """Random family: every state branches into fixed targets or single-hole
    successor tables; option counts are trimmed to the realisation budget."""
    n = rng.randint(4, max_states)
    n_holes = rng.randint(1, 3)
    holes = []
    size = 1
    for i in range(n_holes):
        n_opts = rng.randint(2, 4)
        while size * n_opts > max_realisations and n_opts > 2:
            n_opts -= 1
        if size * n_opts > max_realisations:
            break
        size *= n_opts
        options = tuple("v%d" % j for j in range(n_opts))
        costs = tuple(rng.randint(0, 5) for _ in options)
        holes.append(Hole("h%d" % i, options, costs))
    transitions = []
    for s in range(n):
        degree = rng.randint(1, 3)
        weights = [rng.randint(1, 5) for _ in range(degree)]
        total = sum(weights)
        row = []
        for w in weights:
            if holes and rng.random() < 0.4:
                h = rng.choice(holes)
                table = {o: rng.randrange(n) for o in h.options}
                row.append((w / total, HoleRef.single(h.name, table)))
            else:
                row.append((w / total, Fixed(rng.randrange(n))))
        transitions.append(tuple(row))
    constraints = ()
    if allow_constraints and holes and rng.random() < 0.3:
        h = rng.choice(holes)
        if len(h.options) > 1:
            constraints = (Not(Atom(h.name, rng.choice(h.options))),)
    return Family(n, 0, tuple(holes), tuple(transitions),
                  constraints=constraints, cost_model="optionsum")


# ---------------------------------------------------------------------------
# benchmark families with one distinguished admissible option


def pruning_family(n_options: int = 64):
    """One hole with `n_options` options; all but the last route the chain
    into a certain-reach region, the last one avoids it entirely.

    Returns (family, spec) where spec is the upper-bound property only the
    distinguished option satisfies.  A verdict generalised from any refuted
    candidate covers every routing option at once.
    """
    # states: 0 init, 1 hub, 2 safe sink, 3 goal
    options = tuple("c%d" % i for i in range(n_options))
    table = {o: 1 for o in options[:-1]}
    table[options[-1]] = 2
    fam = Family(
        4, 0,
        (Hole("route", options),),
        (
            ((1.0, HoleRef.single("route", table)),),
            ((1.0, Fixed(3)),),
            ((1.0, Fixed(2)),),
            ((1.0, Fixed(3)),),
        ),
        cost_model="optionsum")
    return fam, Specification(frozenset([3]), "<=", 0.1)


def bench_family(n_route: int = 64, n_mid: int = 25, n_tail: int = 7):
    """Three-hole benchmark family with n_route * n_mid * n_tail realisations
    (11200 by default); only the last routing option is admissible, and the
    downstream holes never influence the verdict."""
    route_opts = tuple("c%d" % i for i in range(n_route))
    mid_opts = tuple("m%d" % i for i in range(n_mid))
    tail_opts = tuple("t%d" % i for i in range(n_tail))
    route_table = {o: 1 for o in route_opts[:-1]}
    route_table[route_opts[-1]] = 2
    # mid options split between two states that both reach the goal surely
    mid_table = {o: 3 if i % 2 == 0 else 4 for i, o in enumerate(mid_opts)}
    tail_table = {o: 5 for o in tail_opts}
    # states: 0 init, 1 bad hub, 2 safe hub, 3/4 pre-goal, 5 dead, 6 goal
    fam = Family(
        7, 0,
        (Hole("route", route_opts),
         Hole("mid", mid_opts),
         Hole("tail", tail_opts)),
        (
            ((1.0, HoleRef.single("route", route_table)),),
            ((1.0, HoleRef.single("mid", mid_table)),),
            ((0.5, HoleRef.single("tail", tail_table)), (0.5, Fixed(5))),
            ((1.0, Fixed(6)),),
            ((1.0, Fixed(6)),),
            ((1.0, Fixed(5)),),
            ((1.0, Fixed(6)),),
        ),
        cost_model="optionsum")
    return fam, Specification(frozenset([6]), "<=", 0.1)
