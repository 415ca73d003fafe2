"""Families of Markov chains: holes, realisations, costs, quotient MDPs.

A family fixes a shared state space and leaves some transition targets open;
each target either points at a fixed state or resolves through one or more
holes via a successor table.  Realisations (total hole assignments) induce
concrete Markov chains over the same index space; unreachable states are
retained so that indices stay stable across the family.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .model import (Distribution, MarkovChain, Mdp, MemorylessScheduler,
                    ModelError, PROB_SUM_TOL)


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class Hole:
    """A discrete parameter: an ordered list of options with optional costs."""

    name: str
    options: tuple  # tuple[str, ...]
    costs: tuple = None  # tuple[int, ...], parallel to options

    def __post_init__(self):
        if not self.options:
            raise FamilyError("hole %s has no options" % self.name)
        if len(set(self.options)) != len(self.options):
            raise FamilyError("hole %s has duplicate option labels" % self.name)
        if self.costs is None:
            object.__setattr__(self, "costs", tuple(0 for _ in self.options))
        elif len(self.costs) != len(self.options):
            raise FamilyError("hole %s: costs do not match options" % self.name)

    def option_index(self, label: str) -> int:
        try:
            return self.options.index(label)
        except ValueError:
            raise FamilyError("hole %s has no option %r" % (self.name, label))


@dataclass(frozen=True)
class Fixed:
    """Transition target pinned to a concrete state."""

    state: int

    def holes(self):
        return ()


@dataclass(frozen=True)
class HoleRef:
    """Transition target resolved through holes.

    `table` maps a tuple of option labels (one per hole in `hole_names`,
    in order) to a successor state.  Single-hole targets are the common
    case; multi-hole targets arise from sketch updates that write several
    hole expressions in one branch.
    """

    hole_names: tuple  # tuple[str, ...]
    table: Mapping  # tuple[option, ...] -> state

    def holes(self):
        return self.hole_names

    def resolve(self, assignment: Mapping) -> int:
        key = tuple(assignment[h] for h in self.hole_names)
        return self.table[key]

    @staticmethod
    def single(hole: str, table: Mapping) -> "HoleRef":
        return HoleRef((hole,), {(o,): t for o, t in table.items()})


@dataclass(frozen=True)
class Realisation:
    """Total assignment hole name -> option label."""

    assignment: Mapping

    def __getitem__(self, hole):
        return self.assignment[hole]

    def key(self, fam: "Family"):
        return tuple(self.assignment[h.name] for h in fam.holes)

    def as_dict(self):
        return dict(self.assignment)


@dataclass(frozen=True)
class Family:
    n_states: int
    init: int
    holes: tuple  # tuple[Hole, ...]
    transitions: tuple  # per state: tuple[(prob, Fixed|HoleRef), ...]
    constraints: tuple = ()
    cost_model: str = "structural"  # "structural" | "optionsum"
    # present for sketch-derived families: variable names and per-state values
    variables: Optional[tuple] = None
    valuations: Optional[tuple] = None

    def __post_init__(self):
        if len(self.transitions) != self.n_states:
            raise FamilyError("expected %d transition rows" % self.n_states)
        by_name = {h.name: h for h in self.holes}
        if len(by_name) != len(self.holes):
            raise FamilyError("duplicate hole names")
        for s, row in enumerate(self.transitions):
            total = sum(p for p, _ in row)
            if abs(total - 1.0) > PROB_SUM_TOL:
                raise FamilyError("state %d probabilities sum to %r" % (s, total))
            for _, tgt in row:
                if isinstance(tgt, Fixed):
                    self._check_state(tgt.state, s)
                else:
                    opts = [by_name[h].options for h in tgt.hole_names
                            if h in by_name]
                    if len(opts) != len(tgt.hole_names):
                        raise FamilyError("state %d references unknown hole" % s)
                    for combo in itertools.product(*opts):
                        if combo not in tgt.table:
                            raise FamilyError(
                                "state %d: successor table not total (%r missing)"
                                % (s, combo))
                        self._check_state(tgt.table[combo], s)

    def _check_state(self, t, s):
        if not (0 <= t < self.n_states):
            raise FamilyError("state %d has successor %d outside S" % (s, t))

    def hole(self, name: str) -> Hole:
        for h in self.holes:
            if h.name == name:
                return h
        raise FamilyError("no hole named %r" % name)

    def size(self) -> int:
        n = 1
        for h in self.holes:
            n *= len(h.options)
        return n

    def satisfies_constraints(self, assignment: Mapping) -> bool:
        return all(c.eval(assignment) for c in self.constraints)

    def state_name(self, s: int) -> str:
        if self.variables is None:
            return str(s)
        vals = self.valuations[s]
        if len(self.variables) == 1:
            return "%s=%d" % (self.variables[0], vals[0])
        return "(" + ",".join("%s=%d" % (v, x)
                              for v, x in zip(self.variables, vals)) + ")"


@dataclass(frozen=True)
class Subfamily:
    """Per-hole restriction to a nonempty subset of options (ordered)."""

    remaining: tuple  # tuple[tuple[str, ...], ...], parallel to fam.holes

    @staticmethod
    def full(fam: Family) -> "Subfamily":
        return Subfamily(tuple(h.options for h in fam.holes))

    def size(self) -> int:
        n = 1
        for opts in self.remaining:
            n *= len(opts)
        return n

    def contains(self, fam: Family, r: Realisation) -> bool:
        return all(r[h.name] in opts
                   for h, opts in zip(fam.holes, self.remaining))

    def replace(self, hole_idx: int, options) -> "Subfamily":
        options = tuple(options)
        if not options:
            raise FamilyError("subfamily restriction must be nonempty")
        rem = list(self.remaining)
        rem[hole_idx] = options
        return Subfamily(tuple(rem))


# ---------------------------------------------------------------------------
# operations


def realise(fam: Family, r: Realisation) -> MarkovChain:
    """Concrete MC induced by a total, constraint-satisfying assignment."""
    for h in fam.holes:
        if h.name not in r.assignment:
            raise FamilyError("assignment misses hole %s" % h.name)
        h.option_index(r[h.name])
    if not fam.satisfies_constraints(r.assignment):
        raise FamilyError("assignment violates family constraints")
    transitions = []
    for row in fam.transitions:
        pairs = []
        for p, tgt in row:
            t = tgt.state if isinstance(tgt, Fixed) else tgt.resolve(r.assignment)
            pairs.append((t, p))
        transitions.append(Distribution.from_pairs(pairs))
    return MarkovChain(fam.n_states, fam.init, tuple(transitions))


def enumerate_realisations(fam: Family, sub: Subfamily = None):
    """Constraint-satisfying realisations within `sub`, in lexicographic
    hole/option declaration order."""
    if sub is None:
        sub = Subfamily.full(fam)
    names = [h.name for h in fam.holes]
    for combo in itertools.product(*sub.remaining):
        assignment = dict(zip(names, combo))
        if fam.satisfies_constraints(assignment):
            yield Realisation(assignment)


def cost(fam: Family, r: Realisation, model: str = None) -> int:
    """Realisation cost under the family's (or an explicit) cost model."""
    model = model or fam.cost_model
    if model == "optionsum":
        return sum(h.costs[h.option_index(r[h.name])] for h in fam.holes)
    if model == "structural":
        mc = realise(fam, r)
        reachable = mc.reachable()
        edges = sum(len(mc.transitions[s].entries) for s in reachable)
        return len(reachable) + edges
    raise FamilyError("unknown cost model %r" % model)


def structural_cost_bfs(fam: Family, r: Realisation) -> int:
    """Independent recomputation of the structural cost via an explicit BFS."""
    mc = realise(fam, r)
    seen, queue = {mc.init}, [mc.init]
    edges = 0
    while queue:
        s = queue.pop(0)
        edges += len(mc.transitions[s].entries)
        for t, _ in mc.transitions[s].entries:
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return len(seen) + edges


ALL_IN_ONE_BOUND = 10 ** 5


def all_in_one_state(fam: Family, r_idx: int, s: int) -> int:
    """Index of composite state (s, r_idx) in the all-in-one MDP."""
    return 1 + r_idx * fam.n_states + s


def all_in_one_mdp(fam: Family, bound: int = ALL_IN_ONE_BOUND):
    """Single MDP whose initial nondeterminism picks a family member.

    Returns (mdp, realisations); initial action ``a_i`` leads with
    probability 1 to the copy of the initial state owned by
    ``realisations[i]``.
    """
    realisations = list(enumerate_realisations(fam))
    if len(realisations) > bound:
        raise FamilyError(
            "all-in-one MDP over %d realisations exceeds bound %d; "
            "use the quotient instead" % (len(realisations), bound))
    n_states = 1 + len(realisations) * fam.n_states
    actions = [None] * n_states
    actions[0] = tuple(("a_%d" % i,
                        Distribution.dirac(all_in_one_state(fam, i, fam.init)))
                       for i in range(len(realisations)))
    for i, r in enumerate(realisations):
        chain = realise(fam, r)
        for s in range(fam.n_states):
            shifted = Distribution(tuple(
                (all_in_one_state(fam, i, t), p)
                for t, p in chain.transitions[s].entries))
            actions[all_in_one_state(fam, i, s)] = (("step", shifted),)
    mdp = Mdp(n_states, 0, tuple(actions))
    return mdp, realisations


@dataclass(frozen=True)
class QuotientMeta:
    """Per-state action metadata of a quotient MDP.

    `choices[s]` is a list parallel to the state's actions; each element maps
    the hole names occurring in that state's distribution to the option the
    action commits to (empty for hole-free states).
    """

    fam: Family
    sub: Subfamily
    init_index: int  # index of the fresh initial state
    choices: tuple  # tuple[tuple[dict, ...], ...]


def quotient_mdp(fam: Family, sub: Subfamily = None):
    """Quotient MDP forgetting which realisation a state belongs to.

    States are the family states plus a fresh initial state; per state one
    action exists for every combination of remaining options of exactly the
    holes occurring in that state's outgoing distribution.
    """
    if sub is None:
        sub = Subfamily.full(fam)
    remaining = {h.name: opts for h, opts in zip(fam.holes, sub.remaining)}
    hole_order = {h.name: i for i, h in enumerate(fam.holes)}
    init_index = fam.n_states
    actions = []
    choices = []
    for s, row in enumerate(fam.transitions):
        local = sorted({h for _, tgt in row for h in tgt.holes()},
                       key=hole_order.get)
        state_actions = []
        state_choices = []
        for combo in itertools.product(*(remaining[h] for h in local)):
            choice = dict(zip(local, combo))
            pairs = []
            for p, tgt in row:
                t = tgt.state if isinstance(tgt, Fixed) else tgt.resolve(choice)
                pairs.append((t, p))
            state_actions.append((len(state_actions),
                                  Distribution.from_pairs(pairs)))
            state_choices.append(choice)
        actions.append(tuple(state_actions))
        choices.append(tuple(state_choices))
    actions.append(((0, Distribution.dirac(fam.init)),))
    choices.append(({},))
    mdp = Mdp(fam.n_states + 1, init_index, tuple(actions))
    return mdp, QuotientMeta(fam, sub, init_index, tuple(choices))


@dataclass(frozen=True)
class ConsistencyVerdict:
    """Outcome of analysing a quotient scheduler.

    `realisation` is set when every hole is chosen consistently across the
    reachable states; otherwise `inconsistent` maps each multi-valued hole to
    its chosen option set.  `frequencies` counts, per hole and option, the
    reachable states committing to it (used by the CEGAR split rule).
    """

    realisation: Optional[Realisation]
    inconsistent: Mapping
    frequencies: Mapping

    @property
    def consistent(self) -> bool:
        return self.realisation is not None


def scheduler_consistency(meta: QuotientMeta, sched: MemorylessScheduler,
                          reachable) -> ConsistencyVerdict:
    """Classify a quotient scheduler as consistent (a realisation) or not."""
    fam, sub = meta.fam, meta.sub
    freqs = {h.name: {} for h in fam.holes}
    for s in reachable:
        if s == meta.init_index:
            continue
        label = sched.choice[s]
        choice = meta.choices[s][label]
        for hole, option in choice.items():
            counts = freqs[hole]
            counts[option] = counts.get(option, 0) + 1
    multi = {h: set(c) for h, c in freqs.items() if len(c) > 1}
    if multi:
        return ConsistencyVerdict(None, multi, freqs)
    assignment = {}
    for h, opts in zip(fam.holes, sub.remaining):
        counts = freqs[h.name]
        if counts:
            assignment[h.name] = next(iter(counts))
        else:
            assignment[h.name] = opts[0]  # unconstrained: first remaining
    return ConsistencyVerdict(Realisation(assignment), {}, freqs)
