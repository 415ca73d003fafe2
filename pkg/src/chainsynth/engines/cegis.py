"""Inductive synthesis engine: a clause-learning synthesiser proposes
candidates, the verifier model-checks them and generalises verdicts through
critical-subsystem conflicts.

A refuting (or establishing) critical set C fixes the chain's behaviour on C;
every realisation inducing the same transitions on C shares the verdict, so
one model-checker call can prune many family members.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..family import (Family, HoleRef, Realisation, enumerate_realisations,
                      realise)
from ..model import (MarkovChain, Specification, check, compare,
                     reach_probability, sub_mc)
from .base import (EngineError, Stats, SynthesisOutcome, SynthesisQuery, Timer,
                   query_cost)


@dataclass(frozen=True)
class Conflict:
    holes: tuple  # hole names occurring in transitions of critical states
    values: dict  # hole -> option chosen by the analysed candidate
    verdict: str  # "reject" | "accept"
    critical: frozenset


def conflict_holes(fam: Family, critical) -> set:
    """Holes referenced by the outgoing transitions of the critical states."""
    holes = set()
    for c in critical:
        for _, tgt in fam.transitions[c]:
            holes.update(tgt.holes())
    return holes


def extract_counterexample(mc: MarkovChain, spec: Specification, mode: str,
                           tol: float = 1e-6) -> frozenset:
    """Greedy critical-set construction.

    Reachable non-goal states are ranked once by the contribution score
    Pr(init reaches s) * Pr(s reaches goal); starting from {init}, states are
    added in descending score until the sub-MC alone decides the property
    (Refute: the sub-value already violates the threshold of an upper-bound
    spec; Establish: it already clears the threshold of a lower-bound spec).
    """
    verdict, _ = check(mc, spec, tol)
    if mode == "refute":
        if spec.op not in ("<=", "<") or verdict:
            raise EngineError("refutation requires a violated upper-bound spec")
    elif mode == "establish":
        if spec.op not in (">=", ">") or not verdict:
            raise EngineError("establishing requires a satisfied lower-bound spec")
    else:
        raise EngineError("mode must be 'refute' or 'establish'")

    to_goal = reach_probability(mc, spec.goal)
    reachable = sorted(mc.reachable())
    scores = {}
    for s in reachable:
        if s == mc.init or s in spec.goal:
            continue
        from_init = float(reach_probability(mc, frozenset([s]))[mc.init])
        scores[s] = from_init * float(to_goal[s])
    order = sorted(scores, key=lambda s: (-scores[s], s))

    critical = {mc.init}
    want = mode == "establish"
    for nxt in [None] + order:
        if nxt is not None:
            critical.add(nxt)
        sub_verdict, _ = check(sub_mc(mc, critical), spec, tol)
        if sub_verdict == want:
            return frozenset(critical)
    raise AssertionError("full reachable set must decide the property")


def _option_scope(fam: Family, critical, r: Realisation) -> dict:
    """Per conflict hole, the options interchangeable with the candidate's
    choice on every critical-state successor table; any realisation inside
    the resulting product induces an isomorphic sub-MC."""
    holes = conflict_holes(fam, critical)
    refs = {h: [] for h in holes}
    for c in critical:
        for _, tgt in fam.transitions[c]:
            if isinstance(tgt, HoleRef):
                for h in tgt.hole_names:
                    refs[h].append(tgt)
    scope = {}
    for h in holes:
        hole = fam.hole(h)
        chosen = r[h]
        allowed = []
        for option in hole.options:
            ok = True
            for tgt in refs[h]:
                pos = tgt.hole_names.index(h)
                for combo in tgt.table:
                    if combo[pos] != chosen:
                        continue
                    swapped = combo[:pos] + (option,) + combo[pos + 1:]
                    if tgt.table[swapped] != tgt.table[combo]:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                allowed.append(option)
        scope[h] = frozenset(allowed)
    return scope


def scope_size(fam: Family, scope: dict) -> int:
    n = 1
    for h in fam.holes:
        n *= len(scope[h.name]) if h.name in scope else len(h.options)
    return n


def scope_matches(scope: dict, r: Realisation) -> bool:
    return all(r[h] in opts for h, opts in scope.items())


# ---------------------------------------------------------------------------
# the synthesiser: DPLL over hole assignments with clause learning


class AssignmentSpace:
    """Boolean assignment space over (hole = option) atoms with exactly-one
    groups per hole, family constraints, and learned verdict clauses.

    Clause literals are (hole index, option-index set, positive); a positive
    literal demands the hole's option to lie in the set.
    """

    def __init__(self, fam: Family, budget=None, cost_model=None):
        self.fam = fam
        self.holes = fam.holes
        self.clauses = []
        self.refuted_stamp = [[0] * len(h.options) for h in fam.holes]
        self.stamp = 0
        self.budget = budget
        self.min_costs = None
        if budget is not None and (cost_model or fam.cost_model) == "optionsum":
            self.min_costs = [list(h.costs) for h in fam.holes]

    def learn_scope(self, scope: dict):
        """Block every assignment inside the scope product."""
        clause = []
        names = [h.name for h in self.holes]
        for h, opts in scope.items():
            idx = names.index(h)
            opt_idx = frozenset(self.holes[idx].option_index(o) for o in opts)
            clause.append((idx, opt_idx, False))
        self.clauses.append(tuple(clause))

    def block_assignment(self, r: Realisation):
        self.learn_scope({h.name: frozenset([r[h.name]]) for h in self.holes})

    def mark_refuted(self, r: Realisation):
        self.stamp += 1
        for i, h in enumerate(self.holes):
            self.refuted_stamp[i][h.option_index(r[h.name])] = self.stamp

    def _propagate(self, domains):
        changed = True
        while changed:
            changed = False
            for clause in self.clauses:
                satisfied = False
                undetermined = []
                for (i, opts, pos) in clause:
                    dom = domains[i]
                    inside = dom & opts
                    if pos:
                        if not (dom - opts):
                            satisfied = True
                            break
                        if inside:
                            undetermined.append((i, opts, pos))
                    else:
                        if not inside:
                            satisfied = True
                            break
                        if dom - opts:
                            undetermined.append((i, opts, pos))
                if satisfied:
                    continue
                if not undetermined:
                    return None  # clause falsified
                if len(undetermined) == 1:
                    i, opts, pos = undetermined[0]
                    new = domains[i] & opts if pos else domains[i] - opts
                    if new != domains[i]:
                        if not new:
                            return None
                        domains[i] = new
                        changed = True
            if self.min_costs is not None:
                bound = sum(min(self.min_costs[i][o] for o in dom)
                            for i, dom in enumerate(domains))
                if bound > self.budget:
                    return None
        return domains

    def _ordered_options(self, i, domain):
        stamps = self.refuted_stamp[i]
        return sorted(domain, key=lambda o: (stamps[o], o))

    def next_candidate(self):
        """First unclassified constraint-satisfying assignment under DPLL with
        unit propagation; None once the space is exhausted."""
        domains = [set(range(len(h.options))) for h in self.holes]
        return self._search(domains)

    def _search(self, domains):
        domains = self._propagate([set(d) for d in domains])
        if domains is None:
            return None
        branch = None
        for i, dom in enumerate(domains):
            if len(dom) > 1:
                branch = i
                break
        if branch is None:
            assignment = {h.name: h.options[next(iter(dom))]
                          for h, dom in zip(self.holes, domains)}
            for clause in self.clauses:  # final consistency re-check
                if not any(
                        (next(iter(domains[i])) in opts) == pos
                        for i, opts, pos in clause) and clause:
                    return None
            if not self.fam.satisfies_constraints(assignment):
                return None
            return Realisation(assignment)
        for o in self._ordered_options(branch, domains[branch]):
            child = [set(d) for d in domains]
            child[branch] = {o}
            found = self._search(child)
            if found is not None:
                return found
        return None


def next_candidate(space: AssignmentSpace):
    return space.next_candidate()


# ---------------------------------------------------------------------------
# the verifier loop


def cegis_solve(fam: Family, q: SynthesisQuery) -> SynthesisOutcome:
    stats = Stats()
    timer = Timer().__enter__()
    try:
        if q.kind in ("feasible", "partition"):
            return _threshold(fam, q, stats, q.spec,
                              stop_at_witness=q.kind == "feasible",
                              cache={}, tol=q.tolerance)
        return _optimise(fam, q, stats)
    finally:
        timer.stamp(stats)


def _value_of(fam, r, goal, cache, stats):
    key = tuple(sorted(r.assignment.items()))
    if key not in cache:
        mc = realise(fam, r)
        cache[key] = float(reach_probability(mc, goal)[mc.init])
        stats.checks += 1
    return cache[key]


def _threshold(fam, q, stats, spec, stop_at_witness, cache, tol):
    upper = spec.op in ("<=", "<")
    seed_budget = q.budget if stop_at_witness else None
    space = AssignmentSpace(fam, budget=seed_budget, cost_model=q.cost_model)
    singles = {}
    scopes = []  # (scope, sat)
    witness = None
    while True:
        r = space.next_candidate()
        if r is None:
            break
        stats.candidates += 1
        stats.iterations += 1
        key = r.key(fam)
        if q.budget is not None and stop_at_witness \
                and not _budget_ok(fam, q, r):
            # structural costs are only checkable per candidate
            singles[key] = (False, None)
            space.block_assignment(r)
            continue
        value = _value_of(fam, r, spec.goal, cache, stats)
        sat = compare(value, spec.op, spec.threshold, tol)
        record = {"candidate": r.as_dict(), "value": value, "sat": sat}
        if upper and not sat:
            critical = extract_counterexample(realise(fam, r), spec,
                                              "refute", tol)
            scope = _option_scope(fam, critical, r)
            scopes.append((scope, False))
            space.learn_scope(scope)
            space.mark_refuted(r)
            record.update(critical=sorted(critical),
                          conflict_holes=sorted(scope),
                          pruned=scope_size(fam, scope))
        elif not upper and sat:
            critical = extract_counterexample(realise(fam, r), spec,
                                              "establish", tol)
            scope = _option_scope(fam, critical, r)
            scopes.append((scope, True))
            space.learn_scope(scope)
            record.update(critical=sorted(critical),
                          conflict_holes=sorted(scope),
                          pruned=scope_size(fam, scope))
        else:
            singles[key] = (sat, value)
            space.block_assignment(r)
            if not sat:
                space.mark_refuted(r)
            record["pruned"] = 1
        stats.trace.append(record)
        if sat and stop_at_witness and _budget_ok(fam, q, r):
            witness = (r, value)
            break
    if stop_at_witness:
        if witness is None:
            return SynthesisOutcome("unsat", stats=stats)
        r, value = witness
        c = query_cost(fam, q, r) if q.budget is not None else None
        return SynthesisOutcome("witness", witness=r, value=value, cost=c,
                                stats=stats)
    T, F = [], []
    for r in enumerate_realisations(fam):
        key = r.key(fam)
        if key in singles:
            sat = singles[key][0]
        else:
            sat = None
            for scope, verdict in scopes:
                if scope_matches(scope, r):
                    sat = verdict
                    break
            if sat is None:
                raise AssertionError("exhausted space left %r unclassified"
                                     % r.as_dict())
        if sat and q.budget is not None:
            sat = _budget_ok(fam, q, r)
        (T if sat else F).append(r)
    return SynthesisOutcome("partition", T=T, F=F, stats=stats)


def _budget_ok(fam, q, r):
    return q.budget is None or query_cost(fam, q, r) <= q.budget


def _optimise(fam, q, stats):
    """Max/min synthesis as iterated feasibility: tighten the threshold to
    the incumbent value with a strict operator until unsatisfiable."""
    maximise = q.kind == "max"
    cache = {}
    tol = 1e-9  # strict internal comparisons keep the optimum tight
    goal = q.goal
    spec = Specification(goal, ">=" if maximise else "<=",
                         0.0 if maximise else 1.0)
    out = _threshold(fam, q, stats, spec, stop_at_witness=True,
                     cache=cache, tol=tol)
    if out.kind == "unsat":
        return SynthesisOutcome("unsat", stats=stats)
    best, best_value = out.witness, out.value
    eps = q.epsilon or 0.0
    while True:
        if maximise:
            lam = best_value / (1.0 - eps) if eps else best_value
            if lam > 1.0:
                break
            spec = Specification(goal, ">", lam)
        else:
            lam = best_value * (1.0 - eps) if eps else best_value
            if lam < 0.0:
                break
            spec = Specification(goal, "<", lam)
        out = _threshold(fam, q, stats, spec, stop_at_witness=True,
                         cache=cache, tol=tol)
        if out.kind == "unsat":
            break
        best, best_value = out.witness, out.value
    c = query_cost(fam, q, best) if q.budget is not None else None
    return SynthesisOutcome("witness", witness=best, value=best_value, cost=c,
                            stats=stats)
