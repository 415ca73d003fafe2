"""Explicit-state Markov chains and MDPs with a reachability model checker.

All types are immutable after construction; every operation is a pure
function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

PROB_SUM_TOL = 1e-9
COMPARISON_TOL = 1e-6  # default tolerance for threshold comparisons
VI_CONVERGENCE = 1e-10
VI_MAX_SWEEPS = 10 ** 6
DIRECT_SOLVE_LIMIT = 10_000

OPS = ("<", "<=", ">=", ">")


class ModelError(ValueError):
    """Malformed chain, MDP, scheduler or specification."""


@dataclass(frozen=True)
class Distribution:
    """Sparse probability distribution over state indices."""

    entries: tuple  # tuple[(state, probability), ...]

    def __post_init__(self):
        seen = set()
        total = 0.0
        for s, p in self.entries:
            if s in seen:
                raise ModelError("duplicate state %d in distribution" % s)
            seen.add(s)
            if not (0.0 < p <= 1.0):
                raise ModelError("probability %r out of (0, 1]" % p)
            total += p
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ModelError("distribution sums to %r, not 1" % total)

    @staticmethod
    def from_pairs(pairs: Iterable) -> "Distribution":
        """Build a distribution, merging duplicate successor states."""
        merged: dict = {}
        for s, p in pairs:
            merged[s] = merged.get(s, 0.0) + p
        return Distribution(tuple(sorted(merged.items())))

    @staticmethod
    def dirac(state: int) -> "Distribution":
        return Distribution(((state, 1.0),))

    def support(self):
        return [s for s, _ in self.entries]


@dataclass(frozen=True)
class MarkovChain:
    """Finite MC with a contiguous state index set and one distribution per state."""

    n_states: int
    init: int
    transitions: tuple  # tuple[Distribution, ...], one per state

    def __post_init__(self):
        if len(self.transitions) != self.n_states:
            raise ModelError("expected %d distributions, got %d"
                             % (self.n_states, len(self.transitions)))
        if not (0 <= self.init < self.n_states):
            raise ModelError("initial state %d out of range" % self.init)
        for s, dist in enumerate(self.transitions):
            for t, _ in dist.entries:
                if not (0 <= t < self.n_states):
                    raise ModelError("state %d has successor %d outside S" % (s, t))

    def successors(self, s: int):
        return self.transitions[s].support()

    def reachable(self) -> set:
        """States reachable from the initial state."""
        seen = {self.init}
        stack = [self.init]
        while stack:
            s = stack.pop()
            for t in self.successors(s):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen

    def dump(self) -> str:
        """Line-oriented text dump: ``state i: p1 -> j1, p2 -> j2``."""
        lines = []
        for s, dist in enumerate(self.transitions):
            body = ", ".join("%g -> %d" % (p, t) for t, p in dist.entries)
            lines.append("state %d: %s" % (s, body))
        return "\n".join(lines)


@dataclass(frozen=True)
class Mdp:
    """Finite MDP; every state carries a nonempty list of labeled distributions."""

    n_states: int
    init: int
    actions: tuple  # tuple[tuple[(label, Distribution), ...], ...]

    def __post_init__(self):
        if len(self.actions) != self.n_states:
            raise ModelError("expected %d action lists, got %d"
                             % (self.n_states, len(self.actions)))
        if not (0 <= self.init < self.n_states):
            raise ModelError("initial state %d out of range" % self.init)
        for s, acts in enumerate(self.actions):
            if not acts:
                raise ModelError("state %d has no actions" % s)
            labels = [a for a, _ in acts]
            if len(set(labels)) != len(labels):
                raise ModelError("state %d has duplicate action labels" % s)
            for _, dist in acts:
                for t, _ in dist.entries:
                    if not (0 <= t < self.n_states):
                        raise ModelError("state %d has successor %d outside S" % (s, t))

    def labels(self, s: int):
        return [a for a, _ in self.actions[s]]

    def dist(self, s: int, label) -> Distribution:
        for a, dist in self.actions[s]:
            if a == label:
                return dist
        raise ModelError("state %d has no action %r" % (s, label))

    def as_chain(self) -> MarkovChain:
        """Round-trip an action-degenerate MDP back to an MC."""
        if any(len(acts) != 1 for acts in self.actions):
            raise ModelError("MDP has states with more than one action")
        return MarkovChain(self.n_states, self.init,
                           tuple(acts[0][1] for acts in self.actions))


@dataclass(frozen=True)
class Specification:
    """Reachability specification: probability of eventually hitting `goal`
    compared against `threshold` with `op`."""

    goal: frozenset
    op: str
    threshold: float

    def __post_init__(self):
        if self.op not in OPS:
            raise ModelError("unknown comparison operator %r" % self.op)
        if not self.goal:
            raise ModelError("goal set is empty")
        if not (0.0 <= self.threshold <= 1.0):
            raise ModelError("threshold %r outside [0, 1]" % self.threshold)

    def check_goal(self, n_states: int):
        for g in self.goal:
            if not (0 <= g < n_states):
                raise ModelError("goal state %d outside S" % g)


@dataclass(frozen=True)
class MemorylessScheduler:
    """Maps state index to the label of the chosen action."""

    choice: Mapping

    def __getitem__(self, s):
        return self.choice[s]


def compare(value: float, op: str, threshold: float,
            tol: float = COMPARISON_TOL) -> bool:
    """Threshold comparison with a symmetric tolerance band.

    ``>= t`` accepts value >= t - tol, ``> t`` demands value > t + tol;
    the <=/< cases mirror this.
    """
    if op == ">=":
        return value >= threshold - tol
    if op == ">":
        return value > threshold + tol
    if op == "<=":
        return value <= threshold + tol
    if op == "<":
        return value < threshold - tol
    raise ModelError("unknown comparison operator %r" % op)


# ---------------------------------------------------------------------------
# qualitative precomputation


def _backward_reach(n_states, predecessors, seeds, blocked=frozenset()):
    """States with a path to `seeds` whose intermediate states avoid `blocked`."""
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        t = stack.pop()
        for s in predecessors[t]:
            if s not in seen and s not in blocked:
                seen.add(s)
                stack.append(s)
    return seen


def _mc_predecessors(mc: MarkovChain):
    preds = [[] for _ in range(mc.n_states)]
    for s, dist in enumerate(mc.transitions):
        for t, _ in dist.entries:
            preds[t].append(s)
    return preds


def prob01_states(mc: MarkovChain, goal: frozenset):
    """Exact prob-0 and prob-1 state sets for reaching `goal` in an MC."""
    preds = _mc_predecessors(mc)
    can_reach = _backward_reach(mc.n_states, preds, goal)
    prob0 = set(range(mc.n_states)) - can_reach
    # value < 1 iff the state can reach prob0 without passing through goal
    lt_one = _backward_reach(mc.n_states, preds, prob0, blocked=goal)
    prob1 = set(range(mc.n_states)) - lt_one
    return prob0, prob1


def reach_probability(mc: MarkovChain, goal, method: str = "auto") -> np.ndarray:
    """Probability of eventually reaching `goal`, for every state.

    Qualitative 0/1 states are fixed graph-theoretically; the rest solve the
    linear fixed point x_s = sum_t P(s,t) x_t, either by a direct sparse solve
    or by value iteration (method "auto" switches on state count).
    """
    goal = frozenset(goal)
    for g in goal:
        if not (0 <= g < mc.n_states):
            raise ModelError("goal state %d outside S" % g)
    prob0, prob1 = prob01_states(mc, goal)
    x = np.zeros(mc.n_states)
    for s in prob1:
        x[s] = 1.0
    unknown = sorted(set(range(mc.n_states)) - prob0 - prob1)
    if not unknown:
        return x
    index = {s: i for i, s in enumerate(unknown)}
    n = len(unknown)
    rows, cols, vals = [], [], []
    b = np.zeros(n)
    for s in unknown:
        i = index[s]
        for t, p in mc.transitions[s].entries:
            if t in index:
                rows.append(i)
                cols.append(index[t])
                vals.append(p)
            elif t in prob1:
                b[i] += p
    P = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    if method == "auto":
        method = "linear" if n <= DIRECT_SOLVE_LIMIT else "vi"
    if method == "linear":
        if n <= 600:
            sol = np.linalg.solve(np.eye(n) - P.toarray(), b)
        else:
            sol = spla.spsolve(sp.identity(n, format="csr") - P, b)
    elif method == "vi":
        sol = np.zeros(n)
        for _ in range(VI_MAX_SWEEPS):
            nxt = P.dot(sol) + b
            if np.max(np.abs(nxt - sol)) < VI_CONVERGENCE:
                sol = nxt
                break
            sol = nxt
    else:
        raise ModelError("unknown method %r" % method)
    x[unknown] = np.clip(sol, 0.0, 1.0)
    return x


def check(mc: MarkovChain, spec: Specification, tol: float = COMPARISON_TOL):
    """Model-check a reachability specification; returns (verdict, value at init)."""
    spec.check_goal(mc.n_states)
    value = float(reach_probability(mc, spec.goal)[mc.init])
    return compare(value, spec.op, spec.threshold, tol), value


def sub_mc(mc: MarkovChain, critical) -> MarkovChain:
    """Sub-MC for a critical state set containing the initial state.

    The original index space is kept; every state outside the critical set is
    made absorbing via a self-loop.
    """
    critical = set(critical)
    if mc.init not in critical:
        raise ModelError("critical set must contain the initial state")
    transitions = []
    for s in range(mc.n_states):
        if s in critical:
            transitions.append(mc.transitions[s])
        else:
            transitions.append(Distribution.dirac(s))
    return MarkovChain(mc.n_states, mc.init, tuple(transitions))


# ---------------------------------------------------------------------------
# MDP analysis


def _mdp_predecessors(mdp: Mdp):
    preds = [set() for _ in range(mdp.n_states)]
    for s, acts in enumerate(mdp.actions):
        for _, dist in acts:
            for t, _ in dist.entries:
                preds[t].add(s)
    return [sorted(p) for p in preds]


def _prob0_max(mdp: Mdp, goal):
    """States whose maximal reachability probability is exactly 0."""
    can_reach = _backward_reach(mdp.n_states, _mdp_predecessors(mdp), goal)
    return set(range(mdp.n_states)) - can_reach


def _prob1_max(mdp: Mdp, goal):
    """States whose maximal reachability probability is exactly 1 (Prob1E)."""
    goal = set(goal)
    Y = set(range(mdp.n_states))
    while True:
        X = set(goal)
        changed = True
        while changed:
            changed = False
            for s in range(mdp.n_states):
                if s in X:
                    continue
                for _, dist in mdp.actions[s]:
                    succ = dist.support()
                    if all(t in Y for t in succ) and any(t in X for t in succ):
                        X.add(s)
                        changed = True
                        break
        if X == Y:
            return Y
        Y = X


def _prob0_min(mdp: Mdp, goal):
    """States where some scheduler reaches the goal with probability 0."""
    goal = set(goal)
    X = set(range(mdp.n_states)) - goal
    changed = True
    while changed:
        changed = False
        for s in sorted(X):
            if not any(all(t in X for t in dist.support())
                       for _, dist in mdp.actions[s]):
                X.discard(s)
                changed = True
    return X


def _prob1_min(mdp: Mdp, goal):
    """States whose minimal reachability probability is exactly 1."""
    goal = set(goal)
    avoid0 = _prob0_min(mdp, goal)
    # min < 1 iff some scheduler reaches avoid0 with positive probability
    # without passing through the goal first
    preds = _mdp_predecessors(mdp)
    lt_one = _backward_reach(mdp.n_states, preds, avoid0, blocked=goal)
    return set(range(mdp.n_states)) - lt_one


def mdp_extremal(mdp: Mdp, goal, mode: str, tol: float = 1e-9):
    """Optimal reachability probability at the initial state plus a witness.

    Qualitative prob-0/prob-1 sets are computed graph-theoretically, value
    iteration solves the rest, and the witness scheduler is extracted with a
    progress-aware tie-break so that its induced chain attains the value.
    """
    goal = frozenset(goal)
    for g in goal:
        if not (0 <= g < mdp.n_states):
            raise ModelError("goal state %d outside S" % g)
    if mode not in ("min", "max"):
        raise ModelError("mode must be 'min' or 'max'")
    if mode == "max":
        prob0, prob1 = _prob0_max(mdp, goal), _prob1_max(mdp, goal)
    else:
        prob0, prob1 = _prob0_min(mdp, goal), _prob1_min(mdp, goal)

    x = np.zeros(mdp.n_states)
    for s in prob1:
        x[s] = 1.0
    unknown = sorted(set(range(mdp.n_states)) - prob0 - prob1)
    if unknown:
        opt = max if mode == "max" else min
        for _ in range(VI_MAX_SWEEPS):
            delta = 0.0
            for s in unknown:
                best = opt(sum(p * x[t] for t, p in dist.entries)
                           for _, dist in mdp.actions[s])
                delta = max(delta, abs(best - x[s]))
                x[s] = best
            if delta < VI_CONVERGENCE:
                break

    choice = {}
    if mode == "min":
        for s in range(mdp.n_states):
            best_label, best_val = None, None
            for label, dist in mdp.actions[s]:
                v = sum(p * x[t] for t, p in dist.entries)
                if best_val is None or v < best_val - tol:
                    best_label, best_val = label, v
            choice[s] = best_label
    else:
        # positive-value states need a progress-aware tie-break: a value-
        # preserving self-loop satisfies the fixed point but never reaches G
        settled = set(goal) | {s for s in range(mdp.n_states) if x[s] <= tol}
        for s in settled:
            choice.setdefault(s, mdp.actions[s][0][0])
        pending = [s for s in range(mdp.n_states) if s not in settled]
        while pending:
            progressed = False
            for s in list(pending):
                cand = [(label, dist) for label, dist in mdp.actions[s]
                        if sum(p * x[t] for t, p in dist.entries) >= x[s] - tol]
                for label, dist in cand:
                    if any(t in settled and t != s for t in dist.support()):
                        choice[s] = label
                        settled.add(s)
                        pending.remove(s)
                        progressed = True
                        break
            if not progressed:
                for s in pending:  # unreachable under any optimal play
                    choice[s] = mdp.actions[s][0][0]
                break
    sched = MemorylessScheduler(choice)
    return float(x[mdp.init]), sched


def induced_chain(mdp: Mdp, sched: MemorylessScheduler) -> MarkovChain:
    """MC obtained by resolving every choice with a memoryless scheduler."""
    transitions = []
    reachable = {mdp.init}
    stack = [mdp.init]
    while stack:
        s = stack.pop()
        if s not in sched.choice:
            raise ModelError("scheduler has no choice for reachable state %d" % s)
        for t, _ in mdp.dist(s, sched.choice[s]).entries:
            if t not in reachable:
                reachable.add(t)
                stack.append(t)
    for s in range(mdp.n_states):
        if s in sched.choice:
            transitions.append(mdp.dist(s, sched.choice[s]))
        else:
            transitions.append(mdp.actions[s][0][1])
    return MarkovChain(mdp.n_states, mdp.init, tuple(transitions))
