import random

import numpy as np
import pytest

from chainsynth.family import Realisation, quotient_mdp, realise
from chainsynth.model import (COMPARISON_TOL, Distribution, MarkovChain, Mdp,
                              MemorylessScheduler, ModelError, Specification,
                              check, compare, induced_chain, mdp_extremal,
                              prob01_states, reach_probability, sub_mc)
from chainsynth.randfam import random_chain, random_critical, random_goal

from conftest import R1, R2, R3, R4


def chain_of(fam, assignment):
    return realise(fam, Realisation(assignment))


# --- distributions ----------------------------------------------------------

def test_distribution_validates():
    with pytest.raises(ModelError):
        Distribution(((0, 0.5), (1, 0.6)))
    with pytest.raises(ModelError):
        Distribution(((0, -0.1), (1, 1.1)))
    with pytest.raises(ModelError):
        Distribution(((0, 0.0), (1, 1.0)))


def test_distribution_merges_duplicate_targets():
    d = Distribution.from_pairs([(3, 0.25), (3, 0.25), (1, 0.5)])
    assert dict(d.entries) == {3: 0.5, 1: 0.5}


def test_dirac():
    d = Distribution.dirac(2)
    assert d.entries == ((2, 1.0),)


def test_chain_reachable_and_dump():
    mc = MarkovChain(3, 0, (Distribution.dirac(1), Distribution.dirac(1),
                            Distribution.dirac(2)))
    assert mc.reachable() == {0, 1}
    assert "state 0" in mc.dump()


# --- comparisons ------------------------------------------------------------

def test_compare_tolerance_band():
    t = COMPARISON_TOL
    assert compare(0.1 - t / 2, ">=", 0.1)
    assert not compare(0.1 - 2 * t, ">=", 0.1)
    assert not compare(0.1 + t / 2, ">", 0.1)
    assert compare(0.1 + 2 * t, ">", 0.1)
    assert compare(0.1 + t / 2, "<=", 0.1)
    assert not compare(0.1 - t / 2, "<", 0.1)
    with pytest.raises(ModelError):
        compare(0.5, "==", 0.5)


def test_specification_validation():
    with pytest.raises(ModelError):
        Specification(frozenset([0]), ">=", 1.5)
    with pytest.raises(ModelError):
        Specification(frozenset([0]), "~", 0.5)
    with pytest.raises(ModelError):
        Specification(frozenset(), ">=", 0.5)


# --- reachability on the running example ------------------------------------

def test_prob01_unreachable_goal_exact(example_family):
    # with k3 = 2, state 4 is unreachable: the probability is exactly 0
    mc = chain_of(example_family, R1)
    prob0, _ = prob01_states(mc, frozenset([4]))
    assert 0 in prob0
    assert reach_probability(mc, [4])[0] == 0.0


def test_prob1_exact(example_family):
    mc = chain_of(example_family, R2)
    _, prob1 = prob01_states(mc, frozenset([4]))
    assert 0 in prob1
    assert reach_probability(mc, [4])[0] == 1.0


def test_reach_values(example_family):
    # hand-derived: with k3 = 4 the goal {4} is reached almost surely,
    # with k3 = 2 it is unreachable; goal {2} is hit almost surely unless
    # both holes route away from state 2 (k2 = 3, k3 = 4)
    for assignment, goal, expect in (
            (R1, [4], 0.0), (R2, [4], 1.0), (R3, [4], 0.0), (R4, [4], 1.0),
            (R1, [2], 1.0), (R2, [2], 1.0), (R3, [2], 1.0), (R4, [2], 0.0)):
        mc = chain_of(example_family, assignment)
        assert reach_probability(mc, goal)[0] == pytest.approx(expect, abs=1e-9)


def test_check(example_family):
    spec = Specification(frozenset([4]), ">=", 0.1)
    assert check(chain_of(example_family, R2), spec) == (True, 1.0)
    sat, value = check(chain_of(example_family, R1), spec)
    assert not sat and value == 0.0


def test_linear_vs_vi_agreement(example_family):
    rng = random.Random(42)
    chains = [chain_of(example_family, a) for a in (R1, R2, R3, R4)]
    goals = [frozenset([4])] * 4
    for _ in range(50):
        mc = random_chain(rng, max_states=30)
        chains.append(mc)
        goals.append(random_goal(rng, mc.n_states))
    for mc, goal in zip(chains, goals):
        lin = reach_probability(mc, goal, method="linear")
        vi = reach_probability(mc, goal, method="vi")
        assert np.max(np.abs(lin - vi)) < 1e-6


def test_reach_rejects_bad_goal():
    mc = MarkovChain(2, 0, (Distribution.dirac(1), Distribution.dirac(1)))
    with pytest.raises(ModelError):
        reach_probability(mc, [5])


# --- sub-MC -----------------------------------------------------------------

def test_sub_mc_value(example_family):
    # freezing everything but the initial state caps the probability at the
    # direct one-step mass into the goal
    mc = chain_of(example_family, R1)
    frag = sub_mc(mc, {0})
    assert reach_probability(frag, [2])[0] == pytest.approx(0.5, abs=1e-12)


def test_sub_mc_keeps_index_space(example_family):
    mc = chain_of(example_family, R1)
    frag = sub_mc(mc, {0})
    assert frag.n_states == mc.n_states
    assert frag.transitions[1].entries == ((1, 1.0),)


def test_sub_mc_requires_init(example_family):
    with pytest.raises(ModelError):
        sub_mc(chain_of(example_family, R1), {1, 2})


def test_sub_mc_monotone_random():
    rng = random.Random(99)
    for _ in range(200):
        mc = random_chain(rng, max_states=20)
        goal = random_goal(rng, mc.n_states)
        critical = random_critical(rng, mc)
        full = reach_probability(mc, goal)
        frag = reach_probability(sub_mc(mc, critical), goal)
        assert (frag <= full + 1e-7).all()


# --- MDP analysis -----------------------------------------------------------

def test_quotient_extremal_bounds(example_family):
    mdp, _ = quotient_mdp(example_family)
    vmax, _ = mdp_extremal(mdp, frozenset([4]), "max")
    vmin, _ = mdp_extremal(mdp, frozenset([4]), "min")
    assert vmax == pytest.approx(1.0, abs=1e-9)
    assert vmin == pytest.approx(0.0, abs=1e-9)


def test_max_scheduler_makes_progress():
    # a value-preserving self-loop must not be chosen by the max scheduler
    mdp = Mdp(2, 0, (
        (("stay", Distribution.dirac(0)), ("go", Distribution.dirac(1))),
        (("loop", Distribution.dirac(1)),),
    ))
    value, sched = mdp_extremal(mdp, frozenset([1]), "max")
    assert value == pytest.approx(1.0)
    induced = induced_chain(mdp, sched)
    assert reach_probability(induced, [1])[0] == pytest.approx(1.0)


def test_schedulers_attain_extremal_values():
    rng = random.Random(5)
    for _ in range(30):
        base = random_chain(rng, max_states=12)
        # add a second random action to every state
        actions = []
        for s in range(base.n_states):
            extra = random_chain(rng, max_states=base.n_states)
            d = extra.transitions[rng.randrange(extra.n_states)]
            entries = tuple((t % base.n_states, p) for t, p in d.entries)
            actions.append((("a", base.transitions[s]),
                            ("b", Distribution.from_pairs(entries))))
        mdp = Mdp(base.n_states, 0, tuple(actions))
        goal = random_goal(rng, base.n_states)
        for mode in ("max", "min"):
            value, sched = mdp_extremal(mdp, goal, mode)
            attained = reach_probability(induced_chain(mdp, sched), goal)[0]
            assert attained == pytest.approx(value, abs=1e-7)


def test_induced_chain_missing_choice():
    mdp = Mdp(2, 0, (
        (("go", Distribution.dirac(1)),),
        (("loop", Distribution.dirac(1)),),
    ))
    with pytest.raises(ModelError):
        induced_chain(mdp, MemorylessScheduler({0: "go"}))


def test_mdp_as_chain():
    mdp = Mdp(2, 0, (
        (("go", Distribution.dirac(1)),),
        (("loop", Distribution.dirac(1)),),
    ))
    mc = mdp.as_chain()
    assert mc.transitions[0].entries == ((1, 1.0),)
    with pytest.raises(ModelError):
        Mdp(1, 0, ((("a", Distribution.dirac(0)),
                    ("b", Distribution.dirac(0))),)).as_chain()
