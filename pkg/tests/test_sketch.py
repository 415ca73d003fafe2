import pytest

from chainsynth.family import Fixed, HoleRef, Realisation, realise
from chainsynth.sketch import (SketchError, elaborate, goal_states, parse,
                               pretty_print)

from conftest import SKETCHES


def load(name):
    with open("%s/%s" % (SKETCHES, name)) as fh:
        return fh.read()


def elaborated(name):
    return elaborate(parse(load(name)))


def test_parse_toy_structure():
    prog = parse(load("toy.sk"))
    assert [h.name for h in prog.holes] == ["k2", "k3"]
    assert [o.label for o in prog.holes[0].options] == ["2", "3"]
    assert prog.module_name == "encode"
    assert len(prog.variables) == 1 and prog.variables[0].name == "s"
    assert len(prog.commands) == 5


def test_elaborate_toy():
    fam = elaborated("toy.sk")
    assert fam.n_states == 5
    assert fam.variables == ("s",)
    assert fam.valuations == tuple((s,) for s in range(5))
    row = fam.transitions[0]
    assert row[0] == (0.5, Fixed(1))
    assert row[1] == (0.5, HoleRef(("k2",), {("2",): 2, ("3",): 3}))
    assert fam.transitions[4] == ((1.0, Fixed(4)),)


def test_named_options_and_costs():
    fam = elaborated("power.sk")
    thr = fam.hole("thr")
    assert thr.options == ("low", "high")
    assert thr.costs == (1, 5)


def test_guard_holes_direct_distribution_choice():
    # the enabled command depends on the hole, so the branch targets must
    # resolve through it
    fam = elaborated("power.sk")
    idx = fam.valuations.index((1, 0))  # q=1, on=0
    holes = {h for _, tgt in fam.transitions[idx] for h in tgt.holes()}
    assert "thr" in holes
    # under thr=low the wake-up command fires, under thr=high the fill one
    low = realise(fam, Realisation({"thr": "low", "drop": "0"}))
    high = realise(fam, Realisation({"thr": "high", "drop": "0"}))
    assert dict(low.transitions[idx].entries) == {fam.valuations.index((1, 1)): 1.0}
    succ = dict(high.transitions[idx].entries)
    assert succ == {fam.valuations.index((2, 0)): 0.5,
                    fam.valuations.index((1, 0)): 0.5}


def test_multi_hole_update():
    fam = elaborated("sensors.sk")
    # the first command writes both feature flags in a single update
    tgt = fam.transitions[0][0][1]
    assert isinstance(tgt, HoleRef)
    assert set(tgt.hole_names) == {"fa", "fb"}
    assert len(tgt.table) == 4


def test_sketch_constraints():
    fam = elaborated("sensors.sk")
    assert len(fam.constraints) == 1
    assert not fam.satisfies_constraints({"fa": "a0", "fb": "b0"})
    assert fam.satisfies_constraints({"fa": "a1", "fb": "b0"})


def test_goal_states():
    fam = elaborated("toy.sk")
    assert goal_states(fam, "s=4") == frozenset([4])
    assert goal_states(fam, "s>=2 & s<=3") == frozenset([2, 3])
    assert goal_states(fam, "s=0 | s=4") == frozenset([0, 4])
    with pytest.raises(SketchError):
        goal_states(fam, "s=@k2@")
    pw = elaborated("power.sk")
    assert goal_states(pw, "on=1 & q=0") == frozenset(
        [pw.valuations.index((0, 1))])


def test_pretty_print_roundtrip():
    prog = parse(load("power.sk"))
    again = parse(pretty_print(prog))
    assert elaborate(again) == elaborate(prog)


def test_plus_ambiguity_in_updates():
    fam = elaborate(parse("""
        module inc
        s : [0..2] init 0;
        s < 2 -> 0.5: s'=s+1 + 0.5: s'=0;
        s = 2 -> 1: s'=2;
        endmodule
    """))
    assert fam.transitions[0] == ((0.5, Fixed(1)), (0.5, Fixed(0)))
    assert fam.transitions[1] == ((0.5, Fixed(2)), (0.5, Fixed(0)))


MINI = """
hole @k@ either { 0, 1 }
module m
s : [0..1] init 0;
%s
endmodule
"""


def test_overlapping_guards_rejected():
    with pytest.raises(SketchError, match="overlap"):
        elaborate(parse(MINI % "s >= 0 -> 1: s'=1;\ns = 0 -> 1: s'=0;\n"
                        "s = 1 -> 1: s'=1;"))


def test_missing_command_rejected():
    with pytest.raises(SketchError, match="no command"):
        elaborate(parse(MINI % "s = 0 -> 1: s'=1;"))


def test_update_out_of_bounds():
    with pytest.raises(SketchError, match="bounds"):
        elaborate(parse(MINI % "s <= 1 -> 1: s'=s+1;"))


def test_probability_sum_checked():
    with pytest.raises(SketchError, match="sum"):
        elaborate(parse(MINI % "s <= 1 -> 0.5: s'=0 + 0.4: s'=1;"))


def test_hole_in_probability_rejected():
    with pytest.raises(SketchError, match="probability"):
        elaborate(parse(MINI % "s <= 1 -> @k@: s'=0 + 1-@k@: s'=1;"))


def test_unknown_hole_rejected():
    with pytest.raises(SketchError, match="unknown hole"):
        elaborate(parse(MINI % "s <= 1 -> 1: s'=@nope@;"))


def test_duplicate_hole_rejected():
    with pytest.raises(SketchError, match="duplicate"):
        parse("hole @k@ either { 0 }\nhole @k@ either { 1 }\n"
              "module m\ns : [0..1] init 0;\ns<=1 -> 1: s'=0;\nendmodule")


def test_duplicate_option_name_rejected():
    with pytest.raises(SketchError, match="twice"):
        elaborate(parse(
            "hole @a@ either { x is 0 }\nhole @b@ either { x is 1 }\n"
            "module m\ns : [0..1] init 0;\ns<=1 -> 1: s'=0;\nendmodule"))


def test_competing_commands_need_equal_probabilities():
    text = ("hole @k@ either { 0, 1 }\nmodule m\ns : [0..2] init 0;\n"
            "s = @k@ -> 0.5: s'=1 + 0.5: s'=2;\n"
            "s != @k@ & s < 2 -> 1: s'=2;\n"
            "s = 2 -> 1: s'=2;\nendmodule")
    with pytest.raises(SketchError, match="branch probabilities"):
        elaborate(parse(text))


def test_state_bound_enforced():
    with pytest.raises(SketchError, match="exceeds"):
        elaborate(parse("module m\ns : [0..9] init 0;\n"
                        "s < 9 -> 1: s'=s+1;\ns = 9 -> 1: s'=9;\nendmodule"),
                  max_states=3)


def test_parse_error_has_position():
    with pytest.raises(SketchError, match=r"\d+:\d+"):
        parse("module m\ns : [0..1] init 0\nendmodule")
