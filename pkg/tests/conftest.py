import os

import pytest

from chainsynth import sketch
from chainsynth.family import Family, Fixed, Hole, HoleRef

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SKETCHES = os.path.join(ROOT, "sketches")


def toy_path():
    return os.path.join(SKETCHES, "toy.sk")


@pytest.fixture(scope="session")
def toy_family():
    with open(toy_path()) as fh:
        return sketch.elaborate(sketch.parse(fh.read()))


@pytest.fixture(scope="session")
def example_family():
    """The running-example family built directly, bypassing the sketch
    front end, so model/family tests do not depend on the parser."""
    return Family(
        5, 0,
        (Hole("k2", ("2", "3")), Hole("k3", ("2", "4"))),
        (
            ((0.5, Fixed(1)), (0.5, HoleRef.single("k2", {"2": 2, "3": 3}))),
            ((0.1, Fixed(0)), (0.9, Fixed(1))),
            ((1.0, HoleRef.single("k3", {"2": 2, "4": 4})),),
            ((0.2, Fixed(3)), (0.8, HoleRef.single("k3", {"2": 2, "4": 4}))),
            ((1.0, Fixed(4)),),
        ))


R1 = {"k2": "2", "k3": "2"}
R2 = {"k2": "2", "k3": "4"}
R3 = {"k2": "3", "k3": "2"}
R4 = {"k2": "3", "k3": "4"}
