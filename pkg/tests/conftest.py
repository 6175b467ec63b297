import pytest

from mcterm.dsl import parse_system

EX1_TEXT = """\
# two self-loops on one flow point; not expressible as size-change graphs
vars x y z
point f
mc G1 f -> f { x < y, z = y', x' > z' }
mc G2 f -> f { x >= y, z > z', x' > y' }
"""

EX1_SCG_TEXT = """\
# best size-change approximation of the same program; loses the proof
vars x y z
point f
mc G1scg f -> f { z > y' }
mc G2scg f -> f { z > z' }
"""

EX1_HAND_RANKING = """\
point f
  if y > x -> <1, z>
  if x >= y -> <0, z>
"""

ELAB_EXAMPLE_TEXT = """\
vars x1 x2
point f
mc G f -> f { x1 > x1', x2 >= x2', x1' >= x2' }
"""


@pytest.fixture
def ex1():
    return parse_system(EX1_TEXT)


@pytest.fixture
def ex1_scg():
    return parse_system(EX1_SCG_TEXT)


@pytest.fixture
def elab_example():
    return parse_system(ELAB_EXAMPLE_TEXT)


def mc_by_name(cs, name):
    for mc in cs.mcs:
        if mc.name == name:
            return mc
    raise KeyError(name)
