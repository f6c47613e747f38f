"""Shared test fixtures for cs-certify."""

import pytest

from cs_certify.data.standard import arithmetic_progression, six_forms, uk
from cs_certify.diagrams.constructions import diagram_of
from cs_certify.diagrams.solver import solve_hub_morphism
from cs_certify.entailment.replay import CertificateBuilder

SQUARE_SHAPE = {"L;L;1": "00", "L;R;1": "01", "R;L;1": "10", "R;R;1": "11"}


@pytest.fixture
def ap3():
    """x, x+h, x+2h over F_5."""
    return arithmetic_progression(5, 3)


@pytest.fixture
def u2():
    """The U^2 datum over F_5: four indices 00..11 on V = F_5^3."""
    return uk(5, 2)


@pytest.fixture
def u3():
    """The U^3 datum over F_3."""
    return uk(3, 3)


@pytest.fixture
def gw_system():
    """Six forms in (x, y, z) over F_7 with sixth form 2x+3y+6z."""
    return six_forms(7)


@pytest.fixture
def two_step_builder(ap3):
    """Two CS steps on the 3-AP diagram: first at 3, then at both copies of 2."""
    builder = CertificateBuilder(diagram_of(ap3))
    builder.cs(["3"])
    builder.cs(["L;2", "R;2"])
    return builder


@pytest.fixture
def two_step_certificate(two_step_builder):
    return two_step_builder.certificate()


@pytest.fixture
def square_morphism(two_step_builder, u2):
    """The morphism from the U^2 diagram into the twice-joined progression diagram."""
    morph = solve_hub_morphism(u2, two_step_builder.current, SQUARE_SHAPE)
    assert morph is not None
    return morph
