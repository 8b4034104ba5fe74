"""Shared fixtures: a seeded generator and the bundled example measures."""

from fractions import Fraction as F

import numpy as np
import pytest

from core.schemas import MeasurePayload, VerticesPayload
from src.bhdiag import VertexSet
from src.cases import (
    ARVESON_SOURCE,
    ARVESON_TARGET,
    ARVESON_WITNESS,
    HORN_SOURCE,
    HORN_TARGET,
    SEGMENT,
    TRIANGLE,
)
from src.config import MajlabConfig
from src.runner import MajlabRunner
from src.spectra import AtomicJointMeasure


def measure(payload: dict) -> AtomicJointMeasure:
    return AtomicJointMeasure.from_payload(MeasurePayload(**payload))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def runner():
    return MajlabRunner(MajlabConfig(seed=7))


@pytest.fixture
def arveson_target():
    return measure(ARVESON_TARGET)


@pytest.fixture
def arveson_source():
    return measure(ARVESON_SOURCE)


@pytest.fixture
def arveson_witness():
    return [[F(x) for x in row] for row in ARVESON_WITNESS]


@pytest.fixture
def horn_target():
    return measure(HORN_TARGET)


@pytest.fixture
def horn_source():
    return measure(HORN_SOURCE)


@pytest.fixture
def triangle():
    return VertexSet.from_payload(VerticesPayload(**TRIANGLE))


@pytest.fixture
def segment():
    return VertexSet.from_payload(VerticesPayload(**SEGMENT))
