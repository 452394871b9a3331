"""Shared fixtures: the named example systems used across the suite."""

from __future__ import annotations

import math

import pytest

from affmf.matrix2 import Mat2
from affmf.symbolic import BernoulliWeights
from affmf.system import AffineIFS


@pytest.fixture(scope="session")
def d2() -> AffineIFS:
    """Diagonal pair diag(0.5, 0.2), diag(0.3, 0.25) with separated carpet translations."""
    return AffineIFS.from_arrays(
        [[[0.5, 0.0], [0.0, 0.2]], [[0.3, 0.0], [0.0, 0.25]]],
        [(0.0, 0.0), (0.7, 0.75)],
    )


@pytest.fixture(scope="session")
def mu64() -> BernoulliWeights:
    return BernoulliWeights((0.6, 0.4))


@pytest.fixture(scope="session")
def mu_half() -> BernoulliWeights:
    return BernoulliWeights((0.5, 0.5))


@pytest.fixture(scope="session")
def p1() -> AffineIFS:
    """Strictly positive, strongly dominated pair."""
    return AffineIFS.from_arrays(
        [[[0.34, 0.06], [0.05, 0.20]], [[0.19, 0.07], [0.08, 0.31]]],
        [(0.0, 0.0), (0.6, 0.65)],
    )


@pytest.fixture(scope="session")
def mu55() -> BernoulliWeights:
    return BernoulliWeights((0.55, 0.45))


@pytest.fixture(scope="session")
def equal_maps() -> AffineIFS:
    """Two copies of diag(0.4, 0.2): degenerate spectrum."""
    return AffineIFS.from_arrays(
        [[[0.4, 0.0], [0.0, 0.2]], [[0.4, 0.0], [0.0, 0.2]]],
        [(0.0, 0.0), (0.6, 0.75)],
    )


@pytest.fixture(scope="session")
def rotation() -> AffineIFS:
    """Conformal singleton: half-scale rotation by 45 degrees."""
    return AffineIFS((Mat2.rotation(math.pi / 4.0, 0.5),), ((0.2, 0.1),))
