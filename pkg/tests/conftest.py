"""Shared fixtures: catalog entries and small reference targets."""

import math

import pytest

from scatterid import geometry as geo

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    """Surface the per-criterion acceptance lines in the final report."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def catalog():
    return geo.catalog()


@pytest.fixture(scope="session")
def catalog_by_name(catalog):
    return {c.name: c for c in catalog}


@pytest.fixture(scope="session")
def concentric():
    """Exterior disk radius 0.5 (materials 3/3) with a concentric radius-0.2
    inclusion (materials 6/6): diagonal by symmetry, oracle-checkable."""
    return geo.TargetConfig(
        "concentric", geo.Circle(0.5), geo.Material(3.0, 3.0),
        inclusions=(geo.Inclusion(geo.Circle(0.2), geo.Material(6.0, 6.0)),))


@pytest.fixture(scope="session")
def contrast_one():
    """Geometry present but all materials equal to the background."""
    return geo.TargetConfig(
        "contrast1", geo.Circle(0.5), geo.Material(1.0, 1.0),
        inclusions=(geo.Inclusion(geo.Circle(0.2, center=(0.12, -0.05)),
                                  geo.Material(1.0, 1.0)),))


@pytest.fixture(scope="session")
def reference_motion():
    return geo.RigidMotion(z=(-0.5, 0.5), s=1.2, theta=math.pi / 3.0)
