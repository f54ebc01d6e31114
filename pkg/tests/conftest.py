import math

import numpy as np
import pytest

from discbilliard.geometry import validate_polygon
from discbilliard.table import build_equivalent_table

L_VERTS = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
SQUARE_VERTS = [(0, 0), (1, 0), (1, 1), (0, 1)]


@pytest.fixture
def l_polygon():
    return validate_polygon(L_VERTS)


@pytest.fixture
def square():
    return validate_polygon(SQUARE_VERTS)


@pytest.fixture
def l_table(l_polygon):
    return build_equivalent_table(l_polygon, 0.2)


@pytest.fixture
def l_table0(l_polygon):
    return build_equivalent_table(l_polygon, 0.0)


def random_star_polygon(rng, n, convex=False):
    """Simple polygon star-shaped about the origin; convex when requested."""
    while True:
        ang = np.sort(rng.uniform(0, 2 * math.pi, n))
        if np.min(np.diff(np.append(ang, ang[0] + 2 * math.pi))) < 0.15:
            continue
        rad = np.ones(n) if convex else rng.uniform(0.35, 1.0, n)
        pts = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        try:
            return validate_polygon(pts)
        except ValueError:
            continue


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
