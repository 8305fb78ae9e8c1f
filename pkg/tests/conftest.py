"""Shared terrain builders and robot fixtures."""

import math

import numpy as np
import pytest

from flipperbench.geometry import RobotGeometry
from flipperbench.gridmap import HeightMap
from flipperbench.policies import PolicyConfig


def make_flat(x_len=12.0, y_len=4.0, res=0.05, x0=-2.0, y0=-2.0, height=0.0):
    n_cols = int(round(x_len / res)) + 1
    n_rows = int(round(y_len / res)) + 1
    return HeightMap(res, (x0, y0), np.full((n_rows, n_cols), float(height)))


def make_ramp(alpha_deg, x_ramp=2.0, x_len=14.0, y_len=4.0, res=0.05, x0=-2.0, y0=-2.0):
    """Flat up to x_ramp, then a uniform uphill ramp of the given grade."""
    n_cols = int(round(x_len / res)) + 1
    n_rows = int(round(y_len / res)) + 1
    xs = x0 + np.arange(n_cols) * res
    slope = math.tan(math.radians(alpha_deg))
    row = np.maximum(0.0, (xs - x_ramp) * slope)
    return HeightMap(res, (x0, y0), np.tile(row, (n_rows, 1)))


@pytest.fixture
def geometry():
    return RobotGeometry()


@pytest.fixture
def flat():
    return make_flat()


@pytest.fixture
def pconf(geometry):
    return PolicyConfig(d_d=geometry.d_d)
