import os
import sys

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from rover_parameters import RoverParameters  # noqa: E402
from sim_trace import COLUMNS, SimulationTrace  # noqa: E402
from terrain import TerrainScene  # noqa: E402


@pytest.fixture
def rover_params():
    return RoverParameters()


@pytest.fixture
def flat_scene():
    return TerrainScene()


@pytest.fixture
def make_trace():
    """Build a synthetic trace: zeros everywhere, level attitude, given columns overridden."""
    def build(n, dt=0.01, **columns):
        frame = pd.DataFrame(0.0, index=range(n), columns=list(COLUMNS))
        frame['t'] = (np.arange(n) + 1) * dt
        frame['qw'] = 1.0
        for name, values in columns.items():
            frame[name] = values
        return SimulationTrace(dt=dt, mode='MHS', wheel_radius=0.1, gravity=1.625, frame=frame)
    return build
