"""Simulation traces: per-step records of state and loads, stored as CSV plus a JSON sidecar."""

import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

import quaternion
from config import WHEEL_IDS
from rover_state import RoverState

logger = logging.getLogger(__name__)

STATE_COLUMNS = (
    ['t', 'x', 'y', 'z', 'qw', 'qx', 'qy', 'qz', 'vx', 'vy', 'vz', 'wx', 'wy', 'wz', 'phi', 'phi_rate']
    + [f's_{w}' for w in WHEEL_IDS]
    + [f'sdot_{w}' for w in WHEEL_IDS]
    + [f'spin_{w}' for w in WHEEL_IDS]
)
LOAD_COLUMNS = (
    [f'wheel_x_{w}' for w in WHEEL_IDS]
    + [f'wheel_z_{w}' for w in WHEEL_IDS]
    + [f'contact_{w}' for w in WHEEL_IDS]
    + [f'fn_{w}' for w in WHEEL_IDS]
    + [f'ft_{w}' for w in WHEEL_IDS]
    + [f'mu_{w}' for w in WHEEL_IDS]
    + [f'slip_{w}' for w in WHEEL_IDS]
    + [f'strut_{w}' for w in WHEEL_IDS]
    + [f'load_{w}' for w in WHEEL_IDS]
    + ['torque_left', 'torque_right', 'acc_g']
)
COLUMNS = tuple(STATE_COLUMNS + LOAD_COLUMNS)

_FLOAT_FORMAT = '%.9g'


def _sidecar_path(path: str) -> str:
    return os.path.splitext(path)[0] + '.json'


@dataclass
class SimulationTrace:
    """Time series of one run.

    `frame` holds one row per stored step; `stride` is the number of integrator
    steps between stored rows (1 in memory, configurable when saved).
    """
    dt: float
    mode: str
    wheel_radius: float
    gravity: float
    frame: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=list(COLUMNS)))
    stride: int = 1

    def __len__(self):
        return len(self.frame)

    @property
    def sample_interval(self) -> float:
        return self.dt * self.stride

    @property
    def time(self) -> np.ndarray:
        return self.frame['t'].to_numpy()

    @property
    def duration(self) -> float:
        return float(self.frame['t'].iloc[-1]) if len(self.frame) else 0.0

    def column(self, name: str) -> np.ndarray:
        return self.frame[name].to_numpy()

    def per_wheel(self, prefix: str) -> np.ndarray:
        """(n, 4) array of a per-wheel column family, e.g. 'wheel_x' or 'contact'."""
        return self.frame[[f'{prefix}_{w}' for w in WHEEL_IDS]].to_numpy()

    def roll_pitch(self):
        q = self.frame[['qw', 'qx', 'qy', 'qz']].to_numpy()
        return quaternion.euler_arrays(q)

    def forward_speed(self) -> np.ndarray:
        """Chassis velocity along the body forward axis."""
        q = self.frame[['qw', 'qx', 'qy', 'qz']].to_numpy()
        v = self.frame[['vx', 'vy', 'vz']].to_numpy()
        w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
        forward = np.column_stack((1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)))
        return np.einsum('ij,ij->i', forward, v)

    def state_at(self, index: int) -> RoverState:
        row = self.frame.iloc[index]
        return RoverState(
            chassis_position=row[['x', 'y', 'z']].to_numpy(dtype=float),
            chassis_orientation=row[['qw', 'qx', 'qy', 'qz']].to_numpy(dtype=float),
            chassis_linear_velocity=row[['vx', 'vy', 'vz']].to_numpy(dtype=float),
            chassis_angular_velocity=row[['wx', 'wy', 'wz']].to_numpy(dtype=float),
            rocker_angle=row['phi'],
            rocker_rate=row['phi_rate'],
            strut_travel=row[[f's_{w}' for w in WHEEL_IDS]].to_numpy(dtype=float),
            strut_rate=row[[f'sdot_{w}' for w in WHEEL_IDS]].to_numpy(dtype=float),
            wheel_spin_angle=row[[f'spin_{w}' for w in WHEEL_IDS]].to_numpy(dtype=float),
            time=row['t'],
        )

    def downsampled(self, stride: int) -> 'SimulationTrace':
        """Every `stride`-th row, always keeping the last one."""
        if stride <= 1:
            return self
        index = list(range(0, len(self.frame), stride))
        if index and index[-1] != len(self.frame) - 1:
            index.append(len(self.frame) - 1)
        return SimulationTrace(
            dt=self.dt, mode=self.mode, wheel_radius=self.wheel_radius, gravity=self.gravity,
            frame=self.frame.iloc[index].reset_index(drop=True), stride=self.stride * stride,
        )

    def save(self, path: str):
        """Write the trace CSV and its JSON sidecar."""
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self.frame.to_csv(path, index=False, float_format=_FLOAT_FORMAT)
        with open(_sidecar_path(path), 'w') as f:
            json.dump({
                'dt': self.dt,
                'stride': self.stride,
                'mode': self.mode,
                'wheel_radius': self.wheel_radius,
                'gravity': self.gravity,
            }, f, indent=2, sort_keys=True)
        logger.debug("Saved trace %s (%d rows)", path, len(self.frame))

    @classmethod
    def load(cls, path: str) -> 'SimulationTrace':
        """Read a trace written by `save`."""
        try:
            with open(_sidecar_path(path), 'r') as f:
                meta = json.load(f)
            frame = pd.read_csv(path)
            return cls(
                dt=float(meta['dt']),
                mode=meta['mode'],
                wheel_radius=float(meta['wheel_radius']),
                gravity=float(meta['gravity']),
                frame=frame,
                stride=int(meta.get('stride', 1)),
            )
        except (KeyError, TypeError, json.JSONDecodeError) as e:
            raise ValueError(f"Invalid trace {path}: {e}") from e


class TraceRecorder:
    """Collects rows from `RoverSimulator.on_step` and builds a SimulationTrace."""

    def __init__(self, dt: float, mode: str, wheel_radius: float, gravity: float):
        self.dt = dt
        self.mode = mode
        self.wheel_radius = wheel_radius
        self.gravity = gravity
        self._rows = []

    def __len__(self):
        return len(self._rows)

    def record(self, state: RoverState, report):
        contacts = report.contacts
        in_contact = [1.0 if c is not None else 0.0 for c in contacts]
        fn = [c.normal_force if c is not None else 0.0 for c in contacts]
        ft = [float(np.linalg.norm(c.friction_force)) if c is not None else 0.0 for c in contacts]
        mu = [c.friction if c is not None else 0.0 for c in contacts]
        slip = [c.slip_speed if c is not None else 0.0 for c in contacts]
        row = np.concatenate((
            [state.time], state.chassis_position, state.chassis_orientation,
            state.chassis_linear_velocity, state.chassis_angular_velocity,
            [state.rocker_angle, state.rocker_rate],
            state.strut_travel, state.strut_rate, state.wheel_spin_angle,
            report.wheel_centers[:, 0], report.wheel_centers[:, 2],
            in_contact, fn, ft, mu, slip,
            report.strut_force, report.vertical_load,
            report.pivot_torque, [report.vertical_acceleration],
        ))
        self._rows.append(row)

    def build(self) -> SimulationTrace:
        data = np.vstack(self._rows) if self._rows else np.empty((0, len(COLUMNS)))
        return SimulationTrace(
            dt=self.dt, mode=self.mode, wheel_radius=self.wheel_radius, gravity=self.gravity,
            frame=pd.DataFrame(data, columns=list(COLUMNS)),
        )
