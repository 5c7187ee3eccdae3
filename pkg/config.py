"""Configuration settings for the rover suspension simulator."""

import math
import os

__version__ = "1.0.0"

# Rover model defaults (dynamic model properties of the 4-wheel test rover)
DEFAULT_WHEEL_RADIUS = 0.1        # m
DEFAULT_WHEELBASE = 0.6           # m
DEFAULT_ARM_LENGTH = 0.3          # m, pivot to wheel along the rocker
DEFAULT_WHEEL_TRACK = 0.47        # m
DEFAULT_COM_HEIGHT = 0.25         # m
DEFAULT_SPRING_RATE = 2000.0      # N/m
DEFAULT_DAMPING = 350.0           # N*s/m
DEFAULT_SPRING_FREE_LENGTH = 0.035  # m
DEFAULT_TOTAL_MASS = 19.6         # kg
DEFAULT_FRONT_STATIC_LOAD = 4.8   # kg per front wheel
DEFAULT_REAR_STATIC_LOAD = 5.0    # kg per rear wheel

# Simulation-only constants
DEFAULT_UNSPRUNG_MASS = 1.5       # kg per wheel (wheel + knuckle)
DEFAULT_ROCKER_LIMIT = math.radians(45.0)
DEFAULT_CONTACT_STIFFNESS = 100e3  # N/m
DEFAULT_CONTACT_DAMPING = 200.0   # N*s/m
DEFAULT_FRICTION_REGULARIZATION = 0.01  # m/s
DEFAULT_TIMESTEP = 1e-3           # s
END_STOP_STIFFNESS_RATIO = 50.0   # end-stop stiffness as a multiple of the spring rate

# Gravity fields
LUNAR_GRAVITY = 1.625             # m/s^2
DEFAULT_GRAVITY = LUNAR_GRAVITY
G_UNIT = 9.81                     # m/s^2, acceleration reporting unit

# Terrain
DEFAULT_SOIL_FRICTION = 0.4
DEFAULT_OBSTACLE_FRICTION = 1.0
DEFAULT_ROCK_RADIUS = 0.10
DEFAULT_OUTCROP_LENGTH = 1.5
DEFAULT_OUTCROP_MAX_HEIGHT = 0.10
DEFAULT_OUTCROP_WIDTH = 0.25
DEFAULT_OUTCROP_TAPER = 0.05
DEFAULT_SLOPE_LENGTH = 1.5        # m along the incline
DEFAULT_APPROACH_DISTANCE = 0.3   # m, front wheels to the leading edge of the feature
OUTCROP_WAVELENGTHS = (0.15, 0.27, 0.39, 0.51, 0.63, 0.75)
OUTCROP_SCAN_RESOLUTION = 1e-3    # m

# Scenario rules
DEFAULT_TIMEOUT = 30.0            # s of simulated time
DEFAULT_STALL_SPEED = 0.01        # m/s
DEFAULT_STALL_TIME = 2.0          # s
DEFAULT_TIPOVER_ANGLE = math.radians(60.0)
DEFAULT_CONTACT_FRACTION = 0.95
DEFAULT_FLAT_RUN_DISTANCE = 2.0   # m
TIMEOUT_TRAVEL_MARGIN = 1.5

# Commanded speed limits
MIN_SPEED = 0.05
MAX_SPEED = 1.0

# Sweep grid defaults
DEFAULT_MODES = ("DR", "IE", "MHS")
DEFAULT_SPEEDS = (0.05, 0.1, 0.25, 0.5, 0.75, 1.0)
DEFAULT_STEP_HEIGHTS = tuple(round(0.01 * i, 2) for i in range(1, 13))
DEFAULT_SLOPE_ANGLES_DEG = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
DEFAULT_MODULES = ("step", "rock", "outcrop", "slope")
DEFAULT_TRACE_STRIDE = 10
DEFAULT_JOBS = 1
DEFAULT_SEED = 7

# Metrics
DEFAULT_SIGMA_WINDOW = 1.0        # s

# Report
DEFAULT_TABLE_SCENARIOS = ("rock", "outcrop", "slope:20")
DEFAULT_BASELINE_MODE = "DR"
DEFAULT_CANDIDATE_MODE = "MHS"

# Wheel order used by every per-wheel array
WHEEL_IDS = ("FL", "FR", "RL", "RR")

# Shipped configuration, resolved against this file so any launch directory works
DEFAULT_CONFIG_FILE = os.path.join(
    os.path.dirname(os.path.abspath(__file__)), "default_config.toml"
)
