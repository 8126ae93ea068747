"""
Configuration module for soltrans
Loads settings from environment variables
"""
import math
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Base paths
BASE_DIR = Path(__file__).resolve().parent.parent
OUTPUT_DIR = Path(os.getenv('SOLTRANS_OUTPUT_DIR', BASE_DIR / 'output'))
LOGS_PATH = Path(os.getenv('LOGS_PATH', BASE_DIR / 'logs'))

# Logging Configuration
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_JSON = os.getenv('LOG_JSON', 'False').lower() in ('true', '1', 'yes', 'on')
LOG_COMMANDS = os.getenv('LOG_COMMANDS', 'True').lower() in ('true', '1', 'yes', 'on')

# Finite differences
FD_STEP = float(os.getenv('FD_STEP', '1e-4'))          # geometry oracles
ORACLE_STEP = float(os.getenv('ORACLE_STEP', '1e-3'))  # surface oracles

# Integrator (embedded 5(4) pair)
INTEGRATOR_ATOL = float(os.getenv('INTEGRATOR_ATOL', '1e-10'))
INTEGRATOR_RTOL = float(os.getenv('INTEGRATOR_RTOL', '1e-10'))
INTEGRATOR_MAX_STEP = float(os.getenv('INTEGRATOR_MAX_STEP', '0.05'))
INTEGRATOR_MAX_GROWTH = 5.0
INTEGRATOR_MIN_SHRINK = 0.2
INTEGRATOR_SAFETY = 0.9
INTEGRATOR_INITIAL_STEP = 1e-3
INTEGRATOR_MIN_STEP = 1e-14
EQUILIBRIUM_TOL = 1e-9
STALL_TOL = 1e-12

# Zeros of the angle equation
ROOT_TOL = 1e-12
DEGENERACY_TOL = 1e-12
SCAN_STEP = math.pi / 64
TRIG_SNAP = 1e-13

# Classification
BOUNDARY_TOL = 1e-9
EXISTENCE_TOL = 1e-12  # relative to the terms of lambda~ and eta~
TAIL_FRACTION = 0.25
MIN_TAIL_SAMPLES = 50
FIT_ACCEPT_TOL = 1e-3
CLASSIFY_S_MAX = 50.0
HALF_LOG_S_MAX = 200.0

# Surfaces
MESH_U_RANGE = (-3.0, 3.0)
MESH_U_SAMPLES = 64

# CLI
SWEEP_WORKERS = int(os.getenv('SWEEP_WORKERS', '1'))
FIGURE_S_MAX = 30.0
VERIFY_SAMPLES = 100
VERIFY_RANDOM_S_MAX = 6.0
ORACLE_S_WINDOW = 10.0   # oracle samples are drawn from |s| <= window
ORACLE_Z_WINDOW = 2.0    # and |z| <= window
ORACLE_TOLERANCES = {
    "killing": 1e-6,
    "torsion": 1e-6,
    "metric_compatibility": 1e-15,
    "first_integral": 1e-8,
    "unit_speed": 1e-8,
    "H": 1e-4,
    "K": 1e-4,
    "translator": 1e-4,
    "soliton_flow": 1e-4,
    "arc_length": 1e-8,
}

# Debug mode
DEBUG = os.getenv('DEBUG', 'False').lower() == 'true'


def validate_config():
    """Validate numeric configuration parameters"""
    errors = []

    for name, value in (
        ('FD_STEP', FD_STEP),
        ('ORACLE_STEP', ORACLE_STEP),
        ('INTEGRATOR_ATOL', INTEGRATOR_ATOL),
        ('INTEGRATOR_RTOL', INTEGRATOR_RTOL),
        ('INTEGRATOR_MAX_STEP', INTEGRATOR_MAX_STEP),
    ):
        if not value > 0:
            errors.append(f"{name} must be positive (got {value})")

    if SWEEP_WORKERS < 1:
        errors.append("SWEEP_WORKERS must be at least 1")

    if errors:
        raise ValueError(f"Configuration errors: {', '.join(errors)}")

    return True


# Validate on import
if not DEBUG:
    try:
        validate_config()
    except ValueError as e:
        print(f"⚠️  Configuration warning: {e}")
