"""
Configuration module for the dalat toolkit.
"""
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Tolerances
REL_TOL = float(os.getenv('DALAT_REL_TOL', '1e-9'))
ABS_TOL = float(os.getenv('DALAT_ABS_TOL', '1e-12'))
COORD_TOL = float(os.getenv('DALAT_COORD_TOL', '1e-9'))
RANK_TOL = float(os.getenv('DALAT_RANK_TOL', '1e-8'))

# Verification suite defaults
SEED = int(os.getenv('DALAT_SEED', '0'))
BASIS_DEPTH = int(os.getenv('DALAT_BASIS_DEPTH', '8'))
TRUNCATION = int(os.getenv('DALAT_TRUNCATION', '200'))

# Application settings
LOG_LEVEL = os.getenv('DALAT_LOG_LEVEL', 'WARNING')
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def tolerance(scale: float = 1.0, rel: float = None, abs_floor: float = None) -> float:
    """
    Tolerance for a quantity of the given magnitude.

    Args:
        scale: Magnitude of the compared values
        rel: Relative tolerance (defaults to REL_TOL)
        abs_floor: Absolute floor (defaults to ABS_TOL)

    Returns:
        max(rel * scale, abs_floor)
    """
    rel = REL_TOL if rel is None else rel
    abs_floor = ABS_TOL if abs_floor is None else abs_floor
    return max(rel * float(scale), abs_floor)
