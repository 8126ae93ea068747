"""
Command-line value parsing
Killing fields as coefficient triples in the F1, F2, F3 basis and sweep grids
"""
import logging
import math
from typing import Dict

import numpy as np

from soltrans.errors import UsageError
from soltrans.models import KillingField

logger = logging.getLogger(__name__)


# Parameters a sweep grid may vary
GRID_NAMES = ('lam', 'mu', 'theta0')

# Named constants accepted wherever a number is expected
CONSTANTS = {
    'pi': math.pi,
    '-pi': -math.pi,
    'pi/2': math.pi / 2,
    '-pi/2': -math.pi / 2,
    'pi/4': math.pi / 4,
    '-pi/4': -math.pi / 4,
    'pi/8': math.pi / 8,
    '-pi/8': -math.pi / 8,
}


def parse_float(token: str, what: str = "number") -> float:
    """
    Parse a finite real number

    Args:
        token: text such as "0.5", "-3e-2" or "pi/2"
        what: name used in the error message

    Returns:
        The parsed value

    Raises:
        UsageError: if the token is not a finite number
    """
    text = token.strip()
    if text.lower() in CONSTANTS:
        return CONSTANTS[text.lower()]
    try:
        value = float(text)
    except ValueError:
        raise UsageError(f"Malformed {what}", token) from None
    if not math.isfinite(value):
        raise UsageError(f"{what} must be finite", token)
    return value


def parse_killing(text: str, what: str = "Killing field") -> KillingField:
    """"a,b,c" -> a F1 + b F2 + c F3"""
    parts = text.split(',')
    if len(parts) != 3:
        raise UsageError(f"{what} needs three comma-separated coefficients", text)
    return KillingField(*(parse_float(part, f"{what} coefficient") for part in parts))


def parse_count(token: str, what: str = "count", minimum: int = 1) -> int:
    try:
        value = int(token)
    except ValueError:
        raise UsageError(f"Malformed {what}", token) from None
    if value < minimum:
        raise UsageError(f"{what} must be at least {minimum}", token)
    return value


def parse_grid(spec: str) -> Dict[str, np.ndarray]:
    """
    Parse a sweep grid such as "lam=0:2:5,mu=-1,theta0=0:pi:4"

    Each entry is name=value or name=start:stop:count (inclusive linspace).
    Parameters left out default to lam=1, mu=0, theta0=pi/2.

    Raises:
        UsageError: unknown names, malformed numbers or counts
    """
    grid = {'lam': np.array([1.0]), 'mu': np.array([0.0]), 'theta0': np.array([math.pi / 2])}
    if not spec.strip():
        raise UsageError("Empty grid specification", spec)

    for entry in spec.split(','):
        name, sep, value = entry.partition('=')
        name = name.strip()
        if not sep or name not in GRID_NAMES:
            raise UsageError(f"Grid entries must be one of {', '.join(GRID_NAMES)} as name=values", entry)
        pieces = value.split(':')
        if len(pieces) == 1:
            grid[name] = np.array([parse_float(pieces[0], name)])
        elif len(pieces) == 3:
            start = parse_float(pieces[0], name)
            stop = parse_float(pieces[1], name)
            grid[name] = np.linspace(start, stop, parse_count(pieces[2], f"{name} count"))
        else:
            raise UsageError("Grid ranges are start:stop:count", entry)

    logger.debug(f"Parsed grid {spec!r}: " + ", ".join(f"{k}={len(v)}" for k, v in grid.items()))
    return grid
