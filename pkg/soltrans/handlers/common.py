"""
Shared pieces of the subcommand handlers
"""
import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, Tuple

from soltrans import config
from soltrans.errors import UsageError
from soltrans.utils.exporters import dumps_json
from soltrans.utils.parsing import parse_count, parse_float, parse_killing

logger = logging.getLogger(__name__)

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFICATION_FAILED = 2


def killing_arg(text: str):
    return parse_killing(text)


def float_arg(text: str) -> float:
    return parse_float(text)


def count_arg(text: str) -> int:
    return parse_count(text)


def range_arg(text: str) -> Tuple[float, float]:
    """"a,b" -> (a, b)"""
    parts = text.split(',')
    if len(parts) != 2:
        raise UsageError("Ranges are given as min,max", text)
    return parse_float(parts[0], "range bound"), parse_float(parts[1], "range bound")


def add_problem_arguments(parser: argparse.ArgumentParser, default_x: str = "1,0,0"):
    """--X, --V and --theta0 for subcommands that solve one translator problem"""
    parser.add_argument('--X', dest='X', type=killing_arg, default=parse_killing(default_x),
                        metavar='a,b,c', help="symmetry a F1 + b F2 + c F3 (default %(default)s)")
    parser.add_argument('--V', dest='V', type=killing_arg, required=True,
                        metavar='eta,lambda,mu', help="translation direction eta F1 + lambda F2 + mu F3")
    parser.add_argument('--theta0', type=float_arg, default=math.pi / 2,
                        help="initial angle of the profile (default pi/2)")


def default_output(name: str) -> Path:
    return config.OUTPUT_DIR / name


def emit(data: Dict[str, Any]):
    """Structured result on standard output"""
    sys.stdout.write(dumps_json(data) + "\n")
    sys.stdout.flush()
