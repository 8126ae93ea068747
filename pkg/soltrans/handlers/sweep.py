"""
sweep - classify a grid or a random sample of F1 translator parameters
"""
import argparse
import logging

from soltrans import config
from soltrans.errors import UsageError
from soltrans.handlers.common import EXIT_OK, count_arg, default_output, emit
from soltrans.services.figures import SWEEP_COLUMNS, grid_points, random_points, run_sweep, summarize_rows
from soltrans.utils.exporters import write_sweep_csv
from soltrans.utils.parsing import parse_grid

logger = logging.getLogger(__name__)


def handle_sweep(args: argparse.Namespace) -> int:
    if args.grid is None and args.random is None:
        raise UsageError("sweep needs --grid or --random")
    if args.grid is not None:
        points = grid_points(parse_grid(args.grid))
        header = {'grid': args.grid}
    else:
        points = random_points(args.random, args.seed)
        header = {'random': args.random, 'seed': args.seed}

    rows = run_sweep(points, workers=args.workers)
    path = write_sweep_csv(rows, SWEEP_COLUMNS, args.out, header)
    families = summarize_rows(rows)
    logger.info(f"🗺️  Swept {len(rows)} points -> {path}")
    emit({**header, 'points': len(rows), 'families': families, 'out': str(path)})
    return EXIT_OK


def register(subparsers):
    parser = subparsers.add_parser('sweep', help="classify many F1 parameter points")
    group = parser.add_mutually_exclusive_group()
    group.add_argument('--grid', metavar='SPEC', help='e.g. "lam=0:2:5,mu=-1:1:3,theta0=pi/2"')
    group.add_argument('--random', type=count_arg, metavar='K', help="K random draws")
    parser.add_argument('--seed', type=int, default=0, help="random generator seed (default %(default)s)")
    parser.add_argument('--workers', type=count_arg, default=config.SWEEP_WORKERS,
                        help="worker processes (default %(default)s)")
    parser.add_argument('--out', default=default_output('sweep.csv'), help="CSV destination")
    parser.set_defaults(handler=handle_sweep)
