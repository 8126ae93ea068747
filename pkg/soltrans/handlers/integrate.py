"""
integrate - profile curve of an invariant translator, written as CSV
"""
import argparse
import logging

from soltrans import config
from soltrans.errors import UsageError
from soltrans.handlers.common import EXIT_OK, add_problem_arguments, default_output, emit, float_arg
from soltrans.models import IntegratorConfig
from soltrans.services.classifier import reduce_to_profile
from soltrans.services.profile import first_integral_defect, profile_integrator, unit_speed_defect
from soltrans.utils.exporters import write_trajectory_csv

logger = logging.getLogger(__name__)


def handle_integrate(args: argparse.Namespace) -> int:
    try:
        system, params, _, mirrored = reduce_to_profile(args.X, args.V, args.theta0)
    except ValueError as e:
        raise UsageError(str(e), f"--X {','.join(f'{c:g}' for c in args.X.as_tuple())}") from None
    if not args.smax > 0:
        raise UsageError("--smax must be positive", str(args.smax))

    cfg = IntegratorConfig(stop_at_equilibrium=args.stop_at_equilibrium)
    tr = profile_integrator.integrate(system, params, args.smax, cfg)
    critical = profile_integrator.critical_points(tr)
    path = write_trajectory_csv(tr, args.out)
    logger.info(f"📈 Integrated {system.value} profile with {len(tr)} samples -> {path}")
    emit({
        'system': system.value,
        'params': vars(params),
        'mirrored': mirrored,
        'samples': len(tr),
        's_range': [float(tr.s[0]), float(tr.s[-1])],
        'stops': [tr.stop_backward.value, tr.stop_forward.value],
        'count_y': critical.count_y,
        'count_z': critical.count_z,
        'first_integral_defect': first_integral_defect(tr),
        'unit_speed_defect': unit_speed_defect(tr),
        'out': str(path),
    })
    return EXIT_OK


def register(subparsers):
    parser = subparsers.add_parser('integrate', help="integrate the profile curve and write it as CSV")
    add_problem_arguments(parser)
    parser.add_argument('--smax', type=float_arg, default=config.FIGURE_S_MAX,
                        help="integrate over [-smax, smax] (default %(default)s)")
    parser.add_argument('--out', default=default_output('curve.csv'), help="CSV destination")
    parser.add_argument('--stop-at-equilibrium', action='store_true',
                        help="stop each direction once the angle has converged")
    parser.set_defaults(handler=handle_integrate)
