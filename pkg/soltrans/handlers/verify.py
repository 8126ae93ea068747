"""
verify - run the finite-difference oracles and fail on any error above tolerance
"""
import argparse
import logging

from soltrans.handlers.common import EXIT_OK, EXIT_VERIFICATION_FAILED, count_arg, emit
from soltrans.services.figures import PRESETS, figure_service
from soltrans.utils.exporters import write_reports_csv

logger = logging.getLogger(__name__)


def handle_verify(args: argparse.Namespace) -> int:
    if args.random is not None:
        summary = figure_service.verify_random(args.random, args.seed, samples=args.samples)
        scope = {'random': args.random, 'seed': args.seed}
    else:
        preset = args.preset if args.preset is not None else 1
        summary = figure_service.verify_preset(preset, samples=args.samples, seed=args.seed)
        scope = {'preset': preset, 'seed': args.seed}

    if args.report:
        write_reports_csv(summary.reports, summary.tolerances, args.report)

    failures = summary.failures()
    emit({
        **scope,
        'passed': summary.passed,
        'reports': len(summary.reports),
        'failures': len(failures),
        'worst': summary.worst(),
        'tolerances': summary.tolerances,
    })
    if failures:
        for r in failures[:10]:
            logger.error(f"❌ {r.quantity}: |{r.analytic:.6g} - {r.oracle:.6g}| = {r.error:.3e} "
                         f"> {summary.tolerances[r.quantity]:g} at (u={r.u:g}, s={r.s:g})")
        return EXIT_VERIFICATION_FAILED
    logger.info(f"✅ All {len(summary.reports)} oracle checks passed")
    return EXIT_OK


def register(subparsers):
    parser = subparsers.add_parser('verify', help="run the oracle suite")
    group = parser.add_mutually_exclusive_group()
    group.add_argument('--preset', type=int, choices=sorted(PRESETS), help="verify one preset (default 1)")
    group.add_argument('--random', type=count_arg, metavar='K', help="verify K random translators")
    parser.add_argument('--seed', type=int, default=0, help="random generator seed (default %(default)s)")
    parser.add_argument('--samples', type=count_arg, default=20,
                        help="oracle sample points per profile (default %(default)s)")
    parser.add_argument('--report', default=None, help="write every oracle report to this CSV")
    parser.set_defaults(handler=handle_verify)
