"""
classify - existence and asymptotic type of the translator for (X, V, theta0)
"""
import argparse
import logging

from soltrans.handlers.common import EXIT_OK, add_problem_arguments, emit
from soltrans.services.classifier import translator_classifier

logger = logging.getLogger(__name__)


def handle_classify(args: argparse.Namespace) -> int:
    result = translator_classifier.classify(args.X, args.V, args.theta0, fit=not args.no_fit)
    logger.info(f"🔎 X={args.X.as_tuple()} V={args.V.as_tuple()} theta0={args.theta0:g}: {result.family.value}")
    emit({
        'X': list(args.X.as_tuple()),
        'V': list(args.V.as_tuple()),
        'theta0': args.theta0,
        'result': result.to_dict(),
    })
    return EXIT_OK


def register(subparsers):
    parser = subparsers.add_parser('classify', help="classify the translator for a symmetry and direction")
    add_problem_arguments(parser)
    parser.add_argument('--no-fit', action='store_true',
                        help="report degenerate mu != 0 ends as DivergentLinear instead of fitting them")
    parser.set_defaults(handler=handle_classify)
