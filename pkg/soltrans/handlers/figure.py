"""
figure - reproduce one of the reference simulations and write its artifacts
"""
import argparse
import logging
from pathlib import Path

from soltrans import config
from soltrans.handlers.common import EXIT_OK, EXIT_VERIFICATION_FAILED, count_arg, emit, float_arg
from soltrans.services.figures import PRESETS, figure_service

logger = logging.getLogger(__name__)


def handle_figure(args: argparse.Namespace) -> int:
    result = figure_service.run(args.figure, s_max=args.smax, u_samples=args.u_samples, samples=args.samples)
    paths = figure_service.write_artifacts(result, Path(args.outdir))
    summary = result.summary()
    summary['artifacts'] = {name: str(path) for name, path in sorted(paths.items())}
    emit(summary)

    if not result.verification.passed:
        worst = result.verification.failures()[0]
        logger.error(f"❌ Figure {args.figure}: {len(result.verification.failures())} oracle(s) above tolerance, "
                     f"first {worst.quantity} error {worst.error:.3e} at s={worst.s:g}")
        return EXIT_VERIFICATION_FAILED
    logger.info(f"✅ Figure {args.figure} reproduced")
    return EXIT_OK


def register(subparsers):
    parser = subparsers.add_parser('figure', help="reproduce a simulation preset")
    parser.add_argument('figure', type=int, choices=sorted(PRESETS), help="preset number")
    parser.add_argument('--outdir', default=config.OUTPUT_DIR, help="artifact directory (default %(default)s)")
    parser.add_argument('--smax', type=float_arg, default=config.FIGURE_S_MAX,
                        help="profile half-length (default %(default)s)")
    parser.add_argument('--u-samples', type=count_arg, default=config.MESH_U_SAMPLES,
                        help="u resolution of the mesh (default %(default)s)")
    parser.add_argument('--samples', type=count_arg, default=config.VERIFY_SAMPLES,
                        help="oracle sample points (default %(default)s)")
    parser.set_defaults(handler=handle_figure)
