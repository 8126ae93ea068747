"""
mesh - invariant surface of a translator, written as OBJ with a normals sidecar
"""
import argparse
import logging

import numpy as np

from soltrans import config
from soltrans.errors import MeshError, UsageError
from soltrans.handlers.common import (
    EXIT_OK,
    add_problem_arguments,
    count_arg,
    default_output,
    emit,
    float_arg,
    range_arg,
)
from soltrans.models import IntegratorConfig, TranslatorFamily
from soltrans.services.classifier import reduce_to_profile, translator_classifier
from soltrans.services.profile import profile_integrator
from soltrans.services.surface import build_mesh, line_profile
from soltrans.utils.exporters import write_obj

logger = logging.getLogger(__name__)


def _witness_profile(args: argparse.Namespace):
    """Straight-line profile of the vertical plane that exists when X has an F3 component"""
    verdict = translator_classifier.classify_vertical(args.X, args.V)
    if not verdict.exists:
        raise MeshError(f"No surface invariant under X={args.X.as_tuple()} translates along V={args.V.as_tuple()}")
    s = np.linspace(-args.smax, args.smax, args.s_samples)
    if verdict.family is TranslatorFamily.VERTICAL_PLANE_Y:
        return line_profile(s, y0=verdict.witness.params['y0']), verdict.family
    return line_profile(s, x0=args.X.a / args.X.c), verdict.family


def handle_mesh(args: argparse.Namespace) -> int:
    lo, hi = args.u_range
    if not hi > lo:
        raise UsageError("--u-range must satisfy min < max", f"{lo:g},{hi:g}")

    if args.X.c != 0.0:
        profile, family = _witness_profile(args)
        generator = args.X
    else:
        try:
            system, params, generator, _ = reduce_to_profile(args.X, args.V, args.theta0)
        except ValueError as e:
            raise UsageError(str(e), f"--V {','.join(f'{c:g}' for c in args.V.as_tuple())}") from None
        profile = profile_integrator.integrate(system, params, args.smax, IntegratorConfig(stop_at_equilibrium=False))
        family = None

    mesh = build_mesh(profile, generator, (lo, hi), args.u_samples)
    obj_path, normals_path = write_obj(mesh, args.out)
    logger.info(f"🧩 Mesh {len(mesh.u)}x{len(mesh.s)} -> {obj_path}")
    emit({
        'vertices': mesh.vertex_count,
        'faces': int(len(mesh.faces)),
        'u_range': [lo, hi],
        'family': family.value if family is not None else None,
        'out': str(obj_path),
        'normals': str(normals_path),
    })
    return EXIT_OK


def register(subparsers):
    parser = subparsers.add_parser('mesh', help="build the invariant surface mesh and write it as OBJ")
    add_problem_arguments(parser)
    parser.add_argument('--smax', type=float_arg, default=config.FIGURE_S_MAX,
                        help="profile half-length (default %(default)s)")
    parser.add_argument('--u-range', type=range_arg, default=config.MESH_U_RANGE, metavar='min,max',
                        help="u interval (default %(default)s)")
    parser.add_argument('--u-samples', type=count_arg, default=config.MESH_U_SAMPLES,
                        help="u resolution (default %(default)s)")
    parser.add_argument('--s-samples', type=count_arg, default=101,
                        help="s resolution of straight-line profiles (default %(default)s)")
    parser.add_argument('--out', default=default_output('surface.obj'), help="OBJ destination")
    parser.set_defaults(handler=handle_mesh)
