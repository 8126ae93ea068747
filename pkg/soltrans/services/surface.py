"""
Surface service - invariant surfaces flow(X, u) * gamma(s), their analytic
fundamental forms, normals and curvatures
"""
import logging
import math
from typing import Optional, Tuple, Union

import numpy as np

from soltrans import config
from soltrans.errors import MeshError
from soltrans.models import (
    F1Params,
    FrameVector,
    FundamentalForms,
    KillingField,
    PlanarCurve,
    ProfileState,
    ProfileSystem,
    SurfaceMesh,
    Trajectory,
)
from soltrans.services import geometry
from soltrans.services.profile import f_eval

logger = logging.getLogger(__name__)

Profile = Union[Trajectory, PlanarCurve]


# ---------------------------------------------------------------------------
# Analytic forms
# ---------------------------------------------------------------------------

def _forms(g: np.ndarray, A: np.ndarray, nu: FrameVector) -> FundamentalForms:
    shape = A @ np.linalg.inv(g)
    det_shape = float(np.linalg.det(shape))
    return FundamentalForms(
        g=g,
        A=A,
        nu=nu,
        H=float(np.trace(shape)),
        det_shape=det_shape,
        K=det_shape + geometry.ambient_curvature(nu),
    )


def forms_f1(st: ProfileState, p: Optional[F1Params] = None,
             theta_prime: Optional[float] = None) -> FundamentalForms:
    """
    Forms of the F1-invariant surface (u, y(s), z(s)) in (u, s) coordinates

    theta' is taken from the angle equation unless given explicitly.
    H is the sum of principal curvatures.
    """
    if theta_prime is None:
        if p is None:
            raise ValueError("Either params or theta_prime is required")
        theta_prime = float(f_eval(st.theta, p))
    e2z = math.exp(2.0 * st.z)
    c, s = math.cos(st.theta), math.sin(st.theta)
    g = np.diag([e2z, 1.0])
    A = np.diag([-e2z * c, theta_prime + c])
    nu = FrameVector(0.0, -s, c)
    return FundamentalForms(
        g=g,
        A=A,
        nu=nu,
        H=theta_prime,
        det_shape=-(theta_prime + c) * c,
        K=-s * s - c * theta_prime,
    )


def forms_slanted(st: ProfileState, b: float, theta_prime: float) -> FundamentalForms:
    """Forms of the surface (u, b u + y(s), z(s)) invariant under F1 + b F2"""
    if b == 0.0:
        return forms_f1(st, theta_prime=theta_prime)
    E = math.exp(2.0 * st.z)
    root_E = math.exp(st.z)
    c, s = math.cos(st.theta), math.sin(st.theta)
    D = math.sqrt(E * E + b * b * s * s)
    g = np.array([
        [E + b * b / E, b * c / root_E],
        [b * c / root_E, 1.0],
    ])
    off = b * (1.0 + s * s) * root_E
    A = np.array([
        [(b * b - E * E) * c, off],
        [off, (theta_prime + c) * E],
    ]) / D
    nu = FrameVector(b * s / D, -E * s / D, E * c / D)
    return _forms(g, A, nu)


def slanted_mean_curvature(z, theta, theta_prime, b: float):
    """Closed-form H of the slanted surface, vectorized over samples"""
    E = np.exp(2.0 * np.asarray(z, dtype=float))
    s, c = np.sin(theta), np.cos(theta)
    D = np.sqrt(E * E + b * b * s * s)
    return E / D ** 3 * (theta_prime * (E * E + b * b) - 2.0 * b * b * s * s * c)


# ---------------------------------------------------------------------------
# Planar profiles for symmetries with an F3 component
# ---------------------------------------------------------------------------

def line_profile(s: np.ndarray, x0: Optional[float] = None, y0: Optional[float] = None) -> PlanarCurve:
    """Unit-speed straight line in z = 0 with x = x0 or y = y0"""
    s = np.asarray(s, dtype=float)
    if (x0 is None) == (y0 is None):
        raise ValueError("Give exactly one of x0, y0")
    zeros, ones = np.zeros_like(s), np.ones_like(s)
    if x0 is not None:
        points = np.column_stack([x0 * ones, s, zeros])
        tangents = np.column_stack([zeros, ones, zeros])
    else:
        points = np.column_stack([s, y0 * ones, zeros])
        tangents = np.column_stack([ones, zeros, zeros])
    # vertical planes are totally geodesic
    return PlanarCurve(s=s, points=points, tangents=tangents, H=zeros.copy())


def circle_profile(s: np.ndarray, radius: float = 1.0) -> PlanarCurve:
    """Arc-length circle of the given radius in z = 0 centred at the origin"""
    s = np.asarray(s, dtype=float)
    t = s / radius
    zeros = np.zeros_like(s)
    points = np.column_stack([radius * np.cos(t), radius * np.sin(t), zeros])
    tangents = np.column_stack([-np.sin(t), np.cos(t), zeros])
    return PlanarCurve(s=s, points=points, tangents=tangents)


# ---------------------------------------------------------------------------
# Meshes
# ---------------------------------------------------------------------------

def grid_faces(n_u: int, n_s: int) -> np.ndarray:
    """Two triangles per grid cell, indices into the row-major flattened grid"""
    i, j = np.meshgrid(np.arange(n_u - 1), np.arange(n_s - 1), indexing='ij')
    v00 = (i * n_s + j).ravel()
    v01 = v00 + 1
    v10 = v00 + n_s
    v11 = v10 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    return np.stack([lower, upper], axis=1).reshape(-1, 3)


def _profile_data(profile: Profile, X: KillingField) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(s, points, tangents, H) of the profile"""
    if isinstance(profile, Trajectory):
        if X.c != 0.0:
            raise MeshError("Profile trajectories live in x = 0 and need a symmetry without F3 component")
        if X.a == 0.0:
            raise MeshError("Profile trajectories need a symmetry with an F1 component")
        if profile.system is ProfileSystem.F1:
            H = profile.dtheta
        else:
            H = slanted_mean_curvature(profile.z, profile.theta, profile.dtheta, profile.params.b)
        return profile.s, profile.curve_points(), profile.curve_tangents(), np.asarray(H, dtype=float)
    if X.c == 0.0:
        raise MeshError("Planar profiles in z = 0 need a symmetry with an F3 component")
    H = profile.H if profile.H is not None else np.full(len(profile), np.nan)
    return profile.s, profile.points, profile.tangents, np.asarray(H, dtype=float)


class SurfaceBuilder:
    """Builds invariant surface meshes from profile curves"""

    def __init__(self, u_range: Tuple[float, float] = config.MESH_U_RANGE,
                 u_samples: int = config.MESH_U_SAMPLES):
        self.u_range = u_range
        self.u_samples = u_samples

    def build_mesh(self, profile: Profile, X: KillingField,
                   u_range: Optional[Tuple[float, float]] = None,
                   u_samples: Optional[int] = None) -> SurfaceMesh:
        """
        Vertices flow(X, u_i) * gamma(s_j) with unit normals and H

        Args:
            profile: Trajectory in x = 0, or PlanarCurve in z = 0 when X has an F3 component
            X: symmetry generating the surface
            u_range: (u_min, u_max), defaults to the builder's range
            u_samples: number of u samples, at least 2

        Returns:
            SurfaceMesh on the (u, s) grid; s samples are the profile's own

        Raises:
            MeshError: empty profile, bad range or resolution, or a profile/symmetry mismatch
        """
        X.require_nonzero("symmetry X")
        u_min, u_max = u_range if u_range is not None else self.u_range
        n_u = u_samples if u_samples is not None else self.u_samples
        if not u_max > u_min:
            raise MeshError(f"Empty u range [{u_min}, {u_max}]")
        if n_u < 2:
            raise MeshError(f"Need at least 2 u samples (got {n_u})")
        if len(profile) < 2:
            raise MeshError(f"Need at least 2 profile samples (got {len(profile)})")

        s, points, tangents, H = _profile_data(profile, X)
        u = np.linspace(u_min, u_max, n_u)
        shifts = geometry.flow_array(X, u)                                  # (n_u, 3)
        vertices = geometry.compose_array(shifts[:, None, :], points[None, :, :])

        # T_u is X at the vertex; T_s is dL_q gamma' with q = flow(X, u)
        t_u = geometry.killing_array(X, vertices)
        dL = np.stack([np.exp(-shifts[:, 2]), np.exp(shifts[:, 2]), np.ones(n_u)], axis=1)
        t_s = dL[:, None, :] * tangents[None, :, :]

        z = vertices[..., 2]
        nu = np.cross(geometry.coord_to_frame_array(t_u, z), geometry.coord_to_frame_array(t_s, z))
        norms = np.linalg.norm(nu, axis=-1, keepdims=True)
        if np.any(norms == 0.0):
            raise MeshError("Degenerate immersion: T_u and T_s are parallel somewhere")
        normals = geometry.frame_to_coord_array(nu / norms, z)

        mesh = SurfaceMesh(
            u=u,
            s=np.asarray(s, dtype=float),
            vertices=vertices,
            normals=normals,
            H=np.broadcast_to(H, (n_u, len(s))).copy(),
            faces=grid_faces(n_u, len(s)),
        )
        logger.debug(f"Built mesh {n_u}x{len(s)} for X={X.as_tuple()}")
        return mesh


# Global builder instance
surface_builder = SurfaceBuilder()


def build_mesh(profile: Profile, X: KillingField, u_range: Optional[Tuple[float, float]] = None,
               u_samples: Optional[int] = None) -> SurfaceMesh:
    return surface_builder.build_mesh(profile, X, u_range, u_samples)
