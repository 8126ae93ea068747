"""
Verifier service - finite-difference oracles for surface geometry

Everything here works from an immersion (u, s) -> (x, y, z) alone: tangents,
metric, normal and second fundamental form are rebuilt by central differences
and the connection table, never from the closed-form surface formulas.
"""
import logging
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from soltrans import config
from soltrans.errors import StencilError
from soltrans.models import (
    FrameVector,
    FundamentalForms,
    KillingField,
    OracleReport,
    PlanarCurve,
    Sol3Point,
    Trajectory,
    UIndependenceReport,
)
from soltrans.services import geometry
from soltrans.services.profile import ProfileIntegrator, profile_integrator

logger = logging.getLogger(__name__)

Immersion = Callable[[float, float], np.ndarray]


# ---------------------------------------------------------------------------
# Immersions
# ---------------------------------------------------------------------------

class TrajectoryImmersion:
    """
    (u, s) -> flow(X, u) * (0, y(s), z(s)) near one trajectory sample

    Profile points off the sample grid are re-integrated from the sample and cached.
    """

    def __init__(self, tr: Trajectory, X: KillingField, index: int,
                 integrator: Optional[ProfileIntegrator] = None):
        X.require_nonzero("symmetry X")
        self.tr = tr
        self.X = X
        self.index = index
        self.s0 = float(tr.s[index])
        self.integrator = integrator or profile_integrator
        self._cache: Dict[float, np.ndarray] = {}

    def profile_point(self, s: float) -> np.ndarray:
        if s not in self._cache:
            st = self.integrator.advance(self.tr.system, self.tr.params, self.tr.state(self.index), s - self.s0)
            self._cache[s] = np.array([0.0, st.y, st.z])
        return self._cache[s]

    def __call__(self, u: float, s: float) -> np.ndarray:
        shift = geometry.flow_array(self.X, np.array([u]))[0]
        return geometry.compose_array(shift, self.profile_point(s))


def planar_immersion(X: KillingField, profile: Callable[[np.ndarray], PlanarCurve]) -> Immersion:
    """(u, s) -> flow(X, u) * gamma(s) for a planar profile builder gamma"""
    X.require_nonzero("symmetry X")

    def immersion(u: float, s: float) -> np.ndarray:
        point = profile(np.array([s])).points[0]
        return geometry.compose_array(geometry.flow_array(X, np.array([u]))[0], point)

    return immersion


def graph_immersion(height: Callable[[float], float]) -> Immersion:
    """Graph z = height(y), parametrized by (x, y) = (u, s)"""
    def immersion(u: float, s: float) -> np.ndarray:
        return np.array([u, s, height(s)], dtype=float)

    return immersion


# ---------------------------------------------------------------------------
# Second-order oracle for the fundamental forms
# ---------------------------------------------------------------------------

def _derivatives(immersion: Immersion, u: float, s: float, h: float):
    """
    Centre point, frame components of T_u and T_s, and their directional
    derivatives dF[a, b] = d/da (frame components of T_b) on a 5x5 stencil
    """
    offsets = np.arange(-2, 3) * h
    try:
        P = np.array([[immersion(u + du, s + ds) for ds in offsets] for du in offsets], dtype=float)
    except Exception as e:
        raise StencilError(f"Immersion failed on the stencil around (u={u}, s={s}, h={h}): {e}") from e
    if P.shape != (5, 5, 3) or not np.all(np.isfinite(P)):
        raise StencilError(f"Immersion is not finite on the stencil around (u={u}, s={s}, h={h})")

    z = P[1:-1, 1:-1, 2]
    Fu = geometry.coord_to_frame_array((P[2:, 1:-1] - P[:-2, 1:-1]) / (2.0 * h), z)
    Fs = geometry.coord_to_frame_array((P[1:-1, 2:] - P[1:-1, :-2]) / (2.0 * h), z)

    dF = np.empty((2, 2, 3))
    dF[0, 0] = (Fu[2, 1] - Fu[0, 1]) / (2.0 * h)
    dF[0, 1] = (Fs[2, 1] - Fs[0, 1]) / (2.0 * h)
    dF[1, 0] = (Fu[1, 2] - Fu[1, 0]) / (2.0 * h)
    dF[1, 1] = (Fs[1, 2] - Fs[1, 0]) / (2.0 * h)
    return P[2, 2], Fu[1, 1], Fs[1, 1], dF


def _assemble(Tu: np.ndarray, Ts: np.ndarray, dF: np.ndarray) -> FundamentalForms:
    T = (Tu, Ts)
    g = np.array([[T[a] @ T[b] for b in range(2)] for a in range(2)])
    n = np.cross(Tu, Ts)
    length = np.linalg.norm(n)
    if length == 0.0:
        raise StencilError("Tangent vectors are parallel; the immersion is not regular here")
    nu = n / length
    A = np.array([
        [(dF[a, b] + geometry.connection_term(T[a], T[b])) @ nu for b in range(2)]
        for a in range(2)
    ])
    A = 0.5 * (A + A.T)
    shape = A @ np.linalg.inv(g)
    det_shape = float(np.linalg.det(shape))
    normal = FrameVector.from_array(nu)
    return FundamentalForms(
        g=g,
        A=A,
        nu=normal,
        H=float(np.trace(shape)),
        det_shape=det_shape,
        K=det_shape + geometry.ambient_curvature(normal),
    )


def fd_forms(immersion: Immersion, u: float, s: float, h: float = config.ORACLE_STEP,
             richardson: bool = False) -> FundamentalForms:
    """
    Fundamental forms of an immersion by finite differences

    Args:
        immersion: (u, s) -> coordinates (x, y, z)
        u, s: parameters of the evaluation point
        h: stencil step
        richardson: combine steps h and h/2 to cancel the h^2 error term

    Returns:
        FundamentalForms with nu oriented along T_u x T_s

    Raises:
        StencilError: the immersion fails or is singular on the stencil
    """
    if not h > 0:
        raise ValueError(f"Step must be positive (got {h})")
    _, Tu, Ts, dF = _derivatives(immersion, u, s, h)
    if richardson:
        _, Tu2, Ts2, dF2 = _derivatives(immersion, u, s, h / 2.0)
        Tu = (4.0 * Tu2 - Tu) / 3.0
        Ts = (4.0 * Ts2 - Ts) / 3.0
        dF = (4.0 * dF2 - dF) / 3.0
    return _assemble(Tu, Ts, dF)


def fd_point(immersion: Immersion, u: float, s: float) -> Sol3Point:
    return Sol3Point.from_array(immersion(u, s))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def translator_residual(immersion: Immersion, u: float, s: float, V: KillingField,
                        analytic_H: Optional[float] = None, h: float = config.ORACLE_STEP,
                        richardson: bool = False) -> OracleReport:
    """
    Compare H with g(nu, V), the defining identity of a translator

    H is the finite-difference value unless analytic_H is given.
    """
    forms = fd_forms(immersion, u, s, h, richardson)
    p = fd_point(immersion, u, s)
    projection = forms.nu.dot(geometry.killing_frame_at(V, p))
    H = forms.H if analytic_H is None else analytic_H
    return OracleReport('translator', float(H), float(projection), h, u, s)


def mean_curvature_report(immersion: Immersion, u: float, s: float, analytic_H: float,
                          h: float = config.ORACLE_STEP, richardson: bool = False) -> OracleReport:
    forms = fd_forms(immersion, u, s, h, richardson)
    return OracleReport('H', float(analytic_H), forms.H, h, u, s)


def gauss_curvature_report(immersion: Immersion, u: float, s: float, analytic_K: float,
                           h: float = config.ORACLE_STEP, richardson: bool = False) -> OracleReport:
    forms = fd_forms(immersion, u, s, h, richardson)
    return OracleReport('K', float(analytic_K), forms.K, h, u, s)


def soliton_flow_report(immersion: Immersion, u: float, s: float, V: KillingField,
                        h: float = config.ORACLE_STEP, richardson: bool = False) -> OracleReport:
    """
    Normal speed of the surface under left translation by flow(V, t), against H

    The velocity d/dt flow(V, t) * p at t = 0 is taken by central differences
    in t, so this checks the translator identity through the group action.
    """
    forms = fd_forms(immersion, u, s, h, richardson)
    p = immersion(u, s)
    ahead = geometry.compose_array(geometry.flow_array(V, np.array([h]))[0], p)
    behind = geometry.compose_array(geometry.flow_array(V, np.array([-h]))[0], p)
    velocity = geometry.coord_to_frame_array((ahead - behind) / (2.0 * h), p[2])
    return OracleReport('soliton_flow', forms.H, float(velocity @ forms.nu.as_array()), h, u, s)


def arc_length_report(immersion: Immersion, s: float, u: float = 0.0,
                      h: float = config.FD_STEP) -> OracleReport:
    """Metric speed of s -> immersion(u, s) by the fourth-order central difference"""
    f = [immersion(u, s + k * h) for k in (-2, -1, 1, 2)]
    tangent = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h)
    z = immersion(u, s)[2]
    speed = float(np.linalg.norm(geometry.coord_to_frame_array(tangent, z)))
    return OracleReport('arc_length', 1.0, speed, h, u, s)


def convergence_errors(immersion: Immersion, u: float, s: float, exact_H: float,
                       steps: Sequence[float] = (1e-2, 1e-3)) -> Tuple[float, ...]:
    """|fd H - exact H| for each step; second order means ratios near (h1/h2)^2"""
    return tuple(abs(fd_forms(immersion, u, s, h).H - exact_H) for h in steps)


# ---------------------------------------------------------------------------
# Symmetries with an F3 component
# ---------------------------------------------------------------------------

def u_independence_rhs(X: KillingField, V: KillingField, x_prime: float, y_prime: float, u):
    """
    -eta~ y' e^{cu} + lambda~ x' e^{-cu}

    The translator equation needs this to be independent of u, which holds
    only when eta~ y' = lambda~ x' = 0. A profile with x' and y' not both zero
    can satisfy that only if eta~ lambda~ = 0; when both coefficients are
    nonzero no X-invariant translator in direction V exists.
    """
    eta_t, lam_t = geometry.transverse_split(X, V)
    u = np.asarray(u, dtype=float)
    return -eta_t * y_prime * np.exp(X.c * u) + lam_t * x_prime * np.exp(-X.c * u)


def u_independence_check(X: KillingField, V: KillingField, profile: Callable[[np.ndarray], PlanarCurve],
                         s: float, u_values: Sequence[float] = tuple(np.linspace(-1.0, 1.0, 9)),
                         h: float = config.ORACLE_STEP, rel_tol: float = 0.1) -> UIndependenceReport:
    """
    Sample the reduction's right-hand side and the translator residual along u

    Raises:
        ValueError: if X has no F3 component
    """
    if X.c == 0.0:
        raise ValueError("u-independence applies to symmetries with a nonzero F3 component")
    u = np.asarray(u_values, dtype=float)
    curve = profile(np.array([s]))
    x_prime, y_prime = float(curve.tangents[0, 0]), float(curve.tangents[0, 1])
    rhs = u_independence_rhs(X, V, x_prime, y_prime, u)

    immersion = planar_immersion(X, profile)
    residuals = np.array([translator_residual(immersion, float(ui), s, V, h=h).error for ui in u])

    scale = float(np.max(np.abs(rhs)))
    dependent = scale > 1e-12 and float(np.max(rhs) - np.min(rhs)) > rel_tol * scale
    logger.debug(f"u-independence at s={s}: rhs spread {np.ptp(rhs):.3e}, dependent={dependent}")
    return UIndependenceReport(s=s, u=u, rhs=rhs, residuals=residuals, u_dependent=dependent)
