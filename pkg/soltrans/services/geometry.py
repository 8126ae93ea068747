"""
Sol3 geometry - group law, metric, orthonormal frame, Levi-Civita connection,
Killing fields and their one-parameter subgroups
"""
import logging
from typing import Callable, Union

import numpy as np

from soltrans import config
from soltrans.models import CoordVector, FrameVector, KillingField, Sol3Point

logger = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Group structure
# ---------------------------------------------------------------------------

def compose(p: Sol3Point, q: Sol3Point) -> Sol3Point:
    """Group product p * q"""
    return Sol3Point(
        p.x + np.exp(-p.z) * q.x,
        p.y + np.exp(p.z) * q.y,
        p.z + q.z,
    )


def inverse(p: Sol3Point) -> Sol3Point:
    return Sol3Point(-np.exp(p.z) * p.x, -np.exp(-p.z) * p.y, -p.z)


def compose_array(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Broadcasting group product on arrays whose last axis holds (x, y, z)"""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = np.empty(np.broadcast(p, q).shape)
    out[..., 0] = p[..., 0] + np.exp(-p[..., 2]) * q[..., 0]
    out[..., 1] = p[..., 1] + np.exp(p[..., 2]) * q[..., 1]
    out[..., 2] = p[..., 2] + q[..., 2]
    return out


def left_differential(p: Sol3Point) -> np.ndarray:
    """Coordinate matrix of dL_p; the same at every base point"""
    return np.diag([np.exp(-p.z), np.exp(p.z), 1.0])


# ---------------------------------------------------------------------------
# Metric and frame
# ---------------------------------------------------------------------------

def metric_at(p: Sol3Point) -> np.ndarray:
    return np.diag([np.exp(2.0 * p.z), np.exp(-2.0 * p.z), 1.0])


def frame_matrix(z: float) -> np.ndarray:
    """Columns are the coordinate components of E1, E2, E3 at height z"""
    return np.diag([np.exp(-z), np.exp(z), 1.0])


def frame_to_coord(v: FrameVector, p: Sol3Point) -> CoordVector:
    return CoordVector(np.exp(-p.z) * v.e1, np.exp(p.z) * v.e2, v.e3)


def coord_to_frame(v: CoordVector, p: Sol3Point) -> FrameVector:
    return FrameVector(np.exp(p.z) * v.vx, np.exp(-p.z) * v.vy, v.vz)


def coord_to_frame_array(v: np.ndarray, z) -> np.ndarray:
    """coord_to_frame on stacked (..., 3) components with matching heights z"""
    v = np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = np.exp(z) * v[..., 0]
    out[..., 1] = np.exp(-z) * v[..., 1]
    out[..., 2] = v[..., 2]
    return out


def frame_to_coord_array(v: np.ndarray, z) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    out = np.empty_like(v)
    out[..., 0] = np.exp(-z) * v[..., 0]
    out[..., 1] = np.exp(z) * v[..., 1]
    out[..., 2] = v[..., 2]
    return out


def inner(u: CoordVector, v: CoordVector, p: Sol3Point) -> float:
    return float(u.as_array() @ metric_at(p) @ v.as_array())


# ---------------------------------------------------------------------------
# Killing fields and their flows
# ---------------------------------------------------------------------------

def killing_at(K: KillingField, p: Sol3Point) -> CoordVector:
    """Coordinate components of f1*F1 + f2*F2 + f3*F3 at p, F3 = -x dx + y dy + dz"""
    return CoordVector(K.f1 - K.f3 * p.x, K.f2 + K.f3 * p.y, K.f3)


def killing_frame_at(K: KillingField, p: Sol3Point) -> FrameVector:
    return coord_to_frame(killing_at(K, p), p)


def killing_array(K: KillingField, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    out = np.empty_like(points)
    out[..., 0] = K.f1 - K.f3 * points[..., 0]
    out[..., 1] = K.f2 + K.f3 * points[..., 1]
    out[..., 2] = K.f3
    return out


def flow(K: KillingField, t: float) -> Sol3Point:
    """
    Point reached from the origin after time t along the one-parameter
    subgroup generated by K

    Raises:
        ZeroKillingFieldError: if K vanishes identically
    """
    x, y, z = flow_array(K, np.asarray([t], dtype=float))[0]
    return Sol3Point(float(x), float(y), float(z))


def flow_array(K: KillingField, t: np.ndarray) -> np.ndarray:
    """flow(K, t) for every entry of t, shape (len(t), 3)"""
    K.require_nonzero("generator of the flow")
    t = np.asarray(t, dtype=float)
    a, b, c = K.as_tuple()
    out = np.empty(t.shape + (3,))
    if c != 0.0:
        out[..., 0] = -(a / c) * np.expm1(-c * t)
        out[..., 1] = (b / c) * np.expm1(c * t)
        out[..., 2] = c * t
    else:
        out[..., 0] = a * t
        out[..., 1] = b * t
        out[..., 2] = 0.0
    return out


def transverse_split(X: KillingField, V: KillingField, rel_tol: float = config.EXISTENCE_TOL):
    """
    Coefficients (eta~, lambda~) of V = (mu/c) X + eta~ F1 + lambda~ F2 for X with c != 0

    A coefficient is returned as exactly 0.0 when it is below rel_tol times the
    larger of the two terms it is the difference of.
    """
    if X.c == 0.0:
        raise ValueError("X must have a nonzero F3 component")
    ratio = V.mu / X.c

    def reduced(v: float, x: float) -> float:
        value = v - ratio * x
        if abs(value) <= rel_tol * max(abs(v), abs(ratio * x)):
            return 0.0
        return value

    return reduced(V.eta, X.a), reduced(V.lam, X.b)


# ---------------------------------------------------------------------------
# Levi-Civita connection
# ---------------------------------------------------------------------------

# CHRISTOFFEL[i, j] = frame components of nabla_{E_{i+1}} E_{j+1}
CHRISTOFFEL = np.zeros((3, 3, 3))
CHRISTOFFEL[0, 0] = (0.0, 0.0, -1.0)
CHRISTOFFEL[1, 1] = (0.0, 0.0, 1.0)
CHRISTOFFEL[0, 2] = (1.0, 0.0, 0.0)
CHRISTOFFEL[1, 2] = (0.0, -1.0, 0.0)


def connection(i: int, j: int) -> FrameVector:
    """
    nabla_{E_i} E_j for frame indices 1..3

    Raises:
        ValueError: if an index is outside 1..3
    """
    for index in (i, j):
        if index not in (1, 2, 3):
            raise ValueError(f"Frame index must be 1, 2 or 3 (got {index})")
    return FrameVector.from_array(CHRISTOFFEL[i - 1, j - 1])


def connection_term(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sum x_i y_j nabla_{E_i} E_j for frame component arrays of shape (..., 3)"""
    return np.einsum('...i,...j,ijk->...k', np.asarray(x, float), np.asarray(y, float), CHRISTOFFEL)


def covariant_derivative(x: FrameVector, y: FrameVector, directional: FrameVector) -> FrameVector:
    """
    nabla_X Y from the derivative of Y's frame components along X

    Args:
        x: X at the point
        y: Y at the point
        directional: X(Y^k) for k = 1..3

    Returns:
        nabla_X Y in frame components
    """
    return FrameVector.from_array(directional.as_array() + connection_term(x.as_array(), y.as_array()))


def riemann_tensor() -> np.ndarray:
    """
    R[i, j, k] = frame components of R(E_i, E_j) E_k

    The connection coefficients are constant in the frame, so the tensor
    follows algebraically from the table.
    """
    G = CHRISTOFFEL
    torsion_free_bracket = G - G.transpose(1, 0, 2)
    term1 = np.einsum('jkm,imn->ijkn', G, G)
    term2 = np.einsum('ikm,jmn->ijkn', G, G)
    term3 = np.einsum('ijm,mkn->ijkn', torsion_free_bracket, G)
    return term1 - term2 - term3


def sectional_curvature(u: FrameVector, v: FrameVector) -> float:
    """Sectional curvature of the plane spanned by u and v"""
    R = riemann_tensor()
    a, b = u.as_array(), v.as_array()
    num = np.einsum('i,j,k,ijkn,n->', a, b, b, R, a)
    den = a @ a * (b @ b) - (a @ b) ** 2
    if den <= 0.0:
        raise ValueError("Vectors do not span a plane")
    return float(num / den)


def ambient_curvature(nu: FrameVector) -> float:
    """Sectional curvature of the plane orthogonal to nu, -1 + 2 nu3^2 for unit nu"""
    return -1.0 + 2.0 * nu.e3 ** 2 / nu.norm_sq()


# ---------------------------------------------------------------------------
# Finite-difference oracles
# ---------------------------------------------------------------------------

def _as_field(K: Union[KillingField, VectorField]) -> VectorField:
    if isinstance(K, KillingField):
        return lambda q: killing_array(K, q)
    return lambda q: np.asarray(K(np.asarray(q, dtype=float)), dtype=float)


def _jacobian(field: VectorField, p: np.ndarray, h: float) -> np.ndarray:
    """J[k, j] = d field^k / d x^j by central differences"""
    J = np.empty((3, 3))
    for j in range(3):
        step = np.zeros(3)
        step[j] = h
        J[:, j] = (field(p + step) - field(p - step)) / (2.0 * h)
    return J


def _metric_array(p: np.ndarray) -> np.ndarray:
    return np.diag([np.exp(2.0 * p[2]), np.exp(-2.0 * p[2]), 1.0])


def killing_residual(K: Union[KillingField, VectorField], p: Sol3Point, h: float = config.FD_STEP) -> float:
    """
    Max-norm of the Lie derivative of the metric along K at p

    K may be a KillingField or any callable mapping coordinates (x, y, z)
    to coordinate components.
    """
    if not h > 0:
        raise ValueError(f"Step must be positive (got {h})")
    field = _as_field(K)
    q = p.as_array()
    X = field(q)
    g = _metric_array(q)
    dX = _jacobian(field, q, h)
    dg = np.empty((3, 3, 3))  # dg[k] = d g / d x^k
    for k in range(3):
        step = np.zeros(3)
        step[k] = h
        dg[k] = (_metric_array(q + step) - _metric_array(q - step)) / (2.0 * h)
    lie = np.einsum('k,kij->ij', X, dg) + g @ dX + (g @ dX).T
    return float(np.max(np.abs(lie)))


def lie_bracket(X: VectorField, Y: VectorField, p: Sol3Point, h: float = config.FD_STEP) -> CoordVector:
    """[X, Y] at p in coordinates by central differences"""
    q = p.as_array()
    JX = _jacobian(X, q, h)
    JY = _jacobian(Y, q, h)
    return CoordVector.from_array(JY @ X(q) - JX @ Y(q))


def frame_field(i: int) -> VectorField:
    """E_i as a coordinate vector field"""
    def field(q: np.ndarray) -> np.ndarray:
        return frame_matrix(q[2])[:, i - 1]
    return field


def torsion_defect(p: Sol3Point, h: float = config.FD_STEP) -> float:
    """Largest |nabla_{E_i}E_j - nabla_{E_j}E_i - [E_i, E_j]| over frame pairs"""
    worst = 0.0
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            bracket = coord_to_frame(lie_bracket(frame_field(i), frame_field(j), p, h), p)
            diff = connection(i, j) - connection(j, i) - bracket
            worst = max(worst, float(np.max(np.abs(diff.as_array()))))
    return worst


def metric_compatibility_defect() -> float:
    """Largest |g(nabla_i E_j, E_k) + g(E_j, nabla_i E_k)| over the frame"""
    G = CHRISTOFFEL
    return float(np.max(np.abs(G + G.transpose(0, 2, 1))))


def left_translation_defect(p: Sol3Point, q: Sol3Point, u: CoordVector, v: CoordVector,
                            h: float = config.FD_STEP) -> float:
    """
    |g_{p*q}(dL_p u, dL_p v) - g_q(u, v)| with dL_p taken by finite differences
    """
    base = q.as_array()

    def pushed(w: np.ndarray) -> np.ndarray:
        plus = compose(p, Sol3Point.from_array(base + h * w)).as_array()
        minus = compose(p, Sol3Point.from_array(base - h * w)).as_array()
        return (plus - minus) / (2.0 * h)

    du = pushed(u.as_array())
    dv = pushed(v.as_array())
    image = compose(p, q)
    return abs(float(du @ metric_at(image) @ dv) - inner(u, v, q))
