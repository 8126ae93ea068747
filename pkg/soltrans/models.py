"""
Domain models for soltrans
Value types shared by the geometry, profile, classifier, surface and verifier services
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from soltrans import config
from soltrans.errors import ZeroKillingFieldError


# ---------------------------------------------------------------------------
# Sol3 points and vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sol3Point:
    """Point of Sol3 in the usual coordinates"""
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values) -> Sol3Point:
        return cls(float(values[0]), float(values[1]), float(values[2]))

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.x, self.y, self.z))


ORIGIN = Sol3Point(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CoordVector:
    """Components against d/dx, d/dy, d/dz at some base point"""
    vx: float
    vy: float
    vz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.vz], dtype=float)

    @classmethod
    def from_array(cls, values) -> CoordVector:
        return cls(float(values[0]), float(values[1]), float(values[2]))


@dataclass(frozen=True)
class FrameVector:
    """Components against the orthonormal left-invariant frame E1, E2, E3"""
    e1: float
    e2: float
    e3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.e1, self.e2, self.e3], dtype=float)

    @classmethod
    def from_array(cls, values) -> FrameVector:
        return cls(float(values[0]), float(values[1]), float(values[2]))

    def norm_sq(self) -> float:
        return self.e1 * self.e1 + self.e2 * self.e2 + self.e3 * self.e3

    def dot(self, other: FrameVector) -> float:
        return self.e1 * other.e1 + self.e2 * other.e2 + self.e3 * other.e3

    def __add__(self, other: FrameVector) -> FrameVector:
        return FrameVector(self.e1 + other.e1, self.e2 + other.e2, self.e3 + other.e3)

    def __sub__(self, other: FrameVector) -> FrameVector:
        return FrameVector(self.e1 - other.e1, self.e2 - other.e2, self.e3 - other.e3)

    def __neg__(self) -> FrameVector:
        return FrameVector(-self.e1, -self.e2, -self.e3)

    def scaled(self, factor: float) -> FrameVector:
        return FrameVector(factor * self.e1, factor * self.e2, factor * self.e3)


ZERO_FRAME = FrameVector(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class KillingField:
    """
    Killing field f1*F1 + f2*F2 + f3*F3

    Read as (eta, lambda, mu) for a translation direction V and as (a, b, c)
    for a symmetry direction X.
    """
    f1: float
    f2: float
    f3: float

    @classmethod
    def F1(cls) -> KillingField:
        return cls(1.0, 0.0, 0.0)

    @classmethod
    def F2(cls) -> KillingField:
        return cls(0.0, 1.0, 0.0)

    @classmethod
    def F3(cls) -> KillingField:
        return cls(0.0, 0.0, 1.0)

    # translation-direction names
    @property
    def eta(self) -> float:
        return self.f1

    @property
    def lam(self) -> float:
        return self.f2

    @property
    def mu(self) -> float:
        return self.f3

    # symmetry-direction names
    @property
    def a(self) -> float:
        return self.f1

    @property
    def b(self) -> float:
        return self.f2

    @property
    def c(self) -> float:
        return self.f3

    def is_zero(self) -> bool:
        return self.f1 == 0.0 and self.f2 == 0.0 and self.f3 == 0.0

    def require_nonzero(self, role: str = "Killing field") -> KillingField:
        if self.is_zero():
            raise ZeroKillingFieldError(f"{role} must not vanish")
        return self

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.f1, self.f2, self.f3)


# ---------------------------------------------------------------------------
# Profile ODE
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class F1Params:
    """Translator data for the F1-invariant reduction (eta absorbed, F1 is tangent)"""
    lam: float
    mu: float
    theta0: float

    def is_trivial(self) -> bool:
        return self.lam == 0.0 and self.mu == 0.0


@dataclass(frozen=True)
class SlantedParams:
    """Translator data for X = F1 + b F2; lam is the reduced coefficient lambda - b*eta"""
    b: float
    lam: float
    theta0: float


class ProfileSystem(enum.Enum):
    """Which reduction a trajectory solves"""
    F1 = "f1"
    SLANTED = "slanted"


class StopReason(enum.Enum):
    """Why integration in one direction ended"""
    REACHED_BOUND = "reached_bound"
    EQUILIBRIUM = "equilibrium"
    STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class ProfileState:
    """Profile unknowns at arc length s; theta is the angle between the tangent and E2"""
    s: float
    y: float
    z: float
    theta: float


@dataclass(frozen=True)
class IntegratorConfig:
    """Embedded Runge-Kutta 5(4) settings"""
    atol: float = config.INTEGRATOR_ATOL
    rtol: float = config.INTEGRATOR_RTOL
    max_step: float = config.INTEGRATOR_MAX_STEP
    initial_step: float = config.INTEGRATOR_INITIAL_STEP
    min_step: float = config.INTEGRATOR_MIN_STEP
    max_growth: float = config.INTEGRATOR_MAX_GROWTH
    min_shrink: float = config.INTEGRATOR_MIN_SHRINK
    safety: float = config.INTEGRATOR_SAFETY
    equilibrium_tol: float = config.EQUILIBRIUM_TOL
    stall_tol: float = config.STALL_TOL
    stop_at_equilibrium: bool = True
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0 and self.max_step > 0 and self.initial_step > 0):
            raise ValueError("integrator tolerances and steps must be positive")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Sampled profile curve, s strictly increasing

    dy, dz, dtheta are the right-hand side values at each sample; they carry the
    signs of y', z' with full precision even where theta sits on an equilibrium.
    """
    system: ProfileSystem
    params: Any
    s: np.ndarray
    y: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    dy: np.ndarray
    dz: np.ndarray
    dtheta: np.ndarray
    stop_backward: StopReason
    stop_forward: StopReason
    equilibrium_s: Tuple[Optional[float], Optional[float]] = (None, None)
    theta_limits: Tuple[Optional[float], Optional[float]] = (None, None)

    def __len__(self) -> int:
        return int(self.s.shape[0])

    def state(self, i: int) -> ProfileState:
        return ProfileState(float(self.s[i]), float(self.y[i]), float(self.z[i]), float(self.theta[i]))

    @property
    def states(self) -> List[ProfileState]:
        return [self.state(i) for i in range(len(self))]

    @property
    def origin_index(self) -> int:
        return int(np.argmin(np.abs(self.s)))

    def index_near(self, s: float) -> int:
        return int(np.argmin(np.abs(self.s - s)))

    def curve_points(self) -> np.ndarray:
        """Profile points (0, y, z) as an (n, 3) array"""
        return np.column_stack([np.zeros_like(self.y), self.y, self.z])

    def curve_tangents(self) -> np.ndarray:
        return np.column_stack([np.zeros_like(self.dy), self.dy, self.dz])

    @property
    def ok(self) -> bool:
        return StopReason.STEP_UNDERFLOW not in (self.stop_backward, self.stop_forward)


@dataclass(frozen=True, eq=False)
class PlanarCurve:
    """Arc-length profile in the plane z = 0, used by the c != 0 reduction"""
    s: np.ndarray
    points: np.ndarray    # (n, 3) coordinates (x, y, 0)
    tangents: np.ndarray  # (n, 3) coordinate derivatives (x', y', 0)
    H: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.s.shape[0])


@dataclass(frozen=True)
class FZeroBracket:
    """Consecutive zeros of f around theta0"""
    theta1: float
    theta2: float
    degenerate: bool = False

    @property
    def width(self) -> float:
        return self.theta2 - self.theta1


@dataclass(frozen=True)
class CriticalPoints:
    count_y: int
    count_z: int
    y_locations: Tuple[float, ...] = ()
    z_locations: Tuple[float, ...] = ()

    @property
    def locations(self) -> Tuple[float, ...]:
        return tuple(sorted(self.y_locations + self.z_locations))


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

class EndKind(enum.Enum):
    HORIZONTAL_PLANE = "HorizontalPlane"
    LOGARITHMIC = "Logarithmic"
    HALF_LOGARITHMIC = "HalfLogarithmic"
    TILTED_PLANE = "TiltedPlane"
    VERTICAL_PLANE = "VerticalPlane"
    DIVERGENT_LINEAR = "DivergentLinear"


# preference order when several nested models fit a tail equally well
END_KIND_PRIORITY = (
    EndKind.HORIZONTAL_PLANE,
    EndKind.VERTICAL_PLANE,
    EndKind.TILTED_PLANE,
    EndKind.HALF_LOGARITHMIC,
    EndKind.LOGARITHMIC,
)


@dataclass(frozen=True)
class AsymptoticEnd:
    """
    Model of one end of a profile curve

    Only the parameters of the given kind are set:
    HorizontalPlane(z0), Logarithmic/HalfLogarithmic(sign, y0, z0),
    TiltedPlane(c1, c0), VerticalPlane(yval), DivergentLinear(sigma1, sigma2).
    """
    kind: EndKind
    direction: int = 0               # -1 for s -> -inf, +1 for s -> +inf, 0 if unknown
    theta_limit: Optional[float] = None
    z0: Optional[float] = None
    y0: Optional[float] = None
    sign: Optional[int] = None
    c1: Optional[float] = None
    c0: Optional[float] = None
    yval: Optional[float] = None
    sigma1: Optional[float] = None
    sigma2: Optional[float] = None
    fit_residual: Optional[float] = None
    fit_kind: Optional[EndKind] = None  # set when the unrestricted tail fit prefers another model

    _PARAMETERS = {
        EndKind.HORIZONTAL_PLANE: ('z0',),
        EndKind.LOGARITHMIC: ('sign', 'y0', 'z0'),
        EndKind.HALF_LOGARITHMIC: ('sign', 'y0', 'z0'),
        EndKind.TILTED_PLANE: ('c1', 'c0'),
        EndKind.VERTICAL_PLANE: ('yval',),
        EndKind.DIVERGENT_LINEAR: ('sigma1', 'sigma2'),
    }

    def parameters(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self._PARAMETERS[self.kind]}

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            'kind': self.kind.value,
            'direction': self.direction,
            'theta_limit': self.theta_limit,
        }
        data.update(self.parameters())
        if self.sigma1 is not None and self.kind is not EndKind.DIVERGENT_LINEAR:
            data['sigma1'] = self.sigma1
            data['sigma2'] = self.sigma2
        data['fit_residual'] = self.fit_residual
        if self.fit_kind is not None:
            data['fit_kind'] = self.fit_kind.value
        return data


class TranslatorFamily(enum.Enum):
    MINIMAL_PLANE_HORIZONTAL = "MinimalPlaneHorizontal"
    MINIMAL_PLANE_VERTICAL = "MinimalPlaneVertical"
    MINIMAL_LOGARITHMIC = "MinimalLogarithmic"
    GRIM_REAPER_SLAB = "GrimReaperSlab"
    HALF_PLANE_GRAPH = "HalfPlaneGraph"
    GENERAL_F1 = "GeneralF1"
    SLANTED_PLANE_Z0 = "SlantedPlaneZ0"
    SLANTED_GRAPH = "SlantedGraph"
    VERTICAL_PLANE_X = "VerticalPlaneX"
    VERTICAL_PLANE_Y = "VerticalPlaneY"
    MINIMAL_INVARIANT = "MinimalInvariant"
    NON_EXISTENT = "NonExistent"


MINIMAL_FAMILIES = frozenset({
    TranslatorFamily.MINIMAL_PLANE_HORIZONTAL,
    TranslatorFamily.MINIMAL_PLANE_VERTICAL,
    TranslatorFamily.MINIMAL_LOGARITHMIC,
})


@dataclass(frozen=True)
class TranslatorClass:
    """Outcome of a classification; ends are ordered (s -> -inf, s -> +inf)"""
    family: TranslatorFamily
    ends: Optional[Tuple[AsymptoticEnd, AsymptoticEnd]] = None
    tangency: bool = False
    params: Dict[str, Any] = field(default_factory=dict)
    note: str = ""

    def _end_by_z(self, pick_upper: bool) -> Optional[AsymptoticEnd]:
        if self.ends is None:
            return None
        finite = [e for e in self.ends if e.kind is EndKind.HORIZONTAL_PLANE]
        divergent = [e for e in self.ends if e.kind is not EndKind.HORIZONTAL_PLANE]
        if len(finite) == 2:
            return max(finite, key=lambda e: e.z0) if pick_upper else min(finite, key=lambda e: e.z0)
        if pick_upper:
            return divergent[0] if divergent else None
        return finite[0] if finite else None

    @property
    def lower(self) -> Optional[AsymptoticEnd]:
        """End lying in z < 0 for graphs over a slab or half-plane"""
        return self._end_by_z(False)

    @property
    def upper(self) -> Optional[AsymptoticEnd]:
        return self._end_by_z(True)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'family': self.family.value,
            'tangency': self.tangency,
            'ends': [e.to_dict() for e in self.ends] if self.ends else [],
            'fit_residuals': [e.fit_residual for e in self.ends] if self.ends else [],
            'params': dict(self.params),
            'note': self.note,
        }


@dataclass(frozen=True)
class ExistenceVerdict:
    """Existence of X-invariant translators when X has a nonzero F3 component"""
    exists: bool
    lambda_tilde: float
    eta_tilde: float
    witness: Optional[TranslatorClass] = None
    note: str = ""

    @property
    def family(self) -> TranslatorFamily:
        return self.witness.family if self.witness else TranslatorFamily.NON_EXISTENT

    def to_dict(self) -> Dict[str, Any]:
        return {
            'family': self.family.value,
            'exists': self.exists,
            'lambda_tilde': self.lambda_tilde,
            'eta_tilde': self.eta_tilde,
            'witness': self.witness.to_dict() if self.witness else None,
            'note': self.note,
        }


# ---------------------------------------------------------------------------
# Surfaces and oracles
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FundamentalForms:
    """Induced metric g and second fundamental form A in (u, s) coordinates"""
    g: np.ndarray
    A: np.ndarray
    nu: FrameVector
    H: float
    det_shape: float
    K: float


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """Vertices flow(X, u_i) * gamma(s_j) on a (u, s) grid"""
    u: np.ndarray
    s: np.ndarray
    vertices: np.ndarray  # (nu, ns, 3)
    normals: np.ndarray   # (nu, ns, 3) coordinate components, unit in the Sol3 metric
    H: np.ndarray         # (nu, ns)
    faces: np.ndarray     # (m, 3) triangle vertex indices into the flattened grid

    @property
    def vertex_count(self) -> int:
        return int(self.vertices.shape[0] * self.vertices.shape[1])

    def flat_vertices(self) -> np.ndarray:
        return self.vertices.reshape(-1, 3)

    def flat_normals(self) -> np.ndarray:
        return self.normals.reshape(-1, 3)


@dataclass(frozen=True)
class OracleReport:
    """Analytic value against its finite-difference oracle"""
    quantity: str
    analytic: float
    oracle: float
    h: float
    u: float = 0.0
    s: float = 0.0

    @property
    def error(self) -> float:
        return abs(self.analytic - self.oracle)

    def passed(self, tol: float) -> bool:
        return self.error <= tol


@dataclass(frozen=True, eq=False)
class UIndependenceReport:
    """Right-hand side of the c != 0 reduction sampled along u at a fixed s"""
    s: float
    u: np.ndarray
    rhs: np.ndarray
    residuals: np.ndarray  # H - g(nu, V) by finite differences at each u
    u_dependent: bool

    def spread(self) -> float:
        return float(np.max(self.rhs) - np.min(self.rhs))


# ---------------------------------------------------------------------------
# Figures, verification and sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FigurePreset:
    """A reference simulation: X = F1, direction V and initial angle theta0"""
    id: int
    V: KillingField
    theta0: float
    expected_counts: Tuple[int, int]  # (count_y, count_z)
    expected_family: TranslatorFamily
    title: str
    X: KillingField = field(default_factory=lambda: KillingField(1.0, 0.0, 0.0))

    @property
    def params(self) -> F1Params:
        return F1Params(lam=self.V.lam, mu=self.V.mu, theta0=self.theta0)


@dataclass(frozen=True, eq=False)
class VerificationSummary:
    """Oracle reports with the tolerance each one is held to"""
    reports: Tuple[OracleReport, ...]
    tolerances: Dict[str, float]

    def failures(self) -> List[OracleReport]:
        return [r for r in self.reports if not r.passed(self.tolerances[r.quantity])]

    @property
    def passed(self) -> bool:
        return not self.failures()

    def worst(self) -> Dict[str, float]:
        out: Dict[str, float] = {}
        for r in self.reports:
            out[r.quantity] = max(out.get(r.quantity, 0.0), r.error)
        return out


@dataclass(frozen=True, eq=False)
class FigureResult:
    preset: FigurePreset
    trajectory: Trajectory
    critical: CriticalPoints
    classification: TranslatorClass
    mesh: SurfaceMesh
    verification: VerificationSummary

    @property
    def counts(self) -> Tuple[int, int]:
        return self.critical.count_y, self.critical.count_z

    def summary(self) -> Dict[str, Any]:
        lower, upper = self.classification.lower, self.classification.upper
        return {
            'figure': self.preset.id,
            'title': self.preset.title,
            'X': list(self.preset.X.as_tuple()),
            'V': list(self.preset.V.as_tuple()),
            'theta0': self.preset.theta0,
            'count_y': self.critical.count_y,
            'count_z': self.critical.count_z,
            'y_critical_s': list(self.critical.y_locations),
            'z_critical_s': list(self.critical.z_locations),
            'expected_counts': list(self.preset.expected_counts),
            'z_lower': lower.z0 if lower is not None and lower.kind is EndKind.HORIZONTAL_PLANE else None,
            'z_upper': upper.z0 if upper is not None and upper.kind is EndKind.HORIZONTAL_PLANE else None,
            'classification': self.classification.to_dict(),
            'oracles_passed': self.verification.passed,
            'oracle_worst': self.verification.worst(),
        }
