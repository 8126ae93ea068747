"""
Profile service - reduced ODE systems for invariant translators, the first
integral, zeros of the angle equation and an adaptive Runge-Kutta integrator
"""
import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from soltrans import config
from soltrans.errors import IntegrationError
from soltrans.models import (
    CriticalPoints,
    F1Params,
    FZeroBracket,
    IntegratorConfig,
    ProfileState,
    ProfileSystem,
    SlantedParams,
    StopReason,
    Trajectory,
)

logger = logging.getLogger(__name__)

Params = Union[F1Params, SlantedParams]
Rhs = Callable[[np.ndarray], np.ndarray]
Converged = Callable[[np.ndarray, np.ndarray], bool]


# ---------------------------------------------------------------------------
# Angle equation and right-hand sides
# ---------------------------------------------------------------------------

def f_eval(theta, p: F1Params):
    """f(theta) = mu cos(theta) - (theta - theta0 + lambda) sin(theta)"""
    return p.mu * np.cos(theta) - (theta - p.theta0 + p.lam) * np.sin(theta)


def f_prime(theta, p: F1Params):
    return -(p.mu + 1.0) * np.sin(theta) - (theta - p.theta0 + p.lam) * np.cos(theta)


def rhs_f1(st: ProfileState, p: F1Params) -> Tuple[float, float, float]:
    """(y', z', theta') of the F1-invariant profile"""
    return (
        math.exp(st.z) * math.cos(st.theta),
        math.sin(st.theta),
        float(f_eval(st.theta, p)),
    )


def theta_prime_raw(st: ProfileState, p: F1Params) -> float:
    """Curvature expression before the first integral is substituted"""
    ez = math.exp(-st.z)
    s, c = math.sin(st.theta), math.cos(st.theta)
    return -p.lam * ez * s + p.mu * (c - st.y * ez * s)


def slanted_theta_prime(z: float, theta: float, b: float, lam: float) -> float:
    s, c = math.sin(theta), math.cos(theta)
    if z >= 0.0:
        # divided through by e^{4z}
        q = math.exp(-4.0 * z)
        bracket = b * b * q * (2.0 * s * c - lam * math.exp(-z) * s * s) - lam * math.exp(-z)
        return s * bracket / (1.0 + b * b * q)
    bracket = b * b * (2.0 * s * c - lam * math.exp(-z) * s * s) - lam * math.exp(3.0 * z)
    return s * bracket / (math.exp(4.0 * z) + b * b)


def rhs_slanted(st: ProfileState, p: SlantedParams) -> Tuple[float, float, float]:
    """(y', z', theta') for the symmetry X = F1 + b F2"""
    return (
        math.exp(st.z) * math.cos(st.theta),
        math.sin(st.theta),
        slanted_theta_prime(st.z, st.theta, p.b, p.lam),
    )


def first_integral(st: ProfileState, p: F1Params) -> float:
    """e^{-z}(lambda + mu y) - (theta - theta0 + lambda); zero along solutions"""
    return math.exp(-st.z) * (p.lam + p.mu * st.y) - (st.theta - p.theta0 + p.lam)


def first_integral_residuals(tr: Trajectory) -> np.ndarray:
    p = tr.params
    if tr.system is not ProfileSystem.F1:
        return np.full(len(tr), np.nan)
    return np.exp(-tr.z) * (p.lam + p.mu * tr.y) - (tr.theta - p.theta0 + p.lam)


def first_integral_defect(tr: Trajectory) -> float:
    """
    Largest first-integral residual relative to the size of its terms,
    max |e^{z} r| / max(1, |y|, e^{z}|theta - theta0 + lambda|)
    """
    if tr.system is not ProfileSystem.F1:
        return 0.0
    p = tr.params
    scaled = np.exp(tr.z) * first_integral_residuals(tr)
    magnitude = np.maximum.reduce([np.ones_like(tr.y), np.abs(tr.y),
                                   np.exp(tr.z) * np.abs(tr.theta - p.theta0 + p.lam)])
    return float(np.max(np.abs(scaled) / magnitude))


def unit_speed_defect(tr: Trajectory) -> float:
    """max |e^{-2z} y'^2 + z'^2 - 1| over the samples"""
    return float(np.max(np.abs(np.exp(-2.0 * tr.z) * tr.dy ** 2 + tr.dz ** 2 - 1.0)))


# ---------------------------------------------------------------------------
# Zeros of f
# ---------------------------------------------------------------------------

def bisect_root(func: Callable[[float], float], x_a: float, x_b: float,
                xtol: float = config.ROOT_TOL, maxits: int = 200) -> float:
    """
    Zero of func on [x_a, x_b] by bisection

    Raises:
        ValueError: if func does not change sign across the interval
    """
    f_a, f_b = func(x_a), func(x_b)
    if f_a == 0.0:
        return x_a
    if f_b == 0.0:
        return x_b
    if (f_a > 0) == (f_b > 0):
        raise ValueError(f"f(x_a) and f(x_b) must have opposite sign ({f_a}, {f_b})")

    for _ in range(maxits):
        x_m = 0.5 * (x_a + x_b)
        f_m = func(x_m)
        if f_m == 0.0 or abs(x_b - x_a) <= xtol:
            return x_m
        if (f_m > 0) == (f_a > 0):
            x_a, f_a = x_m, f_m
        else:
            x_b, f_b = x_m, f_m
    return 0.5 * (x_a + x_b)


def _scan_for_zero(p: F1Params, direction: int) -> float:
    """Nearest sign change of f from theta0 in the given direction"""
    theta0 = p.theta0
    func = lambda t: float(f_eval(t, p))
    f0 = func(theta0)
    limit = 2.0 * math.pi + config.SCAN_STEP
    # every multiple of pi in range is a sample, so a sign change cannot hide between them
    steps = np.arange(1, int(math.ceil(limit / config.SCAN_STEP)) + 1) * config.SCAN_STEP
    samples = theta0 + direction * steps
    lo, hi = min(theta0, samples[-1]), max(theta0, samples[-1])
    k_first, k_last = math.ceil(lo / math.pi), math.floor(hi / math.pi)
    multiples = np.arange(k_first, k_last + 1) * math.pi
    samples = np.unique(np.concatenate([samples, multiples]))
    samples = samples[samples != theta0]
    samples = np.sort(samples) if direction > 0 else np.sort(samples)[::-1]

    prev_theta, prev_f = theta0, f0
    for theta in samples:
        value = func(theta)
        if value == 0.0:
            return float(theta)
        if (value > 0) != (prev_f > 0):
            return bisect_root(func, prev_theta, float(theta))
        prev_theta, prev_f = float(theta), value
    raise IntegrationError(f"No zero of f found within 2*pi of theta0={theta0}")


def bracket_zeros(p: F1Params) -> FZeroBracket:
    """Zeros of f nearest to theta0 from below and from above"""
    theta0 = p.theta0
    if abs(f_eval(theta0, p)) <= config.DEGENERACY_TOL:
        return FZeroBracket(theta0, theta0, degenerate=True)

    if p.mu == 0.0:
        k = math.floor(theta0 / math.pi)
        lower, upper = k * math.pi, (k + 1) * math.pi
        factor_zero = theta0 - p.lam
        if lower < factor_zero < theta0:
            lower = factor_zero
        elif theta0 < factor_zero < upper:
            upper = factor_zero
        return FZeroBracket(lower, upper)

    return FZeroBracket(_scan_for_zero(p, -1), _scan_for_zero(p, +1))


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) pair
# ---------------------------------------------------------------------------

_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def dp45_step(fun: Rhs, y: np.ndarray, k1: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    One Dormand-Prince step of an autonomous system

    Args:
        fun: right-hand side
        y: current state
        k1: fun(y), reused from the previous step
        h: step size

    Returns:
        (5th order state, fun at that state, local error estimate)
    """
    K = np.empty((7, y.shape[0]))
    K[0] = k1
    for i in range(1, 6):
        K[i] = fun(y + h * np.dot(_A[i], K[:i]))
    y_new = y + h * np.dot(_B5[:6], K[:6])
    K[6] = fun(y_new)
    return y_new, K[6], h * np.dot(_E, K)


def march(fun: Rhs, y0: np.ndarray, length: float, cfg: IntegratorConfig,
          converged: Optional[Converged] = None):
    """
    Integrate y' = fun(y) over [0, length] with adaptive step control

    Returns:
        (s samples, states, stop reason, s at equilibrium or None)
    """
    y = np.asarray(y0, dtype=float)
    k1 = fun(y)
    s = 0.0
    h = min(cfg.initial_step, cfg.max_step, length) if length > 0 else 0.0
    s_out: List[float] = [0.0]
    y_out: List[np.ndarray] = [y]
    reason = StopReason.REACHED_BOUND
    equilibrium_at = None
    steps = 0
    end_tol = 1e-12 * max(1.0, length)

    while length - s > end_tol:
        steps += 1
        if steps > cfg.max_steps:
            raise IntegrationError(f"Exceeded {cfg.max_steps} steps before s={length}")
        h = min(h, length - s)
        with np.errstate(over='ignore', invalid='ignore'):
            y_new, k_new, err = dp45_step(fun, y, k1, h)
            scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.max(np.abs(err) / scale))
        if not (math.isfinite(err_norm) and np.all(np.isfinite(y_new))):
            err_norm = math.inf

        if err_norm <= 1.0:
            s = length if h == length - s else s + h
            y, k1 = y_new, k_new
            s_out.append(s)
            y_out.append(y)
            if converged is not None and converged(y, k1):
                reason = StopReason.EQUILIBRIUM
                equilibrium_at = s
                logger.debug(f"Equilibrium reached at s={s:.6g}")
                break
            factor = cfg.max_growth if err_norm == 0.0 else min(cfg.max_growth, cfg.safety * err_norm ** -0.2)
            h = min(h * max(factor, 1.0), cfg.max_step)
        else:
            shrink = cfg.min_shrink if not math.isfinite(err_norm) else max(cfg.min_shrink, cfg.safety * err_norm ** -0.2)
            h *= shrink
            if h < cfg.min_step * max(1.0, s):
                reason = StopReason.STEP_UNDERFLOW
                logger.warning(f"Step size underflow at s={s:.6g} (h={h:.3e}); stopping this direction")
                break

    return np.asarray(s_out), np.vstack(y_out), reason, equilibrium_at


# ---------------------------------------------------------------------------
# F1 system in deviation coordinates
# ---------------------------------------------------------------------------

def _snap(value: float) -> float:
    return 0.0 if abs(value) < config.TRIG_SNAP else value


class _DeviationSystem:
    """
    F1 profile written with w = theta - theta_t about a zero theta_t of f

    Trig values of theta are assembled from those of theta_t and w, so an
    exponentially small w keeps its relative precision in y' and z'.
    """

    def __init__(self, p: F1Params, theta_t: float):
        self.p = p
        self.theta_t = theta_t
        self.sin_t = _snap(math.sin(theta_t))
        self.cos_t = _snap(math.cos(theta_t))
        self.c = theta_t - p.theta0 + p.lam

    def terms(self, z, w):
        """(y', z', w') for arrays or scalars"""
        sw = np.sin(w)
        hv = 2.0 * np.sin(0.5 * w) ** 2
        dcos = -self.cos_t * hv - self.sin_t * sw
        dsin = -self.sin_t * hv + self.cos_t * sw
        cos_th = self.cos_t + dcos
        sin_th = self.sin_t + dsin
        dw = self.p.mu * dcos - self.c * dsin - w * sin_th
        return np.exp(z) * cos_th, sin_th, dw

    def rhs(self, sign: float) -> Rhs:
        def fun(state: np.ndarray) -> np.ndarray:
            dy, dz, dw = self.terms(state[1], state[2])
            return sign * np.array([dy, dz, dw])
        return fun


# ---------------------------------------------------------------------------
# Integrator service
# ---------------------------------------------------------------------------

class ProfileIntegrator:
    """Integrates profile curves forward and backward from s = 0"""

    def __init__(self, cfg: Optional[IntegratorConfig] = None):
        self.cfg = cfg or IntegratorConfig()

    @staticmethod
    def _check(system: ProfileSystem, params: Params):
        expected = F1Params if system is ProfileSystem.F1 else SlantedParams
        if not isinstance(params, expected):
            raise TypeError(f"{system.value} system needs {expected.__name__}, got {type(params).__name__}")

    def integrate(self, system: ProfileSystem, params: Params, s_max: float,
                  cfg: Optional[IntegratorConfig] = None) -> Trajectory:
        """
        Profile curve through (0, 0, 0) with angle theta0, over [-s_max, s_max]

        Args:
            system: which reduction to solve
            params: F1Params or SlantedParams matching the system
            s_max: half-length of the arc-length interval
            cfg: integrator settings, defaults to the service's

        Returns:
            Trajectory with strictly increasing s
        """
        if not s_max > 0:
            raise ValueError(f"s_max must be positive (got {s_max})")
        self._check(system, params)
        cfg = cfg or self.cfg
        if system is ProfileSystem.F1:
            return self._integrate_f1(params, s_max, cfg)
        return self._integrate_slanted(params, s_max, cfg)

    def _integrate_f1(self, p: F1Params, s_max: float, cfg: IntegratorConfig) -> Trajectory:
        bracket = bracket_zeros(p)
        if bracket.degenerate:
            targets = (p.theta0, p.theta0)
        elif f_eval(p.theta0, p) > 0:
            targets = (bracket.theta1, bracket.theta2)
        else:
            targets = (bracket.theta2, bracket.theta1)

        pieces = []
        for sign, theta_t in ((-1.0, targets[0]), (1.0, targets[1])):
            dev = _DeviationSystem(p, theta_t)
            converged = None
            if cfg.stop_at_equilibrium and not bracket.degenerate:
                def converged(state, deriv, tol=cfg.equilibrium_tol, stall=cfg.stall_tol):
                    return abs(state[2]) < tol and abs(deriv[2]) < stall
            y0 = np.array([0.0, 0.0, p.theta0 - theta_t])
            s, states, reason, eq_s = march(dev.rhs(sign), y0, s_max, cfg, converged)
            dy, dz, dw = dev.terms(states[:, 1], states[:, 2])
            theta = theta_t + states[:, 2]
            pieces.append((sign * s, states[:, 0], states[:, 1], theta, dy, dz, dw, reason,
                           None if eq_s is None else sign * eq_s))

        tr = self._assemble(ProfileSystem.F1, p, pieces, targets)
        logger.debug(f"Integrated F1 profile {p}: {len(tr)} samples, stops {tr.stop_backward.value}/{tr.stop_forward.value}")
        return tr

    def _integrate_slanted(self, p: SlantedParams, s_max: float, cfg: IntegratorConfig) -> Trajectory:
        pieces = []
        for sign in (-1.0, 1.0):
            def fun(state, sign=sign):
                return sign * np.array(rhs_slanted(ProfileState(0.0, state[0], state[1], state[2]), p))

            converged = None
            if cfg.stop_at_equilibrium and math.sin(p.theta0) != 0.0:
                def converged(state, deriv, tol=cfg.equilibrium_tol, stall=cfg.stall_tol):
                    theta = state[2]
                    return abs(theta - round(theta / math.pi) * math.pi) < tol and abs(deriv[2]) < stall
            s, states, reason, eq_s = march(fun, np.array([0.0, 0.0, p.theta0]), s_max, cfg, converged)
            derivs = np.array([rhs_slanted(ProfileState(0.0, *row), p) for row in states])
            pieces.append((sign * s, states[:, 0], states[:, 1], states[:, 2],
                           derivs[:, 0], derivs[:, 1], derivs[:, 2], reason,
                           None if eq_s is None else sign * eq_s))
        return self._assemble(ProfileSystem.SLANTED, p, pieces, (None, None))

    @staticmethod
    def _assemble(system: ProfileSystem, params: Params, pieces, targets) -> Trajectory:
        back, fwd = pieces
        columns = []
        for k in range(7):
            columns.append(np.concatenate([back[k][:0:-1], fwd[k]]))
        s, y, z, theta, dy, dz, dtheta = columns
        return Trajectory(
            system=system,
            params=params,
            s=s, y=y, z=z, theta=theta, dy=dy, dz=dz, dtheta=dtheta,
            stop_backward=back[7],
            stop_forward=fwd[7],
            equilibrium_s=(back[8], fwd[8]),
            theta_limits=targets,
        )

    def advance(self, system: ProfileSystem, params: Params, state: ProfileState, ds: float,
                cfg: Optional[IntegratorConfig] = None) -> ProfileState:
        """Profile state at s + ds, re-integrated from state"""
        self._check(system, params)
        if ds == 0.0:
            return state
        cfg = cfg or IntegratorConfig(atol=1e-13, rtol=1e-13, max_step=self.cfg.max_step,
                                      stop_at_equilibrium=False)
        rhs = rhs_f1 if system is ProfileSystem.F1 else rhs_slanted
        sign = 1.0 if ds > 0 else -1.0

        def fun(v: np.ndarray) -> np.ndarray:
            return sign * np.array(rhs(ProfileState(0.0, v[0], v[1], v[2]), params))

        _, states, reason, _ = march(fun, np.array([state.y, state.z, state.theta]), abs(ds), cfg)
        if reason is StopReason.STEP_UNDERFLOW:
            raise IntegrationError(f"Step underflow while advancing from s={state.s} by {ds}")
        y, z, theta = states[-1]
        return ProfileState(state.s + ds, float(y), float(z), float(theta))

    def local_curve(self, tr: Trajectory, index: int, offsets: Sequence[float]) -> List[ProfileState]:
        """States at s_index + offset for each offset, integrated from a single sample"""
        base = tr.state(index)
        return [self.advance(tr.system, tr.params, base, float(ds)) for ds in offsets]

    def critical_points(self, tr: Trajectory) -> CriticalPoints:
        """Sign changes of y' and z' along the trajectory, located by bisection in s"""
        if len(tr) == 0:
            raise ValueError("Trajectory is empty")
        y_locs = self._sign_changes(tr, tr.dy, component=0)
        z_locs = self._sign_changes(tr, tr.dz, component=1)
        return CriticalPoints(len(y_locs), len(z_locs), tuple(y_locs), tuple(z_locs))

    def _sign_changes(self, tr: Trajectory, values: np.ndarray, component: int) -> List[float]:
        rhs = rhs_f1 if tr.system is ProfileSystem.F1 else rhs_slanted
        signs = np.sign(values)
        locations = []
        last_index, last_sign = None, 0.0
        for i, sgn in enumerate(signs):
            if sgn == 0.0:
                continue
            if last_sign != 0.0 and sgn != last_sign:
                base = tr.state(last_index)
                width = float(tr.s[i] - tr.s[last_index])

                def crossing(ds: float) -> float:
                    st = self.advance(tr.system, tr.params, base, ds)
                    return rhs(st, tr.params)[component]

                try:
                    ds = bisect_root(crossing, 0.0, width, xtol=1e-10)
                except ValueError:
                    # the zero sits on a sample up to rounding
                    ds = 0.0 if abs(crossing(0.0)) <= abs(crossing(width)) else width
                locations.append(float(tr.s[last_index]) + ds)
            last_index, last_sign = i, sgn
        return locations


# Global integrator instance
profile_integrator = ProfileIntegrator()


def integrate(system: ProfileSystem, params: Params, s_max: float,
              cfg: Optional[IntegratorConfig] = None) -> Trajectory:
    return profile_integrator.integrate(system, params, s_max, cfg)


def critical_points(tr: Trajectory) -> CriticalPoints:
    return profile_integrator.critical_points(tr)
