"""
Classifier service - existence and asymptotic type of invariant translators
"""
import logging
import math
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from soltrans import config
from soltrans.errors import TailTooShortError, ZeroKillingFieldError
from soltrans.models import (
    END_KIND_PRIORITY,
    AsymptoticEnd,
    EndKind,
    ExistenceVerdict,
    F1Params,
    IntegratorConfig,
    KillingField,
    ProfileSystem,
    SlantedParams,
    Trajectory,
    TranslatorClass,
    TranslatorFamily,
)
from soltrans.services import geometry
from soltrans.services.profile import (
    ProfileIntegrator,
    bracket_zeros,
    f_eval,
    profile_integrator,
)

logger = logging.getLogger(__name__)

TRIG_ZERO = 1e-12


# ---------------------------------------------------------------------------
# Boundary predicates for mu = 0
# ---------------------------------------------------------------------------

def _distance_to_lattice(value: float, offset: float) -> float:
    """Distance from value to offset + k*pi"""
    shifted = value - offset
    return abs(shifted - round(shifted / math.pi) * math.pi)


def is_half_log_case(p: F1Params, tol: float = config.BOUNDARY_TOL) -> bool:
    """theta0 = lambda + k*pi with lambda in (-pi, pi)"""
    return p.mu == 0.0 and -math.pi < p.lam < math.pi and p.lam != 0.0 and \
        _distance_to_lattice(p.theta0 - p.lam, 0.0) <= tol


def is_tilted_case(p: F1Params, tol: float = config.BOUNDARY_TOL) -> bool:
    """theta0 = lambda + pi/2 + k*pi with lambda in (-pi/2, pi/2)"""
    return p.mu == 0.0 and -math.pi / 2 < p.lam < math.pi / 2 and p.lam != 0.0 and \
        _distance_to_lattice(p.theta0 - p.lam, math.pi / 2) <= tol


def theta_limits(p: F1Params) -> Tuple[float, float]:
    """Limits of theta as s -> -inf and s -> +inf"""
    bracket = bracket_zeros(p)
    if bracket.degenerate:
        return p.theta0, p.theta0
    if f_eval(p.theta0, p) > 0:
        return bracket.theta1, bracket.theta2
    return bracket.theta2, bracket.theta1


# ---------------------------------------------------------------------------
# Tail fitting
# ---------------------------------------------------------------------------

def extract_tail(tr: Trajectory, direction: int,
                 fraction: float = config.TAIL_FRACTION) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Samples in the last fraction of the s-range beyond the outermost critical point

    Returns:
        (s, y, z) ordered outward
    """
    changes = _sign_change_abscissae(tr)
    if direction > 0:
        start = max([0.0] + [s for s in changes if s > 0.0])
        end = float(tr.s[-1])
        cut = end - fraction * (end - start)
        mask = tr.s >= cut
        order = slice(None)
    else:
        start = min([0.0] + [s for s in changes if s < 0.0])
        end = float(tr.s[0])
        cut = end + fraction * (start - end)
        mask = tr.s <= cut
        order = slice(None, None, -1)
    return tr.s[mask][order], tr.y[mask][order], tr.z[mask][order]


def _sign_change_abscissae(tr: Trajectory):
    out = []
    for column in (tr.dy, tr.dz):
        signs = np.sign(column)
        nonzero = np.nonzero(signs)[0]
        flips = nonzero[1:][signs[nonzero[1:]] != signs[nonzero[:-1]]]
        out.extend(float(tr.s[i]) for i in flips)
    return out


def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(values ** 2)))


def _fit_exponential(y: np.ndarray, z: np.ndarray, rate: float):
    """
    Weighted least squares for y = p + q e^{rate z}

    Returns:
        (p, log|q|, sign of q, z residual)
    """
    shift = float(np.max(z))
    basis = np.exp(rate * (z - shift))
    weights = 1.0 / basis
    A = np.column_stack([weights, np.ones_like(z)])
    (p, q_shifted), *_ = np.linalg.lstsq(A, y * weights, rcond=None)
    if q_shifted == 0.0 or not math.isfinite(q_shifted):
        return p, math.nan, 0, math.inf
    ratio = (y - p) / q_shifted
    if np.any(ratio <= 0.0):
        return p, math.nan, 0, math.inf
    z_pred = np.log(ratio) / rate + shift
    log_q = math.log(abs(q_shifted)) - rate * shift
    return float(p), log_q, int(np.sign(q_shifted)), _rms(z - z_pred)


def _fit_kind(kind: EndKind, y: np.ndarray, z: np.ndarray) -> Tuple[Dict[str, float], float]:
    if kind is EndKind.HORIZONTAL_PLANE:
        return {'z0': float(np.mean(z))}, _rms(z - np.mean(z))
    if kind is EndKind.VERTICAL_PLANE:
        return {'yval': float(np.mean(y))}, _rms(y - np.mean(y))
    if kind is EndKind.TILTED_PLANE:
        A = np.column_stack([np.ones_like(y), y])
        (alpha, beta), *_ = np.linalg.lstsq(A, z, rcond=None)
        if beta == 0.0:
            return {'c1': math.inf, 'c0': math.nan}, math.inf
        return {'c1': float(1.0 / beta), 'c0': float(-alpha / beta)}, _rms(z - alpha - beta * y)
    if kind in (EndKind.LOGARITHMIC, EndKind.HALF_LOGARITHMIC):
        rate = 1.0 if kind is EndKind.LOGARITHMIC else 2.0
        p, log_q, sign, residual = _fit_exponential(y, z, rate)
        return {'sign': sign, 'y0': -sign * p, 'z0': -log_q / rate}, residual
    raise ValueError(f"No fit model for {kind.value}")


def asymptote_fit(y: np.ndarray, z: np.ndarray,
                  candidates: Optional[Iterable[EndKind]] = None,
                  direction: int = 0) -> AsymptoticEnd:
    """
    Fit end models to a tail and pick one

    The first candidate in priority order whose residual is below the
    acceptance tolerance wins; otherwise the smallest residual does.

    Raises:
        TailTooShortError: if the tail has fewer samples than required
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if len(y) < config.MIN_TAIL_SAMPLES:
        raise TailTooShortError(f"Tail has {len(y)} samples, need {config.MIN_TAIL_SAMPLES}")

    wanted = set(candidates) if candidates is not None else set(END_KIND_PRIORITY)
    fits = []
    for kind in END_KIND_PRIORITY:
        if kind in wanted:
            params, residual = _fit_kind(kind, y, z)
            fits.append((kind, params, residual))
    if not fits:
        raise ValueError("No fittable end model among the candidates")

    chosen = next((f for f in fits if f[2] < config.FIT_ACCEPT_TOL), None)
    if chosen is None:
        chosen = min(fits, key=lambda f: f[2])
    kind, params, residual = chosen
    logger.debug(f"Tail fit: {kind.value} residual={residual:.3e} "
                 f"({', '.join(f'{k.value}={r:.2e}' for k, _, r in fits)})")
    return AsymptoticEnd(kind=kind, direction=direction, fit_residual=residual, **params)


# ---------------------------------------------------------------------------
# Classifier service
# ---------------------------------------------------------------------------

class TranslatorClassifier:
    """Decides existence and shape of X-invariant translators with velocity V"""

    def __init__(self, integrator: Optional[ProfileIntegrator] = None):
        self.integrator = integrator or profile_integrator

    # -- X = F1 ---------------------------------------------------------------

    def classify_f1(self, p: F1Params, fit: bool = True) -> TranslatorClass:
        """
        Classify the F1-invariant translator through the origin with angle theta0

        Args:
            p: reduced translation coefficients and initial angle
            fit: integrate the profile and attach fitted parameters and residuals

        Returns:
            TranslatorClass with ends ordered (s -> -inf, s -> +inf)
        """
        if p.is_trivial():
            raise ZeroKillingFieldError("V has no component transverse to F1 (lambda = mu = 0)")

        bracket = bracket_zeros(p)
        params = {'lambda': p.lam, 'mu': p.mu, 'theta0': p.theta0,
                  'theta1': bracket.theta1, 'theta2': bracket.theta2}

        if bracket.degenerate:
            return self._minimal_f1(p, params)

        limits = theta_limits(p)
        decisions = [self._end_decision(p, theta_e, direction)
                     for direction, theta_e in zip((-1, 1), limits)]

        tr = None
        if fit:
            long_tail = any(kind is EndKind.HALF_LOGARITHMIC for kind, _, _ in decisions)
            s_max = config.HALF_LOG_S_MAX if long_tail else config.CLASSIFY_S_MAX
            tr = self.integrator.integrate(ProfileSystem.F1, p, s_max,
                                           IntegratorConfig(stop_at_equilibrium=False))

        ends = tuple(self._resolve_end(tr, direction, theta_e, decision)
                     for direction, theta_e, decision in zip((-1, 1), limits, decisions))

        if p.mu != 0.0:
            family = TranslatorFamily.GENERAL_F1
        elif any(math.isclose(theta_e, p.theta0 - p.lam, abs_tol=config.BOUNDARY_TOL) for theta_e in limits):
            family = TranslatorFamily.HALF_PLANE_GRAPH
        else:
            family = TranslatorFamily.GRIM_REAPER_SLAB

        note = "; ".join(f"tail fit at the {'-' if e.direction < 0 else '+'} end prefers {e.fit_kind.value}"
                         for e in ends if e.fit_kind is not None)
        result = TranslatorClass(family=family, ends=ends, tangency=False, params=params, note=note)
        logger.info(f"Classified {p}: {family.value} "
                    f"[{ends[0].kind.value} | {ends[1].kind.value}]")
        return result

    @staticmethod
    def _minimal_f1(p: F1Params, params: Dict) -> TranslatorClass:
        if abs(math.sin(p.theta0)) < TRIG_ZERO:
            family = TranslatorFamily.MINIMAL_PLANE_HORIZONTAL
        elif abs(math.cos(p.theta0)) < TRIG_ZERO:
            family = TranslatorFamily.MINIMAL_PLANE_VERTICAL
        else:
            family = TranslatorFamily.MINIMAL_LOGARITHMIC
        return TranslatorClass(family=family, ends=None, tangency=True, params=params,
                               note="theta0 is a zero of f; the surface is minimal and V is tangent to it")

    @staticmethod
    def _end_decision(p: F1Params, theta_e: float, direction: int):
        """
        Symbolic end type from the limit angle

        Returns:
            (kind or None when only a fit can decide, closed-form parameters, candidate kinds)
        """
        sigma = {'sigma1': math.sin(p.theta0 - p.lam), 'sigma2': math.cos(p.theta0 - p.lam)}
        if p.mu == 0.0:
            k = theta_e - p.theta0 + p.lam
            if not math.isclose(theta_e, p.theta0 - p.lam, abs_tol=config.BOUNDARY_TOL):
                return EndKind.HORIZONTAL_PLANE, {'z0': math.log(p.lam / k)}, None
            if is_half_log_case(p):
                return EndKind.HALF_LOGARITHMIC, {}, None
            if is_tilted_case(p):
                return EndKind.TILTED_PLANE, {}, None
            return EndKind.LOGARITHMIC, sigma, None

        # mu != 0: z diverges linearly at both ends
        z_to_minus_inf = direction * math.sin(theta_e) < 0.0
        if z_to_minus_inf:
            return EndKind.VERTICAL_PLANE, {'yval': -p.lam / p.mu}, None
        k = theta_e - p.theta0 + p.lam
        if abs(k) > config.BOUNDARY_TOL:
            q = k / p.mu
            sign = 1 if q > 0 else -1
            return EndKind.LOGARITHMIC, {'sign': sign, 'y0': sign * p.lam / p.mu, 'z0': -math.log(abs(q))}, None
        return None, sigma, (EndKind.VERTICAL_PLANE, EndKind.LOGARITHMIC)

    @staticmethod
    def _resolve_end(tr: Optional[Trajectory], direction: int, theta_e: float, decision) -> AsymptoticEnd:
        kind, closed, candidates = decision
        sigma = {key: closed[key] for key in ('sigma1', 'sigma2') if key in closed}
        closed = {key: value for key, value in closed.items() if key not in sigma}

        if tr is None:
            if kind is None:
                return AsymptoticEnd(EndKind.DIVERGENT_LINEAR, direction=direction,
                                     theta_limit=theta_e, **sigma)
            return AsymptoticEnd(kind, direction=direction, theta_limit=theta_e, **closed, **sigma)

        _, y, z = extract_tail(tr, direction)
        fitted = asymptote_fit(y, z, None, direction)
        fit_kind = None
        if kind is not None and fitted.kind is not kind:
            logger.warning(f"End {direction:+d}: tail fit prefers {fitted.kind.value} "
                           f"(residual {fitted.fit_residual:.2e}) over {kind.value}")
            fit_kind = fitted.kind
            fitted = asymptote_fit(y, z, (kind,), direction)
        elif kind is None and candidates and fitted.kind not in candidates:
            logger.warning(f"End {direction:+d}: tail fit selected {fitted.kind.value}, "
                           f"outside {[k.value for k in candidates]}")
        values = fitted.parameters()
        if fitted.kind is kind:
            values.update(closed)
        return AsymptoticEnd(fitted.kind, direction=direction, theta_limit=theta_e,
                             fit_residual=fitted.fit_residual, fit_kind=fit_kind, **values, **sigma)

    # -- X = F1 + b F2 ----------------------------------------------------------

    def classify_slanted(self, b: float, V: KillingField, theta0: float = math.pi / 2,
                         s_max: float = 20.0) -> TranslatorClass:
        """
        Classify translators invariant under X = F1 + b F2

        The F1 component of V is absorbed into the tangent direction, leaving
        lambda~ = lambda - b*eta.
        """
        if b == 0.0:
            raise ValueError("b must be nonzero; use classify_f1 for X = F1")
        V.require_nonzero("translation direction V")
        lam_tilde = V.lam - b * V.eta
        params = {'b': b, 'eta': V.eta, 'lambda': V.lam, 'mu': V.mu,
                  'lambda_tilde': lam_tilde, 'theta0': theta0}

        if V.mu != 0.0:
            return TranslatorClass(
                family=TranslatorFamily.SLANTED_PLANE_Z0, tangency=False, params=params,
                note="mu != 0 forces sin(theta) = 0, so z = 0 and the surface is minimal; "
                     "V has a normal component mu there, so it translates only for the tangent part",
            )
        if abs(math.sin(theta0)) < TRIG_ZERO:
            return TranslatorClass(family=TranslatorFamily.SLANTED_PLANE_Z0, tangency=True, params=params,
                                   note="theta0 is a multiple of pi: the plane z = 0 with V tangent")

        tr = self.integrator.integrate(ProfileSystem.SLANTED, SlantedParams(b, lam_tilde, theta0), s_max,
                                       IntegratorConfig(stop_at_equilibrium=False))
        k = math.floor(theta0 / math.pi)
        confined = bool(np.all(tr.theta > k * math.pi - config.BOUNDARY_TOL) and
                        np.all(tr.theta < (k + 1) * math.pi + config.BOUNDARY_TOL))
        dz_signs = np.sign(tr.dz[tr.dz != 0.0])
        z_monotone = bool(np.all(dz_signs == dz_signs[0])) if dz_signs.size else True
        y_critical = self.integrator.critical_points(tr).count_y
        params.update({'theta_confined': confined, 'z_monotone': z_monotone,
                       'y_critical_points': y_critical, 's_max': s_max})
        note = "" if lam_tilde != 0.0 else "lambda~ = 0: minimal graph"
        if not (confined and z_monotone and y_critical <= 1):
            logger.warning(f"Slanted profile b={b}, lambda~={lam_tilde} violated graph checks: {params}")
            note = (note + "; " if note else "") + "graph checks failed numerically"
        return TranslatorClass(family=TranslatorFamily.SLANTED_GRAPH, tangency=False, params=params, note=note)

    # -- c != 0 -----------------------------------------------------------------

    def classify_vertical(self, X: KillingField, V: KillingField) -> ExistenceVerdict:
        """
        Existence of X-invariant translators when X has an F3 component

        V is split as (mu/c) X + eta~ F1 + lambda~ F2; the surface exists
        exactly when eta~ * lambda~ = 0.
        """
        if X.c == 0.0:
            raise ValueError("X must have a nonzero F3 component")
        V.require_nonzero("translation direction V")
        eta_t, lam_t = geometry.transverse_split(X, V)
        params = {'a': X.a, 'b': X.b, 'c': X.c, 'eta': V.eta, 'lambda': V.lam, 'mu': V.mu}
        exists = lam_t == 0.0 or eta_t == 0.0

        if not exists:
            return ExistenceVerdict(False, lam_t, eta_t, None,
                                    note="eta~ and lambda~ are both nonzero: no X-invariant translator")
        if lam_t != 0.0:
            witness = TranslatorClass(TranslatorFamily.VERTICAL_PLANE_X, tangency=True,
                                      params={**params, 'x0': X.a / X.c},
                                      note="vertical plane x = a/c")
        elif eta_t != 0.0:
            witness = TranslatorClass(TranslatorFamily.VERTICAL_PLANE_Y, tangency=True,
                                      params={**params, 'y0': -X.b / X.c},
                                      note="vertical plane y = -b/c")
        else:
            witness = TranslatorClass(TranslatorFamily.MINIMAL_INVARIANT, tangency=True, params=params,
                                      note="V is a multiple of X: every minimal X-invariant surface")
        return ExistenceVerdict(True, lam_t, eta_t, witness)

    # -- dispatch ---------------------------------------------------------------

    def classify(self, X: KillingField, V: KillingField, theta0: float = math.pi / 2,
                 fit: bool = True) -> Union[TranslatorClass, ExistenceVerdict]:
        """
        Route (X, V) to the matching reduction

        F2-invariant problems are mapped to F1 by the isometry
        (x, y, z) -> (y, x, -z), which sends F1 <-> F2 and F3 -> -F3.
        """
        X.require_nonzero("symmetry X")
        V.require_nonzero("translation direction V")
        if X.c != 0.0:
            return self.classify_vertical(X, V)
        if X.a == 0.0:
            return self.classify_f1(F1Params(V.eta, -V.mu, theta0), fit=fit)
        if X.b == 0.0:
            return self.classify_f1(F1Params(V.lam, V.mu, theta0), fit=fit)
        # rescale X to F1 + (b/a) F2; V keeps its coefficients
        return self.classify_slanted(X.b / X.a, V, theta0)


def reduce_to_profile(X: KillingField, V: KillingField,
                      theta0: float) -> Tuple[ProfileSystem, Union[F1Params, SlantedParams], KillingField, bool]:
    """
    Profile system for a symmetry without F3 component

    Returns:
        (system, params, symmetry generating the surface from the profile,
        whether coordinates are mirrored by (x, y, z) -> (y, x, -z))

    Raises:
        ValueError: X has an F3 component, or the slanted problem has mu != 0
    """
    X.require_nonzero("symmetry X")
    V.require_nonzero("translation direction V")
    if X.c != 0.0:
        raise ValueError("Symmetries with an F3 component have no profile ODE; use classify")
    if X.a == 0.0:
        return ProfileSystem.F1, F1Params(V.eta, -V.mu, theta0), KillingField.F1(), True
    if X.b == 0.0:
        return ProfileSystem.F1, F1Params(V.lam, V.mu, theta0), KillingField.F1(), False
    if V.mu != 0.0:
        raise ValueError("Slanted symmetries with mu != 0 only admit the plane z = 0")
    b = X.b / X.a
    return ProfileSystem.SLANTED, SlantedParams(b, V.lam - b * V.eta, theta0), KillingField(1.0, b, 0.0), False


# Global classifier instance
translator_classifier = TranslatorClassifier()


def classify_f1(p: F1Params, fit: bool = True) -> TranslatorClass:
    return translator_classifier.classify_f1(p, fit)


def classify_slanted(b: float, V: KillingField, theta0: float = math.pi / 2) -> TranslatorClass:
    return translator_classifier.classify_slanted(b, V, theta0)


def classify_vertical(X: KillingField, V: KillingField) -> ExistenceVerdict:
    return translator_classifier.classify_vertical(X, V)
