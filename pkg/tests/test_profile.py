"""
Tests for the profile ODE service
"""
import math

import numpy as np
import pytest

from soltrans.models import (
    F1Params,
    IntegratorConfig,
    ProfileState,
    ProfileSystem,
    SlantedParams,
    StopReason,
)
from soltrans.services import profile as prof

THETA_STAR = 2.798386045783887  # cos t = -t sin t

FIG1 = F1Params(lam=3.0, mu=0.0, theta0=math.pi / 2)
FIG4 = F1Params(lam=0.0, mu=-1.0, theta0=0.0)
FIG6 = F1Params(lam=0.8, mu=-0.3, theta0=2.0)

FREE_RUN = IntegratorConfig(stop_at_equilibrium=False)


@pytest.fixture(scope="module")
def fig1_trajectory():
    return prof.integrate(ProfileSystem.F1, FIG1, 20.0, FREE_RUN)


@pytest.fixture(scope="module")
def fig4_trajectory():
    return prof.integrate(ProfileSystem.F1, FIG4, 20.0, FREE_RUN)


class TestAngleEquation:

    @pytest.mark.parametrize("k", range(-3, 4))
    def test_multiples_of_pi_are_zeros_without_mu(self, k):
        assert prof.f_eval(k * math.pi, F1Params(1.7, 0.0, 0.4)) == pytest.approx(0.0, abs=1e-14)

    def test_value_at_theta0(self):
        assert prof.f_eval(FIG1.theta0, FIG1) == pytest.approx(-3.0)

    @pytest.mark.parametrize("mu", [-2.0, -0.3, 0.5, 1.0])
    def test_sign_alternates_on_multiples_of_pi(self, mu):
        p = F1Params(0.9, mu, 1.1)
        for k in range(-3, 3):
            product = prof.f_eval(k * math.pi, p) * prof.f_eval((k + 1) * math.pi, p)
            assert product == pytest.approx(-mu * mu, abs=1e-12)

    def test_derivative_matches_difference_quotient(self):
        p = F1Params(0.4, -1.2, 0.3)
        for theta in (-2.0, 0.1, 1.9):
            h = 1e-6
            fd = (prof.f_eval(theta + h, p) - prof.f_eval(theta - h, p)) / (2 * h)
            assert prof.f_prime(theta, p) == pytest.approx(fd, abs=1e-8)


class TestBracket:

    def test_grim_reaper_bracket(self):
        bracket = prof.bracket_zeros(FIG1)
        assert not bracket.degenerate
        assert bracket.theta1 == pytest.approx(0.0, abs=1e-12)
        assert bracket.theta2 == pytest.approx(math.pi, abs=1e-12)
        assert bracket.width == pytest.approx(math.pi)

    def test_symmetric_bracket(self):
        bracket = prof.bracket_zeros(FIG4)
        assert bracket.theta1 == pytest.approx(-THETA_STAR, abs=1e-6)
        assert bracket.theta2 == pytest.approx(THETA_STAR, abs=1e-6)

    def test_stationary_point_is_degenerate(self):
        bracket = prof.bracket_zeros(F1Params(math.pi, 0.0, math.pi))
        assert bracket.degenerate
        assert bracket.theta1 == bracket.theta2 == math.pi

    def test_factor_zero_replaces_multiple_of_pi(self):
        bracket = prof.bracket_zeros(F1Params(0.5, 0.0, 1.0))
        assert bracket.theta1 == pytest.approx(0.5)
        assert bracket.theta2 == pytest.approx(math.pi)

    @pytest.mark.slow
    def test_random_brackets(self, rng):
        for _ in range(1000):
            lam = rng.uniform(-3, 3)
            mu = 0.0 if rng.random() < 0.5 else rng.uniform(-3, 3)
            p = F1Params(lam, mu, rng.uniform(-math.pi, math.pi))
            bracket = prof.bracket_zeros(p)
            if bracket.degenerate:
                continue
            assert bracket.theta1 <= p.theta0 <= bracket.theta2
            assert abs(prof.f_eval(bracket.theta1, p)) < 1e-9
            assert abs(prof.f_eval(bracket.theta2, p)) < 1e-9
            if mu == 0.0:
                assert bracket.width <= math.pi + 1e-9
            else:
                assert bracket.width < 2 * math.pi
            inside = np.linspace(bracket.theta1, bracket.theta2, 203)[1:-1]
            values = prof.f_eval(inside, p)
            assert np.all(values > 0) or np.all(values < 0)


class TestRightHandSides:

    def test_f1_rhs_at_origin(self):
        dy, dz, dtheta = prof.rhs_f1(ProfileState(0, 0, 0, 0), F1Params(0.7, -1.4, 0.0))
        assert (dy, dz) == (1.0, 0.0)
        assert dtheta == pytest.approx(-1.4)

    def test_f1_rhs_vertical_tangent(self):
        p = F1Params(0.5, 2.0, 0.3)
        dy, dz, dtheta = prof.rhs_f1(ProfileState(0, 0.2, 0.1, math.pi / 2), p)
        assert dy == pytest.approx(0.0, abs=1e-15)
        assert dz == 1.0
        assert dtheta == pytest.approx(-(math.pi / 2 - 0.3 + 0.5))

    def test_initial_curvature_is_mu(self):
        p = F1Params(1.3, 0.8, 0.6)
        st = ProfileState(0.0, 0.0, 0.0, p.theta0)
        assert prof.rhs_f1(st, p)[2] == pytest.approx(prof.theta_prime_raw(st, p))

    @pytest.mark.parametrize("k", [-1, 0, 1, 2])
    def test_slanted_constant_solutions(self, k):
        assert prof.rhs_slanted(ProfileState(0, 0.3, -0.4, k * math.pi), SlantedParams(1.5, 0.7, 0.0))[2] == \
            pytest.approx(0.0, abs=1e-15)

    def test_slanted_direct_value(self):
        _, _, dtheta = prof.rhs_slanted(ProfileState(0, 0, 0, math.pi / 2), SlantedParams(1.0, 1.0, 0.0))
        assert dtheta == pytest.approx(-1.0)

    @pytest.mark.parametrize("z", [-1.0, 0.0, 0.7, 3.0])
    def test_slanted_small_b_limit(self, z):
        lam, theta = 1.3, 0.9
        value = prof.slanted_theta_prime(z, theta, 1e-8, lam)
        assert value == pytest.approx(-lam * math.exp(-z) * math.sin(theta), rel=1e-9)

    def test_slanted_branches_agree_at_zero(self):
        b, lam, theta = 0.6, -1.1, 2.2
        left = prof.slanted_theta_prime(-1e-12, theta, b, lam)
        right = prof.slanted_theta_prime(0.0, theta, b, lam)
        assert left == pytest.approx(right, rel=1e-10)


class TestIntegration:

    def test_degenerate_trajectory_keeps_angle(self):
        p = F1Params(math.pi, 0.0, math.pi)
        tr = prof.integrate(ProfileSystem.F1, p, 5.0)
        assert np.all(tr.theta == math.pi)
        assert tr.stop_forward is StopReason.REACHED_BOUND
        assert np.allclose(tr.y, -tr.s, atol=1e-9)
        assert np.allclose(tr.z, 0.0, atol=1e-12)

    def test_grim_reaper_limits(self, fig1_trajectory):
        tr = fig1_trajectory
        assert np.all(np.diff(tr.s) > 0)
        assert tr.s[0] == pytest.approx(-20.0) and tr.s[-1] == pytest.approx(20.0)
        assert np.all(np.diff(tr.theta) <= 1e-14)
        assert tr.theta[0] == pytest.approx(math.pi, abs=1e-8)
        assert tr.theta[-1] == pytest.approx(0.0, abs=1e-8)
        assert tr.z[-1] == pytest.approx(math.log(3 / (3 - math.pi / 2)), abs=1e-7)
        assert tr.z[0] == pytest.approx(math.log(3 / (3 + math.pi / 2)), abs=1e-7)

    def test_symmetric_limits(self, fig4_trajectory):
        tr = fig4_trajectory
        assert np.all(np.diff(tr.theta) <= 1e-14)
        assert tr.theta[-1] == pytest.approx(-THETA_STAR, abs=1e-6)
        assert tr.theta[0] == pytest.approx(THETA_STAR, abs=1e-6)
        assert tr.theta_limits == pytest.approx((THETA_STAR, -THETA_STAR), abs=1e-6)

    def test_equilibrium_stop_is_recorded(self):
        tr = prof.integrate(ProfileSystem.F1, FIG1, 200.0)
        assert tr.stop_forward is StopReason.EQUILIBRIUM
        assert tr.stop_backward is StopReason.EQUILIBRIUM
        assert tr.equilibrium_s[1] is not None and 0 < tr.equilibrium_s[1] < 200.0
        assert tr.equilibrium_s[0] < 0

    def test_first_integral_conserved(self, fig1_trajectory, fig4_trajectory):
        for tr in (fig1_trajectory, fig4_trajectory):
            mask = tr.z > -3.0
            assert np.max(np.abs(prof.first_integral_residuals(tr)[mask])) < 1e-8

    def test_first_integral_at_start(self):
        assert prof.first_integral(ProfileState(0, 0, 0, FIG6.theta0), FIG6) == 0.0

    def test_unit_speed(self, fig1_trajectory, fig4_trajectory):
        assert prof.unit_speed_defect(fig1_trajectory) < 1e-10
        assert prof.unit_speed_defect(fig4_trajectory) < 1e-10

    def test_curvature_forms_agree(self):
        tr = prof.integrate(ProfileSystem.F1, FIG4, 10.0, FREE_RUN)
        for i in range(0, len(tr), 7):
            raw = prof.theta_prime_raw(tr.state(i), FIG4)
            assert raw == pytest.approx(tr.dtheta[i], abs=1e-8)

    def test_wrong_parameter_type(self):
        with pytest.raises(TypeError):
            prof.integrate(ProfileSystem.SLANTED, FIG1, 1.0)

    def test_non_positive_length(self):
        with pytest.raises(ValueError):
            prof.integrate(ProfileSystem.F1, FIG1, 0.0)

    def test_advance_matches_trajectory(self, fig4_trajectory):
        tr = fig4_trajectory
        i = tr.index_near(-1.0)
        j = tr.index_near(1.5)
        moved = prof.profile_integrator.advance(tr.system, tr.params, tr.state(i), float(tr.s[j] - tr.s[i]))
        assert moved.y == pytest.approx(tr.y[j], abs=1e-9)
        assert moved.z == pytest.approx(tr.z[j], abs=1e-9)
        assert moved.theta == pytest.approx(tr.theta[j], abs=1e-9)

    def test_local_curve_offsets(self, fig1_trajectory):
        states = prof.profile_integrator.local_curve(fig1_trajectory, fig1_trajectory.origin_index, [-0.1, 0.0, 0.1])
        assert [st.s for st in states] == pytest.approx([-0.1, 0.0, 0.1])
        assert states[1].theta == pytest.approx(FIG1.theta0)

    @pytest.mark.slow
    def test_random_parameters_conserve_and_stay_monotone(self, rng):
        cfg = IntegratorConfig(max_step=0.2, stop_at_equilibrium=False)
        for _ in range(500):
            lam = rng.uniform(-3, 3)
            mu = 0.0 if rng.random() < 0.5 else rng.uniform(-3, 3)
            p = F1Params(lam, mu, rng.uniform(-math.pi, math.pi))
            tr = prof.integrate(ProfileSystem.F1, p, 20.0, cfg)
            bracket = prof.bracket_zeros(p)
            # e^z times the first integral, free of the e^{-z} amplification at z -> -inf ends
            scaled = np.exp(tr.z) * prof.first_integral_residuals(tr)
            magnitude = np.maximum.reduce([np.ones_like(tr.y), np.abs(tr.y),
                                           np.exp(tr.z) * np.abs(tr.theta - p.theta0 + p.lam)])
            assert np.max(np.abs(scaled) / magnitude) < 1e-8
            assert prof.unit_speed_defect(tr) < 1e-10
            if not bracket.degenerate:
                assert tr.theta.min() >= bracket.theta1 - 1e-9
                assert tr.theta.max() <= bracket.theta2 + 1e-9
                signs = np.sign(tr.dtheta[tr.dtheta != 0.0])
                assert np.all(signs == signs[0])


class TestSlanted:

    def test_small_b_matches_f1_dynamics(self):
        slanted = prof.integrate(ProfileSystem.SLANTED, SlantedParams(1e-8, 1.2, 1.0), 3.0, FREE_RUN)
        f1 = prof.integrate(ProfileSystem.F1, F1Params(1.2, 0.0, 1.0), 3.0, FREE_RUN)
        assert slanted.theta[-1] == pytest.approx(f1.theta[-1], abs=1e-6)
        assert slanted.z[-1] == pytest.approx(f1.z[-1], abs=1e-6)

    @pytest.mark.slow
    def test_barrier(self, rng):
        cfg = IntegratorConfig(max_step=0.1, stop_at_equilibrium=False)
        for _ in range(200):
            b = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 3.0)
            lam = rng.uniform(-3, 3)
            k = int(rng.integers(-2, 2))
            theta0 = k * math.pi + rng.uniform(0.05, math.pi - 0.05)
            tr = prof.integrate(ProfileSystem.SLANTED, SlantedParams(b, lam, theta0), 5.0, cfg)
            assert tr.theta.min() >= k * math.pi - 1e-9
            assert tr.theta.max() <= (k + 1) * math.pi + 1e-9


class TestCriticalPoints:

    def test_grim_reaper(self, fig1_trajectory):
        crit = prof.critical_points(fig1_trajectory)
        assert (crit.count_y, crit.count_z) == (1, 0)
        # y' vanishes where theta = pi/2, which is s = 0 for this preset
        assert crit.y_locations[0] == pytest.approx(0.0, abs=1e-8)

    def test_two_and_one(self, fig4_trajectory):
        crit = prof.critical_points(fig4_trajectory)
        assert (crit.count_y, crit.count_z) == (2, 1)
        assert crit.z_locations[0] == pytest.approx(0.0, abs=1e-8)

    def test_monotone_height(self):
        tr = prof.integrate(ProfileSystem.F1, FIG6, 20.0, FREE_RUN)
        crit = prof.critical_points(tr)
        assert (crit.count_y, crit.count_z) == (1, 0)
