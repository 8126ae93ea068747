"""
Tests for the surface service
"""
import math

import numpy as np
import pytest

from soltrans.errors import MeshError
from soltrans.models import (
    F1Params,
    FrameVector,
    IntegratorConfig,
    KillingField,
    ProfileState,
    ProfileSystem,
    SlantedParams,
    Sol3Point,
)
from soltrans.services import geometry
from soltrans.services import profile as prof
from soltrans.services import surface

FIG1 = F1Params(lam=3.0, mu=0.0, theta0=math.pi / 2)
FIG6 = F1Params(lam=0.8, mu=-0.3, theta0=2.0)
SLANTED = SlantedParams(b=2.0, lam=1.0, theta0=math.pi / 2)

FREE_RUN = IntegratorConfig(stop_at_equilibrium=False)


@pytest.fixture(scope="module")
def fig1_trajectory():
    return prof.integrate(ProfileSystem.F1, FIG1, 10.0, FREE_RUN)


@pytest.fixture(scope="module")
def fig6_trajectory():
    return prof.integrate(ProfileSystem.F1, FIG6, 10.0, FREE_RUN)


@pytest.fixture(scope="module")
def slanted_trajectory():
    return prof.integrate(ProfileSystem.SLANTED, SLANTED, 5.0, FREE_RUN)


def _frame_normals(mesh):
    return geometry.coord_to_frame_array(mesh.normals, mesh.vertices[..., 2])


class TestBuildMesh:

    def test_zero_row_is_the_profile(self, fig1_trajectory):
        mesh = surface.build_mesh(fig1_trajectory, KillingField.F1(), (-1.0, 1.0), 3)
        np.testing.assert_array_equal(mesh.vertices[1], fig1_trajectory.curve_points())

    def test_f1_vertices_are_translates(self, fig1_trajectory):
        mesh = surface.build_mesh(fig1_trajectory, KillingField.F1(), (-2.0, 2.0), 5)
        for i, u in enumerate(mesh.u):
            np.testing.assert_allclose(mesh.vertices[i, :, 0], u)
            np.testing.assert_array_equal(mesh.vertices[i, :, 1], fig1_trajectory.y)
            np.testing.assert_array_equal(mesh.vertices[i, :, 2], fig1_trajectory.z)

    def test_slanted_vertex(self, slanted_trajectory):
        mesh = surface.build_mesh(slanted_trajectory, KillingField(1.0, 2.0, 0.0), (0.0, 1.0), 2)
        j = slanted_trajectory.origin_index
        assert slanted_trajectory.s[j] == 0.0
        np.testing.assert_allclose(mesh.vertices[1, j], [1.0, 2.0, 0.0], atol=1e-15)

    def test_f3_line_profile(self):
        s = np.linspace(-1.0, 1.0, 5)
        curve = surface.line_profile(s, x0=1.0)
        mesh = surface.build_mesh(curve, KillingField.F3(), (-1.0, 1.0), 3)
        for i, u in enumerate(mesh.u):
            for j, sj in enumerate(s):
                np.testing.assert_allclose(mesh.vertices[i, j], [math.exp(-u), math.exp(u) * sj, u], atol=1e-14)

    def test_witness_plane_stays_in_plane(self):
        X = KillingField(2.0, -1.0, 0.5)
        curve = surface.line_profile(np.linspace(-2.0, 2.0, 9), x0=X.a / X.c)
        mesh = surface.build_mesh(curve, X, (-2.0, 2.0), 7)
        np.testing.assert_allclose(mesh.vertices[..., 0], 4.0, atol=1e-12)

    def test_counts(self, fig1_trajectory):
        mesh = surface.build_mesh(fig1_trajectory, KillingField.F1(), (-1.0, 1.0), 4)
        n = len(fig1_trajectory)
        assert mesh.vertex_count == 4 * n
        assert mesh.faces.shape == (2 * 3 * (n - 1), 3)
        assert mesh.faces.max() == 4 * n - 1

    def test_two_by_two_grid(self):
        faces = surface.grid_faces(2, 2)
        assert faces.shape == (2, 3)
        assert sorted(set(faces.ravel())) == [0, 1, 2, 3]

    def test_normals_are_unit_and_normal(self, fig6_trajectory):
        X = KillingField.F1()
        mesh = surface.build_mesh(fig6_trajectory, X, (-1.0, 1.0), 5)
        z = mesh.vertices[..., 2]
        nu = _frame_normals(mesh)
        np.testing.assert_allclose(np.sum(nu * nu, axis=-1), 1.0, atol=1e-10)
        t_u = geometry.coord_to_frame_array(geometry.killing_array(X, mesh.vertices), z)
        np.testing.assert_allclose(np.sum(nu * t_u, axis=-1), 0.0, atol=1e-10)

    def test_normals_match_slanted_forms(self, slanted_trajectory):
        mesh = surface.build_mesh(slanted_trajectory, KillingField(1.0, SLANTED.b, 0.0), (-1.0, 1.0), 3)
        nu = _frame_normals(mesh)[1]
        for j in range(0, len(slanted_trajectory), 7):
            forms = surface.forms_slanted(slanted_trajectory.state(j), SLANTED.b, slanted_trajectory.dtheta[j])
            np.testing.assert_allclose(nu[j], forms.nu.as_array(), atol=1e-10)

    def test_mean_curvature_is_theta_prime(self, fig1_trajectory):
        mesh = surface.build_mesh(fig1_trajectory, KillingField.F1(), (-1.0, 1.0), 3)
        for row in mesh.H:
            np.testing.assert_array_equal(row, fig1_trajectory.dtheta)

    def test_empty_u_range(self, fig1_trajectory):
        with pytest.raises(MeshError):
            surface.build_mesh(fig1_trajectory, KillingField.F1(), (1.0, 1.0), 4)

    def test_resolution_too_small(self, fig1_trajectory):
        with pytest.raises(MeshError):
            surface.build_mesh(fig1_trajectory, KillingField.F1(), (-1.0, 1.0), 1)

    def test_trajectory_needs_horizontal_symmetry(self, fig1_trajectory):
        with pytest.raises(MeshError):
            surface.build_mesh(fig1_trajectory, KillingField(1.0, 0.0, 1.0))

    def test_planar_profile_needs_f3(self):
        curve = surface.circle_profile(np.linspace(0.0, 1.0, 4))
        with pytest.raises(MeshError):
            surface.build_mesh(curve, KillingField.F1())


class TestFormsF1:

    def test_vertical_tangent(self):
        forms = surface.forms_f1(ProfileState(0.0, 0.0, 0.0, math.pi / 2), theta_prime=0.0)
        assert forms.det_shape == pytest.approx(0.0, abs=1e-15)
        assert forms.K == pytest.approx(-1.0)

    def test_horizontal_tangent(self):
        forms = surface.forms_f1(ProfileState(0.0, 0.0, 0.0, 0.0), theta_prime=0.0)
        assert forms.nu == FrameVector(0.0, -0.0, 1.0)
        assert forms.det_shape == pytest.approx(-1.0)
        assert forms.K == pytest.approx(0.0, abs=1e-15)

    def test_mean_curvature_from_angle_equation(self):
        st = ProfileState(0.0, 0.3, -0.2, 1.1)
        forms = surface.forms_f1(st, FIG6)
        assert forms.H == prof.f_eval(st.theta, FIG6)
        assert forms.H == pytest.approx(np.trace(forms.A @ np.linalg.inv(forms.g)), abs=1e-12)

    def test_needs_params_or_theta_prime(self):
        with pytest.raises(ValueError):
            surface.forms_f1(ProfileState(0.0, 0.0, 0.0, 0.0))

    def test_gauss_curvature_without_mu(self, rng):
        p = F1Params(lam=1.3, mu=0.0, theta0=0.4)
        for theta in rng.uniform(-3.0, 3.0, 50):
            forms = surface.forms_f1(ProfileState(0.0, 0.0, 0.2, theta), p)
            expected = (theta - p.theta0 + p.lam) * math.sin(theta) * math.cos(theta) - math.sin(theta) ** 2
            assert forms.K == pytest.approx(expected, abs=1e-12)

    def test_gauss_equation(self, rng):
        for _ in range(100):
            st = ProfileState(0.0, 0.0, rng.uniform(-1, 1), rng.uniform(-math.pi, math.pi))
            forms = surface.forms_f1(st, theta_prime=rng.uniform(-2, 2))
            shape = forms.A @ np.linalg.inv(forms.g)
            assert forms.K == pytest.approx(np.linalg.det(shape) + geometry.ambient_curvature(forms.nu), abs=1e-12)

    def test_grim_reaper_curvature_changes_sign(self, fig1_trajectory):
        K = [surface.forms_f1(st, theta_prime=fig1_trajectory.dtheta[i]).K
             for i, st in enumerate(fig1_trajectory.states)]
        assert min(K) < 0.0 < max(K)

    def test_logarithmic_profile_is_minimal(self):
        # z = log(1 + y) meets the horizontal at a constant angle pi/4
        for y in (-0.5, 0.0, 2.0):
            st = ProfileState(0.0, y, math.log1p(y), math.pi / 4)
            assert surface.forms_f1(st, FIG6, theta_prime=0.0).H == 0.0

    def test_translator_identity(self, fig6_trajectory):
        V = KillingField(0.0, FIG6.lam, FIG6.mu)
        for i, st in enumerate(fig6_trajectory.states):
            if abs(st.s) > 3.0:
                continue
            forms = surface.forms_f1(st, theta_prime=fig6_trajectory.dtheta[i])
            projection = forms.nu.dot(geometry.killing_frame_at(V, Sol3Point(0.0, st.y, st.z)))
            assert forms.H == pytest.approx(projection, abs=1e-8)


class TestFormsSlanted:

    def test_zero_b_delegates(self):
        st = ProfileState(0.0, 0.1, 0.4, 1.0)
        assert surface.forms_slanted(st, 0.0, 0.7).H == 0.7

    def test_small_b_approaches_f1(self):
        st = ProfileState(0.0, 0.1, 0.4, 1.0)
        assert surface.forms_slanted(st, 1e-9, 0.7).H == pytest.approx(0.7, abs=1e-8)

    @pytest.mark.parametrize("b", [-3.0, 0.5, 2.0])
    def test_vertical_tangent_at_zero_height(self, b):
        forms = surface.forms_slanted(ProfileState(0.0, 0.0, 0.0, math.pi / 2), b, 0.9)
        assert forms.H == pytest.approx(0.9 / math.sqrt(1 + b * b), abs=1e-12)

    def test_trace_matches_closed_form(self, rng):
        for _ in range(1000):
            z, theta = rng.uniform(-1.0, 1.0), rng.uniform(-math.pi, math.pi)
            b, theta_prime = rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0)
            forms = surface.forms_slanted(ProfileState(0.0, 0.0, z, theta), b, theta_prime)
            closed = surface.slanted_mean_curvature(z, theta, theta_prime, b)
            assert forms.H == pytest.approx(closed, rel=1e-10, abs=1e-10)

    def test_metric_is_gram_matrix(self, rng):
        for _ in range(100):
            y, z, theta, b = rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3), rng.uniform(-3, 3)
            forms = surface.forms_slanted(ProfileState(0.0, y, z, theta), b, 0.3)
            p = Sol3Point(0.0, y, z)
            t_u = np.array([1.0, b, 0.0])
            t_s = np.array([0.0, math.exp(z) * math.cos(theta), math.sin(theta)])
            G = geometry.metric_at(p)
            gram = np.array([[t_u @ G @ t_u, t_u @ G @ t_s], [t_s @ G @ t_u, t_s @ G @ t_s]])
            np.testing.assert_allclose(forms.g, gram, atol=1e-10)

    def test_normal_is_unit_and_normal(self, rng):
        for _ in range(100):
            z, theta, b = rng.uniform(-1, 1), rng.uniform(-3, 3), rng.uniform(-3, 3)
            forms = surface.forms_slanted(ProfileState(0.0, 0.0, z, theta), b, 0.0)
            p = Sol3Point(0.0, 0.0, z)
            t_u = geometry.coord_to_frame(geometry.killing_at(KillingField(1.0, b, 0.0), p), p)
            t_s = FrameVector(0.0, math.cos(theta), math.sin(theta))
            assert forms.nu.norm_sq() == pytest.approx(1.0, abs=1e-10)
            assert forms.nu.dot(t_u) == pytest.approx(0.0, abs=1e-10)
            assert forms.nu.dot(t_s) == pytest.approx(0.0, abs=1e-10)

    def test_translator_identity(self, slanted_trajectory):
        V = KillingField(0.0, SLANTED.lam, 0.0)
        for i, st in enumerate(slanted_trajectory.states):
            forms = surface.forms_slanted(st, SLANTED.b, slanted_trajectory.dtheta[i])
            projection = forms.nu.dot(geometry.killing_frame_at(V, Sol3Point(0.0, st.y, st.z)))
            assert forms.H == pytest.approx(projection, abs=1e-8)


class TestPlanarProfiles:

    def test_line_needs_one_coordinate(self):
        with pytest.raises(ValueError):
            surface.line_profile(np.linspace(0, 1, 3))
        with pytest.raises(ValueError):
            surface.line_profile(np.linspace(0, 1, 3), x0=1.0, y0=1.0)

    def test_circle_is_unit_speed(self):
        curve = surface.circle_profile(np.linspace(0.0, 2 * math.pi, 17), radius=2.0)
        np.testing.assert_allclose(np.linalg.norm(curve.tangents, axis=1), 1.0)
        np.testing.assert_allclose(np.linalg.norm(curve.points, axis=1), 2.0)
