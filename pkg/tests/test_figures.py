"""
Tests for the figure service: presets, the figure pipeline, verification and sweeps
"""
import json
import math

import numpy as np
import pytest

from soltrans.models import EndKind, ProfileSystem, TranslatorFamily
from soltrans.services import figures
from soltrans.services.figures import FREE_RUN, PRESETS, figure_service
from soltrans.services.profile import profile_integrator
from soltrans.utils.exporters import dumps_json


@pytest.fixture(scope="module")
def figure1():
    return figure_service.run(1, s_max=10.0, u_samples=4, samples=4)


class TestPresets:

    def test_seven_presets(self):
        assert sorted(PRESETS) == list(range(1, 8))
        for preset in PRESETS.values():
            assert preset.X.as_tuple() == (1.0, 0.0, 0.0)
            assert preset.V.eta == 0.0

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            figures.get_preset(8)

    @pytest.mark.parametrize("figure_id", sorted(PRESETS))
    def test_critical_point_counts(self, figure_id):
        preset = PRESETS[figure_id]
        tr = profile_integrator.integrate(ProfileSystem.F1, preset.params, 30.0, FREE_RUN)
        critical = profile_integrator.critical_points(tr)
        assert (critical.count_y, critical.count_z) == preset.expected_counts

    @pytest.mark.parametrize("figure_id", sorted(PRESETS))
    def test_expected_family(self, figure_id):
        preset = PRESETS[figure_id]
        result = figure_service.classifier.classify(preset.X, preset.V, preset.theta0)
        assert result.family is preset.expected_family

    def test_figure4_has_two_vertical_ends(self):
        preset = PRESETS[4]
        result = figure_service.classifier.classify(preset.X, preset.V, preset.theta0)
        for end in result.ends:
            assert end.kind is EndKind.VERTICAL_PLANE
            assert end.yval == pytest.approx(0.0, abs=1e-12)


class TestFigurePipeline:

    def test_grim_reaper_limits(self, figure1):
        summary = figure1.summary()
        assert summary['classification']['family'] == TranslatorFamily.GRIM_REAPER_SLAB.value
        assert summary['z_lower'] == pytest.approx(-0.421076, abs=1e-6)
        assert summary['z_upper'] == pytest.approx(math.log(3 / (3 - math.pi / 2)), abs=1e-9)

    def test_counts_and_oracles(self, figure1):
        assert figure1.counts == (1, 0)
        assert figure1.verification.passed, figure1.verification.failures()[:3]

    def test_mesh_shape(self, figure1):
        assert figure1.mesh.vertices.shape == (4, len(figure1.trajectory), 3)

    def test_artifacts(self, figure1, tmp_path):
        paths = figure_service.write_artifacts(figure1, tmp_path)
        assert set(paths) == {'curve', 'mesh', 'normals', 'classification', 'oracles'}
        assert paths['curve'].name == "figure1_curve.csv"
        assert paths['mesh'].name == "figure1_mesh.obj"
        for path in paths.values():
            assert path.exists()
        data = json.loads(paths['classification'].read_text())
        assert data['figure'] == 1
        assert data['count_y'] == 1

    def test_summary_is_json_ready(self, figure1):
        assert json.loads(dumps_json(figure1.summary()))['expected_counts'] == [1, 0]


@pytest.mark.slow
@pytest.mark.parametrize("figure_id", sorted(PRESETS))
def test_artifacts_are_byte_identical_across_runs(figure_id, tmp_path):
    written = []
    for run in ("first", "second"):
        result = figure_service.run(figure_id, s_max=10.0, u_samples=4, samples=4)
        written.append(figure_service.write_artifacts(result, tmp_path / run))
    first, second = written
    assert set(first) == set(second)
    for name in first:
        assert first[name].read_bytes() == second[name].read_bytes(), name


class TestOracleIndices:

    def test_window_and_spread(self):
        tr = profile_integrator.integrate(ProfileSystem.F1, PRESETS[6].params, 20.0, FREE_RUN)
        picks = figures.oracle_indices(tr, 10)
        assert 0 < len(picks) <= 10
        assert picks == sorted(set(picks))
        assert np.all(np.abs(tr.s[picks]) <= 10.0)
        assert np.all(np.abs(tr.z[picks]) <= 2.0)

    def test_no_samples(self):
        tr = profile_integrator.integrate(ProfileSystem.F1, PRESETS[6].params, 2.0, FREE_RUN)
        assert figures.oracle_indices(tr, 0) == []


class TestVerification:

    def test_geometry_reports_pass(self, rng):
        reports = figure_service.geometry_reports(rng, points=5)
        tolerances = figure_service.tolerances
        assert all(r.passed(tolerances[r.quantity]) for r in reports)
        assert {r.quantity for r in reports} == {'metric_compatibility', 'killing', 'torsion'}

    def test_random_draws(self):
        summary = figure_service.verify_random(2, seed=3, samples=3)
        assert summary.passed, summary.failures()[:3]
        assert {'translator', 'soliton_flow', 'arc_length'} <= set(summary.worst())


class TestSweeps:

    def test_grid_points_cover_product(self):
        grid = {'lam': np.array([0.0, 1.0]), 'mu': np.array([0.0, 1.0, 2.0]), 'theta0': np.array([0.5])}
        points = figures.grid_points(grid)
        assert len(points) == 6
        assert points[0] == {'lam': 0.0, 'mu': 0.0, 'theta0': 0.5}

    def test_random_points_reproducible(self):
        assert figures.random_points(4, seed=11) == figures.random_points(4, seed=11)
        assert figures.random_points(4, seed=11) != figures.random_points(4, seed=12)

    def test_sweep_rows(self):
        points = [{'lam': 3.0, 'mu': 0.0, 'theta0': math.pi / 2}, {'lam': 0.4, 'mu': 0.0, 'theta0': 0.0}]
        rows = figures.run_sweep(points, workers=1)
        assert [row['family'] for row in rows] == ['GrimReaperSlab', 'MinimalPlaneHorizontal']
        assert rows[0]['count_y'] == 1
        assert rows[0]['end_minus'] == rows[0]['end_plus'] == 'HorizontalPlane'
        assert all(row['error'] == '' for row in rows)
        assert figures.summarize_rows(rows) == {'GrimReaperSlab': 1, 'MinimalPlaneHorizontal': 1}
