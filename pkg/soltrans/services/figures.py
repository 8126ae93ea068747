"""
Figure service - the reference simulation presets, the figure pipeline
(profile, critical points, classification, mesh, oracles), aggregate
verification and parameter sweeps
"""
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from soltrans import config
from soltrans.errors import Sol3Error
from soltrans.models import (
    F1Params,
    FigurePreset,
    FigureResult,
    IntegratorConfig,
    KillingField,
    OracleReport,
    ProfileSystem,
    SlantedParams,
    Sol3Point,
    Trajectory,
    TranslatorFamily,
    VerificationSummary,
)
from soltrans.services import geometry, surface, verifier
from soltrans.services.classifier import TranslatorClassifier, translator_classifier
from soltrans.services.profile import (
    ProfileIntegrator,
    first_integral_defect,
    profile_integrator,
    unit_speed_defect,
)
from soltrans.utils import exporters

logger = logging.getLogger(__name__)

FREE_RUN = IntegratorConfig(stop_at_equilibrium=False)

PRESETS: Dict[int, FigurePreset] = {
    1: FigurePreset(1, KillingField(0.0, 3.0, 0.0), math.pi / 2, (1, 0),
                    TranslatorFamily.GRIM_REAPER_SLAB, "tilted grim reaper"),
    2: FigurePreset(2, KillingField(0.0, math.pi / 4, 0.0), math.pi / 2, (1, 0),
                    TranslatorFamily.HALF_PLANE_GRAPH, "graph on a half-plane with a critical point"),
    3: FigurePreset(3, KillingField(0.0, -math.pi / 8, 0.0), math.pi / 4, (0, 0),
                    TranslatorFamily.HALF_PLANE_GRAPH, "graph on a half-plane without critical point for y"),
    4: FigurePreset(4, KillingField(0.0, 0.0, -1.0), 0.0, (2, 1),
                    TranslatorFamily.GENERAL_F1, "two critical points for y and one for z"),
    # the angle stays in (-0.63, 2.93), which holds pi/2 only once
    5: FigurePreset(5, KillingField(0.0, 2.0, -1.0), 0.0, (1, 1),
                    TranslatorFamily.GENERAL_F1, "lambda = 2, mu = -1"),
    6: FigurePreset(6, KillingField(0.0, 0.8, -0.3), 2.0, (1, 0),
                    TranslatorFamily.GENERAL_F1, "z strictly monotone"),
    7: FigurePreset(7, KillingField(0.0, 3.0, 3.0), 2.0, (1, 1),
                    TranslatorFamily.GENERAL_F1, "z tends to +infinity in both directions"),
}


def get_preset(figure_id: int) -> FigurePreset:
    try:
        return PRESETS[figure_id]
    except KeyError:
        raise ValueError(f"Unknown figure {figure_id}; presets are {sorted(PRESETS)}") from None


def oracle_indices(tr: Trajectory, samples: int,
                   s_window: float = config.ORACLE_S_WINDOW,
                   z_window: float = config.ORACLE_Z_WINDOW) -> List[int]:
    """Evenly spread sample indices with |s| and |z| inside the windows"""
    candidates = np.flatnonzero((np.abs(tr.s) <= s_window) & (np.abs(tr.z) <= z_window))
    if candidates.size == 0 or samples <= 0:
        return []
    picks = np.linspace(0, candidates.size - 1, min(samples, candidates.size)).round().astype(int)
    return [int(candidates[k]) for k in np.unique(picks)]


class FigureService:
    """Runs presets, verification suites and sweeps on top of the other services"""

    def __init__(self, integrator: Optional[ProfileIntegrator] = None,
                 classifier: Optional[TranslatorClassifier] = None):
        self.integrator = integrator or profile_integrator
        self.classifier = classifier or translator_classifier
        self.tolerances = dict(config.ORACLE_TOLERANCES)

    # -- oracles ------------------------------------------------------------------

    def profile_reports(self, tr: Trajectory) -> List[OracleReport]:
        reports = [OracleReport('unit_speed', 0.0, unit_speed_defect(tr), 0.0)]
        if tr.system is ProfileSystem.F1:
            reports.append(OracleReport('first_integral', 0.0, first_integral_defect(tr), 0.0))
        return reports

    def surface_reports(self, tr: Trajectory, X: KillingField, V: KillingField,
                        samples: int = config.VERIFY_SAMPLES, h: float = config.ORACLE_STEP,
                        richardson: bool = True) -> List[OracleReport]:
        """
        Analytic forms against the finite-difference oracle at spread-out samples,
        plus the translator, soliton-flow and arc-length identities
        """
        reports: List[OracleReport] = []
        for k, i in enumerate(oracle_indices(tr, samples)):
            st = tr.state(i)
            if tr.system is ProfileSystem.F1:
                forms = surface.forms_f1(st, theta_prime=float(tr.dtheta[i]))
            else:
                forms = surface.forms_slanted(st, tr.params.b, float(tr.dtheta[i]))
            u = 0.5 * (k % 3 - 1)
            immersion = verifier.TrajectoryImmersion(tr, X, i, self.integrator)
            reports.extend([
                verifier.mean_curvature_report(immersion, u, st.s, forms.H, h, richardson),
                verifier.gauss_curvature_report(immersion, u, st.s, forms.K, h, richardson),
                verifier.translator_residual(immersion, u, st.s, V, h=h, richardson=richardson),
                verifier.soliton_flow_report(immersion, u, st.s, V, h, richardson),
                verifier.arc_length_report(immersion, st.s, u),
            ])
        return reports

    def geometry_reports(self, rng: np.random.Generator, points: int = 20) -> List[OracleReport]:
        """Killing equation, torsion and metric compatibility at random points"""
        reports = [OracleReport('metric_compatibility', 0.0, geometry.metric_compatibility_defect(), 0.0)]
        fields = (KillingField.F1(), KillingField.F2(), KillingField.F3())
        for values in rng.uniform(-1.0, 1.0, size=(points, 3)):
            p = Sol3Point.from_array(values)
            K = KillingField(*rng.uniform(-2.0, 2.0, size=3))
            for field in fields + (K,):
                reports.append(OracleReport('killing', 0.0, geometry.killing_residual(field, p), config.FD_STEP))
            reports.append(OracleReport('torsion', 0.0, geometry.torsion_defect(p), config.FD_STEP))
        return reports

    # -- figures ------------------------------------------------------------------

    def run(self, figure_id: int, s_max: float = config.FIGURE_S_MAX,
            u_range: Tuple[float, float] = config.MESH_U_RANGE,
            u_samples: int = config.MESH_U_SAMPLES,
            samples: int = config.VERIFY_SAMPLES) -> FigureResult:
        """
        Reproduce one preset

        Args:
            figure_id: preset number 1-7
            s_max: half-length of the integrated profile
            u_range: u interval of the mesh
            u_samples: u resolution of the mesh
            samples: number of oracle sample points along the profile

        Returns:
            FigureResult with the trajectory, critical points, classification, mesh and oracle reports
        """
        preset = get_preset(figure_id)
        tr = self.integrator.integrate(ProfileSystem.F1, preset.params, s_max, FREE_RUN)
        critical = self.integrator.critical_points(tr)
        classification = self.classifier.classify(preset.X, preset.V, preset.theta0)
        mesh = surface.build_mesh(tr, preset.X, u_range, u_samples)
        reports = self.profile_reports(tr) + self.surface_reports(tr, preset.X, preset.V, samples)
        summary = VerificationSummary(tuple(reports), self.tolerances)

        if (critical.count_y, critical.count_z) != preset.expected_counts:
            logger.warning(f"Figure {figure_id}: critical points {(critical.count_y, critical.count_z)} "
                           f"differ from expected {preset.expected_counts}")
        if classification.family is not preset.expected_family:
            logger.warning(f"Figure {figure_id}: family {classification.family.value} "
                           f"differs from expected {preset.expected_family.value}")
        logger.info(f"Figure {figure_id}: {classification.family.value}, counts "
                    f"{(critical.count_y, critical.count_z)}, oracles {'passed' if summary.passed else 'FAILED'}")
        return FigureResult(preset, tr, critical, classification, mesh, summary)

    def write_artifacts(self, result: FigureResult, outdir: Path) -> Dict[str, Path]:
        """Curve CSV, mesh OBJ with normals sidecar, classification JSON and oracle CSV"""
        stem = Path(outdir) / f"figure{result.preset.id}"
        obj_path, normals_path = exporters.write_obj(result.mesh, f"{stem}_mesh.obj")
        paths = {
            'curve': exporters.write_trajectory_csv(result.trajectory, f"{stem}_curve.csv"),
            'mesh': obj_path,
            'normals': normals_path,
            'classification': exporters.write_json(result.summary(), f"{stem}_classification.json"),
            'oracles': exporters.write_reports_csv(result.verification.reports, self.tolerances,
                                                  f"{stem}_oracles.csv"),
        }
        logger.info(f"Figure {result.preset.id} artifacts written to {outdir}")
        return paths

    # -- verification -------------------------------------------------------------

    def verify_preset(self, figure_id: int, samples: int = config.VERIFY_SAMPLES,
                      seed: int = 0) -> VerificationSummary:
        preset = get_preset(figure_id)
        tr = self.integrator.integrate(ProfileSystem.F1, preset.params, config.FIGURE_S_MAX, FREE_RUN)
        reports = self.geometry_reports(np.random.default_rng(seed))
        reports += self.profile_reports(tr) + self.surface_reports(tr, preset.X, preset.V, samples)
        return VerificationSummary(tuple(reports), self.tolerances)

    def verify_random(self, draws: int, seed: int, samples: int = 20) -> VerificationSummary:
        """
        Oracles on random F1 and slanted translators; even draws are F1, odd draws slanted
        """
        rng = np.random.default_rng(seed)
        reports = self.geometry_reports(rng)
        for k in range(draws):
            if k % 2 == 0:
                lam, mu = rng.uniform(-2.0, 2.0, size=2)
                params = F1Params(float(lam), float(mu), float(rng.uniform(-math.pi, math.pi)))
                system, X = ProfileSystem.F1, KillingField.F1()
                V = KillingField(0.0, params.lam, params.mu)
            else:
                b = float(rng.uniform(0.5, 2.0))
                eta, lam = rng.uniform(-2.0, 2.0, size=2)
                theta0 = float(rng.uniform(0.3, math.pi - 0.3))
                params = SlantedParams(b, float(lam - b * eta), theta0)
                system, X = ProfileSystem.SLANTED, KillingField(1.0, b, 0.0)
                V = KillingField(float(eta), float(lam), 0.0)
            tr = self.integrator.integrate(system, params, config.VERIFY_RANDOM_S_MAX, FREE_RUN)
            reports += self.profile_reports(tr) + self.surface_reports(tr, X, V, samples)
            logger.debug(f"Verified random draw {k}: {params}")
        return VerificationSummary(tuple(reports), self.tolerances)


# Global figure service instance
figure_service = FigureService()


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = (
    'lam', 'mu', 'theta0', 'family', 'count_y', 'count_z',
    'end_minus', 'end_plus', 'fit_residual_minus', 'fit_residual_plus',
    'first_integral_defect', 'unit_speed_defect', 'error',
)


def grid_points(grid: Dict[str, np.ndarray]) -> List[Dict[str, float]]:
    names = ('lam', 'mu', 'theta0')
    return [dict(zip(names, map(float, values))) for values in itertools.product(*(grid[n] for n in names))]


def random_points(count: int, seed: int, lam_range: Tuple[float, float] = (-3.0, 3.0),
                  mu_range: Tuple[float, float] = (-3.0, 3.0),
                  theta_range: Tuple[float, float] = (-math.pi, math.pi)) -> List[Dict[str, float]]:
    rng = np.random.default_rng(seed)
    return [
        {'lam': float(rng.uniform(*lam_range)), 'mu': float(rng.uniform(*mu_range)),
         'theta0': float(rng.uniform(*theta_range))}
        for _ in range(count)
    ]


def sweep_point(point: Dict[str, float], s_max: float = config.FIGURE_S_MAX) -> Dict[str, Any]:
    """Classification and profile diagnostics for one (lam, mu, theta0); errors land in the row"""
    row: Dict[str, Any] = {name: '' for name in SWEEP_COLUMNS}
    row.update(point)
    p = F1Params(point['lam'], point['mu'], point['theta0'])
    try:
        cls = translator_classifier.classify_f1(p)
        row['family'] = cls.family.value
        if cls.ends:
            row['end_minus'], row['end_plus'] = (e.kind.value for e in cls.ends)
            row['fit_residual_minus'], row['fit_residual_plus'] = (
                '' if e.fit_residual is None else e.fit_residual for e in cls.ends)
        if not p.is_trivial():
            tr = profile_integrator.integrate(ProfileSystem.F1, p, s_max, FREE_RUN)
            critical = profile_integrator.critical_points(tr)
            row['count_y'], row['count_z'] = critical.count_y, critical.count_z
            row['first_integral_defect'] = first_integral_defect(tr)
            row['unit_speed_defect'] = unit_speed_defect(tr)
    except Sol3Error as e:
        logger.warning(f"Sweep point {point} failed: {e}")
        row['error'] = str(e)
    return row


def run_sweep(points: Sequence[Dict[str, float]], workers: int = config.SWEEP_WORKERS) -> List[Dict[str, Any]]:
    """Rows in the order of points; workers > 1 uses a process pool"""
    logger.info(f"Sweeping {len(points)} parameter points with {workers} worker(s)")
    if workers <= 1 or len(points) <= 1:
        return [sweep_point(p) for p in points]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(sweep_point, points, chunksize=max(1, len(points) // (4 * workers))))


def summarize_rows(rows: Iterable[Dict[str, Any]]) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for row in rows:
        key = row['family'] or 'error'
        counts[key] = counts.get(key, 0) + 1
    return counts
