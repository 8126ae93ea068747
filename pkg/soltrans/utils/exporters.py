"""
Artifact writers - trajectory CSV, mesh OBJ with normals sidecar, JSON
classifications, oracle and sweep reports
"""
import csv
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from soltrans.errors import ExportError
from soltrans.models import OracleReport, SurfaceMesh, Trajectory
from soltrans.services.profile import first_integral_residuals

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

TRAJECTORY_COLUMNS = ('s', 'y', 'z', 'theta', 'first_integral_residual')
NORMALS_COLUMNS = ('i', 'j', 'u', 's', 'x', 'y', 'z', 'nx', 'ny', 'nz', 'H')
REPORT_COLUMNS = ('quantity', 'u', 's', 'h', 'analytic', 'oracle', 'error', 'tolerance', 'passed')


def f17(value: float) -> str:
    return format(float(value), '.17g')


def f9(value: float) -> str:
    return format(float(value), '.9g')


@contextmanager
def _open(path: PathLike, mode: str = 'w'):
    """Open for text I/O, creating parent directories; OSError becomes ExportError"""
    path = Path(path)
    try:
        if 'w' in mode:
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, mode, encoding='utf-8', newline='') as f:
            yield f
    except OSError as e:
        raise ExportError(f"Cannot {'write' if 'w' in mode else 'read'} file: {e.strerror or e}", path) from e


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

def write_trajectory_csv(tr: Trajectory, path: PathLike) -> Path:
    """
    s, y, z, theta and the first-integral residual per sample at 17 significant digits

    The residual column is nan for reductions without a first integral.
    """
    if len(tr) == 0:
        raise ExportError("Trajectory is empty", path)
    residuals = first_integral_residuals(tr)
    with _open(path) as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in zip(tr.s, tr.y, tr.z, tr.theta, residuals):
            writer.writerow([f17(v) for v in row])
    logger.debug(f"Wrote {len(tr)} trajectory samples to {path}")
    return Path(path)


def read_trajectory_csv(path: PathLike) -> Dict[str, np.ndarray]:
    with _open(path, 'r') as f:
        reader = csv.reader(f)
        header = next(reader)
        values = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return {name: values[:, k] for k, name in enumerate(header)}


# ---------------------------------------------------------------------------
# Meshes
# ---------------------------------------------------------------------------

def normals_path_for(obj_path: PathLike) -> Path:
    obj_path = Path(obj_path)
    return obj_path.with_name(f"{obj_path.stem}_normals.csv")


def write_mesh_normals_csv(mesh: SurfaceMesh, path: PathLike) -> Path:
    """Sol3-unit normals (coordinate components) and H per vertex"""
    with _open(path) as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(NORMALS_COLUMNS)
        for i, u in enumerate(mesh.u):
            for j, s in enumerate(mesh.s):
                writer.writerow([i, j] + [f17(v) for v in (u, s, *mesh.vertices[i, j], *mesh.normals[i, j], mesh.H[i, j])])
    return Path(path)


def write_obj(mesh: SurfaceMesh, path: PathLike, normals_path: Optional[PathLike] = None) -> Tuple[Path, Path]:
    """
    Write the mesh as ASCII OBJ plus the metric normals sidecar

    Args:
        mesh: surface mesh
        path: OBJ destination
        normals_path: sidecar destination, defaults to <stem>_normals.csv next to the OBJ

    Returns:
        (OBJ path, sidecar path)

    Raises:
        ExportError: empty mesh or I/O failure; nothing is written for an empty mesh
    """
    if mesh.vertex_count == 0 or len(mesh.faces) == 0:
        raise ExportError("Mesh is empty", path)
    vertices = mesh.flat_vertices()
    normals = mesh.flat_normals()
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    # viewers expect Euclidean unit normals
    viewer_normals = np.divide(normals, lengths, out=np.zeros_like(normals), where=lengths > 0)

    with _open(path) as f:
        f.write(f"# soltrans mesh {len(mesh.u)}x{len(mesh.s)}\n")
        for x, y, z in vertices:
            f.write(f"v {f9(x)} {f9(y)} {f9(z)}\n")
        for x, y, z in viewer_normals:
            f.write(f"vn {f9(x)} {f9(y)} {f9(z)}\n")
        for a, b, c in mesh.faces + 1:
            f.write(f"f {a}//{a} {b}//{b} {c}//{c}\n")
    sidecar = write_mesh_normals_csv(mesh, normals_path or normals_path_for(path))
    logger.debug(f"Wrote OBJ with {len(vertices)} vertices and {len(mesh.faces)} faces to {path}")
    return Path(path), sidecar


def read_obj(path: PathLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(vertices, normals, zero-based faces) from an OBJ written by write_obj"""
    vertices: List[List[float]] = []
    normals: List[List[float]] = []
    faces: List[List[int]] = []
    with _open(path, 'r') as f:
        for line in f:
            parts = line.split()
            if not parts or parts[0].startswith('#'):
                continue
            if parts[0] == 'v':
                vertices.append([float(v) for v in parts[1:4]])
            elif parts[0] == 'vn':
                normals.append([float(v) for v in parts[1:4]])
            elif parts[0] == 'f':
                faces.append([int(p.split('/')[0]) - 1 for p in parts[1:4]])
    return (np.array(vertices, dtype=float).reshape(-1, 3),
            np.array(normals, dtype=float).reshape(-1, 3),
            np.array(faces, dtype=int).reshape(-1, 3))


# ---------------------------------------------------------------------------
# Structured output
# ---------------------------------------------------------------------------

def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    return value


def dumps_json(data: Dict[str, Any]) -> str:
    return json.dumps(_plain(data), sort_keys=True, indent=2)


def write_json(data: Dict[str, Any], path: PathLike) -> Path:
    with _open(path) as f:
        f.write(dumps_json(data) + "\n")
    return Path(path)


def write_reports_csv(reports: Sequence[OracleReport], tolerances: Dict[str, float], path: PathLike) -> Path:
    with _open(path) as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            tol = tolerances[r.quantity]
            writer.writerow([r.quantity, f17(r.u), f17(r.s), f17(r.h), f17(r.analytic), f17(r.oracle),
                             f17(r.error), f17(tol), 'true' if r.passed(tol) else 'false'])
    return Path(path)


def write_sweep_csv(rows: Iterable[Dict[str, Any]], columns: Sequence[str], path: PathLike,
                    header: Optional[Dict[str, Any]] = None) -> Path:
    """Rows under '# key=value' comment lines recording how the sweep was drawn"""
    with _open(path) as f:
        for key, value in sorted((header or {}).items()):
            f.write(f"# {key}={value}\n")
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([f17(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    return Path(path)
