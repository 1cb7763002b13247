"""
Closed oriented triangle meshes: OFF I/O with JSON sidecars, analytic test
surfaces (icosphere, parametric torus), validation, per-face frames and
refinement by exact re-projection.

All surface integrals use one-point quadrature per face; face areas computed
here are the only area weights used anywhere.
"""

import os
import json
import logging
import numpy as np
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Any, Optional, Tuple

from config.config import Config
from utils.common import tree_sum, array_hash
from utils.errors import (
    MeshParseError, MeshValidationError, DegenerateFaceError, PreconditionError,
)

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0

ICOSAHEDRON_VERTICES = np.array([
    [-1, GOLDEN, 0], [1, GOLDEN, 0], [-1, -GOLDEN, 0], [1, -GOLDEN, 0],
    [0, -1, GOLDEN], [0, 1, GOLDEN], [0, -1, -GOLDEN], [0, 1, -GOLDEN],
    [GOLDEN, 0, -1], [GOLDEN, 0, 1], [-GOLDEN, 0, -1], [-GOLDEN, 0, 1],
], dtype=float)

ICOSAHEDRON_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


@dataclass
class TriMesh:
    """Triangle mesh with an optional analytic tag used for exact refinement."""
    vertices: np.ndarray
    faces: np.ndarray
    tag: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        self.vertices = np.array(self.vertices, dtype=float).reshape(-1, 3)
        self.faces = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self.faces.shape[0])

    @cached_property
    def corners(self) -> np.ndarray:
        """Corner positions, shape (F, 3 corners, 3 coordinates)."""
        return self.vertices[self.faces]

    @cached_property
    def face_area_vectors(self) -> np.ndarray:
        p = self.corners
        return 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    @cached_property
    def face_areas(self) -> np.ndarray:
        return np.linalg.norm(self.face_area_vectors, axis=1)

    @cached_property
    def face_normals(self) -> np.ndarray:
        areas = self.face_areas
        safe = np.where(areas > 0, areas, 1.0)
        return self.face_area_vectors / safe[:, None]

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.corners.mean(axis=1)

    @cached_property
    def area(self) -> float:
        return tree_sum(self.face_areas)

    @cached_property
    def signed_volume(self) -> float:
        p = self.corners
        return tree_sum(np.einsum('fi,fi->f', p[:, 0], np.cross(p[:, 1], p[:, 2])) / 6.0)

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted vertex pairs."""
        directed = directed_edges(self.faces)
        return np.unique(np.sort(directed, axis=1), axis=0)

    @cached_property
    def euler_characteristic(self) -> int:
        return self.n_vertices - int(self.edges.shape[0]) + self.n_faces

    @cached_property
    def mean_edge_length(self) -> float:
        e = self.edges
        return float(np.mean(np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)))

    @cached_property
    def vertex_normals(self) -> np.ndarray:
        """Angle-weighted average of incident face normals, normalized."""
        p = self.corners
        normals = np.zeros((self.n_vertices, 3))
        for c in range(3):
            u = p[:, (c + 1) % 3] - p[:, c]
            w = p[:, (c + 2) % 3] - p[:, c]
            cos = np.einsum('fi,fi->f', u, w) / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1))
            angle = np.arccos(np.clip(cos, -1.0, 1.0))
            np.add.at(normals, self.faces[:, c], angle[:, None] * self.face_normals)
        return normals / np.linalg.norm(normals, axis=1)[:, None]

    @cached_property
    def content_hash(self) -> str:
        return array_hash(self.vertices, self.faces)

    def integrate(self, face_values: np.ndarray) -> float:
        """
        One-point quadrature of a per-face quantity.

        Args:
            face_values: Values at face centroids, shape (F,) or (F, ...)

        Returns:
            Sum of value times face area, reduced with the fixed pairwise tree
        """
        values = np.asarray(face_values, dtype=float)
        weights = self.face_areas.reshape((-1,) + (1,) * (values.ndim - 1))
        return tree_sum(values * weights)

    def statistics(self) -> Dict[str, Any]:
        """Summary used by the meshgen command."""
        return {
            "vertices": self.n_vertices,
            "faces": self.n_faces,
            "area": self.area,
            "euler_characteristic": self.euler_characteristic,
            "volume": self.signed_volume,
            "mean_edge_length": self.mean_edge_length,
            "hash": self.content_hash,
        }


@dataclass(frozen=True)
class FaceFrame:
    """Orthonormal frame of a face: tau1, tau2 tangent, nu outward normal, det = +1."""
    tau1: np.ndarray
    tau2: np.ndarray
    nu: np.ndarray
    area: Any

    def __getitem__(self, index) -> "FaceFrame":
        return FaceFrame(self.tau1[index], self.tau2[index], self.nu[index], self.area[index])


def directed_edges(faces: np.ndarray) -> np.ndarray:
    """Directed edges (a->b, b->c, c->a) of every face, shape (3F, 2)."""
    faces = np.asarray(faces)
    return np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0)


def validate_mesh(mesh: TriMesh, require_closed: bool = True) -> TriMesh:
    """
    Check index ranges, face degeneracy, closedness, orientation and outward volume.

    Args:
        mesh: The mesh to check
        require_closed: Skip the closedness and volume checks when False (open patches)

    Returns:
        The mesh itself

    Raises:
        MeshValidationError: naming the offending edges or faces
    """
    if mesh.n_faces == 0:
        raise MeshValidationError("Mesh has no faces")
    if mesh.faces.min() < 0 or mesh.faces.max() >= mesh.n_vertices:
        bad = np.where((mesh.faces < 0).any(axis=1) | (mesh.faces >= mesh.n_vertices).any(axis=1))[0]
        raise MeshValidationError("Face references a missing vertex", faces=bad)

    areas = mesh.face_areas
    degenerate = np.where(areas <= Config.DEGENERATE_AREA_FACTOR * float(np.mean(areas)))[0]
    if len(degenerate):
        raise DegenerateFaceError("Degenerate faces", faces=degenerate)

    directed = directed_edges(mesh.faces)
    undirected, counts = np.unique(np.sort(directed, axis=1), axis=0, return_counts=True)
    if require_closed:
        open_edges = undirected[counts != 2]
        if len(open_edges):
            raise MeshValidationError("Mesh is not closed: edges not shared by exactly two faces", edges=open_edges)
    elif (counts > 2).any():
        raise MeshValidationError("Non-manifold edges", edges=undirected[counts > 2])

    unique_dir, dir_counts = np.unique(directed, axis=0, return_counts=True)
    repeated = unique_dir[dir_counts > 1]
    if len(repeated):
        raise MeshValidationError("Inconsistent orientation: edges traversed twice in the same direction", edges=repeated)

    if require_closed and mesh.signed_volume <= 0:
        raise MeshValidationError(f"Mesh is inward oriented (signed volume {mesh.signed_volume:.6g})")
    return mesh


def face_frames(mesh: TriMesh, seed_edge: int = 0) -> FaceFrame:
    """
    Frames of all faces; tau1 is the normalized edge starting at corner seed_edge.

    Args:
        mesh: The mesh
        seed_edge: Corner (0, 1 or 2) whose outgoing edge seeds tau1

    Returns:
        A FaceFrame with arrays of shape (F, 3)
    """
    p = mesh.corners
    areas = mesh.face_areas
    degenerate = np.where(areas <= Config.DEGENERATE_AREA_FACTOR * float(np.mean(areas)))[0]
    if len(degenerate):
        raise DegenerateFaceError("Cannot build a frame on a degenerate face", faces=degenerate)
    k = int(seed_edge) % 3
    edge = p[:, (k + 1) % 3] - p[:, k]
    tau1 = edge / np.linalg.norm(edge, axis=1)[:, None]
    nu = mesh.face_normals
    tau2 = np.cross(nu, tau1)
    return FaceFrame(tau1, tau2, nu, areas)


def face_frame(mesh: TriMesh, face: int, seed_edge: int = 0) -> FaceFrame:
    """Frame of a single face, see face_frames."""
    if not 0 <= face < mesh.n_faces:
        raise IndexError(f"Face index {face} out of range")
    sub = TriMesh(mesh.vertices, mesh.faces[face:face + 1])
    return face_frames(sub, seed_edge)[0]


def _orient_outward(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    p = vertices[faces]
    volume = np.sum(np.einsum('fi,fi->f', p[:, 0], np.cross(p[:, 1], p[:, 2])))
    if volume < 0:
        return faces[:, [0, 2, 1]]
    return faces


def _subdivide(vertices: np.ndarray, faces: np.ndarray, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """One 1-to-4 midpoint subdivision with projection onto the sphere."""
    n_v = vertices.shape[0]
    pairs = np.sort(np.stack([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=1), axis=2)
    unique, inverse = np.unique(pairs.reshape(-1, 2), axis=0, return_inverse=True)
    inverse = inverse.reshape(-1, 3) + n_v
    mid = 0.5 * (vertices[unique[:, 0]] + vertices[unique[:, 1]])
    mid = radius * mid / np.linalg.norm(mid, axis=1)[:, None]
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    ab, bc, ca = inverse[:, 0], inverse[:, 1], inverse[:, 2]
    new_faces = np.concatenate([
        np.stack([a, ab, ca], axis=1),
        np.stack([b, bc, ab], axis=1),
        np.stack([c, ca, bc], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ], axis=0)
    return np.concatenate([vertices, mid], axis=0), new_faces


def _sphere(radius: float, level: int) -> Tuple[np.ndarray, np.ndarray]:
    vertices = ICOSAHEDRON_VERTICES / np.linalg.norm(ICOSAHEDRON_VERTICES, axis=1)[:, None] * radius
    faces = ICOSAHEDRON_FACES.copy()
    for _ in range(level):
        vertices, faces = _subdivide(vertices, faces, radius)
    return vertices, faces


def _torus(big_r: float, small_r: float, nu: int, nv: int) -> Tuple[np.ndarray, np.ndarray]:
    u = 2.0 * np.pi * np.arange(nu) / nu
    v = 2.0 * np.pi * np.arange(nv) / nv
    uu, vv = np.meshgrid(u, v, indexing='ij')
    ring = big_r + small_r * np.cos(vv)
    vertices = np.stack([ring * np.cos(uu), ring * np.sin(uu), small_r * np.sin(vv)], axis=-1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(nu), np.arange(nv), indexing='ij')
    i, j = i.ravel(), j.ravel()
    p00 = i * nv + j
    p10 = ((i + 1) % nu) * nv + j
    p11 = ((i + 1) % nu) * nv + (j + 1) % nv
    p01 = i * nv + (j + 1) % nv
    faces = np.concatenate([np.stack([p00, p10, p11], axis=1), np.stack([p00, p11, p01], axis=1)], axis=0)
    return vertices, faces


def generate_primitive(kind: str, params: Dict[str, Any], level: int = 0) -> TriMesh:
    """
    Generate an analytic test surface.

    Args:
        kind: 'sphere' (params: r) or 'torus' (params: R, r, nu, nv)
        params: Surface parameters
        level: Subdivision level; each level splits sphere faces 1-to-4 and doubles the torus grid

    Returns:
        A validated, outward oriented, tagged TriMesh
    """
    level = int(level)
    if level < 0:
        raise PreconditionError(f"level must be >= 0, got {level}", precondition="level >= 0")
    if kind == "sphere":
        radius = float(params.get("r", params.get("radius", 1.0)))
        if not radius > 0:
            raise PreconditionError(f"sphere radius must be > 0, got {radius}", precondition="r > 0")
        vertices, faces = _sphere(radius, level)
        clean = {"r": radius}
    elif kind == "torus":
        big_r = float(params.get("R", np.sqrt(2.0)))
        small_r = float(params.get("r", 1.0))
        nu = int(params.get("nu", 32))
        nv = int(params.get("nv", 32))
        if not big_r > small_r > 0:
            raise PreconditionError(f"torus radii must satisfy R > r > 0, got R={big_r}, r={small_r}", precondition="R > r > 0")
        if nu < 3 or nv < 3:
            raise PreconditionError(f"torus grid must be at least 3x3, got {nu}x{nv}", precondition="nu, nv >= 3")
        vertices, faces = _torus(big_r, small_r, nu * 2 ** level, nv * 2 ** level)
        clean = {"R": big_r, "r": small_r, "nu": nu, "nv": nv}
    else:
        raise PreconditionError(f"Unknown primitive kind: {kind}", precondition="kind in {sphere, torus}")

    faces = _orient_outward(vertices, faces)
    mesh = TriMesh(vertices, faces, tag={"kind": kind, "params": clean, "level": level})
    validate_mesh(mesh)
    logger.info(f"Generated {kind} level {level}: {mesh.n_vertices} vertices, {mesh.n_faces} faces")
    return mesh


def refine(mesh: TriMesh) -> TriMesh:
    """
    Next refinement level of a tagged mesh, regenerated on the exact analytic surface.

    Args:
        mesh: A mesh carrying an analytic tag

    Returns:
        The refined mesh
    """
    if not mesh.tag:
        raise PreconditionError("Refinement needs an analytic tag (sphere or torus)", precondition="analytic tag")
    return generate_primitive(mesh.tag["kind"], mesh.tag["params"], int(mesh.tag.get("level", 0)) + 1)


def analytic_vertex_normals(mesh: TriMesh) -> np.ndarray:
    """Exact surface normals at the vertices of a tagged mesh."""
    if not mesh.tag:
        raise PreconditionError("Analytic normals need an analytic tag", precondition="analytic tag")
    x = mesh.vertices
    if mesh.tag["kind"] == "sphere":
        return x / np.linalg.norm(x, axis=1)[:, None]
    big_r = mesh.tag["params"]["R"]
    rho = np.linalg.norm(x[:, :2], axis=1)
    center = np.zeros_like(x)
    center[:, :2] = big_r * x[:, :2] / rho[:, None]
    n = x - center
    return n / np.linalg.norm(n, axis=1)[:, None]


def analytic_area(mesh: TriMesh) -> float:
    """Area of the analytic surface behind a tagged mesh."""
    params = mesh.tag["params"]
    if mesh.tag["kind"] == "sphere":
        return 4.0 * np.pi * params["r"] ** 2
    return 4.0 * np.pi ** 2 * params["R"] * params["r"]


def sidecar_path(path: str, kind: str = "mesh") -> str:
    """Path of the JSON sidecar stored next to an OFF file."""
    return os.path.splitext(path)[0] + f".{kind}.json"


def save_off(mesh: TriMesh, path: str) -> str:
    """
    Write an ASCII OFF file (17 significant digits) plus the tag sidecar.

    Args:
        mesh: The mesh to save
        path: Destination path

    Returns:
        The path written
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} {int(mesh.edges.shape[0])}"]
    lines.extend(f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices)
    lines.extend(f"3 {a} {b} {c}" for a, b, c in mesh.faces)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    if mesh.tag:
        with open(sidecar_path(path), "w") as f:
            json.dump(mesh.tag, f, sort_keys=True, indent=2)
    logger.info(f"Saved mesh to {path}")
    return path


def load_off(path: str, validate: bool = True, require_closed: bool = True) -> TriMesh:
    """
    Read an ASCII OFF file and its optional tag sidecar.

    Args:
        path: OFF file path
        validate: Run validate_mesh on the result
        require_closed: Passed to validate_mesh

    Returns:
        The mesh

    Raises:
        MeshParseError: with the offending line number
    """
    try:
        with open(path) as f:
            raw = f.read().splitlines()
    except OSError as e:
        raise MeshParseError(f"Cannot read {path}: {e}")

    tokens: List[Tuple[int, List[str]]] = []
    for number, line in enumerate(raw, start=1):
        content = line.split("#", 1)[0].split()
        if content:
            tokens.append((number, content))
    if not tokens or not tokens[0][1][0].endswith("OFF"):
        raise MeshParseError("Missing OFF header", line=tokens[0][0] if tokens else 1)

    header_line, header = tokens[0]
    rest = tokens[1:]
    if len(header) > 1:
        counts_line, counts = header_line, header[1:]
    else:
        if not rest:
            raise MeshParseError("Missing counts line", line=header_line)
        (counts_line, counts), rest = rest[0], rest[1:]
    try:
        n_v, n_f = int(counts[0]), int(counts[1])
    except (ValueError, IndexError):
        raise MeshParseError("Counts line must read 'V F E'", line=counts_line)
    if len(rest) < n_v + n_f:
        last = rest[-1][0] if rest else counts_line
        raise MeshParseError(f"Expected {n_v} vertices and {n_f} faces, file ends early", line=last)

    vertices = np.zeros((n_v, 3))
    for idx in range(n_v):
        number, content = rest[idx]
        try:
            vertices[idx] = [float(t) for t in content[:3]]
            if len(content) < 3:
                raise ValueError
        except ValueError:
            raise MeshParseError("Vertex line needs three coordinates", line=number)
    faces = np.zeros((n_f, 3), dtype=np.int64)
    for idx in range(n_f):
        number, content = rest[n_v + idx]
        try:
            values = [int(t) for t in content]
        except ValueError:
            raise MeshParseError("Face line must contain integers", line=number)
        if len(values) < 4 or values[0] != 3:
            raise MeshParseError("Only triangular faces ('3 a b c') are supported", line=number)
        faces[idx] = values[1:4]

    tag = None
    sidecar = sidecar_path(path)
    if os.path.exists(sidecar):
        with open(sidecar) as f:
            tag = json.load(f)
    mesh = TriMesh(vertices, faces, tag=tag)
    if validate:
        validate_mesh(mesh, require_closed=require_closed)
    logger.info(f"Loaded mesh {path}: {mesh.n_vertices} vertices, {mesh.n_faces} faces")
    return mesh
