"""
Director fields on meshes and the per-face extension operator L.

For each face the director is interpolated linearly from the vertices; its
gradient D(theta) acts on tangent vectors. L extends D(theta) to R^3 by
L(theta_bar) = 0, is projected onto theta_bar-perp and symmetrized. The two
nontrivial eigenvalues of L on theta_bar-perp are the director curvatures.
"""

import json
import logging
import numpy as np
from dataclasses import dataclass
from typing import Dict, List, Any, Optional, Callable

from config.config import Config
from tools.base_tool import BaseTool
from utils.mesh import TriMesh, analytic_vertex_normals
from utils.errors import FoldOverError, PreconditionError

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DirectorField:
    """Unit director per vertex, with an optional explicit director per face."""
    values: np.ndarray
    face_values: Optional[np.ndarray] = None


@dataclass(frozen=True)
class FaceDirectorData:
    """Per-face director data. Arrays carry a leading face axis when batched."""
    faces: np.ndarray
    theta_bar: np.ndarray
    Dtheta: np.ndarray
    L: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    eig_frame: np.ndarray  # rows v1, v2, theta_bar
    asymmetry: np.ndarray
    theta_dot_nu: np.ndarray

    def __getitem__(self, index) -> "FaceDirectorData":
        return FaceDirectorData(*(getattr(self, name)[index] for name in self.__dataclass_fields__))

    @property
    def v1(self) -> np.ndarray:
        return self.eig_frame[..., 0, :]

    @property
    def v2(self) -> np.ndarray:
        return self.eig_frame[..., 1, :]


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def barycentric_gradients(mesh: TriMesh, faces: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Gradients of the three hat functions on each face.

    Returns:
        Array of shape (F, 3 corners, 3), grad phi_a = nu x (p_{a+2} - p_{a+1}) / (2 area)
    """
    idx = np.arange(mesh.n_faces) if faces is None else np.asarray(faces)
    p = mesh.corners[idx]
    nu = mesh.face_normals[idx]
    twice_area = 2.0 * mesh.face_areas[idx]
    grads = np.stack([np.cross(nu, p[:, (a + 2) % 3] - p[:, (a + 1) % 3]) for a in range(3)], axis=1)
    return grads / twice_area[:, None, None]


def tangent_eigen(L: np.ndarray, theta_bar: np.ndarray):
    """
    Eigenpairs of symmetric L restricted to theta_bar-perp, largest eigenvalue first.

    Args:
        L: Matrices (F, 3, 3) with L theta_bar = 0
        theta_bar: Unit vectors (F, 3)

    Returns:
        (lambda1, lambda2, eig_frame) with (v1, v2, theta_bar) right-handed
    """
    axis = np.argmin(np.abs(theta_bar), axis=-1)
    helper = np.eye(3)[axis]
    a = _normalize(np.cross(theta_bar, helper))
    b = np.cross(theta_bar, a)
    La = np.einsum('fij,fj->fi', L, a)
    Lb = np.einsum('fij,fj->fi', L, b)
    m = np.stack([
        np.stack([np.einsum('fi,fi->f', a, La), np.einsum('fi,fi->f', a, Lb)], axis=-1),
        np.stack([np.einsum('fi,fi->f', b, La), np.einsum('fi,fi->f', b, Lb)], axis=-1),
    ], axis=-2)
    m = 0.5 * (m + np.swapaxes(m, -1, -2))
    w, vec = np.linalg.eigh(m)
    lambda1, lambda2 = w[:, 1], w[:, 0]
    c1 = vec[:, :, 1]
    # fixed sign: first nonzero coordinate positive
    flip = (c1[:, 0] < 0) | ((c1[:, 0] == 0) & (c1[:, 1] < 0))
    c1 = np.where(flip[:, None], -c1, c1)
    v1 = c1[:, 0:1] * a + c1[:, 1:2] * b
    v2 = np.cross(theta_bar, v1)
    return lambda1, lambda2, np.stack([v1, v2, theta_bar], axis=1)


def face_director_batch(mesh: TriMesh, field: DirectorField, faces: Optional[np.ndarray] = None) -> FaceDirectorData:
    """
    Director data for many faces at once.

    Args:
        mesh: The mesh
        field: Director field on its vertices
        faces: Face indices (all faces when None)

    Returns:
        Batched FaceDirectorData in face order

    Raises:
        FoldOverError: if theta_bar . nu <= 0 on some face
    """
    idx = np.arange(mesh.n_faces) if faces is None else np.atleast_1d(np.asarray(faces, dtype=np.int64))
    nu = mesh.face_normals[idx]
    theta_corners = field.values[mesh.faces[idx]]
    grads = barycentric_gradients(mesh, idx)
    dtheta = np.einsum('fai,faj->fij', theta_corners, grads)

    if field.face_values is not None:
        theta_bar = np.asarray(field.face_values, dtype=float)[idx]
    else:
        theta_bar = _normalize(theta_corners.mean(axis=1))
    c = np.einsum('fi,fi->f', theta_bar, nu)
    folded = np.where(c <= 0)[0]
    if len(folded):
        raise FoldOverError("Director folds over the surface", faces=idx[folded])

    eye = np.eye(3)
    along_theta = eye - theta_bar[:, :, None] * nu[:, None, :] / c[:, None, None]
    l_raw = dtheta @ along_theta
    proj = eye - theta_bar[:, :, None] * theta_bar[:, None, :]
    l_proj = proj @ l_raw @ proj
    asymmetry = np.linalg.norm(l_proj - np.swapaxes(l_proj, -1, -2), axis=(-2, -1))
    L = 0.5 * (l_proj + np.swapaxes(l_proj, -1, -2))

    lambda1, lambda2, eig_frame = tangent_eigen(L, theta_bar)
    return FaceDirectorData(idx, theta_bar, dtheta, L, lambda1, lambda2, eig_frame, asymmetry, c)


def face_director_data(mesh: TriMesh, field: DirectorField, face: int) -> FaceDirectorData:
    """Director data of a single face, see face_director_batch."""
    if not 0 <= face < mesh.n_faces:
        raise IndexError(f"Face index {face} out of range")
    return face_director_batch(mesh, field, np.array([face]))[0]


def validate_director(mesh: TriMesh, field: DirectorField) -> DirectorField:
    """
    Check |theta_v| = 1 and theta_v . nu_v > 0 at every vertex.

    Raises:
        PreconditionError: non-unit values
        FoldOverError: vertices where the director is not transversal
    """
    values = np.asarray(field.values, dtype=float)
    if values.shape != (mesh.n_vertices, 3):
        raise PreconditionError(f"Director has shape {values.shape}, mesh has {mesh.n_vertices} vertices",
                                precondition="one director per vertex")
    dev = np.abs(np.linalg.norm(values, axis=1) - 1.0)
    if dev.max() > Config.UNIT_TOLERANCE:
        raise PreconditionError(f"Director not unit (max deviation {dev.max():.3e})",
                                precondition="|theta| = 1", residual=float(dev.max()))
    bad = np.where(np.einsum('vi,vi->v', values, mesh.vertex_normals) <= 0)[0]
    if len(bad):
        raise FoldOverError("Director not transversal at vertices", vertices=bad)
    return field


def make_normal_director(mesh: TriMesh, per_face: bool = True) -> DirectorField:
    """
    Director equal to the angle-weighted vertex normals.

    Args:
        mesh: The mesh
        per_face: Use the face normals as face directors

    Returns:
        The normal director field
    """
    return DirectorField(mesh.vertex_normals.copy(), mesh.face_normals.copy() if per_face else None)


def make_tilted_director(mesh: TriMesh, w: np.ndarray, eps: float, per_face: bool = True) -> DirectorField:
    """
    Director (nu_v + eps w_v) / |nu_v + eps w_v| with w projected onto the tangent planes.

    With per_face the face director is built the same way from the face normal
    and the face-plane projection of the vertex-averaged w.

    Args:
        mesh: The mesh
        w: Vector per vertex, shape (V, 3)
        eps: Tilt amplitude, >= 0
        per_face: Build explicit face directors

    Returns:
        The tilted director field

    Raises:
        FoldOverError: listing vertices whose director is not transversal to an incident face
    """
    if eps < 0:
        raise PreconditionError(f"eps must be >= 0, got {eps}", precondition="eps >= 0")
    if eps == 0:
        return make_normal_director(mesh, per_face)
    nu_v = mesh.vertex_normals
    w = np.asarray(w, dtype=float).reshape(mesh.n_vertices, 3)
    w = w - np.einsum('vi,vi->v', w, nu_v)[:, None] * nu_v
    # untilted vertices keep the normal bit for bit
    values = np.where(np.all(eps * w == 0, axis=1)[:, None], nu_v, _normalize(nu_v + eps * w))

    nu_f = mesh.face_normals
    corner_dot = np.einsum('fai,fi->fa', values[mesh.faces], nu_f)
    bad = np.unique(mesh.faces[corner_dot <= 0])
    if len(bad):
        raise FoldOverError(f"Tilted director with eps={eps} folds over", vertices=bad)

    face_values = None
    if per_face:
        w_bar = w[mesh.faces].mean(axis=1)
        w_bar = w_bar - np.einsum('fi,fi->f', w_bar, nu_f)[:, None] * nu_f
        face_values = np.where(np.all(eps * w_bar == 0, axis=1)[:, None], nu_f, _normalize(nu_f + eps * w_bar))
    return DirectorField(values, face_values)


def _tangent_e1(x: np.ndarray) -> np.ndarray:
    return np.tile([1.0, 0.0, 0.0], (x.shape[0], 1))


def _tangent_e3(x: np.ndarray) -> np.ndarray:
    return np.tile([0.0, 0.0, 1.0], (x.shape[0], 1))


def _rotation_z(x: np.ndarray) -> np.ndarray:
    return np.cross(np.array([0.0, 0.0, 1.0]), x)


# Ambient fields; make_tilted_director projects them onto the tangent planes
W_FIELDS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "zero": np.zeros_like,
    "e1_tangent": _tangent_e1,
    "e3_tangent": _tangent_e3,
    "rotation_z": _rotation_z,
}


def tangent_field(mesh: TriMesh, name: str) -> np.ndarray:
    """Evaluate a named field of W_FIELDS at the mesh vertices."""
    if name not in W_FIELDS:
        raise PreconditionError(f"Unknown w field '{name}', expected one of {sorted(W_FIELDS)}",
                                precondition="known w field")
    return W_FIELDS[name](np.array(mesh.vertices))


def tangent_field_energy(mesh: TriMesh, w: np.ndarray) -> float:
    """(1/2) sum |w_bar|^2 area with w_bar the face-plane projected vertex average of w."""
    w = np.asarray(w, dtype=float)
    w = w - np.einsum('vi,vi->v', w, mesh.vertex_normals)[:, None] * mesh.vertex_normals
    w_bar = w[mesh.faces].mean(axis=1)
    nu_f = mesh.face_normals
    w_bar = w_bar - np.einsum('fi,fi->f', w_bar, nu_f)[:, None] * nu_f
    return 0.5 * mesh.integrate(np.einsum('fi,fi->f', w_bar, w_bar))


def normal_deviation(mesh: TriMesh) -> float:
    """Largest angle (radians) between vertex normals and the analytic normals of a tagged mesh."""
    exact = analytic_vertex_normals(mesh)
    cos = np.clip(np.einsum('vi,vi->v', mesh.vertex_normals, exact), -1.0, 1.0)
    return float(np.max(np.arccos(cos)))


def save_director(field: DirectorField, path: str) -> str:
    """Write a director field as JSON arrays of per-vertex (and optional per-face) triples."""
    data: Dict[str, Any] = {"values": np.asarray(field.values).tolist()}
    if field.face_values is not None:
        data["face_values"] = np.asarray(field.face_values).tolist()
    with open(path, "w") as f:
        json.dump(data, f)
    return path


def load_director(path: str, mesh: TriMesh) -> DirectorField:
    """Read a director JSON file and validate it against the mesh."""
    with open(path) as f:
        data = json.load(f)
    face_values = data.get("face_values")
    field = DirectorField(
        np.asarray(data["values"], dtype=float),
        None if face_values is None else np.asarray(face_values, dtype=float),
    )
    return validate_director(mesh, field)


class DirectorTool(BaseTool[Dict[str, Any], FaceDirectorData]):
    """Tool that evaluates the director data of every face."""

    def __init__(self):
        super().__init__(
            name="director_tool",
            description="Computes per-face director gradients, the extension L and its eigenvalues",
        )

    def validate_input(self, input_data: Dict[str, Any]) -> None:
        validate_director(input_data["mesh"], input_data["field"])

    def run(self, input_data: Dict[str, Any]) -> FaceDirectorData:
        return face_director_batch(input_data["mesh"], input_data["field"])
