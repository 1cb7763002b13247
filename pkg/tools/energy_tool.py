import logging
import numpy as np
from typing import Dict, List, Any, Optional, Tuple

from config.config import Config
from tools.base_tool import BaseTool
from tools.director_tool import (
    DirectorField, FaceDirectorData, face_director_batch, make_normal_director,
)
from models.reports import EnergyBreakdown
from utils.mesh import TriMesh
from utils.multilinear import quadratic_form_Q, quadratic_form_Q_eigen
from utils.errors import PreconditionError, ConsistencyError

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def tilt_density(data: FaceDirectorData, nu: np.ndarray) -> np.ndarray:
    """
    Per-face 1/(theta_bar.nu) - 1, written as |theta_bar - nu|^2 / (2 theta_bar.nu).

    Args:
        data: Batched director data
        nu: Face normals of the same faces

    Returns:
        Nonnegative values, exactly zero where theta_bar equals nu
    """
    diff = data.theta_bar - nu
    return 0.5 * np.einsum('fi,fi->f', diff, diff) / data.theta_dot_nu


def bending_density(data: FaceDirectorData) -> np.ndarray:
    """
    Per-face Q(L).

    Q is positive definite on symmetric L with L theta = 0, so values below
    -PRECONDITION_TOLERANCE * max(1, |L|^2) mean a bad L. Smaller negative
    values are round-off and clamped to zero.

    Raises:
        ConsistencyError: Q(L) clearly negative on some face
    """
    q = quadratic_form_Q(data.L)
    scale = np.maximum(1.0, np.sum(data.L ** 2, axis=(-2, -1)))
    bad = np.where(q < -Config.PRECONDITION_TOLERANCE * scale)[0]
    if len(bad):
        face = int(data.faces[bad[np.argmin(q[bad])]])
        logger.warning(f"Q(L) negative on {len(bad)} faces (min {q[bad].min():.3e} at face {face})")
        raise ConsistencyError(f"Q(L) = {q[bad].min():.3e} < 0 at face {face}; L is not a valid extension")
    return np.maximum(q, 0.0)


def tilt_energy(mesh: TriMesh, field: DirectorField, eps: float,
                data: Optional[FaceDirectorData] = None) -> float:
    """
    Tilt energy eps^-2 * sum (1/(theta_bar.nu) - 1) area.

    Args:
        mesh: The mesh
        field: Director field
        eps: Tilt scale, > 0
        data: Precomputed director data (computed when None)

    Returns:
        The tilt energy
    """
    if not eps > 0:
        raise PreconditionError(f"eps must be > 0, got {eps}", precondition="eps > 0")
    data = face_director_batch(mesh, field) if data is None else data
    return mesh.integrate(tilt_density(data, mesh.face_normals[data.faces])) / eps ** 2


def bending_energy(mesh: TriMesh, field: DirectorField, data: Optional[FaceDirectorData] = None) -> float:
    """Sum of Q(L) area over faces."""
    data = face_director_batch(mesh, field) if data is None else data
    return mesh.integrate(bending_density(data))


def bending_energy_eigen(mesh: TriMesh, field: DirectorField, data: Optional[FaceDirectorData] = None) -> float:
    """Bending energy from the eigenvalues: (l1+l2)^2/6 + (l1^2+l2^2)/12 per face."""
    data = face_director_batch(mesh, field) if data is None else data
    return mesh.integrate(quadratic_form_Q_eigen(data.lambda1, data.lambda2))


def curvature_integrals(mesh: TriMesh, data: Optional[FaceDirectorData] = None) -> Tuple[float, float]:
    """
    Integrals of H^2/4 and K with H = l1 + l2, K = l1 l2 of the normal director.

    Args:
        mesh: The mesh
        data: Director data of the normal director (computed when None)

    Returns:
        (willmore_quarter, total_gauss)
    """
    data = face_director_batch(mesh, make_normal_director(mesh)) if data is None else data
    h = data.lambda1 + data.lambda2
    k = data.lambda1 * data.lambda2
    return mesh.integrate(0.25 * h ** 2), mesh.integrate(k)


def q_zero(mesh: TriMesh) -> float:
    """Limit functional: bending energy of the normal director."""
    return bending_energy(mesh, make_normal_director(mesh))


def q_epsilon(mesh: TriMesh, field: DirectorField, eps: float) -> EnergyBreakdown:
    """
    Full energy breakdown of a director field at tilt scale eps.

    Args:
        mesh: The mesh
        field: Director field
        eps: Tilt scale, > 0

    Returns:
        EnergyBreakdown with curvature integrals of the normal director
    """
    data = face_director_batch(mesh, field)
    tilt = tilt_energy(mesh, field, eps, data)
    bending = bending_energy(mesh, field, data)
    willmore_quarter, total_gauss = curvature_integrals(mesh)
    return EnergyBreakdown(
        tilt=tilt,
        bending=bending,
        total=tilt + bending,
        area=mesh.area,
        willmore_quarter=willmore_quarter,
        total_gauss=total_gauss,
    )


def analytic_q_zero(kind: str, params: Dict[str, Any]) -> float:
    """Exact limit energy of the analytic surfaces: 10 pi / 3 for spheres, the Willmore value for tori."""
    if kind == "sphere":
        return 10.0 * np.pi / 3.0
    big_r, small_r = params["R"], params["r"]
    return np.pi ** 2 * big_r ** 2 / (small_r * np.sqrt(big_r ** 2 - small_r ** 2))


class EnergyTool(BaseTool[Dict[str, Any], EnergyBreakdown]):
    """Tool that evaluates the energy breakdown of a mesh and director."""

    def __init__(self):
        super().__init__(
            name="energy_tool",
            description="Computes tilt, bending and curvature integrals of a director field",
        )

    def validate_input(self, input_data: Dict[str, Any]) -> None:
        if not input_data.get("eps", 0) > 0:
            raise PreconditionError("eps must be > 0", precondition="eps > 0")

    def run(self, input_data: Dict[str, Any]) -> EnergyBreakdown:
        return q_epsilon(input_data["mesh"], input_data["field"], input_data["eps"])
