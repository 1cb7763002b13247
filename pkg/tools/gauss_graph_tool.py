"""
Gauss graph of a director field: the surface {(p, theta(p))} in R^3_x x R^3_y.

Per face the tangent 2-vector is xi = (tau1, L tau1) ^ (tau2, L tau2), split
into its x-x, x-y and y-y parts. This module checks the closed forms of those
parts, computes the graph area with its bound, the graph-side energy density
f_y, pairings with polynomial test forms and the verticality defect.
"""

import logging
import numpy as np
import pandas as pd
from dataclasses import dataclass, field
from typing import Dict, List, Any, Optional, Tuple

from config.config import Config
from tools.base_tool import BaseTool
from tools.director_tool import DirectorField, FaceDirectorData, face_director_batch
from tools.energy_tool import bending_density, tilt_density
from utils.mesh import TriMesh, FaceFrame, face_frames
from utils.multilinear import (
    LEVI_CIVITA, TwoVector6, wedge6, hodge_star, hodge_unstar, cofactor,
    trace_cofactor, check_unit,
)
from utils.common import relative_residual
from utils.errors import ConsistencyError, PreconditionError

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphFaceData:
    """Per-face graph data; arrays carry a leading face axis when batched."""
    xi: TwoVector6
    jac: np.ndarray
    f_y_value: np.ndarray
    theta_dot_nu: np.ndarray
    defect: np.ndarray

    def __getitem__(self, index) -> "GraphFaceData":
        return GraphFaceData(self.xi[index], self.jac[index], self.f_y_value[index],
                             self.theta_dot_nu[index], self.defect[index])


@dataclass(frozen=True)
class PsiForm:
    """The form zeta -> sum eps_ikl theta_i zeta^kl."""
    theta: np.ndarray

    def pair(self, zeta: np.ndarray) -> np.ndarray:
        return np.einsum('ikl,...i,...kl->...', LEVI_CIVITA, self.theta, zeta)


def f_y(zeta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Graph-side energy density f_y(zeta) = (1/4) <Psi_y, zeta>^2 - (1/6) y.cof(zeta) y.

    Args:
        zeta: Matrix or matrices (..., 3, 3)
        y: Unit vector(s) (..., 3)

    Returns:
        f_y per input
    """
    y = np.asarray(y, dtype=float)
    check_unit(y)
    psi = PsiForm(y).pair(zeta)
    return 0.25 * psi ** 2 - np.einsum('...i,...ij,...j->...', y, cofactor(zeta), y) / 6.0


def _is_single(frame: FaceFrame) -> bool:
    return np.ndim(frame.tau1) == 1


def _batch_frame(frame: FaceFrame) -> FaceFrame:
    return FaceFrame(frame.tau1[None], frame.tau2[None], frame.nu[None], np.atleast_1d(frame.area))


def _batch_data(data: FaceDirectorData) -> FaceDirectorData:
    return FaceDirectorData(*(np.asarray(getattr(data, name))[None] for name in data.__dataclass_fields__))


def _eigen_L(data: FaceDirectorData) -> np.ndarray:
    v1, v2 = data.v1, data.v2
    return (data.lambda1[:, None, None] * v1[:, :, None] * v1[:, None, :]
            + data.lambda2[:, None, None] * v2[:, :, None] * v2[:, None, :])


def _gradient_image(data: FaceDirectorData, nu: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """L tau rebuilt from the director gradient Dtheta alone, for tangent tau."""
    theta = data.theta_bar
    c = np.einsum('fi,fi->f', theta, nu)
    forward = np.einsum('fij,fj->fi', data.Dtheta, tau)
    p_tau = tau - np.einsum('fi,fi->f', theta, tau)[:, None] * theta
    back = np.einsum('fji,fj->fi', data.Dtheta, p_tau)
    back = back - nu * (np.einsum('fi,fi->f', theta, back) / c)[:, None]
    image = 0.5 * (forward + back)
    return image - np.einsum('fi,fi->f', theta, image)[:, None] * theta


def closed_form_residuals(frame: FaceFrame, data: FaceDirectorData, xi: TwoVector6) -> Dict[str, np.ndarray]:
    """
    Compare the strata of xi with their closed forms computed from the eigen decomposition of L.
    The x-y stratum is also rebuilt from Dtheta and the face frame without reading L.

    Returns:
        Mapping name -> per-face residual
    """
    nu = frame.nu
    theta = data.theta_bar
    L_eig = _eigen_L(data)
    part1 = (frame.tau1[:, :, None] * np.einsum('fij,fj->fi', L_eig, frame.tau2)[:, None, :]
             - frame.tau2[:, :, None] * np.einsum('fij,fj->fi', L_eig, frame.tau1)[:, None, :])
    scale1 = np.maximum(1.0, np.linalg.norm(part1, axis=(-2, -1)))
    g_tau1 = _gradient_image(data, nu, frame.tau1)
    g_tau2 = _gradient_image(data, nu, frame.tau2)
    part1_grad = frame.tau1[:, :, None] * g_tau2[:, None, :] - frame.tau2[:, :, None] * g_tau1[:, None, :]
    c = np.einsum('fi,fi->f', theta, nu)
    v1_nu = np.einsum('fi,fi->f', data.v1, nu)
    v2_nu = np.einsum('fi,fi->f', data.v2, nu)
    l1, l2 = data.lambda1, data.lambda2
    jac_sq = 1.0 + l1 ** 2 * (1.0 - v1_nu ** 2) + l2 ** 2 * (1.0 - v2_nu ** 2) + l1 ** 2 * l2 ** 2 * c ** 2
    return {
        "xx_part_is_star_nu": np.max(np.abs(xi.part0 - hodge_star(nu)), axis=-1),
        "xx_part_unit": relative_residual(np.linalg.norm(xi.part0, axis=-1), 1.0),
        "xy_part_closed_form": np.linalg.norm(xi.part1 - part1, axis=(-2, -1)) / scale1,
        "xy_part_from_gradient": np.linalg.norm(xi.part1 - part1_grad, axis=(-2, -1)) / scale1,
        "yy_part_norm": relative_residual(np.linalg.norm(xi.part2, axis=-1), np.abs(l1 * l2 * c)),
        "jacobian_eigen_form": relative_residual(np.sum(xi.part0 ** 2, axis=-1)
                                                 + np.sum(xi.part1 ** 2, axis=(-2, -1))
                                                 + np.sum(xi.part2 ** 2, axis=-1), jac_sq),
        "jacobian_upper_bound": np.maximum(0.0, np.sqrt(jac_sq) - (1.0 + l1 ** 2 + l2 ** 2)),
    }


def graph_xi_batch(frame: FaceFrame, data: FaceDirectorData, check: bool = True) -> GraphFaceData:
    """
    Graph 2-vectors of many faces.

    Args:
        frame: Face frames (batched)
        data: Director data of the same faces (batched)
        check: Verify the closed forms and raise on mismatch

    Returns:
        Batched GraphFaceData

    Raises:
        ConsistencyError: a closed form disagrees with the wedge product
    """
    l_tau1 = np.einsum('fij,fj->fi', data.L, frame.tau1)
    l_tau2 = np.einsum('fij,fj->fi', data.L, frame.tau2)
    xi = wedge6((frame.tau1, l_tau1), (frame.tau2, l_tau2))
    jac = xi.norm()
    if check:
        for name, res in closed_form_residuals(frame, data, xi).items():
            worst = float(np.max(res)) if np.size(res) else 0.0
            if worst > Config.TRANSCRIPTION_TOLERANCE:
                face = int(np.argmax(res))
                raise ConsistencyError(f"Graph closed form '{name}' violated by {worst:.3e} at face {face}")
    theta = data.theta_bar
    defect = np.linalg.norm(np.einsum('fi,fij->fj', theta, xi.part1), axis=-1)
    return GraphFaceData(
        xi=xi,
        jac=jac,
        f_y_value=f_y(xi.part1, theta),
        theta_dot_nu=np.einsum('fi,fi->f', theta, frame.nu),
        defect=defect,
    )


def graph_xi(frame: FaceFrame, data: FaceDirectorData, check: bool = True) -> GraphFaceData:
    """Graph data of one face (or a batch), see graph_xi_batch."""
    if _is_single(frame):
        return graph_xi_batch(_batch_frame(frame), _batch_data(data), check)[0]
    return graph_xi_batch(frame, data, check)


def xi_trace_identities(frame: FaceFrame, data: FaceDirectorData) -> Dict[str, np.ndarray]:
    """
    Residuals of the trace and cofactor identities of the mixed part xi_1.

    (theta.nu) tr L = <Psi_theta, xi_1>, (theta.nu)^2 tr cof L = theta.cof(xi_1) theta,
    sum_j xi_1^ij theta_j = 0 and tr xi_1 = 0.
    """
    single = _is_single(frame)
    if single:
        frame, data = _batch_frame(frame), _batch_data(data)
    g = graph_xi_batch(frame, data, check=False)
    xi1 = g.xi.part1
    theta = data.theta_bar
    c = g.theta_dot_nu
    scale = np.maximum(1.0, np.linalg.norm(xi1, axis=(-2, -1)))
    out = {
        "trace_L": relative_residual(c * np.trace(data.L, axis1=-2, axis2=-1), PsiForm(theta).pair(xi1)),
        "trace_cofactor_L": relative_residual(c ** 2 * trace_cofactor(data.L),
                                              np.einsum('fi,fij,fj->f', theta, cofactor(xi1), theta)),
        "rows_orthogonal_theta": np.linalg.norm(np.einsum('fij,fj->fi', xi1, theta), axis=-1) / scale,
        "trace_zero": np.abs(np.trace(xi1, axis1=-2, axis2=-1)) / scale,
    }
    if single:
        return {k: float(v[0]) for k, v in out.items()}
    return out


def verticality_defect(frame: FaceFrame, data: FaceDirectorData) -> float:
    """|(theta.tau1) L tau2 - (theta.tau2) L tau1|, the norm of theta^T xi_1."""
    return graph_xi(frame, data, check=False).defect


@dataclass
class GraphBatch:
    """Frames, director data and graph data of every face of a mesh."""
    frame: FaceFrame
    data: FaceDirectorData
    graph: GraphFaceData


def graph_face_batch(mesh: TriMesh, field: DirectorField, check: bool = True) -> GraphBatch:
    """Evaluate frames, director data and graph data on all faces."""
    frame = face_frames(mesh)
    data = face_director_batch(mesh, field)
    return GraphBatch(frame, data, graph_xi_batch(frame, data, check))


@dataclass
class GraphAreaCertificate:
    """Graph area with the per-face and global bounds that control it."""
    graph_area: float
    surface_area: float
    bending: float
    bound: float
    eigenvalue_integral: float
    jac_bound_ok: bool
    area_bound_ok: bool
    eigenvalue_control_ok: bool


def graph_area(mesh: TriMesh, field: DirectorField, batch: Optional[GraphBatch] = None) -> GraphAreaCertificate:
    """
    Area of the Gauss graph, sum of jac * area.

    The certificate checks jac <= 1 + l1^2 + l2^2 on every face,
    sum (l1^2 + l2^2) area <= 12 bending and area(G) <= area(S) + 12 bending.
    """
    batch = graph_face_batch(mesh, field) if batch is None else batch
    data = batch.data
    jac = batch.graph.jac
    eig_sq = data.lambda1 ** 2 + data.lambda2 ** 2
    area_g = mesh.integrate(jac)
    bending = mesh.integrate(bending_density(data))
    eig_integral = mesh.integrate(eig_sq)
    bound = mesh.area + 12.0 * bending
    slack = 1e-12 * max(1.0, bound)
    return GraphAreaCertificate(
        graph_area=area_g,
        surface_area=mesh.area,
        bending=bending,
        bound=bound,
        eigenvalue_integral=eig_integral,
        jac_bound_ok=bool(np.all(jac <= (1.0 + eig_sq) * (1.0 + 1e-12))),
        area_bound_ok=bool(area_g <= bound + slack),
        eigenvalue_control_ok=bool(eig_integral <= 12.0 * bending + slack),
    )


@dataclass
class GraphEnergyResult:
    """Graph-side energy with the faces left out of the integral."""
    value: float
    excluded_faces: int
    vertical_faces: int
    membership_residual: float


def graph_energy(mesh: TriMesh, field: DirectorField, batch: Optional[GraphBatch] = None) -> GraphEnergyResult:
    """
    Energy evaluated on the graph: f_y(eta_1/|eta_0|) |eta_0| / |eta_0/|eta_0| ^ y|^2
    integrated over the graph faces, eta = xi/|xi| and y = theta_bar.

    Faces with theta.nu below the exclusion threshold or |eta_0| below the
    vertical threshold are skipped and counted.
    """
    batch = graph_face_batch(mesh, field) if batch is None else batch
    g = batch.graph
    y = batch.data.theta_bar
    eta0 = g.xi.part0 / g.jac[:, None]
    eta1 = g.xi.part1 / g.jac[:, None, None]
    eta0_norm = np.linalg.norm(eta0, axis=-1)
    vertical = eta0_norm < Config.VERTICAL_THRESHOLD
    excluded = (g.theta_dot_nu < Config.GRAPH_EXCLUSION_THRESHOLD) | vertical
    keep = ~excluded
    safe0 = np.where(keep, eta0_norm, 1.0)
    zeta = eta1 / safe0[:, None, None]
    wedge = np.einsum('fi,fi->f', hodge_unstar(eta0 / safe0[:, None]), y)
    safe_wedge = np.where(keep, wedge, 1.0)
    density = f_y(zeta, y) * safe0 / safe_wedge ** 2
    # graph face area is jac * area
    values = np.where(keep, density * g.jac, 0.0)
    rows = np.linalg.norm(np.einsum('fij,fj->fi', zeta, y), axis=-1)
    trace = np.abs(np.trace(zeta, axis1=-2, axis2=-1))
    membership = float(np.max(np.where(keep, np.maximum(rows, trace), 0.0))) if len(keep) else 0.0
    if excluded.any():
        logger.warning(f"Graph energy excluded {int(excluded.sum())} faces ({int(vertical.sum())} vertical)")
    return GraphEnergyResult(mesh.integrate(values), int(excluded.sum()), int(vertical.sum()), membership)


# Polynomial coefficient tables: a term is (coefficient, exponents of x1, x2, x3, y1, y2, y3)
PolyTerms = List[Tuple[float, Tuple[int, int, int, int, int, int]]]


def evaluate_polynomial(terms: PolyTerms, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate a polynomial in (x, y) given by its coefficient table."""
    z = np.concatenate([np.asarray(x, dtype=float), np.asarray(y, dtype=float)], axis=-1)
    out = np.zeros(z.shape[:-1])
    for coef, exponents in terms:
        out = out + coef * np.prod(z ** np.asarray(exponents), axis=-1)
    return out


@dataclass
class PairingForms:
    """Scalar g(x, y) >= 0 and 1-form omega = sum_i a_i dx^i + b_i dy^i with polynomial coefficients."""
    g_terms: PolyTerms
    omega_terms: Dict[int, PolyTerms]  # component 0..2 -> dx^1..dx^3, 3..5 -> dy^1..dy^3
    name: str = ""

    def g(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return evaluate_polynomial(self.g_terms, x, y)

    def omega(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        comps = [evaluate_polynomial(self.omega_terms.get(i, []), x, y) for i in range(6)]
        return np.stack(comps, axis=-1)


G_FORMS: Dict[str, PolyTerms] = {
    "one": [(1.0, (0, 0, 0, 0, 0, 0))],
    "one_plus_x1sq": [(1.0, (0, 0, 0, 0, 0, 0)), (1.0, (2, 0, 0, 0, 0, 0))],
    "y3sq": [(1.0, (0, 0, 0, 0, 0, 2))],
}

OMEGA_FORMS: Dict[str, Dict[int, PolyTerms]] = {
    "x3_dx2": {1: [(1.0, (0, 0, 1, 0, 0, 0))]},
    "dy1": {3: [(1.0, (0, 0, 0, 0, 0, 0))]},
    "x1_dy2_plus_dx3": {4: [(1.0, (1, 0, 0, 0, 0, 0))], 2: [(1.0, (0, 0, 0, 0, 0, 0))]},
}


def catalog_forms(g_name: str, omega_name: str) -> PairingForms:
    """Look up catalog forms by name."""
    if g_name not in G_FORMS or omega_name not in OMEGA_FORMS:
        raise PreconditionError(f"Unknown test forms '{g_name}', '{omega_name}'", precondition="catalog form")
    return PairingForms(G_FORMS[g_name], OMEGA_FORMS[omega_name], f"{g_name}/{omega_name}")


# C with |integrand| <= C |omega| (1 - (theta.nu)^2)^(1/2) (1 + Q(L))^(1/2) pointwise
PAIRING_CONSTANT = 2.0 * np.sqrt(3.0)


@dataclass
class PairingResult:
    pair_phi_star: float
    pair_phi_wedge: float
    bound: float
    ratio: float
    omega_norm: float
    bound_ok: bool
    star_consistency: float


def current_pairings(mesh: TriMesh, field: DirectorField, forms: PairingForms,
                     batch: Optional[GraphBatch] = None) -> PairingResult:
    """
    Pair the graph with g(x, y) phi* and with phi ^ omega.

    Args:
        mesh: The mesh
        field: Director field
        forms: Test forms
        batch: Precomputed graph batch

    Returns:
        PairingResult with the bound C |omega| (int (1 - c^2))^(1/2) (int (1 + Q))^(1/2)
    """
    batch = graph_face_batch(mesh, field) if batch is None else batch
    frame, data, g = batch.frame, batch.data, batch.graph
    x = mesh.centroids[data.faces]
    y = data.theta_bar

    g_values = forms.g(x, y)
    if np.any(g_values < 0):
        raise PreconditionError("Test function g must be nonnegative", precondition="g >= 0")
    star = np.einsum('fi,fi->f', hodge_unstar(g.xi.part0), y)
    star_consistency = float(np.max(np.abs(star - g.theta_dot_nu))) if len(star) else 0.0
    pair_star = mesh.integrate(star * g_values)

    omega = forms.omega(x, y)
    l_tau1 = np.einsum('fij,fj->fi', data.L, frame.tau1)
    l_tau2 = np.einsum('fij,fj->fi', data.L, frame.tau2)
    om_1 = np.einsum('fi,fi->f', omega[:, :3], frame.tau1) + np.einsum('fi,fi->f', omega[:, 3:], l_tau1)
    om_2 = np.einsum('fi,fi->f', omega[:, :3], frame.tau2) + np.einsum('fi,fi->f', omega[:, 3:], l_tau2)
    integrand = (np.einsum('fi,fi->f', y, frame.tau1) * om_2
                 - np.einsum('fi,fi->f', y, frame.tau2) * om_1)
    pair_wedge = mesh.integrate(integrand)

    omega_norm = float(np.max(np.linalg.norm(omega, axis=-1))) if len(omega) else 0.0
    nu = mesh.face_normals[data.faces]
    one_minus_c = tilt_density(data, nu) * g.theta_dot_nu
    tilt_sq = mesh.integrate(one_minus_c * (1.0 + g.theta_dot_nu))
    curvature = mesh.integrate(1.0 + bending_density(data))
    scale = omega_norm * np.sqrt(tilt_sq) * np.sqrt(curvature)
    ratio = abs(pair_wedge) / scale if scale > 0 else 0.0
    bound = PAIRING_CONSTANT * scale
    return PairingResult(
        pair_phi_star=pair_star,
        pair_phi_wedge=pair_wedge,
        bound=bound,
        ratio=ratio,
        omega_norm=omega_norm,
        bound_ok=bool(abs(pair_wedge) <= bound * (1.0 + 1e-12) + 1e-15),
        star_consistency=star_consistency,
    )


def graph_faces_frame(graph: GraphFaceData, faces: np.ndarray) -> pd.DataFrame:
    """Per-face graph data as a DataFrame for the graph_faces CSV report."""
    return pd.DataFrame({
        "face": np.asarray(faces, dtype=np.int64),
        "jac": graph.jac,
        "theta_dot_nu": graph.theta_dot_nu,
        "f_y_value": graph.f_y_value,
        "defect": graph.defect,
    })


class GaussGraphTool(BaseTool[Dict[str, Any], GraphBatch]):
    """Tool that builds and checks the graph 2-vectors of all faces."""

    def __init__(self):
        super().__init__(
            name="gauss_graph_tool",
            description="Builds per-face Gauss graph 2-vectors and checks their closed forms",
        )

    def run(self, input_data: Dict[str, Any]) -> GraphBatch:
        return graph_face_batch(input_data["mesh"], input_data["field"], check=input_data.get("check", True))
