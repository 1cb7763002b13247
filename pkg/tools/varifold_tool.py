"""
Curvature-varifold quantities of a mesh at multiplicity one: the tensor
A_ijk = L_ij nu_k + L_ik nu_j, the generalized mean and Gauss curvatures it
encodes, the same tensor recovered from graph 2-vectors, and the discrete
first-variation residual against a fixed catalog of test functions.
"""

import logging
import numpy as np
import pandas as pd
from dataclasses import dataclass
from typing import Dict, List, Any, Optional, Tuple, Callable

from config.config import Config
from tools.base_tool import BaseTool
from tools.director_tool import face_director_batch, make_normal_director
from utils.mesh import TriMesh
from utils.multilinear import bivector_matrix, trace_cofactor, check_unit
from utils.errors import PreconditionError

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CurvatureTensorA:
    """A_ijk, symmetric in (j, k); shape (..., 3, 3, 3)."""
    values: np.ndarray

    def symmetry_residual(self) -> np.ndarray:
        return np.max(np.abs(self.values - np.swapaxes(self.values, -1, -2)), axis=(-3, -2, -1))

    def mean_curvature_vector(self) -> np.ndarray:
        """H_j = sum_i A_iji."""
        return np.einsum('...iji->...j', self.values)


def second_fundamental_A(L: np.ndarray, nu: np.ndarray, check: bool = True) -> CurvatureTensorA:
    """
    A_ijk = L_ij nu_k + L_ik nu_j.

    Args:
        L: Symmetric matrix/matrices with L nu = 0
        nu: Unit normal(s)
        check: Verify symmetry of L and L nu = 0

    Returns:
        The CurvatureTensorA
    """
    L = np.asarray(L, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if check:
        sym = float(np.max(np.abs(L - np.swapaxes(L, -1, -2))))
        kernel = float(np.max(np.abs(np.einsum('...ij,...j->...i', L, nu))))
        if sym > Config.PRECONDITION_TOLERANCE:
            raise PreconditionError(f"L is not symmetric (residual {sym:.3e})", precondition="L symmetric", residual=sym)
        if kernel > Config.PRECONDITION_TOLERANCE:
            raise PreconditionError(f"L nu != 0 (residual {kernel:.3e})", precondition="L nu = 0", residual=kernel)
    values = L[..., :, :, None] * nu[..., None, None, :] + L[..., :, None, :] * nu[..., None, :, None]
    return CurvatureTensorA(values)


def hk_from_A(a: CurvatureTensorA, nu: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Generalized curvatures H = sum_ij A_iji nu_j and K = sum_k tr cof (A_ijk)_ij.

    Returns:
        (H, K)
    """
    values = a.values
    h = np.einsum('...iji,...j->...', values, np.asarray(nu, dtype=float))
    k = np.sum(trace_cofactor(np.moveaxis(values, -1, -3)), axis=-1)
    return h, k


def varifold_A_from_graph(xi0: np.ndarray, xi1_bar: np.ndarray, y: np.ndarray) -> Tuple[CurvatureTensorA, np.ndarray]:
    """
    Curvature tensor and mean curvature vector read off the graph 2-vector.

    A_ijk = sum_r X_ri (xi1^rj y_k + xi1^rk y_j) and H_j = sum_ir X_ri xi1^ri y_j with
    X the antisymmetric matrix of xi0.

    Args:
        xi0: x-x bivector(s), equal to *y
        xi1_bar: Mixed block(s)
        y: Unit vector(s)

    Returns:
        (CurvatureTensorA, H vector)
    """
    y = np.asarray(y, dtype=float)
    check_unit(y)
    x0 = bivector_matrix(xi0)
    xi1 = np.asarray(xi1_bar, dtype=float)
    m = np.einsum('...ri,...rj->...ij', x0, xi1)
    values = m[..., :, :, None] * y[..., None, None, :] + m[..., :, None, :] * y[..., None, :, None]
    h_vec = np.einsum('...ri,...ri->...', x0, xi1)[..., None] * y
    return CurvatureTensorA(values), h_vec


@dataclass(frozen=True)
class TestFunction:
    """phi(x, P) with gradients in x and in the entries of P; all arrays are per face."""
    name: str
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_x: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_p: Callable[[np.ndarray, np.ndarray], np.ndarray]

    __test__ = False


def _zeros3(x, p):
    return np.zeros_like(x)


def _zeros33(x, p):
    return np.zeros_like(p)


def _unit(i: int, j: int, like: np.ndarray) -> np.ndarray:
    out = np.zeros_like(like)
    out[..., i, j] = 1.0
    return out


def _axis(i: int, like: np.ndarray) -> np.ndarray:
    out = np.zeros_like(like)
    out[..., i] = 1.0
    return out


def _x1_sq_grad(x, p):
    out = np.zeros_like(x)
    out[..., 0] = 2.0 * x[..., 0]
    return out


def _x2x3_grad(x, p):
    out = np.zeros_like(x)
    out[..., 1] = x[..., 2]
    out[..., 2] = x[..., 1]
    return out


# Versioned by Config.TEST_FUNCTION_CATALOG_VERSION
TEST_FUNCTIONS: Dict[str, TestFunction] = {
    "one": TestFunction("one", lambda x, p: np.ones(x.shape[:-1]), _zeros3, _zeros33),
    "x1": TestFunction("x1", lambda x, p: x[..., 0], lambda x, p: _axis(0, x), _zeros33),
    "x1_sq": TestFunction("x1_sq", lambda x, p: x[..., 0] ** 2, _x1_sq_grad, _zeros33),
    "x2x3": TestFunction("x2x3", lambda x, p: x[..., 1] * x[..., 2], _x2x3_grad, _zeros33),
    "P11": TestFunction("P11", lambda x, p: p[..., 0, 0], _zeros3, lambda x, p: _unit(0, 0, p)),
    "x3_P12": TestFunction("x3_P12", lambda x, p: x[..., 2] * p[..., 0, 1],
                           lambda x, p: p[..., 0, 1][..., None] * _axis(2, x),
                           lambda x, p: x[..., 2][..., None, None] * _unit(0, 1, p)),
    "x1_P33": TestFunction("x1_P33", lambda x, p: x[..., 0] * p[..., 2, 2],
                           lambda x, p: p[..., 2, 2][..., None] * _axis(0, x),
                           lambda x, p: x[..., 0][..., None, None] * _unit(2, 2, p)),
}


def mesh_curvature_tensor(mesh: TriMesh) -> Tuple[CurvatureTensorA, np.ndarray]:
    """
    Per-face A from the normal director: L = sym(P D(theta) P) with P = I - nu nu^T.

    Returns:
        (CurvatureTensorA, face normals)
    """
    data = face_director_batch(mesh, make_normal_director(mesh, per_face=True))
    return second_fundamental_A(data.L, mesh.face_normals), mesh.face_normals


def first_variation_residual(mesh: TriMesh, test_functions: Optional[List[str]] = None) -> Dict[str, np.ndarray]:
    """
    Discrete residual of sum over faces of (delta_i phi + delta_i P_jk d*_jk phi + delta_j P_ij phi) area.

    Args:
        mesh: Closed mesh
        test_functions: Names from TEST_FUNCTIONS (all when None)

    Returns:
        Mapping name -> residual vector (3,)
    """
    names = list(TEST_FUNCTIONS) if test_functions is None else list(test_functions)
    unknown = [n for n in names if n not in TEST_FUNCTIONS]
    if unknown:
        raise PreconditionError(f"Unknown test functions {unknown}", precondition="catalog test function")
    a, nu = mesh_curvature_tensor(mesh)
    # delta_i P_jk = -A_ijk for L = P D(nu) P
    proj = np.eye(3) - nu[:, :, None] * nu[:, None, :]
    x = mesh.centroids
    h_vec = a.mean_curvature_vector()
    out = {}
    for name in names:
        fn = TEST_FUNCTIONS[name]
        phi = fn.value(x, proj)
        tangential = np.einsum('fij,fj->fi', proj, fn.grad_x(x, proj))
        curvature = np.einsum('fijk,fjk->fi', a.values, fn.grad_p(x, proj))
        integrand = tangential - curvature - h_vec * phi[:, None]
        out[name] = mesh.integrate(integrand)
    return out


def graph_shape_tensor_error(mesh: TriMesh) -> float:
    """Max-norm gap between the graph-derived and the L-derived curvature tensors of the normal director."""
    from tools.gauss_graph_tool import graph_face_batch

    batch = graph_face_batch(mesh, make_normal_director(mesh, per_face=True))
    a_graph, _ = varifold_A_from_graph(batch.graph.xi.part0, batch.graph.xi.part1, batch.data.theta_bar)
    a_shape = second_fundamental_A(batch.data.L, mesh.face_normals)
    return float(np.max(np.abs(a_graph.values - a_shape.values)))


def residual_table(meshes: List[TriMesh], test_functions: Optional[List[str]] = None) -> pd.DataFrame:
    """
    First-variation residuals over a refinement sequence with fitted orders.

    A residual at or below RESIDUAL_FLOOR_FACTOR times the mesh area is round-off
    (typically a symmetry cancellation) and marked exact. Orders are fitted on the
    remaining levels only; with fewer than two the order is NaN.

    Args:
        meshes: Meshes ordered from coarse to fine
        test_functions: Names from TEST_FUNCTIONS

    Returns:
        DataFrame with the first_variation CSV columns (without schema_version)
    """
    from utils.common import fit_convergence_order

    rows = []
    per_mesh = [(m, first_variation_residual(m, test_functions)) for m in meshes]
    names = list(per_mesh[0][1]) if per_mesh else []
    floors = [Config.RESIDUAL_FLOOR_FACTOR * m.area for m, _ in per_mesh]
    for name in names:
        hs = [m.mean_edge_length for m, _ in per_mesh]
        norms = [float(np.linalg.norm(res[name])) for _, res in per_mesh]
        exact = [norm <= floor for norm, floor in zip(norms, floors)]
        if sum(not e for e in exact) >= 2:
            kept = [i for i, e in enumerate(exact) if not e]
            order, _ = fit_convergence_order([hs[i] for i in kept], [norms[i] for i in kept])
        else:
            order = float("nan")
        for (m, res), h, norm, is_exact in zip(per_mesh, hs, norms, exact):
            rows.append({
                "test_function": name,
                "level": int(m.tag.get("level", 0)) if m.tag else 0,
                "h": h,
                "residual_x": float(res[name][0]),
                "residual_y": float(res[name][1]),
                "residual_z": float(res[name][2]),
                "residual_norm": norm,
                "exact": bool(is_exact),
                "fitted_order": order,
            })
    return pd.DataFrame(rows, columns=["test_function", "level", "h", "residual_x", "residual_y",
                                       "residual_z", "residual_norm", "exact", "fitted_order"])


class VarifoldTool(BaseTool[Dict[str, Any], Dict[str, np.ndarray]]):
    """Tool that evaluates first-variation residuals on a mesh."""

    def __init__(self):
        super().__init__(
            name="varifold_tool",
            description="Evaluates the discrete first variation of the curvature varifold",
        )

    def run(self, input_data: Dict[str, Any]) -> Dict[str, np.ndarray]:
        return first_variation_residual(input_data["mesh"], input_data.get("test_functions"))
