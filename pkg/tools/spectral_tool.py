"""
Spectral form of the graph energy density.

A 3x3 matrix zeta is flattened row by row to u in R^9. For each unit y the
9x9 matrix A_y satisfies u.A_y u = QUADRATIC_FORM_SCALE * f_y(zeta). Its
eigenvalues are -1, 0 (five-fold), 1 (two-fold) and 5 with explicitly known
eigenvectors, which are checked every time a basis is built.
"""

import logging
import numpy as np
from dataclasses import dataclass
from typing import Dict, List, Any, Optional, Tuple

from config.config import Config
from tools.base_tool import BaseTool
from tools.gauss_graph_tool import f_y
from utils.multilinear import check_unit
from utils.common import relative_residual
from utils.errors import SpectralBasisError, MembershipError, PreconditionError

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

EIGENVALUES = (-1.0, 0.0, 1.0, 5.0)


def flatten_xi(zeta: np.ndarray) -> np.ndarray:
    """u = (z11, z12, z13, z21, z22, z23, z31, z32, z33)."""
    zeta = np.asarray(zeta)
    return zeta.reshape(zeta.shape[:-2] + (9,))


def unflatten_xi(u: np.ndarray) -> np.ndarray:
    """Inverse of flatten_xi."""
    u = np.asarray(u)
    return u.reshape(u.shape[:-1] + (3, 3))


def _matrix_rows(y1, y2, y3) -> List[List[Any]]:
    z = y1 * 0
    return [
        [z, z, z, z, -y3 * y3, y2 * y3, z, y2 * y3, -y2 * y2],
        [z, 3 * y3 * y3, -3 * y2 * y3, -2 * y3 * y3, z, 2 * y1 * y3, 2 * y2 * y3, -3 * y1 * y3, y1 * y2],
        [z, -3 * y2 * y3, 3 * y2 * y2, 2 * y2 * y3, y1 * y3, -3 * y1 * y2, -2 * y2 * y2, 2 * y1 * y2, z],
        [z, -2 * y3 * y3, 2 * y2 * y3, 3 * y3 * y3, z, -3 * y1 * y3, -3 * y2 * y3, 2 * y1 * y3, y1 * y2],
        [-y3 * y3, z, y1 * y3, z, z, z, y1 * y3, z, -y1 * y1],
        [y2 * y3, 2 * y1 * y3, -3 * y1 * y2, -3 * y1 * y3, z, 3 * y1 * y1, 2 * y1 * y2, -2 * y1 * y1, z],
        [z, 2 * y2 * y3, -2 * y2 * y2, -3 * y2 * y3, y1 * y3, 2 * y1 * y2, 3 * y2 * y2, -3 * y1 * y2, z],
        [y2 * y3, -3 * y1 * y3, 2 * y1 * y2, 2 * y1 * y3, z, -2 * y1 * y1, -3 * y1 * y2, 3 * y1 * y1, z],
        [-y2 * y2, y1 * y2, z, y1 * y2, -y1 * y1, z, z, z, z],
    ]


def spectral_matrix(y: Any) -> np.ndarray:
    """
    The matrix A_y.

    Args:
        y: Unit vector(s) of shape (..., 3), or a sequence of three exact numbers
            (for example Fractions), in which case an object array is returned

    Returns:
        A_y with shape (..., 9, 9)
    """
    if not isinstance(y, np.ndarray) and not isinstance(y[0], (float, np.floating)):
        return np.array(_matrix_rows(*y), dtype=object)
    y = np.asarray(y, dtype=float)
    rows = _matrix_rows(y[..., 0], y[..., 1], y[..., 2])
    return np.moveaxis(np.array(rows, dtype=float), (0, 1), (-2, -1))


def _stack9(entries: List[Any]) -> np.ndarray:
    return np.stack(np.broadcast_arrays(*entries), axis=-1)


def eigenvector_minus1(y: np.ndarray) -> np.ndarray:
    y1, y2, y3 = y[..., 0], y[..., 1], y[..., 2]
    return _stack9([y1 * y1 - 1, y1 * y2, y1 * y3, y1 * y2, y2 * y2 - 1, y2 * y3, y1 * y3, y2 * y3, y3 * y3 - 1])


def eigenvector_5(y: np.ndarray) -> np.ndarray:
    y1, y2, y3 = y[..., 0], y[..., 1], y[..., 2]
    z = y1 * 0
    return _stack9([z, -y3, y2, y3, z, -y1, -y2, y1, z])


def eigenvectors_1(y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """The two eigenvectors for eigenvalue 1; the second one vanishes at y = +-e3."""
    y1, y2, y3 = y[..., 0], y[..., 1], y[..., 2]
    z = y1 * 0
    first = _stack9([
        2 * y1 * y2 * y3, y2 * y2 * y3 - y3, y2 * y3 * y3 - y1 * y1 * y2,
        y2 * y2 * y3 - y3, z, y1 - y1 * y2 * y2,
        y2 * y3 * y3 - y1 * y1 * y2, y1 - y1 * y2 * y2, -2 * y1 * y2 * y3,
    ])
    second = _stack9([
        y1 * (y2 * y2 - y3 * y3), y2 ** 3 - y2, y2 * y2 * y3 + y1 * y1 * y3,
        y2 ** 3 - y2, y1 - y1 * y2 * y2, z,
        y2 * y2 * y3 + y1 * y1 * y3, z, -y1 ** 3 - y1 * y2 * y2,
    ])
    return first, second


def eigenvectors_0(y: np.ndarray) -> np.ndarray:
    """Six vectors spanning the five-dimensional kernel: e_i (x) y and y (x) e_j, flattened."""
    eye = np.eye(3)
    rows = [flatten_xi(eye[i][:, None] * y[..., None, :]) for i in range(3)]
    rows += [flatten_xi(y[..., :, None] * eye[j][None, :]) for j in range(3)]
    return np.stack(rows, axis=-2)


@dataclass(frozen=True)
class SpectralBasis:
    """A_y with its eigenvectors; arrays may carry leading batch axes."""
    y: np.ndarray
    A: np.ndarray
    v_m1: np.ndarray
    v_5: np.ndarray
    v_1a: np.ndarray
    v_1b: np.ndarray
    v0: np.ndarray  # (..., 6, 9)


def _matvec(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum('...ij,...j->...i', a, v)


def eigen_relation_residuals(basis: SpectralBasis) -> Dict[str, np.ndarray]:
    """Max-abs residuals of A v = lambda v for every listed eigenvector."""
    a = basis.A
    out = {
        "minus1": np.max(np.abs(_matvec(a, basis.v_m1) + basis.v_m1), axis=-1),
        "five": np.max(np.abs(_matvec(a, basis.v_5) - 5.0 * basis.v_5), axis=-1),
        "one_a": np.max(np.abs(_matvec(a, basis.v_1a) - basis.v_1a), axis=-1),
        "one_b": np.max(np.abs(_matvec(a, basis.v_1b) - basis.v_1b), axis=-1),
        "zero": np.max(np.abs(np.einsum('...ij,...kj->...ki', a, basis.v0)), axis=(-2, -1)),
    }
    return out


def kernel_rank(basis: SpectralBasis) -> np.ndarray:
    """Numerical rank of the six kernel vectors at the relative threshold PI0_RANK_THRESHOLD."""
    s = np.linalg.svd(basis.v0, compute_uv=False)
    return np.sum(s > Config.PI0_RANK_THRESHOLD * s[..., :1], axis=-1)


def eigenvector_rank(basis: SpectralBasis) -> np.ndarray:
    """Rank of all ten listed eigenvectors; nine for generic y."""
    vectors = np.concatenate([
        basis.v_m1[..., None, :], basis.v_5[..., None, :], basis.v_1a[..., None, :],
        basis.v_1b[..., None, :], basis.v0,
    ], axis=-2)
    s = np.linalg.svd(vectors, compute_uv=False)
    return np.sum(s > Config.PI0_RANK_THRESHOLD * s[..., :1], axis=-1)


def build_spectral_basis(y: np.ndarray, matrix: Optional[np.ndarray] = None) -> SpectralBasis:
    """
    Build A_y and its eigenvectors and check every eigen relation.

    Args:
        y: Unit vector(s), shape (..., 3)
        matrix: Override for A_y (used to exercise the guard)

    Returns:
        The SpectralBasis

    Raises:
        PreconditionError: y not unit
        SpectralBasisError: an eigen relation fails or the kernel does not have dimension five
    """
    y = np.asarray(y, dtype=float)
    check_unit(y)
    a = spectral_matrix(y) if matrix is None else np.asarray(matrix, dtype=float)
    v_1a, v_1b = eigenvectors_1(y)
    basis = SpectralBasis(y, a, eigenvector_minus1(y), eigenvector_5(y), v_1a, v_1b, eigenvectors_0(y))
    for name, res in eigen_relation_residuals(basis).items():
        worst = float(np.max(res))
        if worst > Config.TRANSCRIPTION_TOLERANCE:
            raise SpectralBasisError(f"Eigen relation '{name}' of A_y fails with residual {worst:.3e}")
    rank = kernel_rank(basis)
    if np.any(rank != 5):
        raise SpectralBasisError(f"Kernel vectors span dimension {np.min(rank)}..{np.max(rank)}, expected 5")
    return basis


def project_pi0(u: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """Orthogonal projection onto span(v0) through the Gram pseudo-inverse."""
    v = basis.v0
    gram = np.einsum('...ik,...jk->...ij', v, v)
    gram_pinv = np.linalg.pinv(gram, rcond=Config.PI0_RANK_THRESHOLD)
    coeff = np.einsum('...ij,...jk,...k->...i', gram_pinv, v, u)
    return np.einsum('...i,...ik->...k', coeff, v)


def project_pi_minus1(u: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """Orthogonal projection onto the line of v_m1."""
    v = basis.v_m1
    coeff = np.einsum('...i,...i->...', v, u) / np.einsum('...i,...i->...', v, v)
    return coeff[..., None] * v


def membership_residuals(u: np.ndarray, y: np.ndarray) -> Dict[str, np.ndarray]:
    """Residuals of u in X~_y: zeta y = 0 (rows orthogonal to y) and tr zeta = 0."""
    zeta = unflatten_xi(u)
    scale = np.maximum(1.0, np.linalg.norm(u, axis=-1))
    return {
        "rows orthogonal to y": np.linalg.norm(np.einsum('...ij,...j->...i', zeta, y), axis=-1) / scale,
        "trace zero": np.abs(np.trace(zeta, axis1=-2, axis2=-1)) / scale,
    }


def norm_pi0_fast(u: np.ndarray, basis: SpectralBasis, check: bool = True) -> np.ndarray:
    """
    |pi_0 u|^2 on X~_y as the sum of squares of the last three kernel coordinates.

    Args:
        u: Flattened matrix/matrices in X~_y
        basis: Spectral basis at y
        check: Verify membership first

    Returns:
        sum_{i=4..6} (v0_i . u)^2
    """
    u = np.asarray(u, dtype=float)
    if check:
        for constraint, res in membership_residuals(u, basis.y).items():
            worst = float(np.max(res))
            if worst > Config.TRANSCRIPTION_TOLERANCE:
                raise MembershipError("Input is not in the admissible subspace", constraint, worst)
    coords = np.einsum('...ij,...j->...i', basis.v0[..., 3:, :], u)
    return np.sum(coords ** 2, axis=-1)


def F_y(u: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """Convexified density u.A u + |pi_0 u|^(3/2) + 2 |pi_{-1} u|^2."""
    u = np.asarray(u, dtype=float)
    quad = np.einsum('...i,...ij,...j->...', u, basis.A, u)
    pi0 = np.linalg.norm(project_pi0(u, basis), axis=-1)
    pim1 = np.linalg.norm(project_pi_minus1(u, basis), axis=-1)
    return quad + pi0 ** 1.5 + 2.0 * pim1 ** 2


def eigenspace_norms(u: np.ndarray, basis: SpectralBasis) -> Dict[float, np.ndarray]:
    """|pi_lambda u| for each eigenvalue, from a symmetric eigendecomposition of A_y."""
    w, vecs = np.linalg.eigh(basis.A)
    coords = np.einsum('...ji,...j->...i', vecs, np.asarray(u, dtype=float))
    out = {}
    for lam in EIGENVALUES:
        mask = np.abs(w - lam) < 0.5
        out[lam] = np.sqrt(np.sum(np.where(mask, coords ** 2, 0.0), axis=-1))
    return out


def F_y_eigen(u: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """|pi_{-1} u|^2 + |pi_1 u|^2 + 5 |pi_5 u|^2 + |pi_0 u|^(3/2)."""
    norms = eigenspace_norms(u, basis)
    return norms[-1.0] ** 2 + norms[1.0] ** 2 + 5.0 * norms[5.0] ** 2 + norms[0.0] ** 1.5


def growth_slack(u: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """F_y(u) - (|u - pi_0 u|^2 + |pi_0 u|^(3/2)); nonnegative."""
    u = np.asarray(u, dtype=float)
    p0 = project_pi0(u, basis)
    lower = np.sum((u - p0) ** 2, axis=-1) + np.linalg.norm(p0, axis=-1) ** 1.5
    return F_y(u, basis) - lower


def quadratic_consistency(zeta: np.ndarray, y: np.ndarray) -> Tuple[Any, Any]:
    """
    Ratio (u.A_y u) / f_y(zeta) and the residual of u.A_y u = QUADRATIC_FORM_SCALE * f_y(zeta).

    Args:
        zeta: Matrix or matrices (..., 3, 3) with f_y(zeta) != 0
        y: Unit vector(s)

    Returns:
        (ratio, relative residual)
    """
    zeta = np.asarray(zeta, dtype=float)
    y = np.asarray(y, dtype=float)
    u = flatten_xi(zeta)
    quad = np.einsum('...i,...ij,...j->...', u, spectral_matrix(y), u)
    f = f_y(zeta, y)
    if np.any(np.abs(f) < 1e-300):
        raise PreconditionError("f_y(zeta) vanishes", precondition="f_y(zeta) != 0")
    ratio = quad / f
    residual = relative_residual(quad, Config.QUADRATIC_FORM_SCALE * f)
    if np.ndim(ratio) == 0:
        return float(ratio), residual
    return ratio, residual


class SpectralTool(BaseTool[np.ndarray, SpectralBasis]):
    """Tool that builds a checked spectral basis for unit vectors y."""

    def __init__(self):
        super().__init__(
            name="spectral_tool",
            description="Builds A_y with its eigenvectors and checks the eigen relations",
        )

    def run(self, input_data: np.ndarray) -> SpectralBasis:
        return build_spectral_basis(input_data)
