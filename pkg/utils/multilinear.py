"""
Small-dimension multilinear algebra: 2-vectors on R^3 and on R^3 x R^3,
Hodge star, cofactor matrices, the quadratic form Q and the cofactor
identities it rests on.

Bivector3 components are ordered (e12, e13, e23). A TwoVector6 on
R^3_x + R^3_y is kept stratified as (part0: x-x bivector, part1: 3x3 x-y
block, part2: y-y bivector). All functions accept leading batch axes.
"""

import logging
import itertools
import numpy as np
from dataclasses import dataclass
from typing import Dict, List, Any, Optional, Tuple

from config.config import Config
from utils.common import relative_residual
from utils.errors import PreconditionError

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in itertools.permutations(range(3)):
    LEVI_CIVITA[_i, _j, _k] = np.linalg.det(np.eye(3)[[_i, _j, _k]])
LEVI_CIVITA = np.rint(LEVI_CIVITA)

BIVECTOR_PAIRS: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 2), (1, 2))

# Lexicographic basis e_a ^ e_b (a < b) of Lambda^2(R^6), coordinates (x1, x2, x3, y1, y2, y3)
RAW_PAIRS: Tuple[Tuple[int, int], ...] = tuple(itertools.combinations(range(6), 2))


def wedge3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Wedge product of two vectors of R^3.

    Args:
        a: Vector(s), shape (..., 3)
        b: Vector(s), shape (..., 3)

    Returns:
        Bivector components (e12, e13, e23), shape (..., 3)
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.stack([a[..., i] * b[..., j] - a[..., j] * b[..., i] for i, j in BIVECTOR_PAIRS], axis=-1)


def hodge_star(v: np.ndarray) -> np.ndarray:
    """Hodge star R^3 -> Lambda^2(R^3): e3 -> e12, e2 -> -e13, e1 -> e23."""
    v = np.asarray(v, dtype=float)
    return np.stack([v[..., 2], -v[..., 1], v[..., 0]], axis=-1)


def hodge_unstar(b: np.ndarray) -> np.ndarray:
    """Inverse of hodge_star."""
    b = np.asarray(b, dtype=float)
    return np.stack([b[..., 2], -b[..., 1], b[..., 0]], axis=-1)


def bivector_matrix(b: np.ndarray) -> np.ndarray:
    """
    Antisymmetric matrix M with M[i, j] equal to the (i, j) bivector component for i < j.

    Args:
        b: Bivector(s), shape (..., 3)

    Returns:
        Matrices of shape (..., 3, 3)
    """
    b = np.asarray(b, dtype=float)
    m = np.zeros(b.shape[:-1] + (3, 3))
    for c, (i, j) in enumerate(BIVECTOR_PAIRS):
        m[..., i, j] = b[..., c]
        m[..., j, i] = -b[..., c]
    return m


@dataclass(frozen=True)
class TwoVector6:
    """Stratified 2-vector of R^3_x + R^3_y."""
    part0: np.ndarray  # (..., 3) bivector in x
    part1: np.ndarray  # (..., 3, 3) mixed block, entry (i, j) multiplies e_i ^ eps_j
    part2: np.ndarray  # (..., 3) bivector in y

    def norm(self) -> np.ndarray:
        """Euclidean norm; the three strata are mutually orthogonal."""
        sq = (np.sum(self.part0 ** 2, axis=-1)
              + np.sum(self.part1 ** 2, axis=(-2, -1))
              + np.sum(self.part2 ** 2, axis=-1))
        return np.sqrt(sq)

    def flatten(self) -> np.ndarray:
        """Raw Lambda^2(R^6) coordinates in the lexicographic basis."""
        return flatten_two_vector(self)

    def __getitem__(self, index) -> "TwoVector6":
        return TwoVector6(self.part0[index], self.part1[index], self.part2[index])


def wedge6(a: Tuple[np.ndarray, np.ndarray], b: Tuple[np.ndarray, np.ndarray]) -> TwoVector6:
    """
    Wedge product of two vectors of R^3_x + R^3_y given as (x-part, y-part) pairs.

    Args:
        a: (a_x, a_y), each of shape (..., 3)
        b: (b_x, b_y), each of shape (..., 3)

    Returns:
        The stratified TwoVector6
    """
    ax, ay = (np.asarray(v, dtype=float) for v in a)
    bx, by = (np.asarray(v, dtype=float) for v in b)
    part1 = ax[..., :, None] * by[..., None, :] - bx[..., :, None] * ay[..., None, :]
    return TwoVector6(wedge3(ax, bx), part1, wedge3(ay, by))


def wedge6_raw(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Wedge of two vectors of R^6 in raw lexicographic Lambda^2(R^6) coordinates."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.stack([a[..., p] * b[..., q] - a[..., q] * b[..., p] for p, q in RAW_PAIRS], axis=-1)


def stratify(w: np.ndarray) -> TwoVector6:
    """
    Split raw Lambda^2(R^6) coordinates into the x-x, x-y and y-y strata.

    Args:
        w: Raw coordinates, shape (..., 15)

    Returns:
        The stratified TwoVector6
    """
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != len(RAW_PAIRS):
        raise ValueError(f"Expected {len(RAW_PAIRS)} raw coordinates, got {w.shape[-1]}")
    batch = w.shape[:-1]
    part0 = np.zeros(batch + (3,))
    part1 = np.zeros(batch + (3, 3))
    part2 = np.zeros(batch + (3,))
    for c, (p, q) in enumerate(RAW_PAIRS):
        if q < 3:
            part0[..., BIVECTOR_PAIRS.index((p, q))] = w[..., c]
        elif p < 3:
            part1[..., p, q - 3] = w[..., c]
        else:
            part2[..., BIVECTOR_PAIRS.index((p - 3, q - 3))] = w[..., c]
    return TwoVector6(part0, part1, part2)


def flatten_two_vector(t: TwoVector6) -> np.ndarray:
    """Inverse of stratify."""
    comps = []
    for p, q in RAW_PAIRS:
        if q < 3:
            comps.append(t.part0[..., BIVECTOR_PAIRS.index((p, q))])
        elif p < 3:
            comps.append(t.part1[..., p, q - 3])
        else:
            comps.append(t.part2[..., BIVECTOR_PAIRS.index((p - 3, q - 3))])
    return np.stack(comps, axis=-1)


def cofactor(a: np.ndarray) -> np.ndarray:
    """
    Cofactor matrix, row i being the cross product of the two other rows (cyclically).

    Args:
        a: Matrix or matrices, shape (..., 3, 3)

    Returns:
        cof(a) with a @ cof(a)^T = det(a) I
    """
    a = np.asarray(a)
    r0, r1, r2 = a[..., 0, :], a[..., 1, :], a[..., 2, :]
    return np.stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)], axis=-2)


def det3(a: np.ndarray) -> np.ndarray:
    """Determinant by explicit expansion along the first row."""
    a = np.asarray(a)
    return (a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]))


def trace_cofactor(a: np.ndarray) -> np.ndarray:
    """Sum of the principal 2x2 minors (second elementary symmetric function)."""
    a = np.asarray(a)
    return (a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
            + a[..., 0, 0] * a[..., 2, 2] - a[..., 0, 2] * a[..., 2, 0]
            + a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])


def det_cayley_hamilton(n: np.ndarray) -> np.ndarray:
    """det N = ((tr N)^3 - 3 tr N tr N^2 + 2 tr N^3) / 6."""
    n = np.asarray(n, dtype=float)
    n2 = n @ n
    n3 = n2 @ n
    t1 = np.trace(n, axis1=-2, axis2=-1)
    t2 = np.trace(n2, axis1=-2, axis2=-1)
    t3 = np.trace(n3, axis1=-2, axis2=-1)
    return (t1 ** 3 - 3.0 * t1 * t2 + 2.0 * t3) / 6.0


def quadratic_form_Q(a: np.ndarray) -> np.ndarray:
    """
    Q(A) = (1/4)(tr A)^2 - (1/6) tr cof A.

    Args:
        a: Matrix or matrices, shape (..., 3, 3)

    Returns:
        Q per matrix
    """
    a = np.asarray(a, dtype=float)
    tr = np.trace(a, axis1=-2, axis2=-1)
    tr_cof = np.trace(cofactor(a), axis1=-2, axis2=-1)
    return 0.25 * tr ** 2 - tr_cof / 6.0


def quadratic_form_Q_eigen(lambda1: np.ndarray, lambda2: np.ndarray) -> np.ndarray:
    """Q for a symmetric matrix with eigenvalues (lambda1, lambda2, 0): (l1+l2)^2/6 + (l1^2+l2^2)/12."""
    lambda1 = np.asarray(lambda1, dtype=float)
    lambda2 = np.asarray(lambda2, dtype=float)
    return (lambda1 + lambda2) ** 2 / 6.0 + (lambda1 ** 2 + lambda2 ** 2) / 12.0


def check_unit(y: np.ndarray, name: str = "y", tol: Optional[float] = None) -> None:
    """Raise PreconditionError unless every vector in y has unit length."""
    tol = Config.PRECONDITION_TOLERANCE if tol is None else tol
    dev = np.max(np.abs(np.linalg.norm(np.asarray(y, dtype=float), axis=-1) - 1.0))
    if dev > tol:
        raise PreconditionError(f"|{name}| = 1 violated by {dev:.3e}", precondition=f"|{name}| = 1", residual=float(dev))


def matrix_identity_residuals(a: np.ndarray, y: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Relative residuals of the cofactor identities linking a matrix, a unit vector
    and the antisymmetric matrix B_ij = sum_k eps_ijk y_k.

    The two contraction identities valid for Ay = A^T y = 0 are evaluated on
    the projection P A P with P = I - y y^T.

    Args:
        a: Matrix or matrices, shape (..., 3, 3)
        y: Unit vector(s), shape (..., 3)

    Returns:
        Mapping identity name -> residual(s)
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    check_unit(y)

    b = np.einsum('ijk,...k->...ij', LEVI_CIVITA, y)
    y_cof_y = np.einsum('...i,...ij,...j->...', y, cofactor(a), y)

    ba = b @ a
    # C^k_ij = (BA)_ij y_k + (BA)_ik y_j
    c = (ba[..., None, :, :] * y[..., :, None, None]
         + np.einsum('...ik,...j->...kij', ba, y))
    sum_c = np.sum(trace_cofactor(c), axis=-1)

    proj = np.eye(3) - y[..., :, None] * y[..., None, :]
    ap = proj @ a @ proj
    yp_cof_yp = np.einsum('...i,...ij,...j->...', y, cofactor(ap), y)
    d = -(ap[..., None, :, :] * y[..., :, None, None] + np.einsum('...ik,...j->...kij', ap, y))
    sum_d = np.sum(trace_cofactor(d), axis=-1)

    rank_one = det3(a + y[..., :, None] * y[..., None, :])
    return {
        "y_cof_y_vs_trace_cof_BA": relative_residual(y_cof_y, trace_cofactor(ba)),
        "y_cof_y_vs_sum_trace_cof_BAy": relative_residual(y_cof_y, sum_c),
        "kernel_y_cof_y_vs_trace_cof": relative_residual(yp_cof_yp, trace_cofactor(ap)),
        "kernel_y_cof_y_vs_sum_trace_cof_Ay": relative_residual(yp_cof_yp, sum_d),
        "rank_one_determinant": relative_residual(rank_one, det3(a) + y_cof_y),
        "cayley_hamilton_determinant": relative_residual(det_cayley_hamilton(a), det3(a)),
    }
