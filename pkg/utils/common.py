import os
import json
import hashlib
import logging
import numpy as np
import pandas as pd
from typing import Dict, List, Any, Optional, Sequence, Tuple, Union

from config.config import Config

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Column lists of every CSV report, keyed by report name. A schema check precedes every write.
CSV_SCHEMAS: Dict[str, List[str]] = {
    "sweep_grid": [
        "schema_version", "level", "eps", "seed", "mesh_hash", "config_hash",
        "tilt", "bending", "total", "area", "willmore_quarter", "total_gauss",
        "graph_area", "area_bound", "area_bound_ok", "jac_bound_ok", "eigenvalue_control_ok",
        "max_defect", "defect_integral", "excluded_faces",
        "pair_phi_star", "pair_phi_wedge", "pairing_ratio", "error",
    ],
    "graph_faces": [
        "schema_version", "face", "jac", "theta_dot_nu", "f_y_value", "defect",
    ],
    "first_variation": [
        "schema_version", "test_function", "level", "h", "residual_x", "residual_y",
        "residual_z", "residual_norm", "exact", "fitted_order",
    ],
    "verify_identities": [
        "schema_version", "identity", "trials", "max_residual", "failures",
    ],
}


class NpEncoder(json.JSONEncoder):
    """Custom JSON encoder to handle NumPy values."""
    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.bool_)):
            return bool(obj)
        return super(NpEncoder, self).default(obj)


def dump_json(data: Any) -> str:
    """
    Serialize data to a deterministic JSON string (sorted keys, fixed separators).

    Args:
        data: JSON-compatible data, numpy values allowed

    Returns:
        The JSON text
    """
    return json.dumps(data, cls=NpEncoder, sort_keys=True, indent=2)


def relative_residual(lhs: Union[float, np.ndarray], rhs: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Relative residual |lhs - rhs| / max(1, |lhs|, |rhs|), elementwise.

    Args:
        lhs: Left-hand side value(s)
        rhs: Right-hand side value(s)

    Returns:
        The residual(s), same shape as the broadcast inputs
    """
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    res = np.abs(lhs - rhs) / scale
    if res.ndim == 0:
        return float(res)
    return res


def tree_sum(values: np.ndarray) -> Union[float, np.ndarray]:
    """
    Sum along the first axis with a fixed pairwise reduction tree.

    The input is zero-padded to a power-of-two length and halved by adding
    neighbours, so the association order depends only on the length.

    Args:
        values: Array whose first axis is reduced

    Returns:
        The sum (a float for 1-D input)
    """
    arr = np.asarray(values, dtype=float)
    n = arr.shape[0]
    if n == 0:
        out = np.zeros(arr.shape[1:])
        return float(out) if out.ndim == 0 else out
    size = 1
    while size < n:
        size *= 2
    if size != n:
        pad = np.zeros((size - n,) + arr.shape[1:])
        arr = np.concatenate([arr, pad], axis=0)
    while arr.shape[0] > 1:
        arr = arr[0::2] + arr[1::2]
    out = arr[0]
    if np.ndim(out) == 0:
        return float(out)
    return out


def fit_convergence_order(h: Sequence[float], errors: Sequence[float],
                          drop_coarsest: bool = True) -> Tuple[float, float]:
    """
    Fit errors ~ C h^p by least squares in log-log coordinates.

    Args:
        h: Mesh sizes or epsilons
        errors: Error magnitudes (absolute values are used)
        drop_coarsest: Drop the sample with the largest h when at least three remain

    Returns:
        (order p, root-mean-square residual of the log fit)
    """
    h = np.asarray(h, dtype=float)
    err = np.abs(np.asarray(errors, dtype=float))
    order = np.argsort(-h, kind="stable")
    h, err = h[order], err[order]
    if drop_coarsest and len(h) >= 3:
        h, err = h[1:], err[1:]
    mask = err > 0
    if mask.sum() < 2:
        logger.warning("Not enough nonzero samples for an order fit")
        return float("nan"), float("nan")
    x = np.log(h[mask])
    y = np.log(err[mask])
    design = np.vstack([x, np.ones_like(x)]).T
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    fit_res = y - design @ coef
    return float(coef[0]), float(np.sqrt(np.mean(fit_res ** 2)))


def extrapolate_limit(x: Sequence[float], values: Sequence[float], powers: Sequence[int] = (0, 1, 2)) -> Tuple[float, float]:
    """
    Least-squares fit of values ~ sum_k c_k x^k over the given powers and return c_0.

    Args:
        x: Sample abscissae (for example epsilons)
        values: Sample values
        powers: Monomial powers in the model, must contain 0

    Returns:
        (limit c_0, root-mean-square fit residual)
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    design = np.vstack([x ** p for p in powers]).T
    coef, _, _, _ = np.linalg.lstsq(design, v, rcond=None)
    res = v - design @ coef
    return float(coef[list(powers).index(0)]), float(np.sqrt(np.mean(res ** 2)))


def array_hash(*arrays: np.ndarray) -> str:
    """Short sha256 content hash of numpy arrays (dtype and shape included)."""
    digest = hashlib.sha256()
    for arr in arrays:
        arr = np.ascontiguousarray(arr)
        digest.update(str(arr.dtype).encode())
        digest.update(str(arr.shape).encode())
        digest.update(arr.tobytes())
    return digest.hexdigest()[:16]


def mapping_hash(values: Dict[str, Any]) -> str:
    """Short sha256 hash of a flat key/value mapping, independent of key order."""
    text = "\n".join(f"{k}={values[k]}" for k in sorted(values))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def write_csv_report(df: pd.DataFrame, path: str, schema: str) -> str:
    """
    Write a report DataFrame after checking it against its versioned schema.

    Args:
        df: Report rows, without the schema_version column
        path: Output path
        schema: Key into CSV_SCHEMAS

    Returns:
        The path written
    """
    if schema not in CSV_SCHEMAS:
        raise ValueError(f"Unknown CSV schema: {schema}")
    df = df.copy()
    df.insert(0, "schema_version", Config.CSV_SCHEMA_VERSION)
    expected = CSV_SCHEMAS[schema]
    if list(df.columns) != expected:
        missing = [c for c in expected if c not in df.columns]
        extra = [c for c in df.columns if c not in expected]
        raise ValueError(f"CSV schema mismatch for {schema}: missing {missing}, unexpected {extra}")
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.info(f"Wrote {len(df)} rows to {path}")
    return path
