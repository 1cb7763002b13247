"""
Seeded battery of algebraic identities. Every identity compares two
independently coded evaluations on random inputs and records the worst
relative residual together with reproducer inputs for every failure.
"""

import logging
import numpy as np
from typing import Dict, List, Any, Optional, Tuple

from agents.base_agent import BaseAgent
from config.config import Config
from models.reports import IdentityResult, VerifyReport
from tools.director_tool import FaceDirectorData
from tools.gauss_graph_tool import (
    closed_form_residuals, graph_xi_batch, xi_trace_identities, f_y,
)
from tools.spectral_tool import (
    build_spectral_basis, eigen_relation_residuals, project_pi0, norm_pi0_fast,
    F_y, F_y_eigen, growth_slack, quadratic_consistency, flatten_xi,
)
from tools.varifold_tool import second_fundamental_A, hk_from_A, varifold_A_from_graph
from utils.mesh import FaceFrame
from utils.multilinear import (
    wedge3, wedge6_raw, stratify, hodge_star, det3, matrix_identity_residuals,
    quadratic_form_Q, quadratic_form_Q_eigen, trace_cofactor,
)
from utils.common import relative_residual

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_unit_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    return _unit(rng.standard_normal((n, 3)))


def random_frames(rng: np.random.Generator, n: int) -> FaceFrame:
    """Random positively oriented orthonormal frames."""
    q, r = np.linalg.qr(rng.standard_normal((n, 3, 3)))
    q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[:, None, :]
    tau1, tau2 = q[:, :, 0], q[:, :, 1]
    nu = np.cross(tau1, tau2)
    return FaceFrame(tau1, tau2, nu, np.ones(n))


def random_face_data(rng: np.random.Generator, frame: FaceFrame, scale: float = 2.0) -> FaceDirectorData:
    """Random transversal director (theta.nu >= 1/sqrt(10)) and symmetric L with L theta = 0."""
    n = frame.nu.shape[0]
    nu = frame.nu
    g = rng.standard_normal((n, 3))
    t = _unit(g - np.einsum('fi,fi->f', g, nu)[:, None] * nu)
    theta = _unit(nu + rng.uniform(0.0, 3.0, n)[:, None] * t)
    helper = _unit(np.cross(theta, rng.standard_normal((n, 3))))
    angle = rng.uniform(0.0, 2.0 * np.pi, n)[:, None]
    other = np.cross(theta, helper)
    v1 = np.cos(angle) * helper + np.sin(angle) * other
    v2 = np.cross(theta, v1)
    lam = np.sort(scale * rng.standard_normal((n, 2)), axis=1)[:, ::-1]
    l1, l2 = lam[:, 0].copy(), lam[:, 1].copy()
    L = (l1[:, None, None] * v1[:, :, None] * v1[:, None, :]
         + l2[:, None, None] * v2[:, :, None] * v2[:, None, :])
    return FaceDirectorData(
        faces=np.arange(n), theta_bar=theta, Dtheta=L, L=L, lambda1=l1, lambda2=l2,
        eig_frame=np.stack([v1, v2, theta], axis=1), asymmetry=np.zeros(n),
        theta_dot_nu=np.einsum('fi,fi->f', theta, nu),
    )


def admissible_matrices(rng: np.random.Generator, y: np.ndarray) -> np.ndarray:
    """Random zeta with zeta y = 0 and tr zeta = 0."""
    proj = np.eye(3) - y[:, :, None] * y[:, None, :]
    zeta = rng.standard_normal((y.shape[0], 3, 3)) @ proj
    tr = np.trace(zeta, axis1=-2, axis2=-1)
    return zeta - 0.5 * tr[:, None, None] * proj


class VerificationAgent(BaseAgent):
    """Agent that runs the identity battery."""

    def __init__(self, verbose: bool = True):
        super().__init__(
            name="Verification Agent",
            description="Runs the seeded identity battery and collects worst residuals",
            verbose=verbose,
        )
        self.results: List[IdentityResult] = []

    def _record(self, name: str, residuals: np.ndarray, inputs: Dict[str, np.ndarray]) -> None:
        res = np.atleast_1d(np.asarray(residuals, dtype=float))
        res = np.where(np.isnan(res), np.inf, res)
        tol = Config.IDENTITY_TOLERANCE
        bad = np.where(res > tol)[0]
        failures = []
        for idx in bad[:Config.MAX_REPORTED_FAILURES]:
            failures.append({
                "trial": int(idx),
                "residual": float(res[idx]),
                "inputs": {k: np.asarray(v)[idx].tolist() for k, v in inputs.items()},
            })
        self.results.append(IdentityResult(
            identity=name, trials=int(res.size), max_residual=float(np.max(res)) if res.size else 0.0,
            tolerance=tol, failures=failures,
        ))
        if len(bad):
            logger.error(f"Identity {name} failed on {len(bad)} of {res.size} trials")

    def check_multilinear(self, rng: np.random.Generator, n: int) -> None:
        a = rng.standard_normal((n, 3))
        b = rng.standard_normal((n, 3))
        eye = np.eye(3)
        cross = np.stack([det3(np.stack([np.broadcast_to(eye[k], a.shape), a, b], axis=1)) for k in range(3)], axis=-1)
        w = wedge3(a, b)
        self._record("wedge3_matches_cross_product", np.max(np.abs(w - hodge_star(cross)), axis=-1)
                     / np.maximum(1.0, np.linalg.norm(w, axis=-1)), {"a": a, "b": b})
        self._record("wedge3_norm", relative_residual(np.sum(w ** 2, axis=-1),
                                                      np.sum(a ** 2, -1) * np.sum(b ** 2, -1) - np.sum(a * b, -1) ** 2),
                     {"a": a, "b": b})

        mats = rng.standard_normal((n, 3, 3))
        y = random_unit_vectors(rng, n)
        for name, res in matrix_identity_residuals(mats, y).items():
            self._record(name, res, {"A": mats, "y": y})

    def check_graph(self, rng: np.random.Generator, n: int) -> Tuple[FaceFrame, FaceDirectorData]:
        frame = random_frames(rng, n)
        data = random_face_data(rng, frame)
        inputs = {"tau1": frame.tau1, "tau2": frame.tau2, "nu": frame.nu, "theta": data.theta_bar, "L": data.L}
        g = graph_xi_batch(frame, data, check=False)
        for name, res in closed_form_residuals(frame, data, g.xi).items():
            self._record(f"graph_{name}", res, inputs)
        raw = wedge6_raw(np.concatenate([frame.tau1, np.einsum('fij,fj->fi', data.L, frame.tau1)], axis=-1),
                         np.concatenate([frame.tau2, np.einsum('fij,fj->fi', data.L, frame.tau2)], axis=-1))
        strat = stratify(raw)
        self._record("graph_raw_wedge_stratified", np.max(np.abs(raw - g.xi.flatten()), axis=-1)
                     / np.maximum(1.0, g.jac), inputs)
        self._record("graph_norm_pythagoras", relative_residual(np.linalg.norm(raw, axis=-1), strat.norm()), inputs)
        for name, res in xi_trace_identities(frame, data).items():
            self._record(f"graph_{name}", res, inputs)
        density = f_y(g.xi.part1, data.theta_bar) / data.theta_dot_nu ** 2
        self._record("graph_energy_density_equals_Q", relative_residual(density, quadratic_form_Q(data.L)), inputs)
        self._record("Q_eigen_form", relative_residual(quadratic_form_Q(data.L),
                                                      quadratic_form_Q_eigen(data.lambda1, data.lambda2)), inputs)
        return frame, data

    def check_spectral(self, rng: np.random.Generator, n: int, frame: FaceFrame, data: FaceDirectorData) -> None:
        y = random_unit_vectors(rng, n)
        basis = build_spectral_basis(y)
        for name, res in eigen_relation_residuals(basis).items():
            self._record(f"spectral_eigen_relation_{name}", res, {"y": y})

        zeta = admissible_matrices(rng, y)
        u = flatten_xi(zeta)
        scale = np.maximum(1.0, np.linalg.norm(u, axis=-1))
        cap0 = np.max(np.abs(np.einsum('fij,fj->fi', basis.v0[:, :3, :], u)), axis=-1) / scale
        cap1 = np.abs(np.einsum('fi,fi->f', basis.v_m1, u)) / scale
        self._record("spectral_kernel_rows_vanish_on_admissible", cap0, {"y": y, "u": u})
        self._record("spectral_minus1_vanishes_on_admissible", cap1, {"y": y, "u": u})
        fast = norm_pi0_fast(u, basis)
        gram = np.sum(project_pi0(u, basis) ** 2, axis=-1)
        self._record("spectral_pi0_fast_norm", relative_residual(fast, gram), {"y": y, "u": u})

        u_any = rng.standard_normal((n, 9))
        f_lit = F_y(u_any, basis)
        self._record("spectral_F_eigen_form", relative_residual(f_lit, F_y_eigen(u_any, basis)), {"y": y, "u": u_any})
        slack = growth_slack(u_any, basis)
        self._record("spectral_growth_bound", np.maximum(0.0, -slack) / np.maximum(1.0, f_lit), {"y": y, "u": u_any})

        u_b = flatten_xi(admissible_matrices(rng, y))
        mid = F_y(0.5 * (u + u_b), basis)
        avg = 0.5 * (F_y(u, basis) + F_y(u_b, basis))
        self._record("spectral_midpoint_convexity", np.maximum(0.0, mid - avg) / np.maximum(1.0, avg),
                     {"y": y, "u": u, "v": u_b})

        zeta_any = rng.standard_normal((n, 3, 3))
        _, res = quadratic_consistency(zeta_any, y)
        self._record("spectral_quadratic_consistency", res, {"y": y, "zeta": zeta_any})

        # defect of a graph face equals the kernel norm of its mixed part
        g = graph_xi_batch(frame, data, check=False)
        theta_basis = build_spectral_basis(data.theta_bar)
        fast_defect = norm_pi0_fast(flatten_xi(g.xi.part1), theta_basis)
        self._record("defect_equals_pi0_norm", relative_residual(g.defect ** 2, fast_defect),
                     {"theta": data.theta_bar, "L": data.L, "tau1": frame.tau1, "tau2": frame.tau2})

    def check_varifold(self, rng: np.random.Generator, n: int) -> None:
        frame = random_frames(rng, n)
        nu = frame.nu
        angle = rng.uniform(0.0, 2.0 * np.pi, n)[:, None]
        v1 = np.cos(angle) * frame.tau1 + np.sin(angle) * frame.tau2
        v2 = np.cross(nu, v1)
        lam = 2.0 * rng.standard_normal((n, 2))
        L = (lam[:, 0, None, None] * v1[:, :, None] * v1[:, None, :]
             + lam[:, 1, None, None] * v2[:, :, None] * v2[:, None, :])
        a = second_fundamental_A(L, nu)
        h, k = hk_from_A(a, nu)
        inputs = {"L": L, "nu": nu}
        self._record("varifold_H_is_trace_L", relative_residual(h, np.trace(L, axis1=-2, axis2=-1)), inputs)
        self._record("varifold_K_is_trace_cof_L", relative_residual(k, trace_cofactor(L)), inputs)
        self._record("varifold_H_is_eigen_sum", relative_residual(h, lam[:, 0] + lam[:, 1]), inputs)
        self._record("varifold_K_is_eigen_product", relative_residual(k, lam[:, 0] * lam[:, 1]), inputs)
        self._record("varifold_A_symmetric", a.symmetry_residual(), inputs)

        xi0 = hodge_star(nu)
        xi1 = (frame.tau1[:, :, None] * np.einsum('fij,fj->fi', L, frame.tau2)[:, None, :]
               - frame.tau2[:, :, None] * np.einsum('fij,fj->fi', L, frame.tau1)[:, None, :])
        a_graph, h_vec = varifold_A_from_graph(xi0, xi1, nu)
        a_flip, h_flip = varifold_A_from_graph(-xi0, xi1, -nu)
        flip = np.maximum(np.max(np.abs(a_graph.values - a_flip.values), axis=(-3, -2, -1)),
                          np.max(np.abs(h_vec - h_flip), axis=-1))
        self._record("varifold_sign_flip_invariance", flip, inputs)
        gap = np.max(np.abs(a_graph.values - a.values), axis=(-3, -2, -1)) / np.maximum(1.0, np.abs(lam).max(axis=1))
        self._record("varifold_graph_tensor_matches_shape_tensor", gap, inputs)

    def run(self, state: Dict[str, Any]) -> Dict[str, Any]:
        """
        Run the full battery.

        Args:
            state: Holds 'seed' and 'trials'

        Returns:
            The state with 'report' (VerifyReport) set
        """
        seed = int(state.get("seed", Config.DEFAULT_SEED))
        trials = int(state.get("trials", Config.DEFAULT_TRIALS))
        rng = np.random.default_rng(seed)
        self.results = []
        self.think(f"Running identity battery with seed {seed}, {trials} trials")
        self.check_multilinear(rng, trials)
        frame, data = self.check_graph(rng, trials)
        self.check_spectral(rng, trials, frame, data)
        self.check_varifold(rng, trials)
        passed = all(not r.failures for r in self.results)
        report = VerifyReport(
            seed=seed,
            trials=trials,
            quadratic_form_scale=Config.QUADRATIC_FORM_SCALE,
            identities=list(self.results),
            passed=passed,
        )
        self.think(f"{len(self.results)} identities checked, passed={passed}")
        return {**state, "report": report}
