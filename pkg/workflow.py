import os
import logging
import numpy as np
import pandas as pd
from typing import Dict, List, Any, Optional, Tuple, TypedDict
from enum import Enum

from joblib import Parallel, delayed
from langgraph.graph import StateGraph, END

from agents.mesh_agent import MeshAgent
from agents.director_agent import DirectorAgent
from agents.energy_agent import EnergyAgent
from agents.graph_agent import GraphAgent
from config.config import Config
from models.reports import SweepConfig, SweepCell, SweepFits, SweepReport
from tools.director_tool import tangent_field, tangent_field_energy
from tools.energy_tool import q_zero, analytic_q_zero
from tools.varifold_tool import residual_table
from utils.common import fit_convergence_order, extrapolate_limit, write_csv_report, dump_json
from utils.mesh import TriMesh, generate_primitive

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Define the state type
class CellState(TypedDict):
    config: SweepConfig
    level: int
    eps: float
    mesh: Optional[TriMesh]
    field: Optional[Any]
    director_data: Optional[Any]
    energy: Optional[Any]
    graph: Optional[Dict[str, Any]]
    error: Optional[str]

# Define the workflow steps
class WorkflowStep(str, Enum):
    GENERATE_MESH = "generate_mesh"
    BUILD_DIRECTOR = "build_director"
    EVALUATE_ENERGY = "evaluate_energy"
    EVALUATE_GRAPH = "evaluate_graph"
    END = "end"

# Create the agents
mesh_agent = MeshAgent(verbose=False)
director_agent = DirectorAgent(verbose=False)
energy_agent = EnergyAgent(verbose=False)
graph_agent = GraphAgent(verbose=False)

# Define the workflow
def create_workflow() -> StateGraph:
    """
    Create the per-cell workflow graph.

    Returns:
        A StateGraph instance
    """
    workflow = StateGraph(CellState)

    workflow.add_node(WorkflowStep.GENERATE_MESH, mesh_agent.run)
    workflow.add_node(WorkflowStep.BUILD_DIRECTOR, director_agent.run)
    workflow.add_node(WorkflowStep.EVALUATE_ENERGY, energy_agent.run)
    workflow.add_node(WorkflowStep.EVALUATE_GRAPH, graph_agent.run)

    workflow.add_edge(WorkflowStep.GENERATE_MESH, WorkflowStep.BUILD_DIRECTOR)
    workflow.add_edge(WorkflowStep.BUILD_DIRECTOR, WorkflowStep.EVALUATE_ENERGY)
    workflow.add_edge(WorkflowStep.EVALUATE_ENERGY, WorkflowStep.EVALUATE_GRAPH)
    workflow.add_edge(WorkflowStep.EVALUATE_GRAPH, END)

    workflow.set_entry_point(WorkflowStep.GENERATE_MESH)

    return workflow


def run_cell(config: SweepConfig, level: int, eps: float) -> SweepCell:
    """
    Evaluate one (level, eps) cell of a sweep.

    Failures are logged and recorded in the returned cell instead of raised.

    Args:
        config: The sweep configuration
        level: Refinement level
        eps: Tilt scale

    Returns:
        The SweepCell
    """
    initial_state: CellState = {
        "config": config,
        "level": level,
        "eps": eps,
        "mesh": None,
        "field": None,
        "director_data": None,
        "energy": None,
        "graph": None,
        "error": None,
    }
    app = create_workflow().compile()
    try:
        result = app.invoke(initial_state)
        return SweepCell(
            level=level,
            eps=eps,
            seed=config.seed,
            mesh_hash=result["mesh"].content_hash,
            config_hash=config.config_hash(),
            energy=result["energy"],
            **result["graph"],
        )
    except Exception as e:
        logger.error(f"Sweep cell level={level} eps={eps} failed: {e}", exc_info=True)
        return SweepCell(
            level=level,
            eps=eps,
            seed=config.seed,
            mesh_hash="",
            config_hash=config.config_hash(),
            error=f"{type(e).__name__}: {e}",
        )


def tilt_target(config: SweepConfig, mesh: TriMesh) -> Tuple[float, float]:
    """
    (1/2) integral of |w|^2 for the configured w field.

    Returns:
        (target, discrete value on the mesh); the target is exact for
        e1_tangent on a sphere (4 pi r^2 / 3) and the discrete value otherwise
    """
    discrete = tangent_field_energy(mesh, tangent_field(mesh, config.w_field))
    if config.surface == "sphere" and config.w_field == "e1_tangent":
        return 4.0 * np.pi * config.radius ** 2 / 3.0, discrete
    if config.w_field == "zero":
        return 0.0, discrete
    return discrete, discrete


def _optional(value: float) -> Optional[float]:
    return None if value is None or not np.isfinite(value) else float(value)


def _rel_error(value: float, target: float) -> float:
    return abs(value - target) / max(abs(target), 1e-300)


def fit_sweep(config: SweepConfig, cells: List[SweepCell]) -> SweepFits:
    """
    Fit limits and decay orders from a finished grid.

    Q0 is evaluated per level with the normal director and extrapolated in h^2.
    At the finest level the total is extrapolated in eps with a + b eps + c eps^2,
    the tilt term with a + b eps^2, and the pairing and integrated defect get
    log-log order fits in eps.
    """
    params = config.surface_params()
    levels = sorted(config.levels)
    meshes = {level: generate_primitive(config.surface, params, level) for level in levels}
    q0_values = [q_zero(meshes[level]) for level in levels]
    hs = [meshes[level].mean_edge_length for level in levels]
    q0_analytic = analytic_q_zero(config.surface, params)
    if len(levels) >= 2:
        q0_fit, _ = extrapolate_limit(hs, q0_values, powers=(0, 2))
        q0_order, _ = fit_convergence_order(hs, [q - q0_analytic for q in q0_values])
    else:
        q0_fit, q0_order = q0_values[-1], float("nan")

    fine_level = levels[-1]
    target, target_discrete = tilt_target(config, meshes[fine_level])
    fine = sorted((c for c in cells if c.level == fine_level and c.error is None), key=lambda c: c.eps)
    eps = [c.eps for c in fine]
    totals = [c.energy.total for c in fine]
    tilts = [c.energy.tilt for c in fine]

    fits = SweepFits(
        q0_levels=levels,
        q0_values=q0_values,
        q0_analytic=q0_analytic,
        q0_fit=q0_fit,
        q0_rel_error=_rel_error(q0_fit, q0_analytic),
        q0_order=_optional(q0_order),
        fine_level=fine_level,
        tilt_target=target,
        tilt_target_discrete=target_discrete,
    )
    checks = {"q0_limit": fits.q0_rel_error <= config.tol_q0}

    if len(fine) >= 2:
        powers = (0, 1, 2) if len(fine) >= 3 else (0, 1)
        fits.q_eps_limit, _ = extrapolate_limit(eps, totals, powers=powers)
        fits.q_eps_expected = q0_analytic + target
        fits.q_eps_rel_error = _rel_error(fits.q_eps_limit, fits.q_eps_expected)
        fits.tilt_limit, _ = extrapolate_limit(eps, tilts, powers=(0, 2))
        fits.tilt_rel_error = _rel_error(fits.tilt_limit, target)
        checks["q_eps_limit"] = fits.q_eps_rel_error <= config.tol_limit
        checks["tilt_limit"] = fits.tilt_rel_error <= config.tol_tilt

        order, residual = fit_convergence_order(eps, [c.pair_phi_wedge for c in fine])
        fits.pairing_order, fits.pairing_fit_residual = _optional(order), _optional(residual)
        order, residual = fit_convergence_order(eps, [c.defect_integral for c in fine])
        fits.defect_order, fits.defect_fit_residual = _optional(order), _optional(residual)
        if fits.pairing_order is not None:
            checks["pairing_order"] = fits.pairing_order >= config.min_order_pairing
        if fits.defect_order is not None:
            checks["defect_order"] = fits.defect_order >= config.min_order_defect

    if fine:
        fits.liminf_ok = bool(min(totals) >= q0_fit * (1.0 - config.tol_liminf))
        checks["liminf"] = fits.liminf_ok

    ok_cells = [c for c in cells if c.error is None]
    checks["area_bound"] = all(c.area_bound_ok for c in ok_cells)
    checks["jac_bound"] = all(c.jac_bound_ok for c in ok_cells)
    checks["eigenvalue_control"] = all(c.eigenvalue_control_ok for c in ok_cells)
    fits.checks = {k: bool(v) for k, v in sorted(checks.items())}
    return fits


def run_sweep(config: SweepConfig, threads: Optional[int] = None) -> SweepReport:
    """
    Evaluate the eps x level grid and fit its limits.

    Cells run in a joblib pool; results are ordered by (level, eps) so the
    report does not depend on the thread count.

    Args:
        config: The sweep configuration
        threads: Pool size, capped by TILTBEND_THREADS (the cap when None)

    Returns:
        The SweepReport
    """
    cap = Config.thread_cap()
    threads = cap if threads is None else max(1, min(int(threads), cap))
    grid = [(level, eps) for level in sorted(config.levels) for eps in sorted(config.epsilons, reverse=True)]
    logger.info(f"Running sweep over {len(grid)} cells with {threads} worker(s)")
    cells = Parallel(n_jobs=threads)(delayed(run_cell)(config, level, eps) for level, eps in grid)
    cells = sorted(cells, key=lambda c: (c.level, -c.eps))
    failed = sum(1 for c in cells if c.error is not None)
    if failed:
        logger.warning(f"{failed} of {len(cells)} sweep cells failed")

    try:
        fits = fit_sweep(config, cells)
    except Exception as e:
        logger.error(f"Fitting sweep failed: {e}", exc_info=True)
        fits = None

    passed = failed == 0 and fits is not None and all(fits.checks.values())
    return SweepReport(
        config=config,
        config_hash=config.config_hash(),
        cells=cells,
        fits=fits,
        failed_cells=failed,
        passed=passed,
    )


def sweep_frame(report: SweepReport) -> pd.DataFrame:
    """Grid rows of a sweep in sweep_grid column order (without schema_version)."""
    rows = []
    for cell in report.cells:
        energy = cell.energy.model_dump() if cell.energy is not None else {}
        row = cell.model_dump(exclude={"energy"})
        for key in ("tilt", "bending", "total", "area", "willmore_quarter", "total_gauss"):
            row[key] = energy.get(key)
        row["error"] = cell.error or ""
        rows.append(row)
    columns = [
        "level", "eps", "seed", "mesh_hash", "config_hash",
        "tilt", "bending", "total", "area", "willmore_quarter", "total_gauss",
        "graph_area", "area_bound", "area_bound_ok", "jac_bound_ok", "eigenvalue_control_ok",
        "max_defect", "defect_integral", "excluded_faces",
        "pair_phi_star", "pair_phi_wedge", "pairing_ratio", "error",
    ]
    return pd.DataFrame(rows, columns=columns)


def write_sweep_outputs(report: SweepReport, out_dir: str) -> Dict[str, str]:
    """
    Write the grid CSV, the first-variation CSV and the JSON report.

    Returns:
        Mapping output kind -> path
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "grid": write_csv_report(sweep_frame(report), os.path.join(out_dir, "sweep_grid.csv"), "sweep_grid"),
    }
    config = report.config
    meshes = [generate_primitive(config.surface, config.surface_params(), level) for level in sorted(config.levels)]
    paths["first_variation"] = write_csv_report(
        residual_table(meshes), os.path.join(out_dir, "first_variation.csv"), "first_variation")
    json_path = os.path.join(out_dir, "sweep_report.json")
    with open(json_path, "w", newline="\n") as f:
        f.write(dump_json(report.model_dump()) + "\n")
    paths["report"] = json_path
    return paths
