import logging
import numpy as np
from typing import Dict, Any

from agents.base_agent import BaseAgent
from models.reports import SweepConfig
from tools.gauss_graph_tool import (
    GaussGraphTool, graph_area, graph_energy, current_pairings, catalog_forms,
)
from utils.common import relative_residual
from utils.errors import ConsistencyError

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

class GraphAgent(BaseAgent):
    """Agent that evaluates the Gauss graph diagnostics of a sweep cell."""

    def __init__(self, verbose: bool = True):
        super().__init__(
            name="Graph Agent",
            description="Graph area certificate, graph energy, pairings and verticality defect",
            verbose=verbose,
        )
        self.add_tool(GaussGraphTool())

    def run(self, state: Dict[str, Any]) -> Dict[str, Any]:
        """
        Args:
            state: Holds 'config', 'mesh', 'field' and 'energy'

        Returns:
            The state with 'graph' (diagnostics dict) set
        """
        config: SweepConfig = state["config"]
        mesh, field = state["mesh"], state["field"]
        batch = self.get_tool("gauss_graph_tool")({"mesh": mesh, "field": field})
        certificate = graph_area(mesh, field, batch)
        g_energy = graph_energy(mesh, field, batch)
        if g_energy.excluded_faces == 0:
            res = relative_residual(g_energy.value, state["energy"].bending)
            if res > 1e-10:
                raise ConsistencyError(f"Graph energy {g_energy.value} differs from bending energy "
                                       f"{state['energy'].bending} (residual {res:.3e})")
        pairing = current_pairings(mesh, field, catalog_forms(config.g_form, config.omega_form), batch)
        defect = batch.graph.defect
        diagnostics = {
            "graph_area": certificate.graph_area,
            "area_bound": certificate.bound,
            "area_bound_ok": certificate.area_bound_ok,
            "jac_bound_ok": certificate.jac_bound_ok,
            "eigenvalue_control_ok": certificate.eigenvalue_control_ok,
            "max_defect": float(np.max(defect)),
            "defect_integral": mesh.integrate(defect),
            "excluded_faces": g_energy.excluded_faces,
            "pair_phi_star": pairing.pair_phi_star,
            "pair_phi_wedge": pairing.pair_phi_wedge,
            "pairing_ratio": pairing.ratio,
        }
        self.think(f"graph area {certificate.graph_area:.6f} <= {certificate.bound:.6f}; "
                   f"pairing {pairing.pair_phi_wedge:.3e}; max defect {diagnostics['max_defect']:.3e}")
        return {**state, "graph": diagnostics}
