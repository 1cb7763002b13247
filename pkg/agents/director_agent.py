import logging
from typing import Dict, Any

from agents.base_agent import BaseAgent
from models.reports import SweepConfig
from tools.director_tool import DirectorTool, make_tilted_director, tangent_field

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

class DirectorAgent(BaseAgent):
    """Agent that builds the tilted director of a sweep cell and its face data."""

    def __init__(self, verbose: bool = True):
        super().__init__(
            name="Director Agent",
            description="Builds the recovery director nu + eps w and evaluates L per face",
            verbose=verbose,
        )
        self.add_tool(DirectorTool())

    def run(self, state: Dict[str, Any]) -> Dict[str, Any]:
        """
        Build the director for state['eps'] from the configured w field.

        Args:
            state: Holds 'config', 'mesh' and 'eps'

        Returns:
            The state with 'field' and 'director_data' set
        """
        config: SweepConfig = state["config"]
        mesh = state["mesh"]
        w = tangent_field(mesh, config.w_field)
        field = make_tilted_director(mesh, w, state["eps"])
        data = self.get_tool("director_tool")({"mesh": mesh, "field": field})
        self.think(f"eps={state['eps']}: max |L - L^T| before symmetrization {data.asymmetry.max():.3e}")
        return {**state, "field": field, "director_data": data}
