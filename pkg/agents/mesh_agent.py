import logging
from typing import Dict, Any

from agents.base_agent import BaseAgent
from models.reports import SweepConfig
from utils.mesh import generate_primitive

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

class MeshAgent(BaseAgent):
    """Agent that generates the analytic mesh of a sweep cell."""

    def __init__(self, verbose: bool = True):
        super().__init__(
            name="Mesh Agent",
            description="Generates the tagged analytic surface at the requested level",
            verbose=verbose,
        )

    def run(self, state: Dict[str, Any]) -> Dict[str, Any]:
        """
        Generate the mesh for state['level'].

        Args:
            state: Holds 'config' (SweepConfig) and 'level'

        Returns:
            The state with 'mesh' set
        """
        config: SweepConfig = state["config"]
        self.think(f"Generating {config.surface} at level {state['level']}")
        mesh = generate_primitive(config.surface, config.surface_params(), state["level"])
        self.think(f"{mesh.n_faces} faces, area {mesh.area:.6f}, hash {mesh.content_hash}")
        return {**state, "mesh": mesh}
