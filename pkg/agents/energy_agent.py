import logging
from typing import Dict, Any

from agents.base_agent import BaseAgent
from tools.energy_tool import EnergyTool

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

class EnergyAgent(BaseAgent):
    """Agent that evaluates the energy breakdown of a sweep cell."""

    def __init__(self, verbose: bool = True):
        super().__init__(
            name="Energy Agent",
            description="Evaluates tilt, bending and the curvature integrals",
            verbose=verbose,
        )
        self.add_tool(EnergyTool())

    def run(self, state: Dict[str, Any]) -> Dict[str, Any]:
        """
        Args:
            state: Holds 'mesh', 'field' and 'eps'

        Returns:
            The state with 'energy' set
        """
        energy = self.get_tool("energy_tool")({"mesh": state["mesh"], "field": state["field"], "eps": state["eps"]})
        self.think(f"tilt={energy.tilt:.6f} bending={energy.bending:.6f} total={energy.total:.6f}")
        return {**state, "energy": energy}
