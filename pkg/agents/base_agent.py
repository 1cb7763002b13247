import logging
from typing import Dict, List, Any, Optional
from abc import ABC, abstractmethod

from tools.base_tool import BaseTool

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

class BaseAgent(ABC):
    """Base class for the stages of a sweep cell and for the verification battery."""

    def __init__(self, name: str, description: str, verbose: bool = True):
        """
        Initialize an agent.

        Args:
            name: The name of the agent
            description: A description of what the agent does
            verbose: Whether to log progress messages
        """
        self.name = name
        self.description = description
        self.tools: List[BaseTool] = []
        self.verbose = verbose

    def add_tool(self, tool: BaseTool):
        """
        Add a tool to the agent.

        Args:
            tool: The tool to add
        """
        self.tools.append(tool)

    def get_tool(self, name: str) -> BaseTool:
        """
        Look up a registered tool by name.

        Args:
            name: The tool name

        Returns:
            The tool
        """
        for tool in self.tools:
            if tool.name == name:
                return tool
        raise KeyError(f"{self.name} has no tool named {name}")

    def think(self, message: str):
        """
        Log a progress message.

        Args:
            message: The message
        """
        if self.verbose:
            logger.info(f"[{self.name}] {message}")

    @abstractmethod
    def run(self, state: Dict[str, Any]) -> Dict[str, Any]:
        """
        Run the agent on the given state.

        Args:
            state: The current state

        Returns:
            The updated state
        """
        pass
