import time
import logging
from typing import Dict, List, Any, Optional, TypeVar, Generic
from abc import ABC, abstractmethod

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

class BaseTool(Generic[T, R], ABC):
    """Base class for mesh computations exposed to the pipeline agents."""

    def __init__(self, name: str, description: str):
        """
        Initialize a tool.

        Args:
            name: The name of the tool
            description: What the tool computes
        """
        self.name = name
        self.description = description

    def validate_input(self, input_data: T) -> None:
        """
        Check the input before running. Subclasses raise a TiltbendError on bad input.

        Args:
            input_data: The input data for the tool
        """
        return None

    @abstractmethod
    def run(self, input_data: T) -> R:
        """
        Run the computation on the given input.

        Args:
            input_data: The input data for the tool

        Returns:
            The result of the computation
        """
        pass

    def __call__(self, input_data: T) -> R:
        """
        Validate, run and time the tool.

        Args:
            input_data: The input data for the tool

        Returns:
            The result of running the tool
        """
        self.validate_input(input_data)
        start = time.perf_counter()
        result = self.run(input_data)
        logger.debug(f"{self.name} finished in {time.perf_counter() - start:.3f}s")
        return result
