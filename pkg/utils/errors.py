"""Exception types raised by tiltbend. The CLI maps them onto exit codes."""

from typing import List, Optional, Sequence, Tuple


class TiltbendError(ValueError):
    """Base class for all tiltbend errors."""
    exit_code = 3


class MeshParseError(TiltbendError):
    """An OFF file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshValidationError(TiltbendError):
    """A mesh is not closed, not consistently oriented, inverted or degenerate."""

    def __init__(self, message: str, edges: Optional[Sequence[Tuple[int, int]]] = None,
                 faces: Optional[Sequence[int]] = None):
        self.edges: List[Tuple[int, int]] = [tuple(int(v) for v in e) for e in (edges if edges is not None else [])]
        self.faces: List[int] = [int(f) for f in (faces if faces is not None else [])]
        details = []
        if self.edges:
            details.append(f"edges {self.edges[:10]}")
        if self.faces:
            details.append(f"faces {self.faces[:10]}")
        if details:
            message = f"{message} ({'; '.join(details)})"
        super().__init__(message)


class DegenerateFaceError(MeshValidationError):
    """A face has (numerically) zero area."""


class PreconditionError(TiltbendError):
    """An operation was called outside its domain."""
    exit_code = 2

    def __init__(self, message: str, precondition: str = "", residual: Optional[float] = None):
        self.precondition = precondition
        self.residual = residual
        super().__init__(message)


class FoldOverError(PreconditionError):
    """The director is not transversal to the surface (theta.nu <= 0)."""

    def __init__(self, message: str, faces: Optional[Sequence[int]] = None,
                 vertices: Optional[Sequence[int]] = None):
        self.faces: List[int] = [int(f) for f in (faces if faces is not None else [])]
        self.vertices: List[int] = [int(v) for v in (vertices if vertices is not None else [])]
        if self.faces:
            message = f"{message} (faces {self.faces[:20]})"
        if self.vertices:
            message = f"{message} (vertices {self.vertices[:20]})"
        super().__init__(message, precondition="theta.nu > 0")


class MembershipError(PreconditionError):
    """A flattened matrix does not lie in the admissible subspace."""

    def __init__(self, message: str, constraint: str, residual: float):
        super().__init__(f"{message}: {constraint} violated (residual {residual:.3e})",
                         precondition=constraint, residual=residual)
        self.constraint = constraint


class SpectralBasisError(TiltbendError):
    """An eigen-relation of the spectral matrix failed at construction."""
    exit_code = 1


class ConsistencyError(TiltbendError):
    """Two independent evaluations of the same quantity disagree."""
    exit_code = 1
