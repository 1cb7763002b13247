from typing import Dict, List, Any, Optional, Literal
from pydantic import BaseModel, Field, field_validator, model_validator
from dotenv import dotenv_values

from config.config import Config
from utils.common import mapping_hash


class EnergyBreakdown(BaseModel):
    """Terms of the tilt-bending energy of one surface/director pair."""
    tilt: float = Field(..., ge=0, description="eps^-2 * integral of (1/(theta.nu) - 1)")
    bending: float = Field(..., ge=0, description="Integral of Q(L)")
    total: float = Field(..., description="tilt + bending")
    area: float = Field(..., description="Surface area")
    willmore_quarter: float = Field(..., description="Integral of H^2/4 from the normal director")
    total_gauss: float = Field(..., description="Integral of K from the normal director")

    @model_validator(mode="after")
    def check_total(self):
        if self.total != self.tilt + self.bending:
            raise ValueError("total must equal tilt + bending")
        return self


class SweepConfig(BaseModel):
    """Flat key=value configuration of an eps x level sweep."""
    surface: Literal["sphere", "torus"] = "sphere"
    radius: float = Field(1.0, gt=0, description="Sphere radius")
    R: float = Field(2.0 ** 0.5, gt=0, description="Torus major radius")
    r: float = Field(1.0, gt=0, description="Torus minor radius")
    nu: int = Field(32, ge=3)
    nv: int = Field(32, ge=3)
    levels: List[int] = Field(default_factory=lambda: [3, 4])
    epsilons: List[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    w_field: str = "e1_tangent"
    seed: int = Config.DEFAULT_SEED
    g_form: str = "one_plus_x1sq"
    omega_form: str = "x3_dx2"
    tol_q0: float = 0.02
    tol_tilt: float = 0.02
    tol_limit: float = 0.02
    tol_liminf: float = 0.02
    min_order_pairing: float = 0.9
    min_order_defect: float = 0.9

    @field_validator("levels", "epsilons", mode="before")
    @classmethod
    def split_list(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("epsilons")
    @classmethod
    def positive_epsilons(cls, value):
        if not value or any(e <= 0 for e in value):
            raise ValueError("epsilons must be a non-empty list of positive numbers")
        return value

    @field_validator("levels")
    @classmethod
    def nonnegative_levels(cls, value):
        if not value or any(level < 0 for level in value):
            raise ValueError("levels must be a non-empty list of integers >= 0")
        return sorted(set(value))

    @model_validator(mode="after")
    def check_torus(self):
        if self.surface == "torus" and not self.R > self.r:
            raise ValueError("torus radii must satisfy R > r")
        return self

    @classmethod
    def from_file(cls, path: str) -> "SweepConfig":
        """Parse a key=value file."""
        values = {k: v for k, v in dotenv_values(path).items() if v is not None}
        return cls(**values)

    def surface_params(self) -> Dict[str, Any]:
        if self.surface == "sphere":
            return {"r": self.radius}
        return {"R": self.R, "r": self.r, "nu": self.nu, "nv": self.nv}

    def config_hash(self) -> str:
        return mapping_hash(self.model_dump())


class SweepCell(BaseModel):
    """One (level, eps) evaluation."""
    level: int
    eps: float
    seed: int
    mesh_hash: str
    config_hash: str
    energy: Optional[EnergyBreakdown] = None
    graph_area: Optional[float] = None
    area_bound: Optional[float] = None
    area_bound_ok: Optional[bool] = None
    jac_bound_ok: Optional[bool] = None
    eigenvalue_control_ok: Optional[bool] = None
    max_defect: Optional[float] = None
    defect_integral: Optional[float] = None
    excluded_faces: Optional[int] = None
    pair_phi_star: Optional[float] = None
    pair_phi_wedge: Optional[float] = None
    pairing_ratio: Optional[float] = None
    error: Optional[str] = None


class SweepFits(BaseModel):
    """Limits and convergence orders fitted from the grid."""
    q0_levels: List[int]
    q0_values: List[float]
    q0_analytic: float
    q0_fit: float
    q0_rel_error: float
    q0_order: Optional[float] = None
    fine_level: int
    q_eps_limit: Optional[float] = None
    q_eps_expected: Optional[float] = None
    q_eps_rel_error: Optional[float] = None
    tilt_limit: Optional[float] = None
    tilt_target: Optional[float] = None
    tilt_target_discrete: Optional[float] = None
    tilt_rel_error: Optional[float] = None
    pairing_order: Optional[float] = None
    pairing_fit_residual: Optional[float] = None
    defect_order: Optional[float] = None
    defect_fit_residual: Optional[float] = None
    liminf_ok: bool = False
    checks: Dict[str, bool] = Field(default_factory=dict)


class SweepReport(BaseModel):
    """Full result of cmd_sweep."""
    config: SweepConfig
    config_hash: str
    cells: List[SweepCell]
    fits: Optional[SweepFits] = None
    failed_cells: int = 0
    passed: bool = False


class IdentityResult(BaseModel):
    """Outcome of one identity of the verification battery."""
    identity: str
    trials: int
    max_residual: float
    tolerance: float
    failures: List[Dict[str, Any]] = Field(default_factory=list)


class VerifyReport(BaseModel):
    """Outcome of the seeded verification battery."""
    seed: int
    trials: int
    quadratic_form_scale: float
    identities: List[IdentityResult]
    passed: bool
