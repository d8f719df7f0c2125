from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Dict, List, Literal, Optional
from enum import Enum

from ..core.config import settings
from ..services.mesh import MeshKind, refined_points


class Method(str, Enum):
    """Solution methods"""
    GALERKIN = "galerkin"
    RESMIN = "resmin"
    SUPG = "supg"
    PINN = "pinn"
    VPINN_STRONG = "vpinn_strong"
    VPINN_WEAK = "vpinn_weak"
    VPINN_BOTH = "vpinn_both"

    @property
    def is_trained(self) -> bool:
        return self in TRAINED_METHODS


TRAINED_METHODS = {Method.PINN, Method.VPINN_STRONG, Method.VPINN_WEAK, Method.VPINN_BOTH}


class MeshConfig(BaseModel):
    """Point distribution; in 2D ``n_points`` counts points per direction"""
    model_config = ConfigDict(extra="forbid")

    kind: MeshKind = Field(default=MeshKind.UNIFORM, description="uniform or adaptive")
    n_points: int = Field(..., ge=2, description="Breakpoints (= collocation points) per direction")
    refinements: int = Field(
        default=0, ge=0, description="Times every element is bisected after the base mesh is built"
    )

    @property
    def total_points(self) -> int:
        return refined_points(self.n_points, self.refinements)


class ExperimentConfig(BaseModel):
    """One experiment: a method applied to the 1D model problem or the Eriksson-Johnson problem"""
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    name: Optional[str] = Field(None, description="Output directory name; derived from the config if omitted")
    method: Method
    dimension: Literal[1, 2] = Field(..., description="1 = model problem, 2 = Eriksson-Johnson")
    eps: float = Field(..., gt=0, description="Diffusion coefficient")
    mesh: MeshConfig

    widths: Optional[List[int]] = Field(None, description="Network layer widths, input to output")
    lr: float = Field(default=settings.DEFAULT_LEARNING_RATE, gt=0)
    epochs: int = Field(default=settings.DEFAULT_EPOCHS, ge=1)
    log_every: int = Field(default=settings.DEFAULT_LOG_EVERY, ge=1)
    seed: int = Field(default=settings.DEFAULT_SEED)
    bc_weight: float = Field(default=1.0, gt=0, description="Weight of every boundary loss component")
    gamma: float = Field(default=1.0, gt=0, description="Test-function scaling of the weak VPINN residual")

    quad_order: Optional[int] = Field(None, ge=1, description="Gauss points per element and direction")
    trial_degree: Optional[int] = Field(None, ge=1)
    trial_multiplicity: Optional[int] = Field(None, ge=1)
    test_degree: Optional[int] = Field(None, ge=1)
    test_multiplicity: Optional[int] = Field(None, ge=1)
    penalty_constant: float = Field(default=settings.PENALTY_CONSTANT, gt=0, description="C in C p^2 eps / h")

    @model_validator(mode="after")
    def fill_method_defaults(self) -> "ExperimentConfig":
        method, dim = self.method, self.dimension
        if method is Method.SUPG and dim != 2:
            raise ValueError("supg is only available for the two-dimensional problem")
        if self.mesh.kind is MeshKind.ADAPTIVE and not self.eps < 0.5:
            raise ValueError(f"adaptive meshes need eps < 0.5, got {self.eps}")

        if method is Method.GALERKIN:
            self._default_trial(2, 2 if dim == 1 else 1)
        elif method is Method.RESMIN:
            if dim == 1:
                self._default_trial(1, 1)
                self._default_test(2, 2)
            else:
                self._default_trial(2, 1)
                self._default_test(3, 1)
        elif method is Method.SUPG:
            self._default_trial(2, 1)
            if self.trial_degree < 2:
                raise ValueError(f"supg needs trial_degree >= 2, got {self.trial_degree}")
        else:
            self._default_test(3, 1)
            if self.widths is None:
                self.widths = [dim] + [settings.HIDDEN_WIDTH] * settings.HIDDEN_LAYERS + [1]
            if self.widths[0] != dim or self.widths[-1] != 1 or min(self.widths) < 1:
                raise ValueError(f"widths must run from {dim} inputs to 1 output, got {self.widths}")

        for degree, multiplicity in ((self.trial_degree, self.trial_multiplicity),
                                     (self.test_degree, self.test_multiplicity)):
            if degree is not None and not 1 <= multiplicity <= degree:
                raise ValueError(f"multiplicity {multiplicity} outside [1, {degree}]")
        return self

    def _default_trial(self, degree: int, multiplicity: int) -> None:
        if self.trial_degree is None:
            self.trial_degree = degree
        if self.trial_multiplicity is None:
            self.trial_multiplicity = min(multiplicity, self.trial_degree)

    def _default_test(self, degree: int, multiplicity: int) -> None:
        if self.test_degree is None:
            self.test_degree = degree
        if self.test_multiplicity is None:
            self.test_multiplicity = min(multiplicity, self.test_degree)

    @property
    def experiment_name(self) -> str:
        if self.name:
            return self.name
        label = f"{self.method.value}-{self.dimension}d-eps{self.eps:g}-{self.mesh.kind.value}{self.mesh.n_points}"
        if self.mesh.refinements:
            label += f"-r{self.mesh.refinements}"
        if self.method.is_trained:
            label += f"-seed{self.seed}"
        return label


class SolveReport(BaseModel):
    """Contents of report.json"""
    status: Literal["ok", "failed"]
    exit_code: int = Field(..., description="0 success, 3 solver or training failure")
    experiment: str
    config: ExperimentConfig
    error: Optional[str] = Field(None, description="Diagnostic of a failed run")
    condition_number: Optional[float] = None
    failed_epoch: Optional[int] = None

    mse: Optional[float] = Field(None, description="Mean squared error on the sample grid")
    l2_error: Optional[float] = None
    max_error: Optional[float] = None
    max_error_outside_layer: Optional[float] = Field(None, description="Max error restricted to x <= 1 - 2 eps")
    n_samples: Optional[int] = None
    u_min: Optional[float] = None
    u_max: Optional[float] = None
    excursion: Optional[float] = Field(None, description="Largest departure of the numeric solution from [0, 1]")
    oscillation: Optional[bool] = Field(None, description=f"excursion above {settings.OSCILLATION_TOLERANCE}")
    residual_norm: Optional[float] = Field(None, description="H1 norm of the residual representative (resmin)")

    n_unknowns: Optional[int] = None
    n_parameters: Optional[int] = None
    quad_order: Optional[int] = None
    epochs_run: Optional[int] = None
    final_loss: Optional[float] = None
    final_components: Dict[str, float] = Field(default_factory=dict)

    mesh_recurrence: Optional[str] = None
    point_interpretation: Optional[str] = None
    files: Dict[str, str] = Field(default_factory=dict)
    wall_time_seconds: float = Field(
        0.0, description="Solve/train time only; machine dependent, so written to timing.json instead of report.json"
    )


class SuiteRow(BaseModel):
    """One line of the suite summary"""
    name: str
    method: Method
    dimension: int
    n_points: int
    eps: float
    mse: Optional[float] = None
    status: str
    exit_code: int


SUITE_COLUMNS = ["name", "method", "dimension", "n_points", "eps", "mse", "status"]
