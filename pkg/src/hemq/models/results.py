"""Result models returned by distances, estimators, optimizers and metrics."""

from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..measures import DiscreteMeasure
from .kernel_spec import KernelSpec
from .optimizer_spec import OptimizerConfig, WeightConstraint


class LossBreakdown(BaseModel):
    """Squared distance split into its kernel-integral terms.

    ``total = cross_term - self_term_quantizer - self_term_target``.
    """

    model_config = ConfigDict(frozen=True)

    cross_term: float = Field(..., description="sum_ij a_i b_j h(x_i, y_j)")
    self_term_quantizer: float = Field(..., description="1/2 sum a_i a_i' h(x_i, x_i')")
    self_term_target: float = Field(..., description="1/2 sum b_j b_j' h(y_j, y_j')")
    total: float = Field(..., description="Squared distance")

    @classmethod
    def from_terms(cls, cross: float, self_q: float, self_t: float) -> "LossBreakdown":
        return cls(
            cross_term=float(cross),
            self_term_quantizer=float(self_q),
            self_term_target=float(self_t),
            total=float(cross - self_q - self_t),
        )


class EstimatorKind(str, Enum):
    """Squared-distance estimators."""

    BLUE_TWO_SAMPLE = "blue-two-sample"
    BLUE_ONE_SAMPLE = "blue-one-sample"
    V_STATISTIC = "v-statistic"


class DistanceEstimate(BaseModel):
    """Value of a squared-distance estimator with its sampling metadata."""

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., description="Estimated squared distance (may be negative)")
    kind: EstimatorKind = Field(..., description="Estimator used")
    q_samples: int = Field(..., ge=1, description="Samples (or atoms) of the first measure")
    j_samples: int = Field(..., ge=1, description="Samples of the second measure")
    seed: Optional[int] = Field(None, description="Seed the samples were drawn with")

    def to_json_dict(self) -> dict:
        return {
            "value": self.value,
            "kind": self.kind.value,
            "q": self.q_samples,
            "j": self.j_samples,
            "seed": self.seed,
        }


class TrajectoryPoint(BaseModel):
    """One optimizer iteration."""

    model_config = ConfigDict(frozen=True)

    iteration: int
    loss: float
    wall_ms: float


class Snapshot(BaseModel):
    """Atom positions recorded at one iteration."""

    model_config = ConfigDict(frozen=True)

    iteration: int
    points: List[List[float]]


class RunRecord(BaseModel):
    """Optimizer trajectory and final quantizer."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    trajectory: List[TrajectoryPoint] = Field(default_factory=list)
    quantizer: DiscreteMeasure
    config: OptimizerConfig
    kernel: Optional[KernelSpec] = None
    snapshots: List[Snapshot] = Field(default_factory=list)
    message: Optional[str] = Field(None, description="Solver remark (e.g. stationary halt)")

    @property
    def losses(self) -> np.ndarray:
        return np.array([p.loss for p in self.trajectory], dtype=float)

    @property
    def initial_loss(self) -> float:
        return self.trajectory[0].loss

    @property
    def final_loss(self) -> float:
        return self.trajectory[-1].loss


class WeightSolution(BaseModel):
    """Optimal weights for fixed atom locations."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weights: np.ndarray
    loss: float = Field(..., description="Squared distance at the optimum")
    constraint: WeightConstraint
    degenerate: bool = Field(False, description="Singular system, least-norm solution")
    converged: bool = Field(
        True, description="KKT residual reached the solver tolerance (constrained solves)"
    )

    @field_validator("weights", mode="before")
    @classmethod
    def coerce_weights(cls, value: object) -> np.ndarray:
        return np.ravel(np.array(value, dtype=float))


class AssignmentResult(BaseModel):
    """Nearest-atom partition of a dataset compared with reference labels."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    assignment: np.ndarray = Field(..., description="Nearest atom index per row")
    confusion: np.ndarray = Field(..., description="Reference class x assigned atom counts")
    ari: float = Field(..., ge=-1.0, le=1.0, description="Adjusted Rand index")

    def to_json_dict(self) -> dict:
        return {
            "assignment": self.assignment.tolist(),
            "confusion": self.confusion.tolist(),
            "ari": self.ari,
        }
