"""Models for hemq."""

from .kernel_spec import KernelFamily, KernelSpec
from .optimizer_spec import OptimizerConfig, OptimizerMethod, WeightConstraint, WeightMode
from .results import (
    AssignmentResult,
    DistanceEstimate,
    EstimatorKind,
    LossBreakdown,
    RunRecord,
    Snapshot,
    TrajectoryPoint,
    WeightSolution,
)
from .run_spec import OutputSpec, Recipe, RunCommand, RunConfig, TargetKind, TargetSpec

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "OptimizerConfig",
    "OptimizerMethod",
    "WeightConstraint",
    "WeightMode",
    "AssignmentResult",
    "DistanceEstimate",
    "EstimatorKind",
    "LossBreakdown",
    "RunRecord",
    "Snapshot",
    "TrajectoryPoint",
    "WeightSolution",
    "OutputSpec",
    "Recipe",
    "RunCommand",
    "RunConfig",
    "TargetKind",
    "TargetSpec",
]
