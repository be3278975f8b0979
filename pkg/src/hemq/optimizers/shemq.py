"""Stochastic Huber-energy measure quantization.

Atoms start at i.i.d. target draws. Every iteration draws a fresh batch,
evaluates the distance between the quantizer and the batch's empirical
measure and moves the atoms with Adam.
"""

import logging
import time
from typing import List, Optional, Union

import numpy as np

from ..distance import batch_loss, batch_loss_grad
from ..errors import DivergenceError, OptimizerInputError
from ..measures import AtomicTarget, DiscreteMeasure, EmpiricalTarget, GaussianMixtureTarget
from ..models.kernel_spec import KernelSpec
from ..models.optimizer_spec import OptimizerConfig, WeightMode
from ..models.results import RunRecord, Snapshot, TrajectoryPoint
from .adam import Adam

logger = logging.getLogger(__name__)

Target = Union[EmpiricalTarget, GaussianMixtureTarget, AtomicTarget]


def _initial_weights(q: int, config: OptimizerConfig, weights: Optional[object]) -> np.ndarray:
    if config.weight_mode == WeightMode.FIXED_UNIFORM:
        return np.full(q, 1.0 / q)
    if config.weight_mode == WeightMode.FIXED_GIVEN:
        if weights is None:
            raise OptimizerInputError("weight_mode fixed-given requires weights")
        w = np.ravel(np.asarray(weights, dtype=float))
        if w.shape[0] != q:
            raise OptimizerInputError(f"got {w.shape[0]} weights for Q={q}")
        return w
    raise OptimizerInputError(
        "shemq keeps weights fixed; use differential-evolution to optimize them"
    )


def shemq(
    kernel: KernelSpec,
    target: Target,
    q: int,
    config: OptimizerConfig,
    weights: Optional[object] = None,
) -> RunRecord:
    """Quantize ``target`` with ``q`` atoms by stochastic gradient descent.

    The reported loss is the plug-in batch distance, or its unbiased version
    when ``config.bias_correction`` is set. The correction does not depend on
    the atoms, so the trajectory of points is the same either way.
    """
    if q < 1:
        raise OptimizerInputError(f"Q must be >= 1, got {q}")
    alpha = _initial_weights(q, config, weights)
    rng = np.random.default_rng(config.seed)
    points = np.array(target.draw(q, rng), dtype=float)
    adam = Adam(
        lr=config.learning_rate,
        beta1=config.adam_beta1,
        beta2=config.adam_beta2,
        epsilon=config.adam_epsilon,
    )
    logger.info(
        f"shemq: Q={q}, N={points.shape[1]}, B={config.batch_size}, "
        f"iterations={config.max_iterations}, seed={config.seed}"
    )

    trajectory: List[TrajectoryPoint] = []
    snapshots: List[Snapshot] = []
    tail: List[np.ndarray] = []
    start = time.perf_counter()

    def record(final_points: np.ndarray, message: Optional[str] = None) -> RunRecord:
        return RunRecord(
            trajectory=list(trajectory),
            quantizer=DiscreteMeasure(points=final_points, weights=alpha),
            config=config,
            kernel=kernel,
            snapshots=list(snapshots),
            message=message,
        )

    for iteration in range(1, config.max_iterations + 1):
        batch = target.draw(config.batch_size, rng)
        quantizer = DiscreteMeasure(points=points, weights=alpha)
        terms = batch_loss(kernel, quantizer, batch)
        loss = terms.total
        if config.bias_correction:
            loss -= terms.self_term_target / (config.batch_size - 1)
        if not np.isfinite(loss):
            raise DivergenceError(
                f"non-finite loss at iteration {iteration}",
                record=record(points, f"diverged at iteration {iteration}"),
            )

        grad = batch_loss_grad(kernel, quantizer, batch)
        stepped = adam.step(points, grad)
        if not np.all(np.isfinite(stepped)):
            raise DivergenceError(
                f"non-finite atom positions at iteration {iteration}",
                record=record(points, f"diverged at iteration {iteration}"),
            )

        trajectory.append(
            TrajectoryPoint(
                iteration=iteration,
                loss=float(loss),
                wall_ms=(time.perf_counter() - start) * 1000.0,
            )
        )
        points = stepped

        if config.snapshot_every and iteration % config.snapshot_every == 0:
            snapshots.append(Snapshot(iteration=iteration, points=points.tolist()))
        if config.average_last and iteration > config.max_iterations - config.average_last:
            tail.append(points)
        if iteration % 100 == 0:
            logger.debug(f"shemq iteration {iteration}: loss={loss:.6e}")

    final_points = np.mean(tail, axis=0) if tail else points
    logger.info(f"shemq finished: final batch loss {trajectory[-1].loss:.6e}")
    return record(final_points)
