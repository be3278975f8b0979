"""Normalized gradient flow towards an isotropic Gaussian under the energy kernel.

The atoms follow ``dX/dt = -L(X) grad L(X) / (|grad L(X)|^2 + eps_tol)``, so
``d/dt log L = -1`` away from stationary points and the loss decays like
``exp(-t)``. Integration is explicit fourth-order Runge-Kutta.
"""

import logging
import math
import time
from typing import List, Optional, Tuple

import numpy as np

from ..distance import analytic_loss_energy_gaussian, analytic_loss_energy_gaussian_grad
from ..errors import DivergenceError, OptimizerInputError
from ..measures import DiscreteMeasure
from ..models.optimizer_spec import OptimizerConfig
from ..models.results import RunRecord, Snapshot, TrajectoryPoint

logger = logging.getLogger(__name__)

# |grad L|^2 <= STATIONARY_RATIO * L counts as a vanishing gradient
STATIONARY_RATIO = 1e-12


class _Stationary(Exception):
    pass


def _loss_and_grad(
    quantizer: DiscreteMeasure, points: np.ndarray, mean: np.ndarray, sigma: float
) -> Tuple[float, np.ndarray]:
    current = quantizer.with_points(points)
    return (
        analytic_loss_energy_gaussian(current, mean, sigma),
        analytic_loss_energy_gaussian_grad(current, mean, sigma),
    )


def flow_steps(config: OptimizerConfig) -> Tuple[int, float]:
    """Number of RK4 steps and the step length.

    The horizon is split evenly into ``ceil(T / dt)`` steps, capped so that
    the trajectory (initial state included) has at most ``max_iterations``
    entries.
    """
    wanted = max(1, math.ceil(config.flow_total_time / config.dt - 1e-9))
    steps = min(wanted, max(config.max_iterations - 1, 1))
    return steps, config.flow_total_time / wanted


def gradient_flow(
    quantizer0: DiscreteMeasure,
    mean: object,
    sigma: float,
    config: OptimizerConfig,
) -> RunRecord:
    """Integrate the normalized flow from ``quantizer0`` up to ``config.flow_total_time``.

    The flow halts with a message once the gradient vanishes relative to the
    loss, or when a step fails to lower the loss even after splitting it into
    two half steps. Both happen only near a stationary configuration, where
    the velocity ``L / |grad L|`` is unbounded.
    """
    if abs(quantizer0.weight_sum() - 1.0) > 1e-9 or np.any(quantizer0.weights < 0):
        raise OptimizerInputError("gradient flow needs fixed probability weights")
    m = np.ravel(np.asarray(mean, dtype=float))
    eps = config.eps_tol
    steps, dt = flow_steps(config)
    logger.info(
        f"gradient flow: Q={quantizer0.n_atoms}, N={quantizer0.dimension}, "
        f"T={config.flow_total_time}, steps={steps}, dt={dt:.3e}"
    )

    def velocity(points: np.ndarray) -> np.ndarray:
        loss, grad = _loss_and_grad(quantizer0, points, m, sigma)
        norm_sq = float(np.sum(grad * grad))
        if norm_sq <= STATIONARY_RATIO * loss or norm_sq == 0.0:
            if loss > 0.0:
                raise _Stationary
            return np.zeros_like(points)
        return -loss * grad / (norm_sq + eps)

    def advance(points: np.ndarray, h: float) -> Tuple[np.ndarray, float]:
        k1 = velocity(points)
        k2 = velocity(points + 0.5 * h * k1)
        k3 = velocity(points + 0.5 * h * k2)
        k4 = velocity(points + h * k3)
        stepped = points + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(stepped)):
            return stepped, math.nan
        return stepped, analytic_loss_energy_gaussian(quantizer0.with_points(stepped), m, sigma)

    def decreased(loss: float, previous: float) -> bool:
        return bool(np.isfinite(loss)) and loss < previous

    points = np.array(quantizer0.points, dtype=float)
    start = time.perf_counter()
    trajectory: List[TrajectoryPoint] = []
    snapshots: List[Snapshot] = []
    message: Optional[str] = None
    reached = steps * dt
    if reached < config.flow_total_time * (1.0 - 1e-12):
        message = (
            f"iteration cap {config.max_iterations} stops the flow at t={reached:.6f} "
            f"before T={config.flow_total_time}"
        )
        logger.warning(message)

    def note(iteration: int, loss: float) -> None:
        trajectory.append(
            TrajectoryPoint(
                iteration=iteration,
                loss=float(loss),
                wall_ms=(time.perf_counter() - start) * 1000.0,
            )
        )

    def record() -> RunRecord:
        return RunRecord(
            trajectory=list(trajectory),
            quantizer=quantizer0.with_points(points),
            config=config,
            snapshots=list(snapshots),
            message=message,
        )

    current = analytic_loss_energy_gaussian(quantizer0, m, sigma)
    note(0, current)
    for iteration in range(1, steps + 1):
        try:
            stepped, loss = advance(points, dt)
            if not decreased(loss, current):
                # retry once as two half steps over the same interval
                logger.debug(f"step {iteration} did not lower the loss; halving dt")
                half, half_loss = advance(points, 0.5 * dt)
                if decreased(half_loss, current):
                    stepped, loss = advance(half, 0.5 * dt)
                    settled = not decreased(loss, half_loss)
                else:
                    stepped, loss, settled = half, half_loss, True
                if settled and np.isfinite(loss):
                    raise _Stationary
        except _Stationary:
            message = f"stationary point reached at t={(iteration - 1) * dt:.6f}; flow halted"
            logger.warning(message)
            break
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite loss at iteration {iteration}", record=record())
        points, current = stepped, loss
        note(iteration, loss)
        if config.snapshot_every and iteration % config.snapshot_every == 0:
            snapshots.append(Snapshot(iteration=iteration, points=points.tolist()))

    logger.info(
        f"gradient flow finished: loss {trajectory[0].loss:.6e} -> {trajectory[-1].loss:.6e}"
    )
    return record()
