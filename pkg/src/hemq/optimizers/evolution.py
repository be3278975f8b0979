"""Derivative-free joint search over atom locations and nonnegative weights.

Candidates are flat vectors ``(x_1, ..., x_Q, w_1, ..., w_Q)``; raw weights
live in [0, 1] and are projected onto ``{w >= 0, sum w = mass}`` before every
evaluation. The whole population is scored in one vectorized call.

The initial population places atoms on draws from the target's atoms. The
best candidate is then polished by alternating L-BFGS-B over the locations
with the exact nonnegative weight solve.
"""

import logging
import time
from typing import List, Tuple, Union

import numpy as np
from scipy import optimize

from ..distance import (
    MASS_TOLERANCE,
    squared_distance_atomic,
    squared_distance_batch,
    squared_distance_grad,
)
from ..errors import OptimizerInputError
from ..measures import AtomicTarget, DiscreteMeasure, EmpiricalTarget, GaussianMixtureTarget
from ..models.kernel_spec import KernelSpec
from ..models.optimizer_spec import OptimizerConfig, WeightConstraint, WeightMode
from ..models.results import RunRecord, TrajectoryPoint
from .weights import solve_weights

logger = logging.getLogger(__name__)

Target = Union[EmpiricalTarget, GaussianMixtureTarget, AtomicTarget]

POLISH_ROUNDS = 10
POLISH_TOLERANCE = 1e-12


def project_weights(raw: np.ndarray, mass: float) -> np.ndarray:
    """Clamp negatives to zero and rescale each row to ``mass``.

    Rows that clamp to all zeros become uniform.
    """
    w = np.maximum(np.atleast_2d(np.asarray(raw, dtype=float)), 0.0)
    totals = w.sum(axis=1, keepdims=True)
    uniform = np.full_like(w, mass / w.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = mass * w / totals
    return np.where(totals > 0.0, scaled, uniform)


def _reference_measure(target: Target, config: OptimizerConfig) -> DiscreteMeasure:
    exact = target.exact_measure()
    if exact is not None:
        return exact
    logger.info(f"target has no atomic form; using {config.de_sample_size} surrogate draws")
    rng = np.random.default_rng(config.seed)
    return DiscreteMeasure.uniform(target.draw(config.de_sample_size, rng), probability=False)


def initial_population(
    reference: DiscreteMeasure, q: int, size: int, seed: int
) -> np.ndarray:
    """``size`` candidates whose atoms are drawn from the reference atoms.

    Atoms are picked with probability proportional to ``|b_j|``; raw weights
    are uniform on [0, 1].
    """
    rng = np.random.default_rng([seed, 1])
    magnitude = np.abs(reference.weights)
    idx = rng.choice(reference.n_atoms, size=(size, q), p=magnitude / magnitude.sum())
    points = reference.points[idx].reshape(size, q * reference.dimension)
    return np.hstack([points, rng.uniform(size=(size, q))])


def polish(
    kernel: KernelSpec,
    quantizer: DiscreteMeasure,
    reference: DiscreteMeasure,
    bounds: List[Tuple[float, float]],
) -> Tuple[DiscreteMeasure, float]:
    """Local descent from ``quantizer``; returns the polished measure and its loss."""
    q, n = quantizer.n_atoms, quantizer.dimension
    current = quantizer
    loss = squared_distance_atomic(kernel, current, reference).total

    for round_no in range(POLISH_ROUNDS):
        weights = current.weights

        def fun(flat: np.ndarray) -> Tuple[float, np.ndarray]:
            candidate = DiscreteMeasure(points=flat.reshape(q, n), weights=weights)
            value = squared_distance_atomic(kernel, candidate, reference).total
            return value, np.ravel(squared_distance_grad(kernel, candidate, reference))

        result = optimize.minimize(
            fun, np.ravel(current.points), jac=True, method="L-BFGS-B", bounds=bounds
        )
        points = np.asarray(result.x).reshape(q, n)
        solution = solve_weights(kernel, points, reference, WeightConstraint.NONNEGATIVE)
        candidate = DiscreteMeasure(points=points, weights=solution.weights)
        value = squared_distance_atomic(kernel, candidate, reference).total
        logger.debug(f"polish round {round_no}: loss={value:.6e}")
        if not value < loss:
            break
        improvement = loss - value
        current, loss = candidate, value
        if improvement <= POLISH_TOLERANCE * max(abs(loss), 1.0):
            break
    return current, loss


def differential_evolution(
    kernel: KernelSpec,
    target: Target,
    q: int,
    config: OptimizerConfig,
    mass: float = 1.0,
) -> RunRecord:
    """DE/rand/1/bin over points and weights; returns the best candidate."""
    if config.weight_mode != WeightMode.OPTIMIZE_NONNEGATIVE:
        raise OptimizerInputError(
            "differential evolution optimizes weights; set weight_mode=optimize-nonnegative"
        )
    if q < 1:
        raise OptimizerInputError(f"Q must be >= 1, got {q}")
    if mass <= 0.0:
        raise OptimizerInputError(f"mass must be positive, got {mass}")
    reference = _reference_measure(target, config)
    if abs(reference.weight_sum() - mass) > MASS_TOLERANCE:
        raise OptimizerInputError(
            f"mass {mass} differs from the target mass {reference.weight_sum()}"
        )

    n = reference.dimension
    lower, upper = target.bounds()
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    # degenerate coordinates still need a nonempty interval
    upper = np.where(upper > lower, upper, lower + 1e-12)
    point_bounds = [(lo, hi) for _ in range(q) for lo, hi in zip(lower, upper)]
    bounds = point_bounds + [(0.0, 1.0)] * q

    def unpack(x: np.ndarray):
        # x is D x S as passed by the vectorized solver
        cand = np.atleast_2d(np.asarray(x, dtype=float).T)
        pts = cand[:, : q * n].reshape(-1, q, n)
        return pts, project_weights(cand[:, q * n :], mass)

    def objective(x: np.ndarray) -> np.ndarray:
        pts, w = unpack(x)
        return squared_distance_batch(kernel, pts, w, reference)

    trajectory: List[TrajectoryPoint] = []
    start = time.perf_counter()

    def note(loss: float) -> None:
        trajectory.append(
            TrajectoryPoint(
                iteration=len(trajectory) + 1,
                loss=loss,
                wall_ms=(time.perf_counter() - start) * 1000.0,
            )
        )

    def callback(xk: np.ndarray, convergence: float = 0.0) -> None:
        note(float(objective(xk.reshape(-1, 1))[0]))
        if len(trajectory) % 50 == 0:
            logger.debug(f"DE generation {len(trajectory)}: best loss={trajectory[-1].loss:.6e}")

    population = max(5, config.de_popsize * len(bounds))
    logger.info(
        f"differential evolution: Q={q}, N={n}, dims={len(bounds)}, "
        f"population={population}, seed={config.seed}"
    )
    result = optimize.differential_evolution(
        objective,
        bounds,
        strategy="rand1bin",
        maxiter=config.max_iterations,
        init=initial_population(reference, q, population, config.seed),
        mutation=config.de_mutation,
        recombination=config.de_recombination,
        tol=config.de_tol,
        seed=config.seed,
        callback=callback,
        polish=False,
        updating="deferred",
        vectorized=True,
    )
    pts, w = unpack(np.asarray(result.x).reshape(-1, 1))
    if not trajectory:
        callback(result.x)
    status = "converged" if result.success else "stopped at the iteration cap"
    logger.info(
        f"differential evolution {status} after {result.nit} generations: "
        f"loss={result.fun:.6e}"
    )
    best = DiscreteMeasure(points=pts[0], weights=w[0])
    message = str(result.message)
    if config.de_polish:
        polished, loss = polish(kernel, best, reference, point_bounds)
        logger.info(f"polished loss {trajectory[-1].loss:.6e} -> {loss:.6e}")
        if loss < trajectory[-1].loss:
            best = polished
            note(loss)
            message = f"{message}; polished"
    return RunRecord(
        trajectory=trajectory,
        quantizer=best,
        config=config,
        kernel=kernel,
        message=message,
    )
