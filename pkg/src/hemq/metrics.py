"""Evaluation utilities: nearest-atom partitions, k-means baseline, ARI and DVE."""

import logging
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus
from sklearn.metrics import adjusted_rand_score

from .errors import MetricsInputError
from .models.results import AssignmentResult

logger = logging.getLogger(__name__)

KMEANS_TOLERANCE = 1e-9
KMEANS_MAX_ITERATIONS = 300
KMEANS_RESTARTS = 10


def _matrix(values: object) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


def assign_nearest(points: object, data: object) -> np.ndarray:
    """Index of the Euclidean-nearest point for every data row (ties: lowest index)."""
    P, D = _matrix(points), _matrix(data)
    if P.shape[0] < 1:
        raise MetricsInputError("need at least one point")
    return np.argmin(cdist(D, P, "sqeuclidean"), axis=1)


def project_to_dataset(points: object, data: object) -> np.ndarray:
    """Index of the data row nearest to each point."""
    return assign_nearest(data, points)


class LloydResult(NamedTuple):
    centroids: np.ndarray
    labels: np.ndarray
    inertia_history: List[float]


def lloyd(
    data: object,
    initial_centroids: object,
    max_iterations: int = KMEANS_MAX_ITERATIONS,
    tol: float = KMEANS_TOLERANCE,
) -> LloydResult:
    """Lloyd iterations from the given centroids.

    ``inertia_history[t]`` is the within-cluster sum of squares after the
    t-th assignment step; it never increases.
    """
    X = _matrix(data)
    centroids = np.array(_matrix(initial_centroids), dtype=float)
    k = centroids.shape[0]
    history: List[float] = []
    labels = np.zeros(X.shape[0], dtype=int)

    for iteration in range(max_iterations):
        sq = cdist(X, centroids, "sqeuclidean")
        labels = np.argmin(sq, axis=1)
        nearest = sq[np.arange(X.shape[0]), labels]
        inertia = float(nearest.sum())
        if history and inertia > history[-1] * (1.0 + 1e-12) + 1e-12:
            raise RuntimeError(
                f"k-means inertia increased at iteration {iteration}: "
                f"{history[-1]:.12e} -> {inertia:.12e}"
            )
        history.append(inertia)

        counts = np.bincount(labels, minlength=k)
        while np.any(counts == 0):
            empty = int(np.nonzero(counts == 0)[0][0])
            # never take the last member of a cluster
            movable = np.where(counts[labels] > 1, nearest, -1.0)
            far = int(np.argmax(movable))
            logger.debug(f"k-means: reseeding empty cluster {empty} at row {far}")
            labels[far] = empty
            nearest[far] = 0.0
            counts = np.bincount(labels, minlength=k)

        updated = np.zeros_like(centroids)
        np.add.at(updated, labels, X)
        updated /= counts[:, None]
        movement = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        if movement < tol:
            break

    return LloydResult(centroids=centroids, labels=labels, inertia_history=history)


def kmeans(data: object, k: int, seed: int, restarts: int = KMEANS_RESTARTS) -> np.ndarray:
    """Best of ``restarts`` k-means++-initialized Lloyd runs (seeds ``seed + i``)."""
    X = _matrix(data)
    if not 1 <= k <= X.shape[0]:
        raise MetricsInputError(f"K must be in [1, {X.shape[0]}], got {k}")
    best: Optional[Tuple[float, np.ndarray]] = None
    for restart in range(restarts):
        init, _ = kmeans_plusplus(X, k, random_state=seed + restart)
        result = lloyd(X, init)
        final = float(
            np.sum(np.min(cdist(X, result.centroids, "sqeuclidean"), axis=1))
        )
        logger.debug(f"k-means restart {restart}: inertia={final:.6f}")
        if best is None or final < best[0]:
            best = (final, result.centroids)
    assert best is not None
    return best[1]


def dve(selected_labels: object) -> int:
    """Distinct value estimation: number of different labels."""
    return int(np.unique(np.ravel(np.asarray(selected_labels))).shape[0])


def adjusted_rand(labels_a: object, labels_b: object) -> float:
    a, b = np.ravel(np.asarray(labels_a)), np.ravel(np.asarray(labels_b))
    if a.shape[0] != b.shape[0]:
        raise MetricsInputError(f"label vectors differ in length: {a.shape[0]} vs {b.shape[0]}")
    return float(adjusted_rand_score(a, b))


def confusion_matrix(
    reference: object, assignment: object, n_atoms: Optional[int] = None
) -> np.ndarray:
    """Counts of (reference class, assigned atom) pairs.

    Rows follow the sorted distinct reference labels, columns the atom index.
    """
    ref = np.ravel(np.asarray(reference))
    assigned = np.ravel(np.asarray(assignment, dtype=int))
    if ref.shape[0] != assigned.shape[0]:
        raise MetricsInputError(
            f"label vectors differ in length: {ref.shape[0]} vs {assigned.shape[0]}"
        )
    classes, rows = np.unique(ref, return_inverse=True)
    cols = n_atoms if n_atoms is not None else int(assigned.max()) + 1
    table = np.zeros((classes.shape[0], cols), dtype=int)
    np.add.at(table, (rows, assigned), 1)
    return table


def align_labels(confusion: object) -> Tuple[np.ndarray, np.ndarray]:
    """Match atoms to classes maximizing agreement.

    Returns ``(order, aligned)`` where column ``i`` of ``aligned`` is column
    ``order[i]`` of the confusion matrix, matched to class ``i``. Unmatched
    columns are appended at the end.
    """
    table = np.asarray(confusion)
    rows, cols = linear_sum_assignment(-table)
    order = list(cols[np.argsort(rows)])
    order += [c for c in range(table.shape[1]) if c not in set(order)]
    order_arr = np.array(order, dtype=int)
    return order_arr, table[:, order_arr]


def evaluate_assignment(points: object, data: object, labels: object) -> AssignmentResult:
    """Nearest-point partition of ``data`` scored against reference labels."""
    P = _matrix(points)
    assignment = assign_nearest(P, data)
    confusion = confusion_matrix(labels, assignment, n_atoms=P.shape[0])
    return AssignmentResult(
        assignment=assignment,
        confusion=confusion,
        ari=adjusted_rand(labels, assignment),
    )
