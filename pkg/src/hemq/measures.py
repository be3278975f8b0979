"""Discrete quantizer measures and sampleable target measures."""

import logging
from typing import Annotated, Callable, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import optimize, stats

from .errors import MeasureError, SignedMeasureSamplingError

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-12


def _as_points(value: object) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"points must be a Q x N matrix, got shape {arr.shape}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


class DiscreteMeasure(BaseModel):
    """Weighted sum of Q Dirac masses in R^N.

    Weights are never renormalized; ``weight_sum()`` reports the total mass.
    In probability mode the weights must be nonnegative and sum to one.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    points: np.ndarray = Field(..., description="Q x N atom locations")
    weights: np.ndarray = Field(..., description="Q atom weights")
    probability: bool = Field(False, description="Enforce probability weights")

    @field_validator("points", mode="before")
    @classmethod
    def coerce_points(cls, value: object) -> np.ndarray:
        return _frozen(_as_points(value))

    @field_validator("weights", mode="before")
    @classmethod
    def coerce_weights(cls, value: object) -> np.ndarray:
        return _frozen(np.ravel(np.array(value, dtype=float)))

    @model_validator(mode="after")
    def check_atoms(self) -> "DiscreteMeasure":
        q = self.points.shape[0]
        if q < 1 or self.points.shape[1] < 1:
            raise ValueError("a discrete measure needs at least one atom in dimension >= 1")
        if self.weights.shape[0] != q:
            raise ValueError(f"got {self.weights.shape[0]} weights for {q} atoms")
        if not (np.all(np.isfinite(self.points)) and np.all(np.isfinite(self.weights))):
            raise ValueError("atom locations and weights must be finite")
        if self.probability:
            if np.any(self.weights < 0):
                raise ValueError("probability weights must be nonnegative")
            if abs(self.weight_sum() - 1.0) > PROBABILITY_TOLERANCE:
                raise ValueError(f"probability weights sum to {self.weight_sum()!r}, not 1")
        return self

    @classmethod
    def uniform(cls, points: object, probability: bool = True) -> "DiscreteMeasure":
        """Equal weights 1/Q on the given atoms."""
        pts = _as_points(points)
        q = pts.shape[0]
        return cls(points=pts, weights=np.full(q, 1.0 / q), probability=probability)

    @property
    def n_atoms(self) -> int:
        return int(self.points.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.points.shape[1])

    def weight_sum(self) -> float:
        return float(np.sum(self.weights))

    def with_points(self, points: object) -> "DiscreteMeasure":
        return DiscreteMeasure(points=points, weights=self.weights, probability=self.probability)

    def with_weights(self, weights: object) -> "DiscreteMeasure":
        return DiscreteMeasure(points=self.points, weights=weights, probability=self.probability)

    def mix(self, other: "DiscreteMeasure", lam: float) -> "DiscreteMeasure":
        """The measure ``lam * self + (1 - lam) * other``."""
        return DiscreteMeasure(
            points=np.vstack([self.points, other.points]),
            weights=np.concatenate([lam * self.weights, (1.0 - lam) * other.weights]),
        )

    def to_json_dict(self) -> dict:
        return {"points": self.points.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_json_dict(cls, data: dict, probability: bool = False) -> "DiscreteMeasure":
        return cls(points=data["points"], weights=data["weights"], probability=probability)


class EmpiricalTarget(BaseModel):
    """A dataset of M rows, sampled uniformly with replacement."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["empirical"] = "empirical"
    data: np.ndarray = Field(..., description="M x N data matrix")
    labels: Optional[np.ndarray] = Field(None, description="Optional integer labels")

    @field_validator("data", mode="before")
    @classmethod
    def coerce_data(cls, value: object) -> np.ndarray:
        return _frozen(_as_points(value))

    @field_validator("labels", mode="before")
    @classmethod
    def coerce_labels(cls, value: object) -> Optional[np.ndarray]:
        if value is None:
            return None
        labels = np.ravel(np.array(value, dtype=int)).copy()
        labels.setflags(write=False)
        return labels

    @model_validator(mode="after")
    def check_rows(self) -> "EmpiricalTarget":
        if self.data.shape[0] < 1:
            raise ValueError("empirical target needs at least one row")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("empirical data must be finite")
        if self.labels is not None and self.labels.shape[0] != self.data.shape[0]:
            raise ValueError(
                f"{self.labels.shape[0]} labels for {self.data.shape[0]} data rows"
            )
        return self

    @property
    def dimension(self) -> int:
        return int(self.data.shape[1])

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, self.data.shape[0], size=n)
        return self.data[idx]

    def exact_measure(self) -> Optional[DiscreteMeasure]:
        return DiscreteMeasure.uniform(self.data)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.data.min(axis=0), self.data.max(axis=0)

    def inverse_cdf(self) -> Callable[[np.ndarray], np.ndarray]:
        column = np.sort(self.data[:, 0])
        return lambda levels: np.quantile(column, levels, method="inverted_cdf")


class GaussianComponent(BaseModel):
    """Isotropic Gaussian N(mean, sigma^2 Id) with a mixture weight."""

    model_config = ConfigDict(frozen=True)

    mean: List[float] = Field(..., min_length=1, description="Component mean")
    sigma: float = Field(..., gt=0, description="Isotropic standard deviation")
    weight: float = Field(1.0, ge=0, description="Mixture weight")


class GaussianMixtureTarget(BaseModel):
    """Mixture of isotropic Gaussians."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["gaussian-mixture"] = "gaussian-mixture"
    components: List[GaussianComponent] = Field(..., min_length=1)

    @model_validator(mode="after")
    def check_components(self) -> "GaussianMixtureTarget":
        dims = {len(c.mean) for c in self.components}
        if len(dims) != 1:
            raise ValueError(f"mixture components disagree on dimension: {sorted(dims)}")
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"mixture weights sum to {total!r}, not 1")
        return self

    @classmethod
    def normal(cls, mean: object, sigma: float = 1.0) -> "GaussianMixtureTarget":
        mean_list = [float(m) for m in np.ravel(np.array(mean, dtype=float))]
        return cls(components=[GaussianComponent(mean=mean_list, sigma=sigma, weight=1.0)])

    @property
    def dimension(self) -> int:
        return len(self.components[0].mean)

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components], dtype=float)

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([c.sigma for c in self.components], dtype=float)

    @property
    def mixture_weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components], dtype=float)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(len(self.components), size=n, p=self.mixture_weights)
        noise = rng.standard_normal((n, self.dimension))
        return self.means[comp] + self.sigmas[comp, None] * noise

    def exact_measure(self) -> Optional[DiscreteMeasure]:
        return None

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        spread = 3.0 * self.sigmas[:, None]
        return (self.means - spread).min(axis=0), (self.means + spread).max(axis=0)

    def inverse_cdf(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.dimension != 1:
            raise MeasureError("an inverse CDF exists only for 1D targets")
        means = self.means[:, 0]
        sigmas = self.sigmas
        weights = self.mixture_weights
        if len(self.components) == 1:
            return lambda levels: stats.norm.ppf(levels, loc=means[0], scale=sigmas[0])

        def cdf(x: float) -> float:
            return float(np.sum(weights * stats.norm.cdf(x, loc=means, scale=sigmas)))

        lo = float(np.min(means - 40 * sigmas))
        hi = float(np.max(means + 40 * sigmas))

        def ppf(levels: np.ndarray) -> np.ndarray:
            levels = np.atleast_1d(np.asarray(levels, dtype=float))
            return np.array([optimize.brentq(lambda x: cdf(x) - p, lo, hi) for p in levels])

        return ppf


class AtomicTarget(BaseModel):
    """Finite atomic (possibly signed) target measure."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["atomic"] = "atomic"
    measure: DiscreteMeasure

    @property
    def dimension(self) -> int:
        return self.measure.dimension

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        weights = self.measure.weights
        if np.any(weights < 0):
            raise SignedMeasureSamplingError("cannot sample a measure with negative weights")
        idx = rng.choice(self.measure.n_atoms, size=n, p=weights / weights.sum())
        return self.measure.points[idx]

    def exact_measure(self) -> Optional[DiscreteMeasure]:
        return self.measure

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.measure.points.min(axis=0), self.measure.points.max(axis=0)

    def inverse_cdf(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.dimension != 1:
            raise MeasureError("an inverse CDF exists only for 1D targets")
        order = np.argsort(self.measure.points[:, 0])
        xs = self.measure.points[order, 0]
        cumulative = np.cumsum(self.measure.weights[order]) / self.measure.weight_sum()

        def ppf(levels: np.ndarray) -> np.ndarray:
            idx = np.searchsorted(cumulative, np.asarray(levels, dtype=float), side="left")
            return xs[np.minimum(idx, len(xs) - 1)]

        return ppf


TargetMeasure = Annotated[
    Union[EmpiricalTarget, GaussianMixtureTarget, AtomicTarget],
    Field(discriminator="kind"),
]


def sample(
    target: Union[EmpiricalTarget, GaussianMixtureTarget, AtomicTarget], n: int, seed: int
) -> np.ndarray:
    """Draw ``n`` i.i.d. points from ``target``; bitwise reproducible per seed."""
    if n < 1:
        raise MeasureError(f"sample size must be >= 1, got {n}")
    return target.draw(n, np.random.default_rng(seed))


def brownian_path(point: object) -> np.ndarray:
    """Brownian path on the grid j/N whose increments are the coordinates.

    ``path_0 = 0`` and ``path_j = (x_1 + ... + x_j) / sqrt(N)``.
    """
    x = np.ravel(np.asarray(point, dtype=float))
    return np.concatenate([[0.0], np.cumsum(x) / np.sqrt(x.shape[0])])


def brownian_paths(points: object) -> np.ndarray:
    """Row-wise ``brownian_path`` of an M x N matrix."""
    x = _as_points(points)
    zeros = np.zeros((x.shape[0], 1))
    return np.hstack([zeros, np.cumsum(x, axis=1) / np.sqrt(x.shape[1])])
