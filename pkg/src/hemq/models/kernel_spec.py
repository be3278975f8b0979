"""Kernel specification models."""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class KernelFamily(str, Enum):
    """Available negative definite kernel families."""

    HUBER_ENERGY = "huber-energy"
    GAUSSIAN = "gaussian"
    PENALIZED_MEAN = "penalized-mean"


class KernelSpec(BaseModel):
    """Negative definite squared-distance function h(x, y).

    ``huber-energy``: ``(a^2 + |x-y|^2)^(r/2) - a^r``; the energy kernel is
    ``r=1, a=0``.
    ``gaussian``: ``1 - exp(-|x-y|^2 / (2 sigma^2))``.
    ``penalized-mean``: ``h_base + lambda * |x-y|^2``.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    family: KernelFamily = Field(KernelFamily.HUBER_ENERGY, description="Kernel family")
    r: float = Field(1.0, description="Huber-energy exponent, 0 < r < 2")
    a: float = Field(1e-6, description="Huber-energy smoothing, a >= 0")
    sigma: float = Field(1.0, description="Gaussian bandwidth, sigma > 0")
    lam: float = Field(0.0, alias="lambda", description="Mean penalty, lambda >= 0")
    base: Optional["KernelSpec"] = Field(
        None, description="Base kernel of a penalized-mean kernel"
    )

    @model_validator(mode="before")
    @classmethod
    def build_penalized_base(cls, values: Any) -> Any:
        """Derive the base of a penalized-mean kernel from its r and a fields."""
        if isinstance(values, dict):
            family = values.get("family")
            if family in (KernelFamily.PENALIZED_MEAN, "penalized-mean") and not values.get(
                "base"
            ):
                values = dict(values)
                values["base"] = {
                    "family": "huber-energy",
                    "r": values.get("r", 1.0),
                    "a": values.get("a", 1e-6),
                }
        return values

    @model_validator(mode="after")
    def check_family_parameters(self) -> "KernelSpec":
        """Enforce per-family parameter ranges."""
        if self.family == KernelFamily.HUBER_ENERGY:
            if not 0.0 < self.r < 2.0:
                raise ValueError(f"huber-energy kernel requires 0 < r < 2, got r={self.r}")
            if self.a < 0.0:
                raise ValueError(f"huber-energy kernel requires a >= 0, got a={self.a}")
        elif self.family == KernelFamily.GAUSSIAN:
            if self.sigma <= 0.0:
                raise ValueError(f"gaussian kernel requires sigma > 0, got sigma={self.sigma}")
        else:
            if self.lam < 0.0:
                raise ValueError(f"penalized-mean kernel requires lambda >= 0, got {self.lam}")
            if self.base is None or self.base.family == KernelFamily.PENALIZED_MEAN:
                raise ValueError("penalized-mean kernel needs a non-penalized base kernel")
        return self

    @classmethod
    def energy(cls) -> "KernelSpec":
        return cls(family=KernelFamily.HUBER_ENERGY, r=1.0, a=0.0)

    @classmethod
    def huber_energy(cls, r: float = 1.0, a: float = 1e-6) -> "KernelSpec":
        return cls(family=KernelFamily.HUBER_ENERGY, r=r, a=a)

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "KernelSpec":
        return cls(family=KernelFamily.GAUSSIAN, sigma=sigma)

    @classmethod
    def penalized_mean(cls, base: "KernelSpec", lam: float) -> "KernelSpec":
        return cls(family=KernelFamily.PENALIZED_MEAN, base=base, lam=lam)

    @property
    def is_energy(self) -> bool:
        """True for the plain energy kernel |x - y|."""
        return self.family == KernelFamily.HUBER_ENERGY and self.r == 1.0 and self.a == 0.0

    def to_config(self) -> dict:
        """Flat representation used in config files and ``config.json``."""
        r, a = self.r, self.a
        if self.family == KernelFamily.PENALIZED_MEAN and self.base is not None:
            r, a = self.base.r, self.base.a
        return {
            "kernel": self.family.value,
            "r": r,
            "a": a,
            "sigma": self.sigma,
            "lambda": self.lam,
        }


KernelSpec.model_rebuild()
