"""
Pydantic schemas for frequency extraction.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.modules.lattice.schemas.lattice import TimeGrid


class TraceSignal(BaseModel):
    """
    Trace of the data matrix over a uniform grid.

    Attributes:
        samples: Complex samples F[l]
        grid: Sampling grid (length must match)
        exact: Whether the samples are noise-free
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    samples: np.ndarray
    grid: TimeGrid
    exact: bool = False

    @field_validator("samples", mode="before")
    @classmethod
    def validate_samples(cls, v):
        arr = np.array(v, dtype=complex).ravel()
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_length(self):
        if self.samples.size != self.grid.num_samples:
            raise ValueError(
                f"{self.samples.size} samples but grid has {self.grid.num_samples}"
            )
        return self


class EspritConfig(BaseModel):
    """
    ESPRIT parameters.

    Attributes:
        model_order: Number of frequencies N to extract
        hankel_rows: Hankel matrix rows p (defaults to ⌊L/2⌋)
        exact_threshold: Minimal σ_N/σ_1 on exact data
        sampled_threshold: Minimal σ_N/σ_1 on sampled data
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    model_order: int = Field(ge=1)
    hankel_rows: Optional[int] = Field(default=None, ge=1)
    exact_threshold: float = 1e-8
    sampled_threshold: float = 1e-2


class FrequencyMatch(BaseModel):
    """
    Pairing of estimated and target frequencies.

    Attributes:
        permutation: permutation[i] is the target index paired with estimate i
        deviations: |estimate - target| per pair (MHz)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    permutation: tuple[int, ...]
    deviations: np.ndarray
