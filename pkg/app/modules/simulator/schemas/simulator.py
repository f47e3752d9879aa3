"""
Pydantic schemas for the simulator.
Defines the ramp model and the measurement-noise configuration.
"""

from typing import Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.modules.core.config import settings


class RampModelConfig(BaseModel):
    """
    Idealised ramp between the idle frame and the target Hamiltonian.

    Attributes:
        idle_matrix: Real diagonal N×N idle-frame frequencies h_m (MHz)
        speed: Ramp speed v (MHz/ns)
        wait_time: Extra time spent at the end value (ns)
        integration_step: Product-integration step (ns)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    idle_matrix: np.ndarray
    speed: float = Field(default_factory=lambda: settings.ramp_speed_mhz_per_ns, gt=0)
    wait_time: float = Field(default_factory=lambda: settings.ramp_wait_ns, ge=0)
    integration_step: float = Field(
        default_factory=lambda: settings.ramp_integration_step_ns, gt=0, le=0.05
    )

    @field_validator("idle_matrix", mode="before")
    @classmethod
    def validate_idle_matrix(cls, v):
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 1:
            arr = np.diag(arr)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"Idle matrix must be square, got shape {arr.shape}")
        if np.any(arr[~np.eye(arr.shape[0], dtype=bool)] != 0):
            raise ValueError("Idle matrix must be diagonal")
        arr = arr.copy()
        arr.setflags(write=False)
        return arr


class NoiseConfig(BaseModel):
    """
    Finite-statistics measurement model.

    Attributes:
        shots: Single shots per quadrature estimate, or "exact"
        damping_rate: Global incoherent envelope rate (1/ns)
        rng_seed: Seed of the sampling generator
        clip: Clip out-of-range expectations instead of raising
    """
    model_config = ConfigDict(frozen=True)

    shots: Union[int, Literal["exact"]] = Field(default_factory=lambda: settings.default_shots)
    damping_rate: float = Field(default=0.0, ge=0)
    rng_seed: int = 0
    clip: bool = False

    @field_validator("shots")
    @classmethod
    def validate_shots(cls, v):
        if v != "exact" and int(v) < 1:
            raise ValueError("shots must be >= 1 or 'exact'")
        return v
