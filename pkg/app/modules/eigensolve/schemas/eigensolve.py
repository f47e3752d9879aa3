"""
Pydantic schemas for the eigenbasis reconstruction.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.modules.core.config import settings


class EigenSolveConfig(BaseModel):
    """
    Conjugate-gradient optimisation over the orthogonal group plus the
    regularisation schedule.

    Attributes:
        max_iterations: Iteration cap per optimisation run
        gradient_tolerance: Riemannian gradient norm per unit sample weight
            below which a run counts as converged
        restarts: Random orthogonal initialisations (the target eigenbasis is
            added when a target is known)
        line_search_shrink: Backtracking factor
        sufficient_decrease: Armijo constant
        stagnation_window: Iterations over which the objective must keep falling
        stagnation_rtol: Relative decrease over the window counted as stagnation
        mu_initial: First regularisation weight of the ramp
        mu_factor: Geometric growth of mu between stages
        mu_max_stages: Maximal number of mu stages
        fit_margin: Accepted relative loss of fit quality versus mu = 0
        fit_floor: Absolute slack added to the margin (objective units)
        regularize: Run the mu ramp at all
        rng_seed: Seed of the random initialisations
        n_jobs: joblib workers for restarts (settings.n_jobs when None)
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    max_iterations: int = Field(default=2000, ge=1)
    gradient_tolerance: float = Field(default=1e-8, gt=0)
    restarts: int = Field(default=8, ge=0)
    line_search_shrink: float = Field(default=0.5, gt=0, lt=1)
    sufficient_decrease: float = Field(default=1e-4, gt=0, lt=1)
    stagnation_window: int = Field(default=25, ge=1)
    stagnation_rtol: float = Field(default=1e-12, gt=0)
    mu_initial: float = Field(default=1.0, gt=0)
    mu_factor: float = Field(default=1.6, gt=1)
    mu_max_stages: int = Field(default=12, ge=1)
    fit_margin: float = Field(default=0.05, gt=0, lt=1)
    fit_floor: float = Field(default=1e-10, ge=0)
    regularize: bool = True
    rng_seed: int = 0
    n_jobs: Optional[int] = None

    @property
    def workers(self) -> int:
        return self.n_jobs if self.n_jobs is not None else settings.n_jobs


class StageRecord(BaseModel):
    """
    One optimisation stage: the unregularised best restart (mu = 0) or a
    step of the mu ramp.
    """
    model_config = ConfigDict(frozen=True)

    mu: float
    fit: float
    penalty: float
    iterations: int
    gradient_norm: float
    converged: bool
    accepted: bool


class EigenbasisEstimate(BaseModel):
    """
    Result of the eigenbasis reconstruction.

    Attributes:
        V: Real orthogonal matrix, columns bound to the ascending frequencies
        objective: Objective at the returned V and mu_used
        fit: Data-fit part of the objective
        penalty: Off-support norm ‖(VΛVᵀ)_Ω̄‖
        mu_used: Last accepted regularisation weight (0 without regularisation)
        converged: Whether the returned stage converged
        stages: Stage log, mu = 0 first
        restarts_converged: Converged restarts out of those attempted
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    V: np.ndarray
    objective: float
    fit: float
    penalty: float
    mu_used: float
    converged: bool
    stages: tuple[StageRecord, ...] = ()
    restarts_converged: int = 0

    @field_validator("V", mode="before")
    @classmethod
    def validate_v(cls, v):
        arr = np.array(v, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"V must be square, got shape {arr.shape}")
        arr.setflags(write=False)
        return arr
