"""
Pydantic schemas for error analysis.
Defines the bootstrap settings, the statistical and systematic error
summaries and the ramp-phase calibration fit.
"""

from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.modules.lattice.schemas.lattice import TimeSeriesData


class BootstrapConfig(BaseModel):
    """
    Parametric bootstrap settings.

    Attributes:
        resamples: Synthetic data sets drawn from the identified model
        quantile: Reported quantile of every statistic
        shots: Single shots per quadrature estimate, or "exact"
        rng_seed: Root seed; resample i uses child i of its SeedSequence
        max_failure_rate: Failure rate above which the report is unreliable
        n_jobs: joblib workers (settings.n_jobs when None)
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    resamples: int = Field(default=1000, ge=1)
    quantile: float = Field(default=0.99, gt=0, lt=1)
    shots: Union[int, Literal["exact"]] = 1000
    rng_seed: int = 0
    max_failure_rate: float = Field(default=0.05, ge=0, le=1)
    n_jobs: Optional[int] = None

    @field_validator("shots")
    @classmethod
    def validate_shots(cls, v):
        if v != "exact" and int(v) < 1:
            raise ValueError("shots must be >= 1 or 'exact'")
        return v

    @model_validator(mode="after")
    def validate_resamples(self):
        if self.quantile >= 0.99 and self.resamples < 100:
            raise ValueError(f"quantile {self.quantile} needs at least 100 resamples")
        return self


class StatisticalErrors(BaseModel):
    """
    Bootstrap quantiles.

    Attributes:
        per_entry: Quantile of |ĥ_bt - ĥ| per entry (MHz)
        per_entry_max: Largest entry of ``per_entry`` (MHz)
        accuracy: Quantile of E_analog(ĥ_bt, ĥ) (MHz)
        frequency: Quantile of the frequency accuracy (MHz)
        resamples: Resamples attempted
        failures: Resamples whose identification failed
        reliable: Failure rate within the configured limit
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    per_entry: np.ndarray
    per_entry_max: float = Field(ge=0)
    accuracy: float = Field(ge=0)
    frequency: float = Field(ge=0)
    resamples: int
    failures: int
    reliable: bool


class SystematicErrors(BaseModel):
    """
    Final-ramp systematic error estimate.

    Attributes:
        diagonal: max |h̄ - ĥ| over diagonal entries (MHz)
        off_diagonal: max |h̄ - ĥ| over off-diagonal entries (MHz)
        accuracy: E_analog(h̄, ĥ) (MHz)
        projected_map: Ō_M, the real orthogonal polar factor of Re(M̄)
        map_phases: Diagonal phases of the modelled M̄ (rad)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    diagonal: float = Field(ge=0)
    off_diagonal: float = Field(ge=0)
    accuracy: float = Field(ge=0)
    projected_map: np.ndarray
    map_phases: np.ndarray


class ErrorReport(BaseModel):
    """Statistical and systematic error bars of one identification."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    statistical: Optional[StatisticalErrors] = None
    systematic: Optional[SystematicErrors] = None

    @property
    def per_entry_statistical(self) -> Optional[float]:
        return None if self.statistical is None else self.statistical.per_entry_max

    @property
    def accuracy_statistical(self) -> Optional[float]:
        return None if self.statistical is None else self.statistical.accuracy

    @property
    def frequency_statistical(self) -> Optional[float]:
        return None if self.statistical is None else self.statistical.frequency

    @property
    def per_entry_systematic_diagonal(self) -> Optional[float]:
        return None if self.systematic is None else self.systematic.diagonal

    @property
    def per_entry_systematic_off_diagonal(self) -> Optional[float]:
        return None if self.systematic is None else self.systematic.off_diagonal

    @property
    def accuracy_systematic(self) -> Optional[float]:
        return None if self.systematic is None else self.systematic.accuracy


class CalibrationRun(BaseModel):
    """
    One diagonal-Hamiltonian calibration record.

    Attributes:
        data: Measurement record
        h_hat: Diagonal coefficient matrix used to invert the dynamics (MHz)
        idle: Diagonal idle-frame frequencies h_m (MHz); ramp distance per
            site is |(h_hat - h_m)_ii|
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: TimeSeriesData
    h_hat: np.ndarray
    idle: np.ndarray

    @field_validator("h_hat", "idle", mode="before")
    @classmethod
    def validate_diagonal(cls, v):
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 1:
            arr = np.diag(arr)
        if arr.ndim != 2 or np.any(arr[~np.eye(arr.shape[0], dtype=bool)] != 0):
            raise ValueError("Calibration runs need diagonal matrices")
        return arr


class CalibrationConfig(BaseModel):
    """
    Ramp-phase calibration fit settings.

    Attributes:
        outlier_cutoff_deg: Points above this phase are excluded from the fits
        reference_distance_mhz: Ramp distance at which the offset is read
        speed: Assumed ramp speed for the wait-time conversion (MHz/ns)
        ramps_per_run: Ramps whose phase ends up in Ŝ
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    outlier_cutoff_deg: float = Field(default=140.0, gt=0)
    reference_distance_mhz: float = Field(default=90.0, gt=0)
    speed: float = Field(default=150.0, gt=0)
    ramps_per_run: int = Field(default=1, ge=1)


class CalibrationFit(BaseModel):
    """
    Phase-versus-ramp-distance analysis.

    Attributes:
        distances: Ramp distance of every point (MHz)
        phases_deg: Extracted phase of every point (deg)
        runs: Run index of every point
        sites: Site index of every point
        inliers: Points below the outlier cutoff
        envelope_slope: Slope of the linear upper envelope (deg/MHz)
        envelope_intercept: Intercept of the envelope (deg)
        total_ramp_time: Envelope slope converted to time (ns)
        offset_deg: Envelope value at the reference distance (deg)
        wait_offset_deg: Part of the offset beyond the ramp area at the
            assumed speed, i.e. the phase from the wait (deg)
        wait_time: Offset converted to a wait time at the assumed speed (ns)
        quadratic: Least-squares coefficients (c2, c1, c0) of the inlier fit
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    distances: np.ndarray
    phases_deg: np.ndarray
    runs: np.ndarray
    sites: np.ndarray
    inliers: np.ndarray
    envelope_slope: float
    envelope_intercept: float
    total_ramp_time: float
    offset_deg: float
    wait_offset_deg: float
    wait_time: float
    quadratic: tuple[float, float, float]
