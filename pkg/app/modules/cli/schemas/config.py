"""
Pydantic schema of the run configuration file read by every command.

Sites are 1-based in the file, as in every other file this package writes.
"""

from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.modules.core.config import settings
from app.modules.eigensolve.schemas.eigensolve import EigenSolveConfig
from app.modules.erroranalysis.schemas.erroranalysis import BootstrapConfig, CalibrationConfig
from app.modules.spamproc.schemas.spamproc import PreprocessConfig

_strict = ConfigDict(frozen=True, extra="forbid")


class GeometrySpec(BaseModel):
    """
    Lattice of the run: a geometry file, or a chain / grid built on the fly.
    """
    model_config = _strict

    path: Optional[str] = None
    kind: Literal["chain", "grid"] = "chain"
    num_sites: int = Field(default=5, ge=1)
    rows: Optional[int] = Field(default=None, ge=1)
    cols: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def validate_grid(self):
        if self.path is None and self.kind == "grid" and (self.rows is None or self.cols is None):
            raise ValueError("A grid geometry needs rows and cols")
        return self


class TargetSpec(BaseModel):
    model_config = _strict

    kind: Literal["harper", "matrix"] = "harper"
    b: float = Field(default=0.35, ge=0, le=1)
    coupling_mhz: float = 20.0
    amplitude_mhz: float = 20.0
    matrix: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def validate_matrix(self):
        if self.kind == "matrix" and self.matrix is None:
            raise ValueError("target.kind 'matrix' needs target.matrix")
        return self


class GridSpec(BaseModel):
    model_config = _strict

    dt: float = Field(default_factory=lambda: settings.default_dt_ns, gt=0)
    num_samples: int = Field(default_factory=lambda: settings.default_num_samples, ge=2)


class NoiseSpec(BaseModel):
    model_config = _strict

    shots: Union[int, Literal["exact"]] = Field(default_factory=lambda: settings.default_shots)
    damping_rate: float = Field(default=0.0, ge=0)
    clip: bool = True

    @field_validator("shots")
    @classmethod
    def validate_shots(cls, v):
        if v != "exact" and int(v) < 1:
            raise ValueError("shots must be >= 1 or 'exact'")
        return v


class SpamSpec(BaseModel):
    """
    SPAM maps of the simulated device.

    Attributes:
        mode: "none", "random" (perturbed S, diagonal-unitary M) or
            "ramp-model" (S and M from the ramp model)
        perturbation_scale: Gaussian scale of the random S
        idle_low_mhz: Smallest idle detuning magnitude for the ramp model
        idle_high_mhz: Largest idle detuning magnitude for the ramp model
        idle_mhz: Explicit idle frequencies per site (drawn when None)
        speed: Ramp speed (MHz/ns)
        wait_time: Ramp wait time (ns)
        integration_step: Ramp integration step (ns)
    """
    model_config = _strict

    mode: Literal["none", "random", "ramp-model"] = "none"
    perturbation_scale: float = Field(default=0.3, ge=0)
    idle_low_mhz: float = Field(default=100.0, ge=0)
    idle_high_mhz: float = Field(default=500.0, ge=0)
    idle_mhz: Optional[list[float]] = None
    speed: float = Field(default_factory=lambda: settings.ramp_speed_mhz_per_ns, gt=0)
    wait_time: float = Field(default_factory=lambda: settings.ramp_wait_ns, ge=0)
    integration_step: float = Field(
        default_factory=lambda: settings.ramp_integration_step_ns, gt=0, le=0.05
    )


class PipelineSpec(BaseModel):
    model_config = _strict

    preprocess: PreprocessConfig = PreprocessConfig()
    hankel_rows: Optional[int] = Field(default=None, ge=1)
    eigensolve: EigenSolveConfig = EigenSolveConfig()
    target_initialisation: bool = True
    bootstrap: BootstrapConfig = BootstrapConfig()


class FaultSpec(BaseModel):
    model_config = _strict

    detuning_bias_mhz: dict[int, float] = {}
    final_phase_rad: dict[int, float] = {}


class ScanSpec(BaseModel):
    model_config = _strict

    b_values: list[float] = [0.0, 0.5]
    subset_size: int = Field(default=5, ge=1)
    min_coverage: int = Field(default=5, ge=1)
    min_gap_mhz: float = Field(default=0.5, ge=0)
    max_iterations: int = Field(default=10000, ge=1)
    faults: FaultSpec = FaultSpec()


class CalibrationSpec(BaseModel):
    model_config = _strict

    distances_mhz: list[float] = Field(
        default_factory=lambda: np.linspace(10.0, 90.0, 9).tolist(), min_length=3
    )
    sites_per_run: int = Field(default=1, ge=1)
    fit: CalibrationConfig = CalibrationConfig()


class RunConfig(BaseModel):
    """
    Complete configuration of a command-line run. Unknown keys are rejected.

    Attributes:
        seed: Root seed of every random draw (overridden by --seed)
        output_dir: Default output directory (overridden by --out)
    """
    model_config = _strict

    geometry: GeometrySpec = GeometrySpec()
    target: TargetSpec = TargetSpec()
    grid: GridSpec = GridSpec()
    noise: NoiseSpec = NoiseSpec()
    spam: SpamSpec = SpamSpec()
    pipeline: PipelineSpec = PipelineSpec()
    scan: ScanSpec = ScanSpec()
    calibration: CalibrationSpec = CalibrationSpec()
    seed: int = 0
    output_dir: str = "out"
