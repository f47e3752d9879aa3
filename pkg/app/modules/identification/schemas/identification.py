"""
Pydantic schemas for the two-step identification pipeline.
"""

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.modules.eigensolve.schemas.eigensolve import EigenSolveConfig, StageRecord
from app.modules.lattice.schemas.lattice import HamiltonianParams, LatticeGeometry
from app.modules.metrics.schemas.metrics import FitDiagnostics, Leakage
from app.modules.spamproc.schemas.spamproc import PreprocessConfig


class PipelineConfig(BaseModel):
    """
    Settings of one identification run.

    Attributes:
        preprocess: Ramp removal and phase gauge
        hankel_rows: ESPRIT Hankel rows p (⌊L/2⌋ of the relative trace when None)
        eigensolve: Optimiser and mu ramp
        target_initialisation: Start one optimisation from the target eigenbasis
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    preprocess: PreprocessConfig = PreprocessConfig()
    hankel_rows: Optional[int] = Field(default=None, ge=1)
    eigensolve: EigenSolveConfig = EigenSolveConfig()
    target_initialisation: bool = True

    def without_regularization(self) -> "PipelineConfig":
        eigensolve = self.eigensolve.model_copy(update={"regularize": False})
        return self.model_copy(update={"eigensolve": eigensolve})


class TargetComparison(BaseModel):
    """
    Identified model against the target.

    Attributes:
        deviation: |ĥ - h₀| entry-wise (MHz)
        analog_accuracy: E_analog(ĥ, h₀) (MHz)
        max_deviation: Largest entry of ``deviation`` (MHz)
        frequency_accuracy: E_analog of the sorted spectra (MHz)
        frequency_deviations: |λ̂_k - λ_k| per pair (MHz)
        initial_map_accuracy: E_analog(Ŝ, 1)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    deviation: np.ndarray
    analog_accuracy: float
    max_deviation: float
    frequency_accuracy: float
    frequency_deviations: np.ndarray
    initial_map_accuracy: float


class IdentificationResult(BaseModel):
    """
    Output of the identification pipeline.

    Attributes:
        geometry: Lattice the data was identified on
        hamiltonian: ĥ after sign correction (MHz)
        rotated_hamiltonian: ĥ′ before sign correction (MHz)
        initial_map: Ŝ
        final_map: Estimated final map (diagonal for side="initial")
        signs: Diagonal of D̂_M
        diagonal_phases: Phases θ removed from the relative data (rad)
        final_phases: Estimated diagonal phases of M, global phase fixed by a
            real positive trace of Ŝ (rad)
        frequencies: Eigenfrequencies from ESPRIT (MHz)
        mu_used: Accepted regularisation weight
        stages: Optimiser stage log
        anchors_used: Accepted ramp-removal anchors
        fit: Time-domain fit diagnostics
        leakage: Off-support weight of ĥ
        comparison: Comparison with the target when one was given
        side: Which SPAM map was removed
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    geometry: LatticeGeometry
    hamiltonian: np.ndarray
    rotated_hamiltonian: np.ndarray
    initial_map: np.ndarray
    final_map: np.ndarray
    signs: np.ndarray
    diagonal_phases: np.ndarray
    final_phases: np.ndarray
    frequencies: np.ndarray
    mu_used: float
    stages: tuple[StageRecord, ...]
    anchors_used: int
    fit: FitDiagnostics
    leakage: Leakage
    comparison: Optional[TargetComparison] = None
    side: Literal["initial", "final"] = "initial"

    @property
    def n(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def sign_flips(self) -> np.ndarray:
        """Sites whose final-map phase exceeds π/2 in magnitude."""
        return np.abs(self.final_phases) > np.pi / 2

    def hamiltonian_params(self) -> HamiltonianParams:
        return HamiltonianParams(
            matrix=self.hamiltonian, geometry=self.geometry, enforce_support=False
        )
