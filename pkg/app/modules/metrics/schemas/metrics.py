"""
Pydantic schemas for accuracy metrics.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

class FitDiagnostics(BaseModel):
    """
    Root-mean-square deviation between data and the fitted model.

    Attributes:
        per_series_rms: N×N RMS over time of every (m, n) series
        instantaneous_rms: Length-L RMS over all (m, n) at each time
        total_rms: RMS over every sample
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    per_series_rms: np.ndarray
    instantaneous_rms: np.ndarray
    total_rms: float


class Leakage(BaseModel):
    """Weight of an estimate outside the declared support."""
    model_config = ConfigDict(frozen=True)

    norm: float = Field(ge=0)
    max_abs: float = Field(ge=0)
