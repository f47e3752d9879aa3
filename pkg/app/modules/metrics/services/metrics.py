"""
Accuracy metrics and time-domain fit diagnostics.

Dependencies: numpy
"""

from typing import Optional, Union

import numpy as np

from app.modules.core.errors import DimensionMismatchError
from app.modules.lattice.schemas.lattice import (
    FrequencySet,
    HamiltonianParams,
    LatticeGeometry,
    SpamMap,
    TimeSeriesData,
)
from app.modules.lattice.services.lattice import propagators
from app.modules.metrics.schemas.metrics import FitDiagnostics, Leakage

MatrixLike = Union[HamiltonianParams, SpamMap, FrequencySet, np.ndarray]


def as_array(value: MatrixLike) -> np.ndarray:
    if isinstance(value, (HamiltonianParams, SpamMap)):
        return value.matrix
    if isinstance(value, FrequencySet):
        return value.freqs
    return np.asarray(value)


def analog_accuracy(A: MatrixLike, B: MatrixLike) -> float:
    """
    E_analog = (1/N)·‖A - B‖ with the entry-wise 2-norm; frequency sets are
    compared as sorted vectors.

    Raises:
        DimensionMismatchError: shapes differ
    """
    a, b = as_array(A), as_array(B)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Cannot compare shapes {a.shape} and {b.shape}")
    return float(np.linalg.norm((a - b).ravel())) / a.shape[0]


def entrywise_deviation(h_hat: MatrixLike, h_target: MatrixLike) -> np.ndarray:
    a, b = as_array(h_hat), as_array(h_target)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Cannot compare shapes {a.shape} and {b.shape}")
    return np.abs(a - b)


def leakage(h_hat: MatrixLike, omega: LatticeGeometry) -> Leakage:
    """Norm and largest magnitude of ĥ outside Ω."""
    h = as_array(h_hat)
    outside = np.where(omega.support_mask(), 0.0, h)
    return Leakage(norm=float(np.linalg.norm(outside)), max_abs=float(np.max(np.abs(outside))))


def predicted_series(
    h_hat: MatrixLike,
    S_hat: MatrixLike,
    times: np.ndarray,
    final_map: np.ndarray,
) -> np.ndarray:
    """½·F·exp(-iφtĥ)·Ŝ as an N×N×L array."""
    return 0.5 * np.einsum(
        "ij,tjk,kl->ilt", final_map, propagators(as_array(h_hat), times), as_array(S_hat)
    )


def fit_deviation(
    data: TimeSeriesData,
    h_hat: MatrixLike,
    S_hat: MatrixLike,
    D_M: Optional[np.ndarray] = None,
    final_phases: Optional[np.ndarray] = None,
    final_map: Optional[np.ndarray] = None,
) -> FitDiagnostics:
    """
    RMS views of data - ½·diag(e^{iθ})·D̂_M·exp(-iφtĥ)·Ŝ.

    Args:
        data: Measurement record
        h_hat: Identified coefficient matrix
        S_hat: Identified initial map
        D_M: Diagonal of D̂_M (identity when None)
        final_phases: Diagonal phases θ removed before the eigenspace fit
        final_map: Full final-map estimate; overrides D_M and final_phases
    """
    n = data.n
    if final_map is None:
        diagonal = np.ones(n, dtype=complex)
        if D_M is not None:
            diagonal = diagonal * np.asarray(D_M)
        if final_phases is not None:
            diagonal = diagonal * np.exp(1j * np.asarray(final_phases, dtype=float))
        final_map = np.diag(diagonal)

    residual = data.values - predicted_series(h_hat, S_hat, data.grid.times, final_map)
    power = np.abs(residual) ** 2
    return FitDiagnostics(
        per_series_rms=np.sqrt(power.mean(axis=2)),
        instantaneous_rms=np.sqrt(power.mean(axis=(0, 1))),
        total_rms=float(np.sqrt(power.mean())),
    )
