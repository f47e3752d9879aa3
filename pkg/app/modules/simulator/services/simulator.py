"""
Synthetic measurement records for the excitation-preserving data model

    y[l] = ½ · M · exp(-i·2π·10⁻³·t_l·h) · S

plus finite-shot sampling of the x and p quadratures.

Dependencies: numpy
"""

import logging
from typing import Optional

import numpy as np

from app.modules.core.errors import DimensionMismatchError, PhysicalRangeError
from app.modules.lattice.schemas.lattice import HamiltonianParams, SpamMap, TimeGrid, TimeSeriesData
from app.modules.lattice.services.lattice import propagators
from app.modules.simulator.schemas.simulator import NoiseConfig

logger = logging.getLogger(__name__)

RANGE_TOL = 1e-9


def simulate_exact(
    h: HamiltonianParams,
    S: Optional[SpamMap],
    M: Optional[SpamMap],
    grid: TimeGrid,
) -> TimeSeriesData:
    """
    Noise-free time series of the data model.

    Args:
        h: Coefficient matrix generating the dynamics
        S: State-preparation map (identity when None)
        M: Measurement map (identity when None)
        grid: Sampling grid

    Returns:
        TimeSeriesData with shots == "exact"

    Raises:
        DimensionMismatchError: S or M does not match h
    """
    n = h.n
    s_mat = np.eye(n) if S is None else S.matrix
    m_mat = np.eye(n) if M is None else M.matrix
    if s_mat.shape != (n, n) or m_mat.shape != (n, n):
        raise DimensionMismatchError(
            f"SPAM maps {s_mat.shape}, {m_mat.shape} do not match N={n}"
        )
    stack = 0.5 * np.einsum("ij,tjk,kl->ilt", m_mat, propagators(h, grid.times), s_mat)
    return TimeSeriesData(values=stack, grid=grid, shots="exact")


def _sample_quadrature(
    rng: np.random.Generator, expectation: np.ndarray, shots: int
) -> np.ndarray:
    # mean of `shots` draws of ±½ with P(+½) = ½ + expectation
    p_plus = np.clip(0.5 + expectation, 0.0, 1.0)
    hits = rng.binomial(shots, p_plus)
    return hits / shots - 0.5


def sample_shots(exact: TimeSeriesData, noise: NoiseConfig) -> TimeSeriesData:
    """
    Replace exact expectations by finite-shot estimates.

    Real and imaginary parts are sampled independently (separate X and Y
    basis experiments). An optional global damping envelope e^{-γ t} is
    applied before sampling. With ``noise.shots == "exact"`` only the
    envelope is applied; values beyond ½ from a non-unitary map pass through.

    Raises:
        ValueError: input data is already sampled
        PhysicalRangeError: an expectation leaves [-½, ½] beyond tolerance
            and clipping is disabled
    """
    if not exact.is_exact:
        raise ValueError("sample_shots expects exact data")

    values = exact.values * np.exp(-noise.damping_rate * exact.grid.times)[None, None, :]
    if noise.shots == "exact":
        return TimeSeriesData(values=values, grid=exact.grid, shots="exact")

    excess = max(np.max(np.abs(values.real)), np.max(np.abs(values.imag))) - 0.5
    if excess > RANGE_TOL:
        if not noise.clip:
            raise PhysicalRangeError(f"Expectation exceeds 1/2 by {excess:.3g}")
        logger.warning("clipping expectations exceeding 1/2 by up to %.3g", excess)

    rng = np.random.default_rng(noise.rng_seed)
    shots = int(noise.shots)
    real = _sample_quadrature(rng, np.clip(values.real, -0.5, 0.5), shots)
    imag = _sample_quadrature(rng, np.clip(values.imag, -0.5, 0.5), shots)
    return TimeSeriesData(values=real + 1j * imag, grid=exact.grid, shots=shots)


def haar_random_unitary(n: int, seed=None) -> SpamMap:
    """Haar-distributed unitary via QR of a complex Ginibre matrix with phase fix."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    ginibre = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(ginibre)
    diag = np.diagonal(r)
    return SpamMap(matrix=q * (diag / np.abs(diag))[None, :])


def random_invertible_map(n: int, rng: np.random.Generator, scale: float = 0.3) -> SpamMap:
    """Identity plus an i.i.d. complex Gaussian perturbation of the given scale."""
    noise = rng.normal(scale=scale, size=(n, n)) + 1j * rng.normal(scale=scale, size=(n, n))
    return SpamMap(matrix=np.eye(n) + noise / np.sqrt(2))


def diagonal_phase_map(phases) -> SpamMap:
    return SpamMap(matrix=np.diag(np.exp(1j * np.asarray(phases, dtype=float))))
