"""
SPAM-robust processing around the eigenspace fit.

- ``remove_ramp`` cancels the initial (or final) map by multiplying every
  window of the record with the pseudoinverse of its anchor slice.
- ``estimate_diagonal_phases`` removes the diagonal phases of the final map
  from the relative data, leaving a real ±1 conjugation.
- ``estimate_initial_map`` inverts the data model for S given ĥ.
- ``correct_diagonal_sign`` fixes that ±1 conjugation against a target.

Dependencies: numpy, scipy, networkx
"""

import logging
from typing import Optional

import networkx as nx
import numpy as np
from scipy import linalg

from app.modules.core.errors import DimensionMismatchError, PreprocessError
from app.modules.lattice.schemas.lattice import HamiltonianParams, SpamMap, TimeSeriesData
from app.modules.lattice.services.lattice import propagators
from app.modules.spamproc.schemas.spamproc import (
    PreprocessConfig,
    RelativeTimeSeries,
    SignCorrection,
)

logger = logging.getLogger(__name__)

EXHAUSTIVE_SIGN_LIMIT = 24
SIGN_CHUNK = 1 << 14
COUPLING_RTOL = 1e-6


def remove_ramp(data: TimeSeriesData, cfg: PreprocessConfig) -> RelativeTimeSeries:
    """
    Concatenate ramp-removed windows around anchors 0, s, 2s, ...

    For side="initial" block samples are y[l]·y[l₀]⁺, for side="final" they
    are y[l₀]⁺·y[l]. Anchors whose slice has condition number at or above
    ``cfg.max_condition`` are skipped.

    Raises:
        ValueError: stride exceeds the record length
        PreprocessError: every anchor was skipped
    """
    ys = data.matrices()
    length = ys.shape[0]
    if cfg.stride > length:
        raise ValueError(f"Stride {cfg.stride} exceeds record length {length}")

    values, anchors, offsets, skipped = [], [], [], []
    for anchor in range(0, length, cfg.stride):
        pivot = ys[anchor]
        singular = linalg.svdvals(pivot)
        condition = singular[0] / singular[-1] if singular[-1] > 0 else np.inf
        if condition >= cfg.max_condition:
            skipped.append(anchor)
            continue

        inverse = linalg.pinv(pivot, rtol=cfg.pseudoinverse_cutoff)
        lo, hi = max(0, anchor - cfg.window), min(length - 1, anchor + cfg.window)
        window = ys[lo:hi + 1]
        block = window @ inverse if cfg.side == "initial" else inverse @ window
        values.append(block)
        anchors.append(np.full(hi - lo + 1, anchor))
        offsets.append(np.arange(lo, hi + 1) - anchor)

    if skipped:
        logger.warning(
            "skipped %d of %d anchors with condition >= %.1e (first: %s)",
            len(skipped), len(skipped) + len(values), cfg.max_condition, skipped[:5],
        )
    if not values:
        raise PreprocessError("Every anchor slice is ill-conditioned")

    return RelativeTimeSeries(
        values=np.concatenate(values),
        anchors=np.concatenate(anchors),
        offsets=np.concatenate(offsets),
        dt=data.grid.dt,
        exact=data.is_exact,
    )


def estimate_diagonal_phases(data: RelativeTimeSeries) -> np.ndarray:
    """
    Diagonal phases θ ∈ (-π/2, π/2] of the final map, up to a sign per site.

    Relative data M·U·M⁻¹ with diagonal unitary M and complex symmetric U
    satisfies Y_mn·conj(Y_nm) = e^{2i(δ_m - δ_n)}·|U_mn|², so the phases are
    synchronised from W = Σ Y ∘ conj(Yᵀ) per connected coupling component,
    anchored at the site with the largest eigenvector weight.
    """
    n = data.n
    phases = np.zeros(n)
    if n == 1:
        return phases

    coupling = np.einsum("kmn,knm->mn", data.values, data.values.conj())
    magnitude = np.abs(coupling)
    np.fill_diagonal(magnitude, 0.0)
    scale = magnitude.max()
    if scale == 0:
        return phases

    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    rows, cols = np.nonzero(magnitude > COUPLING_RTOL * scale)
    graph.add_edges_from((int(i), int(j)) for i, j in zip(rows, cols) if i < j)

    for component in nx.connected_components(graph):
        sites = np.array(sorted(component))
        if sites.size < 2:
            continue
        sub = coupling[np.ix_(sites, sites)].copy()
        np.fill_diagonal(sub, np.abs(sub).sum(axis=1) - np.abs(np.diagonal(sub)))
        _, vectors = linalg.eigh(sub)
        leading = vectors[:, -1]
        reference = leading[np.argmax(np.abs(leading))]
        aligned = leading * np.conj(reference) / np.abs(reference)
        phases[sites] = np.angle(aligned) / 2

    return phases


def final_map_phases(phases: np.ndarray, signs: np.ndarray) -> np.ndarray:
    """Diagonal phases of the final map, θ + π where D̂_M is -1, wrapped to (-π, π]."""
    total = np.asarray(phases, dtype=float) + np.pi * (np.asarray(signs) < 0)
    return np.angle(np.exp(1j * total))


def _map_inverse(n: int, spam: Optional[np.ndarray]) -> np.ndarray:
    # a vector is read as the phases of a diagonal unitary
    if spam is None:
        return np.eye(n)
    spam = np.asarray(spam)
    if spam.ndim == 1:
        return np.diag(np.exp(-1j * spam.astype(float)))
    return linalg.inv(spam.astype(complex))


def estimate_initial_map(
    data: TimeSeriesData,
    h_hat: HamiltonianParams | np.ndarray,
    final_map: Optional[np.ndarray] = None,
) -> SpamMap:
    """
    Ŝ = (2/L)·Σ_l exp(+iφ·t_l·ĥ)·M̂⁻¹·y[l].

    Args:
        data: Measurement record
        h_hat: Identified coefficient matrix
        final_map: Known final map as a matrix, or its diagonal phases θ as a
            vector; identity when None
    """
    matrix = h_hat.matrix if isinstance(h_hat, HamiltonianParams) else np.asarray(h_hat)
    n = data.n
    if matrix.shape != (n, n):
        raise DimensionMismatchError(f"ĥ is {matrix.shape}, data has N={n}")
    backward = propagators(matrix, -data.grid.times)
    corrected = _map_inverse(n, final_map) @ data.matrices()
    estimate = 2.0 / data.grid.num_samples * np.einsum("lij,ljk->ik", backward, corrected)
    return SpamMap(matrix=estimate)


def estimate_final_map(
    data: TimeSeriesData,
    h_hat: HamiltonianParams | np.ndarray,
    initial_map: Optional[np.ndarray] = None,
) -> SpamMap:
    """M̂ = (2/L)·Σ_l y[l]·Ŝ⁻¹·exp(+iφ·t_l·ĥ), the analogue of ``estimate_initial_map`` for a known S."""
    matrix = h_hat.matrix if isinstance(h_hat, HamiltonianParams) else np.asarray(h_hat)
    backward = propagators(matrix, -data.grid.times)
    corrected = data.matrices() @ _map_inverse(data.n, initial_map)
    estimate = 2.0 / data.grid.num_samples * np.einsum("lij,ljk->ik", corrected, backward)
    return SpamMap(matrix=estimate)


def _sign_patterns(n: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop)[:, None]
    bits = (codes >> np.arange(n - 1)[None, :]) & 1
    return np.hstack([np.ones((codes.size, 1)), 1.0 - 2.0 * bits])


def _exhaustive_signs(weights: np.ndarray) -> np.ndarray:
    n = weights.shape[0]
    total = 1 << (n - 1)
    best, best_score = None, -np.inf
    for start in range(0, total, SIGN_CHUNK):
        patterns = _sign_patterns(n, start, min(total, start + SIGN_CHUNK))
        scores = np.einsum("ki,ij,kj->k", patterns, weights, patterns)
        k = int(np.argmax(scores))
        if scores[k] > best_score:
            best, best_score = patterns[k], scores[k]
    return best


def _greedy_signs(weights: np.ndarray) -> np.ndarray:
    signs = np.ones(weights.shape[0])
    off = weights - np.diag(np.diagonal(weights))
    improved = True
    while improved:
        improved = False
        for i in range(1, signs.size):
            # flipping i changes the score by -4·s_i·Σ_j≠i W_ij s_j
            if signs[i] * (off[i] @ signs) < 0:
                signs[i] = -signs[i]
                improved = True
    return signs


def correct_diagonal_sign(
    h_prime: HamiltonianParams | np.ndarray,
    S_prime: SpamMap | np.ndarray,
    h_target: HamiltonianParams | np.ndarray,
) -> SignCorrection:
    """
    Diagonal ±1 matrix D minimising ‖D·h′·D - h_target‖, with D[0, 0] = +1.

    Exhaustive over 2^(N-1) patterns for N ≤ 24, greedy single flips beyond.
    """
    h_mat = h_prime.matrix if isinstance(h_prime, HamiltonianParams) else np.asarray(h_prime)
    s_mat = S_prime.matrix if isinstance(S_prime, SpamMap) else np.asarray(S_prime)
    target = h_target.matrix if isinstance(h_target, HamiltonianParams) else np.asarray(h_target)
    if h_mat.shape != target.shape or s_mat.shape[0] != h_mat.shape[0]:
        raise DimensionMismatchError(
            f"Shapes {h_mat.shape}, {s_mat.shape} and target {target.shape} differ"
        )

    n = h_mat.shape[0]
    # ‖DhD - h₀‖² = const - 2·dᵀ(h ∘ h₀)d
    weights = h_mat * target
    if n == 1:
        signs = np.ones(1)
    elif n <= EXHAUSTIVE_SIGN_LIMIT:
        signs = _exhaustive_signs(weights)
    else:
        logger.info("N=%d above exhaustive limit, using greedy sign search", n)
        signs = _greedy_signs(weights)

    return SignCorrection(
        signs=signs,
        hamiltonian=signs[:, None] * h_mat * signs[None, :],
        initial_map=signs[:, None] * s_mat,
    )

