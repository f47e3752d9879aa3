"""
Step 1 of identification: super-resolved eigenfrequencies from the trace signal.

The trace F[l] = Σ_m y_mm[l] is an equally weighted sum of N sinusoids;
ESPRIT recovers their frequencies from the shift invariance of the dominant
N-dimensional range of the Hankel matrix H[i, j] = F[i + j].

Dependencies: numpy, scipy
"""

import logging

import numpy as np
from scipy import linalg

from app.modules.core.errors import DimensionMismatchError, RankDeficiencyError
from app.modules.lattice.schemas.lattice import FrequencySet, TimeSeriesData
from app.modules.lattice.services.lattice import TWO_PI_MHZ_NS
from app.modules.spectral.schemas.spectral import EspritConfig, FrequencyMatch, TraceSignal

logger = logging.getLogger(__name__)


def trace_signal(data: TimeSeriesData) -> TraceSignal:
    """Trace F[l] = Σ_m y_mm[l] of the measurement record."""
    samples = np.einsum("mml->l", data.values)
    return TraceSignal(samples=samples, grid=data.grid, exact=data.is_exact)


def esprit(signal: TraceSignal, cfg: EspritConfig) -> FrequencySet:
    """
    Extract ``cfg.model_order`` frequencies from a trace signal.

    Args:
        signal: Uniformly sampled trace
        cfg: Model order and Hankel size

    Returns:
        FrequencySet in MHz, sorted ascending

    Raises:
        ValueError: signal too short or Hankel size out of range
        RankDeficiencyError: fewer than N significant singular values
        DegenerateSpectrumError: two recovered frequencies coincide
    """
    samples = signal.samples
    length = samples.size
    order = cfg.model_order
    if length < 2 * order:
        raise ValueError(f"Need at least {2 * order} samples for {order} modes, got {length}")

    rows = cfg.hankel_rows or length // 2
    if not order <= rows <= length - order:
        raise ValueError(f"Hankel rows {rows} outside [{order}, {length - order}]")

    hankel = linalg.hankel(samples[:rows], samples[rows - 1:])
    left, singular, _ = linalg.svd(hankel, full_matrices=False)

    threshold = cfg.exact_threshold if signal.exact else cfg.sampled_threshold
    ratio = singular[order - 1] / singular[0] if singular[0] > 0 else 0.0
    if ratio < threshold:
        raise RankDeficiencyError(
            f"Signal supports fewer than {order} modes (sigma_N/sigma_1 = {ratio:.3g})"
        )

    subspace = left[:, :order]
    # shift invariance: subspace[:-1] @ psi ≈ subspace[1:]
    psi, *_ = linalg.lstsq(subspace[:-1], subspace[1:])
    poles = linalg.eigvals(psi)
    freqs = -np.angle(poles) / (TWO_PI_MHZ_NS * signal.grid.dt)

    logger.debug("esprit: |z| range %.6f..%.6f", np.min(np.abs(poles)), np.max(np.abs(poles)))
    return FrequencySet(freqs=freqs).require_distinct()


def match_frequencies(estimated: FrequencySet, target: FrequencySet) -> FrequencyMatch:
    """
    Minimum total absolute deviation pairing; for points on a line this is the
    sorted-order pairing.

    Raises:
        DimensionMismatchError: sets differ in length
    """
    if len(estimated) != len(target):
        raise DimensionMismatchError(
            f"Cannot match {len(estimated)} frequencies against {len(target)}"
        )
    est_order = np.argsort(estimated.freqs, kind="stable")
    tgt_order = np.argsort(target.freqs, kind="stable")
    permutation = np.empty(len(estimated), dtype=int)
    permutation[est_order] = tgt_order
    deviations = np.abs(estimated.freqs - target.freqs[permutation])
    return FrequencyMatch(permutation=tuple(int(p) for p in permutation), deviations=deviations)
