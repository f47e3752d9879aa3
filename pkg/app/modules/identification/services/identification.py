"""
Two-step identification of the coefficient matrix from a measurement record.

1. Remove the initial map with anchor pseudoinverses, remove diagonal phases
   of the final map, extract the eigenfrequencies from the trace with ESPRIT.
2. Fit the eigenbasis on the orthogonal group (with the support
   regulariser), assemble ĥ′, estimate Ŝ and fix the diagonal sign gauge
   against the target.
"""

import logging
from typing import Optional

import numpy as np

from app.modules.core.errors import (
    ConvergenceError,
    DegenerateSpectrumError,
    DimensionMismatchError,
    IdentificationError,
    PreprocessError,
    RankDeficiencyError,
)
from app.modules.eigensolve.services.eigensolve import assemble_hamiltonian, minimize
from app.modules.identification.schemas.identification import (
    IdentificationResult,
    PipelineConfig,
    TargetComparison,
)
from app.modules.lattice.schemas.lattice import HamiltonianParams, LatticeGeometry, TimeSeriesData
from app.modules.lattice.services.lattice import eig_symmetric
from app.modules.metrics.services.metrics import (
    analog_accuracy,
    entrywise_deviation,
    fit_deviation,
    leakage,
)
from app.modules.spamproc.services.spamproc import (
    correct_diagonal_sign,
    estimate_diagonal_phases,
    estimate_final_map,
    estimate_initial_map,
    final_map_phases,
    remove_ramp,
)
from app.modules.spectral.schemas.spectral import EspritConfig
from app.modules.spectral.services.spectral import esprit, match_frequencies

logger = logging.getLogger(__name__)


def _normalise_global_phase(final_map: np.ndarray, initial_map: np.ndarray):
    # M and S share an unobservable global phase; put it where Σ_i S_ii is real positive
    total = np.trace(initial_map)
    if abs(total) == 0:
        return final_map, initial_map
    rotation = np.conj(total) / abs(total)
    return final_map / rotation, initial_map * rotation


class IdentificationService:
    def __init__(self, config: Optional[PipelineConfig] = None):
        self.config = config or PipelineConfig()

    def identify(
        self,
        data: TimeSeriesData,
        geometry: LatticeGeometry,
        target: Optional[HamiltonianParams] = None,
    ) -> IdentificationResult:
        """
        Identify ĥ, Ŝ and the diagonal final-map gauge from ``data``.

        Raises:
            DimensionMismatchError: geometry or target does not match the data
            IdentificationError: a pipeline stage failed; ``diagnostics`` holds
                what was computed before the failure
        """
        cfg = self.config
        n = data.n
        if geometry.num_sites != n:
            raise DimensionMismatchError(f"Geometry has {geometry.num_sites} sites, data N={n}")
        if target is not None and target.n != n:
            raise DimensionMismatchError(f"Target is {target.n}×{target.n}, data N={n}")
        side = cfg.preprocess.side
        diagnostics: dict = {"side": side}

        try:
            relative = remove_ramp(data, cfg.preprocess)
        except (PreprocessError, ValueError) as exc:
            raise IdentificationError(str(exc), "preprocess", diagnostics) from exc
        diagnostics["anchors_used"] = len(relative.block_anchors())

        phases = np.zeros(n)
        if cfg.preprocess.fix_diagonal_phases:
            phases = estimate_diagonal_phases(relative)
            relative = relative.conjugated(phases)
        diagnostics["diagonal_phases"] = phases.tolist()

        try:
            signal = relative.trace_signal()
            freqs = esprit(signal, EspritConfig(model_order=n, hankel_rows=cfg.hankel_rows))
        except (RankDeficiencyError, DegenerateSpectrumError, ValueError) as exc:
            raise IdentificationError(str(exc), "spectral", diagnostics) from exc
        diagnostics["frequencies"] = freqs.freqs.tolist()
        logger.debug("frequencies: %s", np.round(freqs.freqs, 4).tolist())

        initial_basis = None
        if target is not None and cfg.target_initialisation:
            _, initial_basis = eig_symmetric(target)
        try:
            estimate = minimize(freqs, relative, geometry, cfg.eigensolve, initial_basis)
        except (ConvergenceError, DegenerateSpectrumError) as exc:
            raise IdentificationError(str(exc), "eigensolve", diagnostics) from exc
        h_prime = assemble_hamiltonian(estimate, freqs)

        if side == "initial":
            s_prime = estimate_initial_map(data, h_prime, final_map=phases).matrix
        else:
            s_prime = np.diag(np.exp(-1j * phases))
        reference = target.matrix if target is not None else h_prime
        correction = correct_diagonal_sign(h_prime, s_prime, reference)
        h_hat = correction.hamiltonian
        s_hat = correction.initial_map

        if side == "initial":
            final_map = np.diag(np.exp(1j * final_map_phases(phases, correction.signs)))
        else:
            final_map = estimate_final_map(data, h_hat, initial_map=s_hat).matrix
        final_map, s_hat = _normalise_global_phase(final_map, s_hat)

        comparison = None
        if target is not None:
            target_freqs, _ = eig_symmetric(target)
            deviation = entrywise_deviation(h_hat, target)
            comparison = TargetComparison(
                deviation=deviation,
                analog_accuracy=analog_accuracy(h_hat, target),
                max_deviation=float(deviation.max()),
                frequency_accuracy=analog_accuracy(freqs, target_freqs),
                frequency_deviations=match_frequencies(freqs, target_freqs).deviations,
                initial_map_accuracy=analog_accuracy(s_hat, np.eye(n)),
            )
            logger.info(
                "identified N=%d: E_analog=%.3g MHz, max deviation=%.3g MHz, mu=%.4g",
                n, comparison.analog_accuracy, comparison.max_deviation, estimate.mu_used,
            )

        return IdentificationResult(
            geometry=geometry,
            hamiltonian=h_hat,
            rotated_hamiltonian=h_prime,
            initial_map=s_hat,
            final_map=final_map,
            signs=correction.signs,
            diagonal_phases=phases,
            final_phases=np.angle(np.diagonal(final_map)),
            frequencies=freqs.freqs,
            mu_used=estimate.mu_used,
            stages=estimate.stages,
            anchors_used=diagnostics["anchors_used"],
            fit=fit_deviation(data, h_hat, s_hat, final_map=final_map),
            leakage=leakage(h_hat, geometry),
            comparison=comparison,
            side=side,
        )


def identify(
    data: TimeSeriesData,
    geometry: LatticeGeometry,
    target: Optional[HamiltonianParams] = None,
    cfg: Optional[PipelineConfig] = None,
) -> IdentificationResult:
    return IdentificationService(cfg).identify(data, geometry, target)
