"""
Statistical error bars by parametric bootstrap.

Every resample re-simulates the identified model with a fresh Haar-random
initial map, draws shot noise and identifies again without regularisation;
the configured quantile of each deviation statistic is reported.

Dependencies: numpy, joblib
"""

import logging
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from app.modules.core.config import settings
from app.modules.core.errors import BootstrapUnreliableError, IdentificationError
from app.modules.erroranalysis.schemas.erroranalysis import BootstrapConfig, StatisticalErrors
from app.modules.identification.schemas.identification import PipelineConfig
from app.modules.identification.services.identification import identify
from app.modules.lattice.schemas.lattice import HamiltonianParams, TimeGrid
from app.modules.lattice.services.lattice import eig_symmetric
from app.modules.metrics.services.metrics import analog_accuracy
from app.modules.simulator.schemas.simulator import NoiseConfig
from app.modules.simulator.services.simulator import (
    haar_random_unitary,
    sample_shots,
    simulate_exact,
)

logger = logging.getLogger(__name__)


def bootstrap_pipeline(pipeline: Optional[PipelineConfig] = None) -> PipelineConfig:
    """Unregularised single-start variant of ``pipeline`` used for resamples."""
    base = (pipeline or PipelineConfig()).without_regularization()
    eigensolve = base.eigensolve.model_copy(update={"restarts": 0, "n_jobs": 1})
    return base.model_copy(update={"eigensolve": eigensolve, "target_initialisation": True})


def _resample(
    h_hat: HamiltonianParams,
    grid: TimeGrid,
    shots,
    seed: np.random.SeedSequence,
    pipeline: PipelineConfig,
    reference_freqs: np.ndarray,
):
    rng = np.random.default_rng(seed)
    initial_map = haar_random_unitary(h_hat.n, rng)
    exact = simulate_exact(h_hat, initial_map, None, grid)
    noise = NoiseConfig(shots=shots, rng_seed=int(rng.integers(2**63 - 1)))
    data = sample_shots(exact, noise)
    try:
        result = identify(data, h_hat.geometry, h_hat, pipeline)
    except IdentificationError as exc:
        logger.debug("resample failed in %s: %s", exc.stage, exc)
        return None
    deviation = np.abs(result.hamiltonian - h_hat.matrix)
    return (
        deviation,
        analog_accuracy(result.hamiltonian, h_hat.matrix),
        analog_accuracy(result.frequencies, reference_freqs),
    )


def bootstrap(
    h_hat: HamiltonianParams,
    grid: TimeGrid,
    cfg: Optional[BootstrapConfig] = None,
    pipeline: Optional[PipelineConfig] = None,
) -> StatisticalErrors:
    """
    Parametric bootstrap around ``h_hat``.

    Args:
        h_hat: Identified model (support not enforced)
        grid: Sampling grid of the original record
        cfg: Resample count, quantile, shots and seed
        pipeline: Identification settings; regularisation and random
            restarts are switched off

    Raises:
        BootstrapUnreliableError: every resample failed
    """
    cfg = cfg or BootstrapConfig()
    resample_pipeline = bootstrap_pipeline(pipeline)
    reference_freqs = eig_symmetric(h_hat)[0].freqs
    children = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.resamples)
    workers = cfg.n_jobs if cfg.n_jobs is not None else settings.n_jobs

    outcomes = Parallel(n_jobs=workers)(
        delayed(_resample)(h_hat, grid, cfg.shots, child, resample_pipeline, reference_freqs)
        for child in children
    )
    succeeded = [o for o in outcomes if o is not None]
    failures = len(outcomes) - len(succeeded)
    if not succeeded:
        raise BootstrapUnreliableError(f"All {cfg.resamples} bootstrap resamples failed")

    rate = failures / cfg.resamples
    reliable = rate <= cfg.max_failure_rate
    if not reliable:
        logger.warning("bootstrap failure rate %.1f%% exceeds limit", 100 * rate)

    deviations = np.stack([o[0] for o in succeeded])
    per_entry = np.quantile(deviations, cfg.quantile, axis=0)
    return StatisticalErrors(
        per_entry=per_entry,
        per_entry_max=float(per_entry.max()),
        accuracy=float(np.quantile([o[1] for o in succeeded], cfg.quantile)),
        frequency=float(np.quantile([o[2] for o in succeeded], cfg.quantile)),
        resamples=cfg.resamples,
        failures=failures,
        reliable=reliable,
    )
