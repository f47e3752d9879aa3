"""
Systematic error from the final ramp.

The identified ĥ′ equals O_M·h·O_Mᵀ when the final map is close to a real
orthogonal O_M. Projecting the modelled final map onto real orthogonal
matrices and undoing the rotation shows how far the ramp moves the estimate.
"""

import logging
from typing import Optional

import numpy as np
from scipy import linalg

from app.modules.erroranalysis.schemas.erroranalysis import SystematicErrors
from app.modules.lattice.schemas.lattice import HamiltonianParams, SpamMap
from app.modules.metrics.services.metrics import analog_accuracy, as_array
from app.modules.simulator.schemas.simulator import RampModelConfig
from app.modules.simulator.services.ramp import draw_idle_detunings, simulate_ramp_map
from app.modules.spamproc.services.spamproc import correct_diagonal_sign

logger = logging.getLogger(__name__)


def nearest_orthogonal(final_map: np.ndarray) -> np.ndarray:
    """Polar factor U·Wᵀ of Re(M) = U·Σ·Wᵀ, the real orthogonal O closest to M."""
    u, _, wt = linalg.svd(np.real(np.asarray(final_map)))
    return u @ wt


def systematic_from_map(
    h_prime: np.ndarray | HamiltonianParams,
    h_target: np.ndarray | HamiltonianParams,
    final_map: np.ndarray | SpamMap,
) -> SystematicErrors:
    """
    Compare ĥ with h̄ = Ō_Mᵀ·ĥ′·Ō_M, both sign-corrected against the target.
    """
    h_prime, target = as_array(h_prime), as_array(h_target)
    final_map = as_array(final_map)
    n = h_prime.shape[0]
    rotation = nearest_orthogonal(final_map)
    unrotated = rotation.T @ h_prime @ rotation

    identity = np.eye(n)
    h_bar = correct_diagonal_sign(unrotated, identity, target).hamiltonian
    h_hat = correct_diagonal_sign(h_prime, identity, target).hamiltonian
    deviation = np.abs(h_bar - h_hat)
    off = deviation[~np.eye(n, dtype=bool)]
    return SystematicErrors(
        diagonal=float(np.diagonal(deviation).max()),
        off_diagonal=float(off.max()) if off.size else 0.0,
        accuracy=analog_accuracy(h_bar, h_hat),
        projected_map=rotation,
        map_phases=np.angle(np.diagonal(final_map)),
    )


def ramp_systematic(
    h_hat_prime: np.ndarray | HamiltonianParams,
    h_target: HamiltonianParams,
    cfg: Optional[RampModelConfig] = None,
) -> SystematicErrors:
    """
    Systematic error estimate from the modelled final ramp
    M̄ = simulate_ramp_map(h_target, cfg, "out").
    """
    if cfg is None:
        idle = draw_idle_detunings(h_target.n, np.random.default_rng(0))
        cfg = RampModelConfig(idle_matrix=idle)
    modelled = simulate_ramp_map(h_target, cfg, "out")
    report = systematic_from_map(h_hat_prime, h_target, modelled.matrix)
    logger.info(
        "ramp systematic: diagonal %.3g MHz, off-diagonal %.3g MHz",
        report.diagonal, report.off_diagonal,
    )
    return report
