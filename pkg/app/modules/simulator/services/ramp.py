"""
Ramp model for the state-preparation and measurement maps.

Each entry of H(t) moves from its start value toward its end value at a fixed
speed and stays at the end value once reached; the map is the time-ordered
exponential of H(t) over the ramp plus an extra wait at the end value.

Dependencies: numpy
"""

import logging
from typing import Literal

import numpy as np

from app.modules.lattice.schemas.lattice import HamiltonianParams, SpamMap
from app.modules.lattice.services.lattice import propagator
from app.modules.simulator.schemas.simulator import RampModelConfig

logger = logging.getLogger(__name__)

Direction = Literal["in", "out"]


def ramp_hamiltonian(start: np.ndarray, end: np.ndarray, speed: float, t: float) -> np.ndarray:
    """Entry-wise linear ramp from ``start`` toward ``end`` clamped at the end value."""
    distance = np.abs(end - start)
    moving = start + np.sign(end - start) * speed * t
    return np.where(distance <= speed * t, end, moving)


def ramp_duration(start: np.ndarray, end: np.ndarray, cfg: RampModelConfig) -> float:
    return float(np.max(np.abs(end - start), initial=0.0)) / cfg.speed + cfg.wait_time


def simulate_ramp_map(
    h_target: HamiltonianParams, cfg: RampModelConfig, direction: Direction
) -> SpamMap:
    """
    Time-ordered exponential of the ramp by piecewise-constant product integration.

    Args:
        h_target: Hamiltonian at the rendezvous point
        cfg: Ramp model parameters, including the idle matrix h_m
        direction: "in" ramps h_m → h_target (model for S), "out" ramps
            h_target → h_m (model for M)

    Returns:
        SpamMap with the modelled map
    """
    if cfg.idle_matrix.shape != h_target.matrix.shape:
        raise ValueError(
            f"Idle matrix {cfg.idle_matrix.shape} does not match target {h_target.matrix.shape}"
        )
    if direction == "in":
        start, end = cfg.idle_matrix, h_target.matrix
    elif direction == "out":
        start, end = h_target.matrix, cfg.idle_matrix
    else:
        raise ValueError(f"Unknown ramp direction {direction!r}")

    tau = ramp_duration(start, end, cfg)
    n = h_target.n
    if tau <= 0:
        return SpamMap.identity(n)

    steps = int(np.ceil(tau / cfg.integration_step))
    step = tau / steps
    unitary = np.eye(n, dtype=complex)
    # later times act from the left
    for k in range(steps):
        midpoint = (k + 0.5) * step
        unitary = propagator(ramp_hamiltonian(start, end, cfg.speed, midpoint), step) @ unitary

    logger.debug("ramp %s: tau=%.4f ns in %d steps", direction, tau, steps)
    return SpamMap(matrix=unitary)


def draw_idle_detunings(
    n: int, rng: np.random.Generator, low_mhz: float = 100.0, high_mhz: float = 500.0
) -> np.ndarray:
    """Idle-frame detunings with magnitudes uniform in [low, high] and random signs."""
    magnitudes = rng.uniform(low_mhz, high_mhz, size=n)
    signs = rng.choice([-1.0, 1.0], size=n)
    return np.diag(signs * magnitudes)
