"""
Ramp-phase calibration from diagonal-Hamiltonian runs.

For diagonal dynamics the estimated initial map is diagonal, and its phases
are the phases picked up during the ramp into the rendezvous point. Plotted
against the ramp distance they are bounded by a line whose slope is the
total ramp time; the offset at a reference distance gives the wait time.

Dependencies: numpy, scipy, pandas
"""

import logging
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.optimize import linprog

from app.modules.core.errors import DimensionMismatchError
from app.modules.erroranalysis.schemas.erroranalysis import (
    CalibrationConfig,
    CalibrationFit,
    CalibrationRun,
)
from app.modules.lattice.schemas.lattice import HamiltonianParams, LatticeGeometry, TimeGrid
from app.modules.lattice.services.lattice import TWO_PI_MHZ_NS
from app.modules.metrics.services.metrics import analog_accuracy, as_array
from app.modules.simulator.schemas.simulator import NoiseConfig, RampModelConfig
from app.modules.simulator.services.ramp import simulate_ramp_map
from app.modules.simulator.services.simulator import sample_shots, simulate_exact
from app.modules.spamproc.services.spamproc import estimate_initial_map

logger = logging.getLogger(__name__)

# degrees per MHz·ns
DEGREES_PER_MHZ_NS = np.degrees(TWO_PI_MHZ_NS)


def run_phases(run: CalibrationRun) -> tuple[np.ndarray, np.ndarray]:
    """Ramp distances (MHz) and accumulated phases in [0, 360) degrees per site."""
    initial_map = estimate_initial_map(run.data, run.h_hat).matrix
    phases = np.mod(-np.degrees(np.angle(np.diagonal(initial_map))), 360.0)
    distances = np.abs(np.diagonal(run.h_hat) - np.diagonal(run.idle))
    return distances, phases


def _upper_envelope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    # lowest line a·x + c lying above every point, measured by Σ(a·x + c)
    result = linprog(
        c=[x.sum(), x.size],
        A_ub=-np.column_stack([x, np.ones_like(x)]),
        b_ub=-y,
        bounds=[(None, None), (None, None)],
        method="highs",
    )
    if not result.success:
        raise ValueError(f"Envelope fit failed: {result.message}")
    slope, intercept = result.x
    return float(slope), float(intercept)


def diag_phase_calibration(
    datasets: Sequence[CalibrationRun],
    cfg: Optional[CalibrationConfig] = None,
) -> CalibrationFit:
    """
    Phase-versus-ramp-distance table with a linear upper envelope and a
    quadratic least-squares fit, both over points below the outlier cutoff.

    Raises:
        ValueError: fewer than 3 distinct ramp distances
    """
    cfg = cfg or CalibrationConfig()
    distances, phases, runs, sites = [], [], [], []
    for index, run in enumerate(datasets):
        d, p = run_phases(run)
        distances.append(d)
        phases.append(p)
        runs.append(np.full(d.size, index))
        sites.append(np.arange(d.size))
    if not distances:
        raise ValueError("No calibration runs given")

    distances = np.concatenate(distances)
    phases = np.concatenate(phases)
    inliers = phases < cfg.outlier_cutoff_deg
    x, y = distances[inliers], phases[inliers]
    if np.unique(np.round(x, 9)).size < 3:
        raise ValueError("Calibration needs at least 3 distinct ramp distances below the cutoff")
    excluded = int(inliers.size - inliers.sum())
    if excluded:
        logger.info("excluded %d points above %.0f deg", excluded, cfg.outlier_cutoff_deg)

    slope, intercept = _upper_envelope(x, y)
    quadratic = np.polyfit(x, y, 2)
    reference = cfg.reference_distance_mhz
    offset = slope * reference + intercept
    ramp_phase = DEGREES_PER_MHZ_NS * cfg.ramps_per_run * reference ** 2 / (2 * cfg.speed)
    wait_offset = offset - ramp_phase
    wait = wait_offset / (DEGREES_PER_MHZ_NS * cfg.ramps_per_run * reference)

    return CalibrationFit(
        distances=distances,
        phases_deg=phases,
        runs=np.concatenate(runs),
        sites=np.concatenate(sites),
        inliers=inliers,
        envelope_slope=slope,
        envelope_intercept=intercept,
        total_ramp_time=slope / DEGREES_PER_MHZ_NS,
        offset_deg=float(offset),
        wait_offset_deg=float(wait_offset),
        wait_time=float(wait),
        quadratic=tuple(float(c) for c in quadratic),
    )


def calibration_table(fit: CalibrationFit) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "run": fit.runs,
            "site": fit.sites + 1,
            "ramp_distance_mhz": fit.distances,
            "phase_deg": fit.phases_deg,
            "envelope_deg": fit.envelope_slope * fit.distances + fit.envelope_intercept,
            "inlier": fit.inliers,
        }
    )


def simulate_calibration_runs(
    distances: Iterable[float],
    ramp: RampModelConfig,
    grid: TimeGrid,
    noise: Optional[NoiseConfig] = None,
    sites_per_run: int = 1,
) -> list[CalibrationRun]:
    """
    Synthetic diagonal runs: each site ramps from its idle frequency (0 in
    the idle frame) to its ramp distance, then evolves freely.

    ``ramp.idle_matrix`` is ignored; the speed, wait and step are used.
    """
    distances = np.asarray(list(distances), dtype=float)
    runs = []
    for start in range(0, distances.size, sites_per_run):
        chunk = distances[start:start + sites_per_run]
        n = chunk.size
        target = HamiltonianParams(matrix=np.diag(chunk), geometry=LatticeGeometry(num_sites=n))
        cfg = RampModelConfig(
            idle_matrix=np.zeros(n),
            speed=ramp.speed,
            wait_time=ramp.wait_time,
            integration_step=ramp.integration_step,
        )
        initial_map = simulate_ramp_map(target, cfg, "in")
        data = simulate_exact(target, initial_map, None, grid)
        if noise is not None:
            data = sample_shots(data, noise)
        runs.append(CalibrationRun(data=data, h_hat=np.diag(chunk), idle=np.zeros(n)))
    return runs


def ramp_distance_table(
    results: Sequence[tuple[np.ndarray | HamiltonianParams, np.ndarray]],
    idle: np.ndarray,
) -> pd.DataFrame:
    """
    Deviation of Ŝ′ from the identity against the largest ramp distance of
    each run.

    Args:
        results: (target h₀, identified Ŝ′) pairs
        idle: Diagonal idle-frame frequencies h_m, as a vector or matrix
    """
    idle = np.asarray(idle, dtype=float)
    idle_diag = np.diagonal(idle) if idle.ndim == 2 else idle
    rows = []
    for target, initial_map in results:
        h0 = as_array(target)
        if h0.shape[0] != idle_diag.size:
            raise DimensionMismatchError(f"Target N={h0.shape[0]}, idle N={idle_diag.size}")
        rows.append(
            {
                "ramp_distance_mhz": float(np.max(np.abs(np.diagonal(h0) - idle_diag))),
                "initial_map_deviation": analog_accuracy(initial_map, np.eye(h0.shape[0])),
            }
        )
    return pd.DataFrame(rows, columns=["ramp_distance_mhz", "initial_map_deviation"])
