"""
Step 2 of identification: eigenbasis reconstruction on the orthogonal group.

Conjugate gradient with the exponential retraction V ← expm(-t·H)·V,
Polak-Ribière+ conjugacy and Armijo backtracking, run from several starts at
mu = 0 and then warm-started along a geometric mu ramp that is cut as soon as
the data fit leaves the accepted margin.

Dependencies: numpy, scipy, joblib
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg
from scipy.stats import ortho_group

from app.modules.core.errors import ConvergenceError
from app.modules.eigensolve.schemas.eigensolve import (
    EigenbasisEstimate,
    EigenSolveConfig,
    StageRecord,
)
from app.modules.eigensolve.services.objective import EigenspaceObjective, Support
from app.modules.lattice.schemas.lattice import FrequencySet
from app.modules.spamproc.schemas.spamproc import RelativeTimeSeries

logger = logging.getLogger(__name__)

MAX_ROTATION = np.pi
INITIAL_ROTATION = 0.1
MIN_STEP = 1e-16
REORTHONORMALIZE_EVERY = 100


@dataclass
class CGRun:
    V: np.ndarray
    value: float
    iterations: int
    gradient_norm: float
    converged: bool


def _polar(V: np.ndarray) -> np.ndarray:
    u, _, wt = linalg.svd(V)
    return u @ wt


def _inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(a * b))


def conjugate_gradient(
    problem: EigenspaceObjective,
    V0: np.ndarray,
    mu: float,
    cfg: EigenSolveConfig,
) -> CGRun:
    """
    Minimise ``problem`` at fixed ``mu`` from ``V0``.

    A run converges when ‖G‖ ≤ gradient_tolerance·total_weight, or when the
    objective stagnates (including a failed line search).
    """
    V = np.array(V0, dtype=float)
    value = problem.value(V, mu)
    grad = problem.riemannian_gradient(V, mu)
    direction = grad.copy()
    tolerance = cfg.gradient_tolerance * max(problem.total_weight, 1.0)
    reset_period = max(1, problem.n * (problem.n - 1) // 2)
    history = [value]
    step = None
    converged = False
    iteration = 0

    for iteration in range(1, cfg.max_iterations + 1):
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= tolerance:
            converged = True
            break

        # d/dt f(expm(-tH)·V) at t = 0
        slope = -0.5 * _inner(grad, direction)
        if slope >= 0:
            direction = grad.copy()
            slope = -0.5 * grad_norm ** 2

        dir_norm = float(np.linalg.norm(direction))
        t = INITIAL_ROTATION / dir_norm if step is None else 2.0 * step
        t = min(t, MAX_ROTATION / dir_norm)
        while True:
            candidate = linalg.expm(-t * direction) @ V
            candidate_value = problem.value(candidate, mu)
            if candidate_value <= value + cfg.sufficient_decrease * t * slope:
                break
            t *= cfg.line_search_shrink
            if t * dir_norm < MIN_STEP:
                candidate = None
                break

        if candidate is None:
            logger.debug("line search failed at iteration %d, |G|=%.3e", iteration, grad_norm)
            converged = True
            break

        if iteration % REORTHONORMALIZE_EVERY == 0:
            candidate = _polar(candidate)
            candidate_value = problem.value(candidate, mu)

        new_grad = problem.riemannian_gradient(candidate, mu)
        gamma = max(0.0, _inner(new_grad - grad, new_grad) / max(grad_norm ** 2, 1e-300))
        direction = new_grad if iteration % reset_period == 0 else new_grad + gamma * direction

        V, value, grad, step = candidate, candidate_value, new_grad, t
        history.append(value)
        if len(history) > cfg.stagnation_window:
            previous = history[-cfg.stagnation_window - 1]
            if previous - value <= cfg.stagnation_rtol * max(abs(value), 1.0):
                converged = True
                break

    return CGRun(
        V=V,
        value=value,
        iterations=iteration,
        gradient_norm=float(np.linalg.norm(grad)),
        converged=converged,
    )


def random_orthogonal(n: int, seed) -> np.ndarray:
    """Haar-random real orthogonal matrix."""
    if n == 1:
        return np.ones((1, 1))
    return ortho_group.rvs(dim=n, random_state=np.random.default_rng(seed))


def _initial_bases(
    n: int, cfg: EigenSolveConfig, initial_basis: Optional[np.ndarray]
) -> list[np.ndarray]:
    starts = []
    if initial_basis is not None:
        starts.append(np.asarray(initial_basis, dtype=float))
    children = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.restarts)
    starts.extend(random_orthogonal(n, child) for child in children)
    if not starts:
        starts.append(np.eye(n))
    return starts


def minimize(
    freqs: FrequencySet,
    data: RelativeTimeSeries,
    omega: Support,
    cfg: Optional[EigenSolveConfig] = None,
    initial_basis: Optional[np.ndarray] = None,
) -> EigenbasisEstimate:
    """
    Best-of-restarts eigenbasis at mu = 0 followed by the mu ramp.

    Args:
        freqs: Distinct frequencies, bound in ascending order to V's columns
        data: Relative-time series
        omega: Support set Ω (geometry or boolean mask); None disables the penalty
        cfg: Optimiser and schedule settings
        initial_basis: Extra start, typically the target's eigenbasis

    Raises:
        DegenerateSpectrumError: freqs not distinct
        ConvergenceError: no restart converged at mu = 0
    """
    cfg = cfg or EigenSolveConfig()
    freqs.require_distinct()
    problem = EigenspaceObjective(freqs, data, omega)

    starts = _initial_bases(problem.n, cfg, initial_basis)
    runs = Parallel(n_jobs=cfg.workers)(
        delayed(conjugate_gradient)(problem, start, 0.0, cfg) for start in starts
    )
    converged = [run for run in runs if run.converged]
    logger.info("%d of %d restarts converged at mu=0", len(converged), len(runs))
    if not converged:
        best = min(runs, key=lambda r: r.value)
        raise ConvergenceError(
            f"No restart converged at mu=0 (best objective {best.value:.6g}, "
            f"|G|={best.gradient_norm:.3e})"
        )

    best = min(converged, key=lambda r: r.value)
    base_fit = best.value
    stages = [
        StageRecord(
            mu=0.0,
            fit=base_fit,
            penalty=problem.penalty(best.V),
            iterations=best.iterations,
            gradient_norm=best.gradient_norm,
            converged=True,
            accepted=True,
        )
    ]
    V, mu_used = best.V, 0.0

    if cfg.regularize and problem.off_support.any():
        limit = (1.0 + cfg.fit_margin) * base_fit + cfg.fit_floor
        mu = cfg.mu_initial
        for _ in range(cfg.mu_max_stages):
            run = conjugate_gradient(problem, V, mu, cfg)
            fit = problem.fit(run.V)
            accepted = run.converged and fit <= limit
            stages.append(
                StageRecord(
                    mu=mu,
                    fit=fit,
                    penalty=problem.penalty(run.V),
                    iterations=run.iterations,
                    gradient_norm=run.gradient_norm,
                    converged=run.converged,
                    accepted=accepted,
                )
            )
            if not accepted:
                logger.info(
                    "mu=%.4g rejected: fit %.6g vs limit %.6g, converged=%s",
                    mu, fit, limit, run.converged,
                )
                break
            V, mu_used = run.V, mu
            mu *= cfg.mu_factor
        else:
            logger.info(
                "mu ramp stopped at the stage cap (%d stages, mu=%.4g) with the fit margin unused",
                cfg.mu_max_stages, mu_used,
            )

    return EigenbasisEstimate(
        V=V,
        objective=problem.value(V, mu_used),
        fit=problem.fit(V),
        penalty=problem.penalty(V),
        mu_used=mu_used,
        converged=True,
        stages=tuple(stages),
        restarts_converged=len(converged),
    )


def assemble_hamiltonian(
    V: EigenbasisEstimate | np.ndarray, freqs: FrequencySet
) -> np.ndarray:
    """ĥ = V·diag(λ)·Vᵀ, symmetrised."""
    basis = V.V if isinstance(V, EigenbasisEstimate) else np.asarray(V, dtype=float)
    h = (basis * freqs.freqs[None, :]) @ basis.T
    return (h + h.T) / 2
