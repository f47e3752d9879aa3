import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import linalg

from app.modules.core.errors import ConvergenceError, DegenerateSpectrumError
from app.modules.eigensolve.schemas.eigensolve import EigenSolveConfig
from app.modules.eigensolve.services.eigensolve import (
    assemble_hamiltonian,
    conjugate_gradient,
    minimize,
    random_orthogonal,
)
from app.modules.eigensolve.services.objective import EigenspaceObjective, objective, riemannian_gradient
from app.modules.identification.schemas.identification import PipelineConfig
from app.modules.identification.services.identification import identify
from app.modules.lattice.schemas.lattice import FrequencySet
from app.modules.lattice.services.lattice import build_harper, eig_symmetric
from app.modules.simulator.schemas.simulator import NoiseConfig
from app.modules.simulator.services.simulator import sample_shots, simulate_exact
from app.modules.spamproc.schemas.spamproc import PreprocessConfig
from app.modules.spamproc.services.spamproc import remove_ramp


@pytest.fixture
def relative5(exact5):
    return remove_ramp(exact5, PreprocessConfig(stride=20, window=10))


@pytest.fixture
def problem5(harper5, relative5):
    freqs, _ = eig_symmetric(harper5)
    return EigenspaceObjective(freqs, relative5, harper5.geometry)


def _random_skew(rng, n):
    a = rng.normal(size=(n, n))
    return a - a.T


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_difference(problem5, seed):
    rng = np.random.default_rng(seed)
    V = random_orthogonal(5, seed)
    xi = _random_skew(rng, 5)
    mu = 0.0 if seed % 2 else 3.0
    eps = 1e-5
    forward = problem5.value(linalg.expm(eps * xi) @ V, mu)
    backward = problem5.value(linalg.expm(-eps * xi) @ V, mu)
    numeric = (forward - backward) / (2 * eps)
    analytic = 0.5 * np.sum(problem5.riemannian_gradient(V, mu) * xi)
    assert numeric == pytest.approx(analytic, rel=1e-5, abs=1e-6)


def test_objective_is_invariant_under_column_signs(problem5):
    V = random_orthogonal(5, 3)
    flipped = V * np.array([1, -1, 1, -1, -1])
    assert problem5.value(flipped, 2.0) == pytest.approx(problem5.value(V, 2.0))


def test_objective_rejects_wrong_frequency_count(relative5):
    with pytest.raises(ValueError):
        EigenspaceObjective(FrequencySet(freqs=[1.0, 2.0]), relative5)


def test_cg_iterates_stay_orthogonal(problem5):
    cfg = EigenSolveConfig(max_iterations=150)
    run = conjugate_gradient(problem5, random_orthogonal(5, 7), 0.0, cfg)
    assert np.linalg.norm(run.V.T @ run.V - np.eye(5)) <= 1e-10
    assert run.value <= problem5.value(random_orthogonal(5, 7))


def test_minimize_from_true_basis_is_exact(harper5, relative5):
    freqs, vectors = eig_symmetric(harper5)
    estimate = minimize(freqs, relative5, harper5.geometry, EigenSolveConfig(restarts=0, n_jobs=1), vectors)
    h_hat = assemble_hamiltonian(estimate, freqs)
    assert_allclose(h_hat, harper5.matrix, atol=1e-8)
    assert_allclose(eig_symmetric(h_hat)[0].freqs, freqs.freqs, atol=1e-8)


def test_noiseless_mu_ramp_accepts_every_stage(harper5, relative5, caplog):
    freqs, vectors = eig_symmetric(harper5)
    cfg = EigenSolveConfig(restarts=0, n_jobs=1, mu_max_stages=5)
    with caplog.at_level(logging.INFO, logger="app.modules.eigensolve"):
        estimate = minimize(freqs, relative5, harper5.geometry, cfg, vectors)
    assert "stage cap" in caplog.text
    assert len(estimate.stages) == 6
    assert all(stage.accepted for stage in estimate.stages)
    assert estimate.mu_used == pytest.approx(cfg.mu_initial * cfg.mu_factor ** 4)
    assert estimate.penalty < 1e-6


def test_noisy_mu_ramp_keeps_fit_margin(harper5, exact5):
    sampled = sample_shots(exact5, NoiseConfig(shots=1000, rng_seed=5))
    relative = remove_ramp(sampled, PreprocessConfig(stride=10, window=20))
    freqs, vectors = eig_symmetric(harper5)
    cfg = EigenSolveConfig(restarts=0, n_jobs=1)
    estimate = minimize(freqs, relative, harper5.geometry, cfg, vectors)
    base = estimate.stages[0].fit
    accepted = [stage for stage in estimate.stages if stage.accepted]
    assert all(stage.fit <= (1 + cfg.fit_margin) * base + cfg.fit_floor for stage in accepted)
    assert estimate.penalty <= estimate.stages[0].penalty + 1e-12
    assert 10.0 <= estimate.mu_used <= 1e3


def test_regularisation_off_keeps_single_stage(harper5, relative5):
    freqs, vectors = eig_symmetric(harper5)
    cfg = EigenSolveConfig(restarts=0, n_jobs=1, regularize=False)
    estimate = minimize(freqs, relative5, harper5.geometry, cfg, vectors)
    assert len(estimate.stages) == 1 and estimate.mu_used == 0.0


@pytest.mark.slow
def test_random_restarts_recover_hamiltonian(harper5, relative5):
    freqs, _ = eig_symmetric(harper5)
    estimate = minimize(freqs, relative5, None, EigenSolveConfig(restarts=8, n_jobs=1))
    assert_allclose(assemble_hamiltonian(estimate, freqs), harper5.matrix, atol=1e-4)


def test_no_converged_restart_raises(harper5, relative5):
    freqs, _ = eig_symmetric(harper5)
    cfg = EigenSolveConfig(restarts=1, n_jobs=1, max_iterations=1)
    with pytest.raises(ConvergenceError):
        minimize(freqs, relative5, harper5.geometry, cfg)


def test_degenerate_frequencies_rejected(relative5):
    freqs = FrequencySet(freqs=[1.0, 1.0, 2.0, 3.0, 4.0])
    with pytest.raises(DegenerateSpectrumError):
        minimize(freqs, relative5, None, EigenSolveConfig(restarts=0, n_jobs=1))


def test_assemble_hamiltonian_trivial():
    assert_allclose(assemble_hamiltonian(np.eye(3), FrequencySet(freqs=[1.0, 2.0, 3.0])), np.diag([1.0, 2.0, 3.0]))


def test_functional_forms_match_objective(problem5, harper5, relative5):
    freqs, _ = eig_symmetric(harper5)
    V = random_orthogonal(5, 11)
    assert objective(V, freqs, relative5, 2.0, harper5.geometry) == pytest.approx(problem5.value(V, 2.0))
    G = riemannian_gradient(V, freqs, relative5, 2.0, harper5.geometry)
    assert_allclose(G, -G.T, atol=1e-10)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_random_start_round_trip_with_support(chain5, grid201, seed):
    rng = np.random.default_rng(200 + seed)
    target = build_harper(5, rng.uniform(0.0, 1.0), 20.0, chain5)
    data = simulate_exact(target, None, None, grid201)
    pipeline = PipelineConfig(
        target_initialisation=False,
        eigensolve=EigenSolveConfig(restarts=8, n_jobs=1, rng_seed=seed),
    )
    result = identify(data, chain5, target, pipeline)
    assert result.comparison.analog_accuracy < 1e-3
    assert result.comparison.max_deviation < 1e-3
