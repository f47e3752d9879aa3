import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.modules.core.errors import DimensionMismatchError, PhysicalRangeError
from app.modules.lattice.schemas.lattice import SpamMap, TimeGrid, TimeSeriesData
from app.modules.lattice.services.lattice import TWO_PI_MHZ_NS, eig_symmetric
from app.modules.simulator.schemas.simulator import NoiseConfig
from app.modules.simulator.services.simulator import (
    diagonal_phase_map,
    haar_random_unitary,
    random_invertible_map,
    sample_shots,
    simulate_exact,
)


def test_exact_series_shape_and_start(exact5):
    assert exact5.values.shape == (5, 5, 201)
    assert exact5.is_exact
    assert_allclose(exact5.values[:, :, 0], 0.5 * np.eye(5), atol=1e-12)


def test_exact_series_is_half_unitary(exact5):
    for l in (0, 17, 200):
        y = 2 * exact5.values[:, :, l]
        assert_allclose(y @ y.conj().T, np.eye(5), atol=1e-10)


def test_spam_maps_enter_left_and_right(harper5, grid201, rng):
    S = random_invertible_map(5, rng)
    M = diagonal_phase_map(rng.uniform(-np.pi, np.pi, 5))
    data = simulate_exact(harper5, S, M, grid201)
    assert_allclose(data.values[:, :, 0], 0.5 * M.matrix @ S.matrix, atol=1e-12)


def test_spam_map_size_mismatch(harper5, grid201):
    with pytest.raises(DimensionMismatchError):
        simulate_exact(harper5, SpamMap.identity(4), None, grid201)


def test_sampling_is_deterministic(exact5):
    noise = NoiseConfig(shots=1000, rng_seed=7)
    first = sample_shots(exact5, noise)
    second = sample_shots(exact5, noise)
    assert np.array_equal(first.values, second.values)
    assert first.shots == 1000
    assert not np.array_equal(first.values, sample_shots(exact5, NoiseConfig(shots=1000, rng_seed=8)).values)


def test_sampled_values_stay_in_range(exact5):
    data = sample_shots(exact5, NoiseConfig(shots=50, rng_seed=0))
    assert np.all(np.abs(data.values.real) <= 0.5)
    assert np.all(np.abs(data.values.imag) <= 0.5)


def test_shot_noise_scales_with_shots(exact5):
    def spread(shots):
        data = sample_shots(exact5, NoiseConfig(shots=shots, rng_seed=3))
        return np.std(data.values - exact5.values)

    assert spread(4000) == pytest.approx(spread(1000) / 2, rel=0.1)


def test_out_of_range_expectations(harper5, grid201, caplog):
    data = simulate_exact(harper5, SpamMap(matrix=3 * np.eye(5)), None, grid201)
    with pytest.raises(PhysicalRangeError):
        sample_shots(data, NoiseConfig(shots=100))
    clipped = sample_shots(data, NoiseConfig(shots=100, clip=True))
    assert np.max(np.abs(clipped.values.real)) <= 0.5
    assert "clipping" in caplog.text


def test_exact_shots_pass_non_unitary_data_through(harper5, grid201, rng):
    S = random_invertible_map(5, rng, scale=0.3)
    data = simulate_exact(harper5, S, None, grid201)
    passed = sample_shots(data, NoiseConfig(shots="exact"))
    assert passed.is_exact
    assert_allclose(passed.values, data.values, atol=0)


def test_trace_identity(harper5, exact5):
    freqs, _ = eig_symmetric(harper5)
    times = exact5.grid.times
    expected = np.exp(-1j * TWO_PI_MHZ_NS * np.outer(freqs.freqs, times)).sum(axis=0)
    trace = 2 * np.einsum("iil->l", exact5.values)
    assert_allclose(trace, expected, atol=1e-10)


def test_sampling_is_unbiased(exact5):
    draws = np.mean(
        [sample_shots(exact5, NoiseConfig(shots=100, rng_seed=seed)).values[:, :, 50] for seed in range(400)],
        axis=0,
    )
    # standard error of each quadrature is at most 0.5 / sqrt(100 * 400)
    assert np.max(np.abs(draws - exact5.values[:, :, 50])) < 5 * 0.0025


def test_single_quadrature_spread():
    zeros = TimeSeriesData(values=np.zeros((1, 1, 10000)), grid=TimeGrid(dt=1.0, num_samples=10000))
    sampled = sample_shots(zeros, NoiseConfig(shots=1000, rng_seed=2))
    assert np.std(sampled.values.real) == pytest.approx(0.5 / np.sqrt(1000), rel=0.05)
    saturated = TimeSeriesData(values=np.full((1, 1, 10), 0.5), grid=TimeGrid(dt=1.0, num_samples=10))
    assert_allclose(sample_shots(saturated, NoiseConfig(shots=7)).values.real, 0.5)


def test_sampling_needs_exact_input(exact5):
    sampled = sample_shots(exact5, NoiseConfig(shots=10))
    with pytest.raises(ValueError):
        sample_shots(sampled, NoiseConfig(shots=10))


def test_damping_envelope(exact5):
    damped = sample_shots(exact5, NoiseConfig(shots="exact", damping_rate=0.01))
    assert_allclose(damped.values[:, :, 100], exact5.values[:, :, 100] * np.exp(-1.0), atol=1e-12)


@pytest.mark.parametrize("n", [1, 3, 6])
def test_haar_unitary(n):
    U = haar_random_unitary(n, seed=n).matrix
    assert_allclose(U @ U.conj().T, np.eye(n), atol=1e-12)
    assert np.array_equal(U, haar_random_unitary(n, seed=n).matrix)


def test_haar_single_site_phase_is_uniform():
    phases = np.array([haar_random_unitary(1, seed=k).matrix[0, 0] for k in range(10000)])
    assert abs(phases.mean()) < 0.05


def test_haar_second_moment():
    weights = np.array([abs(haar_random_unitary(4, seed=k).matrix[0, 0]) ** 2 for k in range(10000)])
    stderr = weights.std(ddof=1) / np.sqrt(weights.size)
    assert abs(weights.mean() - 0.25) < 3 * stderr
