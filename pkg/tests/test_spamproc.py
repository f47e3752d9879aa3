import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.modules.core.errors import PreprocessError
from app.modules.lattice.schemas.lattice import LatticeGeometry, TimeGrid, TimeSeriesData
from app.modules.lattice.services.lattice import build_harper, eig_symmetric, propagator
from app.modules.simulator.services.simulator import (
    diagonal_phase_map,
    random_invertible_map,
    simulate_exact,
)
from app.modules.spamproc.schemas.spamproc import PreprocessConfig
from app.modules.spamproc.services.spamproc import (
    _greedy_signs,
    correct_diagonal_sign,
    estimate_diagonal_phases,
    estimate_final_map,
    estimate_initial_map,
    final_map_phases,
    remove_ramp,
)
from app.modules.spectral.schemas.spectral import EspritConfig
from app.modules.spectral.services.spectral import esprit

PLANTED_PHASES = np.array([0.1, 2.5, -0.3, -2.8, 0.2])


@pytest.fixture
def spam_data(harper5, grid201, rng):
    S = random_invertible_map(5, rng)
    M = diagonal_phase_map(PLANTED_PHASES)
    return simulate_exact(harper5, S, M, grid201), S


def test_remove_ramp_cancels_initial_map(harper5, spam_data):
    data, _ = spam_data
    rel = remove_ramp(data, PreprocessConfig(stride=20, window=10))
    M = np.diag(np.exp(1j * PLANTED_PHASES))
    for anchor in rel.block_anchors():
        times, blocks = rel.block(anchor)
        for t, block in zip(times, blocks):
            assert_allclose(block, M @ propagator(harper5, t) @ M.conj().T, atol=1e-8)


def test_remove_ramp_windows_are_clipped(exact5):
    rel = remove_ramp(exact5, PreprocessConfig(stride=100, window=50))
    assert rel.block_anchors() == (0, 100, 200)
    assert rel.num_samples == 51 + 101 + 51
    assert rel.offsets.min() == -50 and rel.offsets.max() == 50


def test_final_side_cancels_final_map(harper5, grid201, rng):
    M = random_invertible_map(5, rng)
    data = simulate_exact(harper5, None, M, grid201)
    rel = remove_ramp(data, PreprocessConfig(stride=50, window=5, side="final"))
    times, blocks = rel.block(50)
    assert_allclose(blocks[-1], propagator(harper5, times[-1]), atol=1e-8)


def test_relative_trace_gives_frequencies(harper5, spam_data):
    data, _ = spam_data
    rel = remove_ramp(data, PreprocessConfig())
    found = esprit(rel.trace_signal(), EspritConfig(model_order=5))
    assert_allclose(found.freqs, eig_symmetric(harper5)[0].freqs, atol=1e-6)


def test_ill_conditioned_record_is_rejected(grid201):
    zeros = TimeSeriesData(values=np.zeros((3, 3, 201)), grid=grid201)
    with pytest.raises(PreprocessError):
        remove_ramp(zeros, PreprocessConfig(stride=10))
    with pytest.raises(ValueError):
        remove_ramp(zeros, PreprocessConfig(stride=500))


def test_diagonal_phases_up_to_sign(spam_data):
    data, _ = spam_data
    phases = estimate_diagonal_phases(remove_ramp(data, PreprocessConfig(stride=10)))
    assert np.all(np.abs(phases) <= np.pi / 2 + 1e-12)
    doubled = np.exp(2j * (phases - PLANTED_PHASES))
    assert_allclose(doubled, doubled[0], atol=1e-6)


@pytest.mark.parametrize("stride", [1, 5, 20])
@pytest.mark.parametrize("window", [10, 50, 201])
def test_window_and_stride_do_not_change_exact_results(harper5, spam_data, stride, window):
    data, _ = spam_data
    rel = remove_ramp(data, PreprocessConfig(stride=stride, window=window))
    grouped = rel.grouped()
    M = np.diag(np.exp(1j * PLANTED_PHASES))
    for offset, mean in zip(grouped.offsets, grouped.means):
        assert_allclose(mean, M @ propagator(harper5, offset * data.grid.dt) @ M.conj().T, atol=1e-8)
    assert grouped.within_ss < 1e-12

    doubled = np.exp(2j * (estimate_diagonal_phases(rel) - PLANTED_PHASES))
    assert_allclose(doubled, doubled[0], atol=1e-8)
    found = esprit(rel.trace_signal(), EspritConfig(model_order=5))
    assert_allclose(found.freqs, eig_symmetric(harper5)[0].freqs, atol=1e-6)


def test_diagonal_phases_single_site():
    geometry = LatticeGeometry(num_sites=1)
    data = simulate_exact(build_harper(1, 0.0, 20.0, geometry), None, None, TimeGrid(dt=1.0, num_samples=10))
    assert estimate_diagonal_phases(remove_ramp(data, PreprocessConfig())).tolist() == [0.0]


def test_final_map_phases_wrap():
    assert_allclose(final_map_phases([0.1, 0.2], [1, -1]), [0.1, 0.2 - np.pi])


def test_initial_map_inverts_data_model(harper5, spam_data):
    data, S = spam_data
    estimate = estimate_initial_map(data, harper5, final_map=PLANTED_PHASES)
    assert_allclose(estimate.matrix, S.matrix, atol=1e-10)


def test_final_map_inverts_data_model(harper5, spam_data):
    data, S = spam_data
    estimate = estimate_final_map(data, harper5, initial_map=S.matrix)
    assert_allclose(estimate.matrix, np.diag(np.exp(1j * PLANTED_PHASES)), atol=1e-10)


def test_sign_correction_recovers_target(harper5, rng):
    flips = np.array([1.0, -1.0, -1.0, 1.0, -1.0])
    h_prime = flips[:, None] * harper5.matrix * flips[None, :]
    S_prime = random_invertible_map(5, rng).matrix
    result = correct_diagonal_sign(h_prime, S_prime, harper5)
    assert_allclose(result.signs, flips)
    assert_allclose(result.hamiltonian, harper5.matrix, atol=1e-12)
    assert_allclose(result.initial_map, flips[:, None] * S_prime)


def test_greedy_signs_on_long_chain():
    geometry = LatticeGeometry.chain(30)
    h = build_harper(30, 0.3, 20.0, geometry).matrix
    flips = np.ones(30)
    flips[[3, 10, 20, 27]] = -1.0
    h_prime = flips[:, None] * h * flips[None, :]
    assert_allclose(_greedy_signs(h_prime * h), flips)
    result = correct_diagonal_sign(h_prime, np.eye(30), h)
    assert_allclose(result.hamiltonian, h, atol=1e-12)

