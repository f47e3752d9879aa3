import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.modules.core.errors import DimensionMismatchError, RankDeficiencyError
from app.modules.lattice.schemas.lattice import FrequencySet, TimeGrid
from app.modules.lattice.services.lattice import TWO_PI_MHZ_NS, eig_symmetric
from app.modules.simulator.schemas.simulator import NoiseConfig
from app.modules.simulator.services.simulator import sample_shots
from app.modules.spectral.schemas.spectral import EspritConfig, TraceSignal
from app.modules.spectral.services.spectral import esprit, match_frequencies, trace_signal


def _sinusoids(freqs, grid: TimeGrid) -> TraceSignal:
    samples = np.exp(-1j * TWO_PI_MHZ_NS * np.outer(grid.times, freqs)).sum(axis=1)
    return TraceSignal(samples=samples, grid=grid, exact=True)


def test_trace_of_identity_evolution_starts_at_half_n(exact5):
    signal = trace_signal(exact5)
    assert signal.exact
    assert signal.samples[0] == pytest.approx(2.5)


def test_exact_frequencies_recovered(harper5, exact5):
    expected, _ = eig_symmetric(harper5)
    found = esprit(trace_signal(exact5), EspritConfig(model_order=5))
    assert_allclose(found.freqs, expected.freqs, atol=1e-6)


def test_super_resolution_below_fourier_limit(grid201):
    # 0.2 of the 1/(2T) spacing
    gap = 0.2 * 0.5 / (grid201.num_samples * grid201.dt * 1e-3)
    freqs = np.array([-40.0, -10.0, 0.0, gap, 30.0])
    found = esprit(_sinusoids(freqs, grid201), EspritConfig(model_order=5))
    assert_allclose(found.freqs, np.sort(freqs), atol=1e-6)


def test_sampled_frequencies_close(harper5, exact5):
    expected, _ = eig_symmetric(harper5)
    sampled = sample_shots(exact5, NoiseConfig(shots=2000, rng_seed=11))
    found = esprit(trace_signal(sampled), EspritConfig(model_order=5))
    assert np.max(np.abs(found.freqs - expected.freqs)) < 0.5


@pytest.mark.parametrize("rows", [10, 100, 190])
def test_hankel_rows_do_not_change_exact_answer(grid201, rows):
    freqs = np.array([-25.0, 5.0, 60.0])
    found = esprit(_sinusoids(freqs, grid201), EspritConfig(model_order=3, hankel_rows=rows))
    assert_allclose(found.freqs, np.sort(freqs), atol=1e-6)


def test_too_few_modes_in_signal(grid201):
    with pytest.raises(RankDeficiencyError):
        esprit(_sinusoids([-10.0, 10.0], grid201), EspritConfig(model_order=3))


def test_short_signal_and_bad_hankel_rows():
    grid = TimeGrid(dt=1.0, num_samples=4)
    with pytest.raises(ValueError):
        esprit(_sinusoids([1.0, 2.0, 3.0], grid), EspritConfig(model_order=3))
    with pytest.raises(ValueError):
        esprit(_sinusoids([1.0], grid), EspritConfig(model_order=1, hankel_rows=4))


def test_match_frequencies_pairs_sorted_order():
    match = match_frequencies(FrequencySet(freqs=[3.0, -1.0, 7.2]), FrequencySet(freqs=[7.0, 3.1, -1.0]))
    # both sets are stored sorted, so the pairing is positional
    assert match.permutation == (0, 1, 2)
    assert_allclose(match.deviations, [0.0, 0.1, 0.2], atol=1e-12)
    with pytest.raises(DimensionMismatchError):
        match_frequencies(FrequencySet(freqs=[1.0]), FrequencySet(freqs=[1.0, 2.0]))
