import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.modules.core.errors import DimensionMismatchError
from app.modules.lattice.schemas.lattice import FrequencySet, LatticeGeometry
from app.modules.metrics.services.metrics import (
    analog_accuracy,
    entrywise_deviation,
    fit_deviation,
    leakage,
    predicted_series,
)


def test_analog_accuracy_is_scaled_frobenius_norm():
    a = np.zeros((4, 4))
    b = np.zeros((4, 4))
    b[0, 1] = b[1, 0] = 2.0
    assert analog_accuracy(a, b) == pytest.approx(np.sqrt(8.0) / 4)
    assert analog_accuracy(b, b) == 0.0


def test_analog_accuracy_on_frequency_sets():
    a = FrequencySet(freqs=[3.0, 1.0])
    b = FrequencySet(freqs=[1.5, 3.0])
    assert analog_accuracy(a, b) == pytest.approx(0.25)


@pytest.mark.parametrize("seed", range(10))
def test_analog_accuracy_is_a_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)) for _ in range(3))
    assert analog_accuracy(a, b) == pytest.approx(analog_accuracy(b, a))
    assert analog_accuracy(a, c) <= analog_accuracy(a, b) + analog_accuracy(b, c) + 1e-12
    assert analog_accuracy(a, a) == 0.0
    assert analog_accuracy(a, b) > 0.0


@pytest.mark.parametrize("seed", range(10))
def test_frequency_accuracy_bounds_hamiltonian_accuracy(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=10.0, size=(5, 5))
    b = rng.normal(scale=10.0, size=(5, 5))
    a, b = a + a.T, b + b.T
    freqs_a = FrequencySet(freqs=np.linalg.eigvalsh(a))
    freqs_b = FrequencySet(freqs=np.linalg.eigvalsh(b))
    assert analog_accuracy(freqs_a, freqs_b) <= analog_accuracy(a, b) + 1e-12


def test_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        analog_accuracy(np.eye(2), np.eye(3))
    with pytest.raises(DimensionMismatchError):
        entrywise_deviation(np.eye(2), np.eye(3))


def test_leakage_counts_only_off_support():
    h = np.full((3, 3), 1.0)
    h[0, 2] = h[2, 0] = -4.0
    result = leakage(h, LatticeGeometry.chain(3))
    assert result.norm == pytest.approx(np.sqrt(32.0))
    assert result.max_abs == 4.0


def test_fit_is_zero_for_true_model(harper5, exact5):
    fit = fit_deviation(exact5, harper5, np.eye(5))
    assert fit.total_rms < 1e-12
    assert fit.per_series_rms.shape == (5, 5)
    assert fit.instantaneous_rms.shape == (201,)


def test_fit_sees_final_phases(harper5, exact5):
    phases = np.array([0.0, 0.0, 0.0, 0.0, np.pi])
    fit = fit_deviation(exact5, harper5, np.eye(5), final_phases=phases)
    # row 5 of the model is negated
    assert fit.per_series_rms[4].max() > 0.1
    assert_allclose(fit.per_series_rms[:4], 0.0, atol=1e-12)
    flipped = fit_deviation(exact5, harper5, np.eye(5), D_M=[1, 1, 1, 1, -1], final_phases=phases)
    assert flipped.total_rms < 1e-12


def test_predicted_series_starts_at_half_product(harper5, grid201, rng):
    S = rng.normal(size=(5, 5))
    series = predicted_series(harper5, S, grid201.times, np.eye(5))
    assert series.shape == (5, 5, 201)
    assert_allclose(series[:, :, 0], 0.5 * S, atol=1e-12)
