import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy import linalg

from app.modules.core.errors import BootstrapUnreliableError, DimensionMismatchError, IdentificationError
from app.modules.erroranalysis.schemas.erroranalysis import BootstrapConfig, CalibrationConfig, CalibrationRun
from app.modules.erroranalysis.services import bootstrap as bootstrap_module
from app.modules.erroranalysis.services.bootstrap import bootstrap, bootstrap_pipeline
from app.modules.erroranalysis.services.calibration import (
    calibration_table,
    diag_phase_calibration,
    ramp_distance_table,
    simulate_calibration_runs,
)
from app.modules.erroranalysis.services.systematic import (
    nearest_orthogonal,
    ramp_systematic,
    systematic_from_map,
)
from app.modules.lattice.schemas.lattice import HamiltonianParams, LatticeGeometry, TimeGrid
from app.modules.lattice.services.lattice import TWO_PI_MHZ_NS
from app.modules.simulator.schemas.simulator import RampModelConfig
from app.modules.simulator.services.simulator import diagonal_phase_map, simulate_exact


def test_high_quantile_needs_many_resamples():
    with pytest.raises(ValidationError):
        BootstrapConfig(resamples=50, quantile=0.99)
    assert BootstrapConfig(resamples=50, quantile=0.9).resamples == 50


def test_bootstrap_pipeline_is_single_start_unregularised(fast_pipeline):
    pipeline = bootstrap_pipeline(fast_pipeline)
    assert not pipeline.eigensolve.regularize
    assert pipeline.eigensolve.restarts == 0
    assert pipeline.target_initialisation


def test_small_bootstrap(harper5, grid201):
    cfg = BootstrapConfig(resamples=8, quantile=0.9, shots=1000, n_jobs=1)
    errors = bootstrap(harper5, grid201, cfg)
    assert errors.per_entry.shape == (5, 5)
    assert errors.failures == 0 and errors.reliable
    assert 0 < errors.per_entry_max < 2.0
    assert errors.frequency < 1.0
    again = bootstrap(harper5, grid201, cfg)
    assert np.array_equal(errors.per_entry, again.per_entry)


def test_bootstrap_with_every_resample_failing(harper5, grid201, monkeypatch):
    def failing(*args, **kwargs):
        raise IdentificationError("planted", "eigensolve")

    monkeypatch.setattr(bootstrap_module, "identify", failing)
    with pytest.raises(BootstrapUnreliableError):
        bootstrap(harper5, grid201, BootstrapConfig(resamples=3, quantile=0.5, n_jobs=1))


@pytest.mark.slow
def test_statistical_error_scale(harper5, grid201):
    errors = bootstrap(harper5, grid201, BootstrapConfig(resamples=500, shots=1000))
    assert 0.05 <= errors.per_entry_max <= 0.5
    assert errors.frequency < 0.35


@pytest.mark.slow
def test_quadrupling_shots_halves_error(harper5, grid201):
    def error(shots):
        cfg = BootstrapConfig(resamples=200, quantile=0.9, shots=shots, rng_seed=1)
        return bootstrap(harper5, grid201, cfg).accuracy

    assert error(4000) / error(1000) == pytest.approx(0.5, rel=0.3)


def test_nearest_orthogonal_recovers_rotation(rng):
    skew = rng.normal(scale=0.2, size=(4, 4))
    rotation = linalg.expm(skew - skew.T)
    stretch = np.eye(4) + 0.05 * np.diag(rng.normal(size=4))
    assert_allclose(nearest_orthogonal(rotation @ stretch), rotation, atol=0.1)
    assert_allclose(nearest_orthogonal(rotation), rotation, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_nearest_orthogonal_beats_every_two_site_orthogonal(seed):
    rng = np.random.default_rng(seed)
    final_map = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    projected = nearest_orthogonal(final_map)
    assert_allclose(projected @ projected.T, np.eye(2), atol=1e-12)

    angles = np.linspace(0.0, 2 * np.pi, 20001)
    cos, sin = np.cos(angles), np.sin(angles)
    rotations = np.stack([np.stack([cos, -sin], -1), np.stack([sin, cos], -1)], 1)
    candidates = np.concatenate([rotations, rotations @ np.diag([1.0, -1.0])])
    distances = np.linalg.norm(np.real(final_map) - candidates, axis=(1, 2))
    assert np.linalg.norm(np.real(final_map) - projected) <= distances.min() + 1e-6


def test_diagonal_phase_map_has_no_systematic_error(harper5):
    final_map = np.diag(np.exp(1j * np.array([0.1, 2.5, -0.3, -2.8, 0.2])))
    report = systematic_from_map(harper5, harper5, final_map)
    assert report.diagonal < 1e-12 and report.off_diagonal < 1e-12
    assert_allclose(report.map_phases, [0.1, 2.5, -0.3, -2.8, 0.2])


def test_rotation_is_undone(harper5, rng):
    skew = rng.normal(scale=0.05, size=(5, 5))
    rotation = linalg.expm(skew - skew.T)
    h_prime = rotation @ harper5.matrix @ rotation.T
    report = systematic_from_map(h_prime, harper5, rotation)
    expected = np.abs(harper5.matrix - h_prime)
    assert report.off_diagonal == pytest.approx(expected[~np.eye(5, dtype=bool)].max())
    assert report.diagonal == pytest.approx(np.diagonal(expected).max())


def test_ramp_systematic_reports_orthogonal_projection(harper5):
    report = ramp_systematic(harper5, harper5)
    assert_allclose(report.projected_map @ report.projected_map.T, np.eye(5), atol=1e-10)
    assert report.accuracy >= 0.0


def test_calibration_recovers_ramp_time_and_offset():
    ramp = RampModelConfig(idle_matrix=[0.0], speed=150.0, wait_time=0.1, integration_step=0.01)
    runs = simulate_calibration_runs(np.linspace(10, 90, 9), ramp, TimeGrid(dt=1.0, num_samples=101))
    fit = diag_phase_calibration(runs, CalibrationConfig())
    assert fit.total_ramp_time <= 0.6
    assert fit.offset_deg == pytest.approx(15.0, abs=5.0)
    assert fit.wait_time == pytest.approx(0.1, abs=0.01)
    assert fit.inliers.all()
    table = calibration_table(fit)
    assert list(table.columns) == ["run", "site", "ramp_distance_mhz", "phase_deg", "envelope_deg", "inlier"]
    assert (table["envelope_deg"] >= table["phase_deg"] - 1e-6).all()


def test_calibration_without_wait_has_no_offset():
    ramp = RampModelConfig(idle_matrix=[0.0], speed=150.0, wait_time=0.0, integration_step=0.01)
    runs = simulate_calibration_runs(np.linspace(10, 90, 9), ramp, TimeGrid(dt=1.0, num_samples=101))
    fit = diag_phase_calibration(runs, CalibrationConfig())
    assert fit.wait_offset_deg == pytest.approx(0.0, abs=0.5)
    assert fit.wait_time == pytest.approx(0.0, abs=0.01)


def test_fixed_time_ramp_phase_is_linear():
    distances = np.linspace(10, 90, 9)
    duration = 0.4
    h_hat = np.diag(distances)
    target = HamiltonianParams(matrix=h_hat, geometry=LatticeGeometry(num_sites=distances.size))
    initial_map = diagonal_phase_map(-TWO_PI_MHZ_NS * distances * duration)
    data = simulate_exact(target, initial_map, None, TimeGrid(dt=1.0, num_samples=21))
    fit = diag_phase_calibration([CalibrationRun(data=data, h_hat=h_hat, idle=np.zeros(distances.size))])
    assert fit.quadratic[0] == pytest.approx(0.0, abs=1e-8)
    assert fit.total_ramp_time == pytest.approx(duration, rel=1e-6)
    assert fit.envelope_intercept == pytest.approx(0.0, abs=1e-6)


def test_calibration_needs_three_distances():
    ramp = RampModelConfig(idle_matrix=[0.0])
    runs = simulate_calibration_runs([20.0, 40.0], ramp, TimeGrid(dt=1.0, num_samples=21))
    with pytest.raises(ValueError):
        diag_phase_calibration(runs)
    with pytest.raises(ValueError):
        diag_phase_calibration([])


def test_ramp_distance_table(harper5):
    idle = np.full(5, 100.0)
    table = ramp_distance_table([(harper5, np.eye(5))], idle)
    assert table.loc[0, "ramp_distance_mhz"] == pytest.approx(np.max(np.abs(np.diagonal(harper5.matrix) - 100.0)))
    assert table.loc[0, "initial_map_deviation"] == 0.0
    with pytest.raises(DimensionMismatchError):
        ramp_distance_table([(harper5, np.eye(5))], np.zeros(4))
