import json

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from app.modules.core.errors import DegenerateSpectrumError, DimensionMismatchError
from app.modules.lattice.schemas.lattice import (
    FrequencySet,
    HamiltonianParams,
    LatticeGeometry,
    TimeGrid,
    TimeSeriesData,
)
from app.modules.lattice.services.lattice import (
    build_harper,
    eig_symmetric,
    propagator,
    propagators,
    random_supported_hamiltonian,
)


def test_geometry_rejects_self_loops_and_duplicates():
    with pytest.raises(ValidationError):
        LatticeGeometry(num_sites=3, edges=[(1, 1)])
    with pytest.raises(ValidationError):
        LatticeGeometry(num_sites=3, edges=[(0, 1), (1, 0)])
    with pytest.raises(ValidationError):
        LatticeGeometry(num_sites=3, edges=[(0, 3)])


def test_support_mask_is_diagonal_plus_edges():
    mask = LatticeGeometry.chain(3).support_mask()
    assert mask.tolist() == [[True, True, False], [True, True, True], [False, True, True]]


def test_geometry_json_is_one_based(grid27_path):
    payload = json.loads(grid27_path.read_text())
    geometry = LatticeGeometry.from_json_dict(payload)
    assert geometry == LatticeGeometry.grid(3, 9)
    assert len(geometry.edges) == 42
    assert geometry.to_json_dict()["edges"][0] == [1, 2]


def test_harper_matches_definition(chain5):
    h = build_harper(5, 0.25, 20.0, chain5).matrix
    q = np.arange(1, 6)
    assert_allclose(np.diagonal(h), 20.0 * np.cos(2 * np.pi * q * 0.25), atol=1e-12)
    assert h[0, 1] == h[1, 0] == 20.0
    assert h[0, 2] == 0.0


def test_harper_rejects_wrong_size_and_flux(chain5):
    with pytest.raises(DimensionMismatchError):
        build_harper(4, 0.1, 20.0, chain5)
    with pytest.raises(ValueError):
        build_harper(5, 1.5, 20.0, chain5)


def test_hamiltonian_params_enforces_support_and_symmetry(chain5):
    matrix = np.zeros((5, 5))
    matrix[0, 4] = matrix[4, 0] = 1.0
    with pytest.raises(ValidationError):
        HamiltonianParams(matrix=matrix, geometry=chain5)
    assert HamiltonianParams(matrix=matrix, geometry=chain5, enforce_support=False).n == 5

    asymmetric = np.zeros((5, 5))
    asymmetric[0, 1] = 1.0
    with pytest.raises(ValidationError):
        HamiltonianParams(matrix=asymmetric, geometry=chain5)


def test_arrays_are_read_only(harper5):
    with pytest.raises(ValueError):
        harper5.matrix[0, 0] = 1.0


@pytest.mark.parametrize("seed", range(5))
def test_eigendecomposition_reconstructs(seed, chain5):
    h = random_supported_hamiltonian(chain5, np.random.default_rng(seed))
    freqs, V = eig_symmetric(h)
    assert np.all(np.diff(freqs.freqs) > 0)
    assert_allclose(V.T @ V, np.eye(5), atol=1e-12)
    assert_allclose(V @ np.diag(freqs.freqs) @ V.T, h.matrix, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_propagator_group_property(seed, chain5):
    h = random_supported_hamiltonian(chain5, np.random.default_rng(seed))
    U = propagators(h, [0.0, 3.2, 5.1, 8.3])
    assert_allclose(U[0], np.eye(5), atol=1e-12)
    assert_allclose(U[1] @ U[2], U[3], atol=1e-10)
    assert_allclose(U[3] @ U[3].conj().T, np.eye(5), atol=1e-10)


def test_propagator_phase_convention():
    geometry = LatticeGeometry(num_sites=1)
    h = HamiltonianParams(matrix=[[250.0]], geometry=geometry)
    # 250 MHz over 2 ns is half a turn
    assert_allclose(propagator(h, 2.0), [[-1.0]], atol=1e-12)


def test_frequency_set_distinctness():
    freqs = FrequencySet(freqs=[3.0, 1.0, 1.0 + 1e-9])
    assert_allclose(freqs.freqs, [1.0, 1.0 + 1e-9, 3.0])
    with pytest.raises(DegenerateSpectrumError):
        freqs.require_distinct()
    assert FrequencySet(freqs=[1.0, 2.0]).require_distinct().min_gap() == pytest.approx(1.0)


def test_frequency_band():
    assert FrequencySet(freqs=[-400.0, 499.0]).within_band(1.0)
    assert not FrequencySet(freqs=[600.0]).within_band(1.0)


def test_time_series_validates_grid():
    with pytest.raises(ValidationError):
        TimeSeriesData(values=np.zeros((2, 2, 5)), grid=TimeGrid(dt=1.0, num_samples=6))
    with pytest.raises(ValidationError):
        TimeSeriesData(values=np.zeros((2, 3, 5)), grid=TimeGrid(dt=1.0, num_samples=5))
