"""
Exact linear-algebra primitives for excitation-preserving lattice dynamics.

Unit convention: coefficient matrices are in MHz read as cyclic frequencies,
times are in ns, so a phase is 2π·10⁻³·h·t radians.

Dependencies: numpy, scipy
"""

from typing import Union

import numpy as np
from scipy import linalg

from app.modules.core.errors import DimensionMismatchError
from app.modules.lattice.schemas.lattice import FrequencySet, HamiltonianParams, LatticeGeometry

TWO_PI_MHZ_NS = 2 * np.pi * 1e-3

MatrixLike = Union[HamiltonianParams, np.ndarray]


def _as_matrix(h: MatrixLike) -> np.ndarray:
    return h.matrix if isinstance(h, HamiltonianParams) else np.asarray(h, dtype=float)


def phase_of(h_entry, t):
    """Phase in radians accumulated by a frequency h_entry (MHz) over t (ns)."""
    return TWO_PI_MHZ_NS * np.asarray(h_entry) * np.asarray(t)


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each column made positive
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigh_real(h: MatrixLike) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and canonical real orthogonal eigenvectors."""
    evals, evecs = linalg.eigh(_as_matrix(h))
    return evals, _canonical_signs(evecs)


def eig_symmetric(h: MatrixLike) -> tuple[FrequencySet, np.ndarray]:
    """
    Eigendecomposition h = V·diag(λ)·Vᵀ of a real symmetric coefficient matrix.

    Args:
        h: Coefficient matrix (MHz)

    Returns:
        Frequencies sorted ascending and the real orthogonal matrix whose
        columns are the matching eigenvectors
    """
    evals, evecs = eigh_real(h)
    return FrequencySet(freqs=evals), evecs


def propagators(h: MatrixLike, times) -> np.ndarray:
    """Stack of exp(-i·2π·10⁻³·t·h) for every t in ``times`` (shape T×N×N)."""
    evals, evecs = eigh_real(h)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    phases = np.exp(-1j * phase_of(evals[None, :], times[:, None]))
    return np.einsum("ik,tk,jk->tij", evecs, phases, evecs)


def propagator(h: MatrixLike, t: float) -> np.ndarray:
    """Unitary exp(-i·2π·10⁻³·t·h) via the real symmetric eigendecomposition."""
    return propagators(h, [t])[0]


def build_harper(
    n: int,
    b: float,
    coupling_mhz: float,
    geometry: LatticeGeometry,
    amplitude_mhz: float = 20.0,
) -> HamiltonianParams:
    """
    Harper Hamiltonian: on-site potentials μ_q = A·cos(2π·q·b) for q = 1..N and
    hopping J on every declared edge.

    Args:
        n: Number of sites
        b: Flux value in [0, 1]
        coupling_mhz: Hopping strength J (MHz)
        geometry: Lattice providing the edges
        amplitude_mhz: Potential amplitude A (MHz)

    Raises:
        DimensionMismatchError: geometry does not have n sites
    """
    if geometry.num_sites != n:
        raise DimensionMismatchError(f"Geometry has {geometry.num_sites} sites, expected {n}")
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"Flux b must lie in [0, 1], got {b}")
    q = np.arange(1, n + 1)
    matrix = np.diag(amplitude_mhz * np.cos(2 * np.pi * q * b))
    for i, j in geometry.edges:
        matrix[i, j] = matrix[j, i] = coupling_mhz
    return HamiltonianParams(matrix=matrix, geometry=geometry)


def random_supported_hamiltonian(
    geometry: LatticeGeometry,
    rng: np.random.Generator,
    diagonal_scale_mhz: float = 20.0,
    coupling_scale_mhz: float = 20.0,
) -> HamiltonianParams:
    """Random real symmetric h on Ω with Gaussian diagonal and couplings."""
    n = geometry.num_sites
    matrix = np.diag(rng.normal(scale=diagonal_scale_mhz, size=n))
    for i, j in geometry.edges:
        matrix[i, j] = matrix[j, i] = rng.normal(scale=coupling_scale_mhz)
    return HamiltonianParams(matrix=matrix, geometry=geometry)
