"""
Pydantic schemas for the lattice domain types.
Defines geometry, Hamiltonian coefficient matrices, time grids, SPAM maps,
measurement records and frequency sets shared by every other module.

Site indices are 0-based in Python; the JSON form of a geometry is 1-based.
"""

from typing import Literal, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.modules.core.errors import DegenerateSpectrumError

DEGENERACY_TOL_MHZ = 1e-6
SYMMETRY_TOL = 1e-12


def _frozen_array(value, dtype) -> np.ndarray:
    arr = np.array(value, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class LatticeGeometry(BaseModel):
    """
    Lattice connectivity.

    Attributes:
        num_sites: Number of sites N
        edges: Sorted unordered site pairs (i, j) with i < j
    """
    model_config = ConfigDict(frozen=True)

    num_sites: int = Field(ge=1)
    edges: tuple[tuple[int, int], ...] = ()

    @field_validator("edges", mode="before")
    @classmethod
    def validate_edges(cls, v):
        normalised = []
        for edge in v:
            i, j = (int(x) for x in edge)
            if i == j:
                raise ValueError(f"Self-loop on site {i}")
            normalised.append((min(i, j), max(i, j)))
        if len(set(normalised)) != len(normalised):
            raise ValueError("Duplicate edges")
        return tuple(sorted(normalised))

    @model_validator(mode="after")
    def validate_endpoints(self):
        for i, j in self.edges:
            if i < 0 or j >= self.num_sites:
                raise ValueError(f"Edge ({i}, {j}) outside 0..{self.num_sites - 1}")
        return self

    @classmethod
    def chain(cls, num_sites: int) -> "LatticeGeometry":
        return cls(num_sites=num_sites, edges=[(i, i + 1) for i in range(num_sites - 1)])

    @classmethod
    def grid(cls, rows: int, cols: int) -> "LatticeGeometry":
        edges = []
        for r in range(rows):
            for c in range(cols):
                site = r * cols + c
                if c + 1 < cols:
                    edges.append((site, site + 1))
                if r + 1 < rows:
                    edges.append((site, site + cols))
        return cls(num_sites=rows * cols, edges=edges)

    def support_mask(self) -> np.ndarray:
        """Boolean N×N mask of Ω: the diagonal plus both orientations of every edge."""
        mask = np.eye(self.num_sites, dtype=bool)
        for i, j in self.edges:
            mask[i, j] = mask[j, i] = True
        return mask

    def to_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.num_sites))
        graph.add_edges_from(self.edges)
        return graph

    def to_json_dict(self) -> dict:
        return {"n": self.num_sites, "edges": [[i + 1, j + 1] for i, j in self.edges]}

    @classmethod
    def from_json_dict(cls, payload: dict) -> "LatticeGeometry":
        edges = [(int(i) - 1, int(j) - 1) for i, j in payload.get("edges", [])]
        return cls(num_sites=int(payload["n"]), edges=edges)


class HamiltonianParams(BaseModel):
    """
    Real symmetric coefficient matrix h in MHz on a lattice.

    Attributes:
        matrix: Real symmetric N×N array
        geometry: Lattice the support set Ω is taken from
        enforce_support: Reject non-zero entries outside Ω (off for identified estimates)
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray
    geometry: LatticeGeometry
    enforce_support: bool = True

    @field_validator("matrix", mode="before")
    @classmethod
    def validate_matrix(cls, v):
        arr = np.asarray(v)
        if np.iscomplexobj(arr):
            if np.any(np.abs(arr.imag) > 0):
                raise ValueError("Coefficient matrix must be real")
            arr = arr.real
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"Coefficient matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Coefficient matrix has non-finite entries")
        scale = max(1.0, float(np.max(np.abs(arr))) if arr.size else 1.0)
        if np.max(np.abs(arr - arr.T), initial=0.0) > SYMMETRY_TOL * scale:
            raise ValueError("Coefficient matrix must be symmetric")
        return _frozen_array((arr + arr.T) / 2, float)

    @model_validator(mode="after")
    def validate_support(self):
        if self.matrix.shape[0] != self.geometry.num_sites:
            raise ValueError(
                f"Matrix is {self.matrix.shape[0]}x{self.matrix.shape[0]} "
                f"but geometry has {self.geometry.num_sites} sites"
            )
        if self.enforce_support:
            outside = self.matrix[~self.geometry.support_mask()]
            if np.any(outside != 0):
                raise ValueError("Non-zero entries outside the declared support")
        return self

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def off_support(self) -> np.ndarray:
        """Entries outside Ω, zeros elsewhere."""
        return np.where(self.geometry.support_mask(), 0.0, self.matrix)


class TimeGrid(BaseModel):
    """
    Uniform sampling grid t_l = l·dt, l = 0..L-1.

    Attributes:
        dt: Sample spacing in ns
        num_samples: Number of samples L
    """
    model_config = ConfigDict(frozen=True)

    dt: float = Field(gt=0)
    num_samples: int = Field(ge=2)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.num_samples) * self.dt

    @property
    def nyquist_mhz(self) -> float:
        return 1e3 / (2 * self.dt)


class SpamMap(BaseModel):
    """Complex N×N state-preparation or measurement map."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def validate_matrix(cls, v):
        arr = np.asarray(v, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"SPAM map must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("SPAM map has non-finite entries")
        return _frozen_array(arr, complex)

    @classmethod
    def identity(cls, n: int) -> "SpamMap":
        return cls(matrix=np.eye(n))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


class TimeSeriesData(BaseModel):
    """
    Measurement record values[m, n, l] ≈ ⟨a_m(t_l)⟩ with site n initially excited.

    Attributes:
        values: Complex N×N×L array
        grid: Sampling grid
        shots: Single shots per quadrature estimate, or "exact"
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    grid: TimeGrid
    shots: Union[int, Literal["exact"]] = "exact"

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v):
        arr = np.asarray(v, dtype=complex)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"Time series must be N×N×L, got shape {arr.shape}")
        return _frozen_array(arr, complex)

    @field_validator("shots")
    @classmethod
    def validate_shots(cls, v):
        if v != "exact" and int(v) < 1:
            raise ValueError("shots must be >= 1 or 'exact'")
        return v

    @model_validator(mode="after")
    def validate_grid(self):
        if self.values.shape[2] != self.grid.num_samples:
            raise ValueError(
                f"{self.values.shape[2]} samples but grid has {self.grid.num_samples}"
            )
        return self

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def is_exact(self) -> bool:
        return self.shots == "exact"

    def matrices(self) -> np.ndarray:
        """Data as an L×N×N stack of matrices y[l]."""
        return np.moveaxis(self.values, 2, 0)


class FrequencySet(BaseModel):
    """
    Eigenfrequencies λ_k in MHz, kept sorted ascending.

    Distinctness is not enforced here; operations that need it call
    ``require_distinct``.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    freqs: np.ndarray

    @field_validator("freqs", mode="before")
    @classmethod
    def validate_freqs(cls, v):
        arr = np.asarray(v, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("Frequency set is empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Frequencies must be finite")
        return _frozen_array(np.sort(arr), float)

    def __len__(self) -> int:
        return self.freqs.size

    def min_gap(self) -> float:
        if self.freqs.size < 2:
            return float("inf")
        return float(np.min(np.diff(self.freqs)))

    def require_distinct(self, tol: float = DEGENERACY_TOL_MHZ) -> "FrequencySet":
        if self.min_gap() < tol:
            raise DegenerateSpectrumError(
                f"Frequencies closer than {tol} MHz: {np.round(self.freqs, 9).tolist()}"
            )
        return self

    def within_band(self, dt: float) -> bool:
        """True when every frequency lies in the unambiguous band (-1/(2dt), 1/(2dt)]."""
        nyquist = 1e3 / (2 * dt)
        return bool(np.all((self.freqs > -nyquist) & (self.freqs <= nyquist)))


class SubGeometry(BaseModel):
    """
    Connected sub-lattice of a parent geometry.

    Attributes:
        sites: Parent indices of the chosen sites, in local order
        geometry: Induced geometry on local indices 0..len(sites)-1
    """
    model_config = ConfigDict(frozen=True)

    sites: tuple[int, ...]
    geometry: LatticeGeometry

    def parent_edge(self, local_edge: tuple[int, int]) -> tuple[int, int]:
        i, j = local_edge
        a, b = self.sites[i], self.sites[j]
        return (min(a, b), max(a, b))

