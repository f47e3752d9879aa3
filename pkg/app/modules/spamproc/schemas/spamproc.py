"""
Pydantic schemas for SPAM processing.
Defines the ramp-removal configuration, the concatenated relative-time
series it produces and the result of the diagonal sign correction.
"""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.modules.lattice.schemas.lattice import TimeGrid
from app.modules.spectral.schemas.spectral import TraceSignal


class PreprocessConfig(BaseModel):
    """
    Ramp removal via anchor pseudoinverses.

    Attributes:
        stride: Spacing s between anchors l₀ = 0, s, 2s, ...
        window: Half-width w of the window [l₀ - w, l₀ + w] kept per anchor
        pseudoinverse_cutoff: Relative singular-value cutoff of the pseudoinverse
        max_condition: Anchors with condition number at or above this are skipped
        side: "initial" removes S (right multiplication), "final" removes M
        fix_diagonal_phases: Remove diagonal phases of M from the relative data
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    stride: int = Field(default=1, ge=1)
    window: int = Field(default=50, ge=1)
    pseudoinverse_cutoff: float = Field(default=1e-6, gt=0, lt=1)
    max_condition: float = Field(default=1e6, gt=1)
    side: Literal["initial", "final"] = "initial"
    fix_diagonal_phases: bool = True


class GroupedRelativeData(BaseModel):
    """
    Relative samples grouped by offset.

    Attributes:
        offsets: Distinct relative sample offsets δ (in units of dt), ascending
        counts: Number of samples n_δ in each group
        means: Group means Ȳ_δ, shape G×N×N
        within_ss: Σ over samples of ‖Y - Ȳ_δ‖², the part of any fit that no
            model can remove
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    offsets: np.ndarray
    counts: np.ndarray
    means: np.ndarray
    within_ss: float


class RelativeTimeSeries(BaseModel):
    """
    Concatenation of ramp-removed blocks y⁽ˡ⁰⁾[l] for every accepted anchor.

    Samples of all blocks are stored flat; ``anchors[k]`` and ``offsets[k]``
    give the anchor index and l - l₀ of sample k.

    Attributes:
        values: Complex K×N×N relative matrices
        anchors: Anchor index of each sample
        offsets: Relative offset l - l₀ of each sample
        dt: Sample spacing (ns)
        exact: Whether the source data was noise-free
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    anchors: np.ndarray
    offsets: np.ndarray
    dt: float = Field(gt=0)
    exact: bool = False

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v):
        arr = np.array(v, dtype=complex)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ValueError(f"Relative series must be K×N×N, got shape {arr.shape}")
        arr.setflags(write=False)
        return arr

    @field_validator("anchors", "offsets", mode="before")
    @classmethod
    def validate_indices(cls, v):
        arr = np.array(v, dtype=int).ravel()
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_lengths(self):
        k = self.values.shape[0]
        if self.anchors.size != k or self.offsets.size != k:
            raise ValueError("anchors and offsets must have one entry per sample")
        return self

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def num_samples(self) -> int:
        return self.values.shape[0]

    def block_anchors(self) -> tuple[int, ...]:
        return tuple(int(a) for a in np.unique(self.anchors))

    def block(self, anchor: int) -> tuple[np.ndarray, np.ndarray]:
        """Relative times (ns) and matrices of the block anchored at ``anchor``."""
        selected = self.anchors == anchor
        return self.offsets[selected] * self.dt, self.values[selected]

    def grouped(self) -> GroupedRelativeData:
        offsets, inverse, counts = np.unique(self.offsets, return_inverse=True, return_counts=True)
        sums = np.zeros((offsets.size, self.n, self.n), dtype=complex)
        np.add.at(sums, inverse, self.values)
        means = sums / counts[:, None, None]
        within = float(np.sum(np.abs(self.values - means[inverse]) ** 2))
        return GroupedRelativeData(offsets=offsets, counts=counts, means=means, within_ss=within)

    def trace_signal(self) -> TraceSignal:
        """
        Trace of the offset-averaged relative data over contiguous offsets.

        The trace of y[l]·y[l₀]⁺ is Σ_k e^{-iφλ_k(t_l - t_l₀)} regardless of S,
        so every mode enters with unit weight.
        """
        grouped = self.grouped()
        traces = np.einsum("gmm->g", grouped.means)
        full = np.arange(grouped.offsets[0], grouped.offsets[-1] + 1)
        if full.size != grouped.offsets.size:
            raise ValueError("Relative offsets are not contiguous")
        return TraceSignal(
            samples=traces,
            grid=TimeGrid(dt=self.dt, num_samples=full.size),
            exact=self.exact,
        )

    def conjugated(self, phases: np.ndarray) -> "RelativeTimeSeries":
        """Apply Y ↦ diag(e^{-iθ})·Y·diag(e^{iθ}) to every sample."""
        phase = np.exp(1j * np.asarray(phases, dtype=float))
        values = self.values * phase.conj()[None, :, None] * phase[None, None, :]
        return RelativeTimeSeries(
            values=values, anchors=self.anchors, offsets=self.offsets, dt=self.dt, exact=self.exact
        )


class SignCorrection(BaseModel):
    """
    Outcome of the diagonal sign post-correction.

    Attributes:
        signs: Diagonal of D̂_M (±1, first entry +1)
        hamiltonian: ĥ = D̂_M·h′·D̂_M
        initial_map: Ŝ = D̂_M·S′
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    signs: np.ndarray
    hamiltonian: np.ndarray
    initial_map: np.ndarray
