"""
Pydantic schemas for the chip-scan benchmark.
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.modules.identification.schemas.identification import PipelineConfig
from app.modules.lattice.schemas.lattice import TimeGrid
from app.modules.simulator.schemas.simulator import NoiseConfig


class PlantedFaults(BaseModel):
    """
    Deliberate deviations injected into the simulated device.

    Attributes:
        detuning_bias_mhz: Parent site → extra on-site frequency (MHz)
        final_phase_rad: Parent site → diagonal phase of the final map (rad)
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    detuning_bias_mhz: dict[int, float] = {}
    final_phase_rad: dict[int, float] = {}


class ChipScanConfig(BaseModel):
    """
    Chip-scan benchmark settings.

    Attributes:
        subset_size: Sites per connected subset
        min_coverage: Subsets every site and coupler must appear in
        coupling_mhz: Harper hopping J
        amplitude_mhz: Harper potential amplitude
        min_gap_mhz: Reject subsets whose target spectrum has a smaller gap
        spam_mode: SPAM maps of the simulated device
        grid: Sampling grid
        noise: Shot model
        faults: Planted faults
        pipeline: Identification settings for each run
        rng_seed: Seed of subset sampling and SPAM draws
        max_iterations: Growth attempts before coverage is declared unreachable
        n_jobs: joblib workers (settings.n_jobs when None)
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    subset_size: int = Field(default=5, ge=1)
    min_coverage: int = Field(default=5, ge=1)
    coupling_mhz: float = 20.0
    amplitude_mhz: float = 20.0
    min_gap_mhz: float = Field(default=0.5, ge=0)
    spam_mode: Literal["none", "random", "ramp-model"] = "none"
    grid: TimeGrid = TimeGrid(dt=1.0, num_samples=201)
    noise: NoiseConfig = NoiseConfig(shots="exact")
    faults: PlantedFaults = PlantedFaults()
    pipeline: PipelineConfig = PipelineConfig()
    rng_seed: int = 0
    max_iterations: int = Field(default=10000, ge=1)
    n_jobs: Optional[int] = None


class ElementSummary(BaseModel):
    """
    Aggregate over every run involving one site or coupler.

    Attributes:
        element_id: "Q<i>" for sites, "C<i>-<j>" for couplers (1-based)
        kind: "qubit" or "coupler"
        sites: Parent site indices (0-based)
        median_deviation_mhz: Median |ĥ - h₀| entry assigned to the element
        s_median: Median E_analog(Ŝ, 1) over runs involving the site
        signflip_mean: Mean rate of -1 entries of D̂_M at the site
        coverage: Successful runs contributing to the element
    """
    model_config = ConfigDict(frozen=True)

    element_id: str
    kind: Literal["qubit", "coupler"]
    sites: tuple[int, ...]
    median_deviation_mhz: Optional[float] = None
    s_median: Optional[float] = None
    signflip_mean: Optional[float] = None
    coverage: int = 0


class ScanFailure(BaseModel):
    model_config = ConfigDict(frozen=True)

    subset: tuple[int, ...]
    b: float
    stage: str
    message: str


class ChipScanReport(BaseModel):
    """
    Per-element medians of a chip scan.

    Attributes:
        qubits: One summary per site
        couplers: One summary per declared edge
        subsets: Parent sites of every sampled subset
        b_values: Flux values scanned
        failures: Runs excluded from the medians
        leakage_median_mhz: Median off-support norm of the identified ĥ
        complete: Every element reached min_coverage with successful runs
    """
    model_config = ConfigDict(frozen=True)

    qubits: tuple[ElementSummary, ...]
    couplers: tuple[ElementSummary, ...]
    subsets: tuple[tuple[int, ...], ...]
    b_values: tuple[float, ...]
    failures: tuple[ScanFailure, ...] = ()
    leakage_median_mhz: Optional[float] = None
    complete: bool = True

    @property
    def per_qubit_median(self) -> dict[int, Optional[float]]:
        return {q.sites[0]: q.median_deviation_mhz for q in self.qubits}

    @property
    def per_coupler_median(self) -> dict[tuple[int, int], Optional[float]]:
        return {c.sites: c.median_deviation_mhz for c in self.couplers}

    @property
    def per_qubit_S_median(self) -> dict[int, Optional[float]]:
        return {q.sites[0]: q.s_median for q in self.qubits}

    @property
    def per_qubit_signflip_mean(self) -> dict[int, Optional[float]]:
        return {q.sites[0]: q.signflip_mean for q in self.qubits}

    @property
    def coverage(self) -> dict[str, int]:
        return {e.element_id: e.coverage for e in self.qubits + self.couplers}
