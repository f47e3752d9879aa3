"""
Command implementations shared by the command line and the HTTP routes.

Every function takes a validated RunConfig, does the numerical work through
the domain services and returns JSON-ready payloads; writing files is left
to the caller.

Dependencies: numpy, pandas, pydantic
"""

import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from app.modules.cli.schemas.config import RunConfig
from app.modules.core.errors import DimensionMismatchError, FormatError
from app.modules.erroranalysis.schemas.erroranalysis import BootstrapConfig, ErrorReport
from app.modules.erroranalysis.services.bootstrap import bootstrap
from app.modules.erroranalysis.services.calibration import (
    calibration_table,
    diag_phase_calibration,
    simulate_calibration_runs,
)
from app.modules.erroranalysis.services.systematic import nearest_orthogonal, ramp_systematic
from app.modules.identification.schemas.identification import (
    IdentificationResult,
    PipelineConfig,
)
from app.modules.identification.services.identification import identify
from app.modules.lattice.schemas.lattice import (
    HamiltonianParams,
    LatticeGeometry,
    SpamMap,
    TimeGrid,
    TimeSeriesData,
)
from app.modules.lattice.services.lattice import build_harper
from app.modules.metrics.schemas.chipscan import ChipScanConfig, PlantedFaults
from app.modules.simulator.schemas.simulator import NoiseConfig, RampModelConfig
from app.modules.simulator.services.ramp import draw_idle_detunings, simulate_ramp_map
from app.modules.simulator.services.simulator import (
    diagonal_phase_map,
    random_invertible_map,
    sample_shots,
    simulate_exact,
)
from app.modules.storage.services.storage import (
    calibration_to_json,
    complex_to_json,
    error_report_to_json,
    identification_to_json,
    load_geometry,
    provenance,
    time_series_to_json,
)

logger = logging.getLogger(__name__)


def load_config(path: Optional[Path | str]) -> RunConfig:
    """
    Raises:
        FileNotFoundError: missing config file
        FormatError: not JSON
        pydantic.ValidationError: schema violation
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc
    return RunConfig.model_validate(payload)


def config_provenance(cfg: RunConfig) -> dict:
    return provenance(cfg.model_dump(mode="json"), cfg.seed)


def build_geometry(cfg: RunConfig) -> LatticeGeometry:
    spec = cfg.geometry
    if spec.path is not None:
        return load_geometry(spec.path)
    if spec.kind == "grid":
        return LatticeGeometry.grid(spec.rows, spec.cols)
    return LatticeGeometry.chain(spec.num_sites)


def build_target(cfg: RunConfig, geometry: LatticeGeometry) -> HamiltonianParams:
    spec = cfg.target
    if spec.kind == "matrix":
        matrix = np.asarray(spec.matrix, dtype=float)
        if matrix.shape != (geometry.num_sites, geometry.num_sites):
            raise DimensionMismatchError(
                f"Target matrix {matrix.shape} does not match {geometry.num_sites} sites"
            )
        return HamiltonianParams(matrix=matrix, geometry=geometry)
    return build_harper(
        geometry.num_sites, spec.b, spec.coupling_mhz, geometry, amplitude_mhz=spec.amplitude_mhz
    )


def ramp_config(cfg: RunConfig, n: int, rng: np.random.Generator) -> RampModelConfig:
    spec = cfg.spam
    if spec.idle_mhz is not None:
        if len(spec.idle_mhz) != n:
            raise DimensionMismatchError(f"{len(spec.idle_mhz)} idle frequencies for {n} sites")
        idle = np.diag(spec.idle_mhz)
    else:
        idle = draw_idle_detunings(n, rng, spec.idle_low_mhz, spec.idle_high_mhz)
    return RampModelConfig(
        idle_matrix=idle,
        speed=spec.speed,
        wait_time=spec.wait_time,
        integration_step=spec.integration_step,
    )


def build_spam(
    cfg: RunConfig, target: HamiltonianParams, rng: np.random.Generator
) -> tuple[SpamMap, SpamMap, Optional[RampModelConfig]]:
    n = target.n
    mode = cfg.spam.mode
    if mode == "random":
        initial_map = random_invertible_map(n, rng, cfg.spam.perturbation_scale)
        return initial_map, diagonal_phase_map(rng.uniform(-np.pi, np.pi, size=n)), None
    if mode == "ramp-model":
        ramp = ramp_config(cfg, n, rng)
        return simulate_ramp_map(target, ramp, "in"), simulate_ramp_map(target, ramp, "out"), ramp
    return SpamMap.identity(n), SpamMap.identity(n), None


def grid_of(cfg: RunConfig) -> TimeGrid:
    return TimeGrid(dt=cfg.grid.dt, num_samples=cfg.grid.num_samples)


def pipeline_config(cfg: RunConfig, regularize: bool = True) -> PipelineConfig:
    spec = cfg.pipeline
    pipeline = PipelineConfig(
        preprocess=spec.preprocess,
        hankel_rows=spec.hankel_rows,
        eigensolve=spec.eigensolve,
        target_initialisation=spec.target_initialisation,
    )
    return pipeline if regularize else pipeline.without_regularization()


def run_simulate(cfg: RunConfig) -> tuple[TimeSeriesData, dict]:
    """Simulated record and its data-file payload."""
    geometry = build_geometry(cfg)
    target = build_target(cfg, geometry)
    spam_seed, noise_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    initial_map, final_map, ramp = build_spam(cfg, target, np.random.default_rng(spam_seed))

    data = simulate_exact(target, initial_map, final_map, grid_of(cfg))
    noise = NoiseConfig(
        shots=cfg.noise.shots,
        damping_rate=cfg.noise.damping_rate,
        rng_seed=int(noise_seed.generate_state(1)[0]),
        clip=cfg.noise.clip,
    )
    if noise.shots != "exact" or noise.damping_rate > 0:
        data = sample_shots(data, noise)
    logger.info("simulated N=%d, L=%d, shots=%s", data.n, data.grid.num_samples, data.shots)

    payload = time_series_to_json(data)
    payload.update(
        geometry=geometry.to_json_dict(),
        target={
            "kind": cfg.target.kind,
            "b": cfg.target.b if cfg.target.kind == "harper" else None,
            "matrix": target.matrix.tolist(),
        },
        spam={
            "mode": cfg.spam.mode,
            "initial_map": complex_to_json(initial_map.matrix),
            "final_map": complex_to_json(final_map.matrix),
            "idle_mhz": None if ramp is None else np.diagonal(ramp.idle_matrix).tolist(),
        },
        provenance=config_provenance(cfg),
    )
    return data, payload


def _target_from_payload(payload: dict, geometry: LatticeGeometry) -> Optional[HamiltonianParams]:
    target = payload.get("target")
    if not target or target.get("matrix") is None:
        return None
    return HamiltonianParams(matrix=np.asarray(target["matrix"]), geometry=geometry)


def _idle_from_payload(payload: dict) -> Optional[np.ndarray]:
    idle = (payload.get("spam") or {}).get("idle_mhz")
    return None if idle is None else np.diag(idle)


def _bootstrap_config(cfg: RunConfig, resamples: Optional[int]) -> BootstrapConfig:
    boot = cfg.pipeline.bootstrap
    return BootstrapConfig.model_validate(
        {**boot.model_dump(), "rng_seed": cfg.seed, "resamples": resamples or boot.resamples}
    )


def error_report(
    cfg: RunConfig,
    result: IdentificationResult,
    grid: TimeGrid,
    target: Optional[HamiltonianParams] = None,
    idle: Optional[np.ndarray] = None,
    resamples: Optional[int] = None,
    systematic: bool = False,
) -> ErrorReport:
    """Bootstrap and/or ramp-systematic errors around an identified model."""
    statistical = None
    if resamples:
        boot = _bootstrap_config(cfg, resamples)
        statistical = bootstrap(result.hamiltonian_params(), grid, boot, pipeline_config(cfg))
    syst = None
    if systematic:
        reference = target if target is not None else result.hamiltonian_params()
        ramp = None
        if idle is not None:
            ramp = RampModelConfig(
                idle_matrix=idle,
                speed=cfg.spam.speed,
                wait_time=cfg.spam.wait_time,
                integration_step=cfg.spam.integration_step,
            )
        syst = ramp_systematic(result.rotated_hamiltonian, reference, ramp)
    return ErrorReport(statistical=statistical, systematic=syst)


def run_identify(
    cfg: RunConfig,
    data: TimeSeriesData,
    payload: dict,
    regularize: bool = True,
    resamples: Optional[int] = None,
    systematic: bool = False,
) -> tuple[IdentificationResult, dict]:
    """
    Identify the record of a data file.

    Raises:
        IdentificationError: a pipeline stage failed
    """
    geometry = (
        LatticeGeometry.from_json_dict(payload["geometry"])
        if payload.get("geometry")
        else build_geometry(cfg)
    )
    target = _target_from_payload(payload, geometry)
    result = identify(data, geometry, target, pipeline_config(cfg, regularize))

    errors = None
    if resamples or systematic:
        errors = error_report(
            cfg, result, data.grid, target, _idle_from_payload(payload), resamples, systematic
        )
    out = identification_to_json(
        result, data.grid, None if target is None else target.matrix, errors
    )
    out.update(
        flux=(payload.get("target") or {}).get("b"),
        spam_mode=(payload.get("spam") or {}).get("mode"),
        idle_mhz=(payload.get("spam") or {}).get("idle_mhz"),
        provenance=config_provenance(cfg),
    )
    return result, out


def run_bootstrap(cfg: RunConfig, result_payload: dict, resamples: Optional[int] = None) -> dict:
    """ErrorReport payload for an identification result file."""
    if result_payload.get("kind") != "identification" or result_payload.get("status") != "ok":
        raise FormatError("Bootstrap needs a successful identification result")
    geometry = LatticeGeometry.from_json_dict(result_payload["geometry"])
    h_hat = HamiltonianParams(
        matrix=np.asarray(result_payload["hamiltonian"]), geometry=geometry, enforce_support=False
    )
    grid = TimeGrid(**result_payload["grid"])
    boot = _bootstrap_config(cfg, resamples)
    statistical = bootstrap(h_hat, grid, boot, pipeline_config(cfg))
    return {
        "kind": "error-report",
        **error_report_to_json(ErrorReport(statistical=statistical)),
        "provenance": config_provenance(cfg),
    }


def scan_config(cfg: RunConfig, regularize: bool = True) -> ChipScanConfig:
    spec = cfg.scan
    faults = PlantedFaults(
        detuning_bias_mhz={site - 1: bias for site, bias in spec.faults.detuning_bias_mhz.items()},
        final_phase_rad={site - 1: phase for site, phase in spec.faults.final_phase_rad.items()},
    )
    return ChipScanConfig(
        subset_size=spec.subset_size,
        min_coverage=spec.min_coverage,
        coupling_mhz=cfg.target.coupling_mhz,
        amplitude_mhz=cfg.target.amplitude_mhz,
        min_gap_mhz=spec.min_gap_mhz,
        spam_mode=cfg.spam.mode,
        grid=grid_of(cfg),
        noise=NoiseConfig(
            shots=cfg.noise.shots, damping_rate=cfg.noise.damping_rate, clip=cfg.noise.clip
        ),
        faults=faults,
        pipeline=pipeline_config(cfg, regularize),
        rng_seed=cfg.seed,
        max_iterations=spec.max_iterations,
    )


def run_ramp_model(cfg: RunConfig) -> tuple[dict, pd.DataFrame]:
    """
    Modelled ramp maps for the configured target plus a synthetic calibration
    sweep. Returns the payload and the phase-versus-distance table.
    """
    geometry = build_geometry(cfg)
    target = build_target(cfg, geometry)
    ramp = ramp_config(cfg, target.n, np.random.default_rng(cfg.seed))
    initial_map = simulate_ramp_map(target, ramp, "in").matrix
    final_map = simulate_ramp_map(target, ramp, "out").matrix
    projected = nearest_orthogonal(final_map)

    calib_noise = None
    if cfg.noise.shots != "exact":
        calib_noise = NoiseConfig(shots=cfg.noise.shots, rng_seed=cfg.seed)
    runs = simulate_calibration_runs(
        cfg.calibration.distances_mhz,
        ramp,
        grid_of(cfg),
        calib_noise,
        sites_per_run=cfg.calibration.sites_per_run,
    )
    fit = diag_phase_calibration(runs, cfg.calibration.fit)
    logger.info(
        "calibration: total ramp time %.3f ns, offset %.1f deg", fit.total_ramp_time, fit.offset_deg
    )
    payload = {
        "kind": "ramp-model",
        "n": target.n,
        "target": target.matrix.tolist(),
        "idle_mhz": np.diagonal(ramp.idle_matrix).tolist(),
        "speed": ramp.speed,
        "wait_time": ramp.wait_time,
        "initial_map": complex_to_json(initial_map),
        "final_map": complex_to_json(final_map),
        "projected_final_map": projected.tolist(),
        "final_map_phases": np.angle(np.diagonal(final_map)).tolist(),
        "calibration": calibration_to_json(fit),
        "provenance": config_provenance(cfg),
    }
    return payload, calibration_table(fit)
