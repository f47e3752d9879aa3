"""
File formats.

JSON files carry ``format_version`` 1, complex numbers as [re, im] pairs and
1-based site indices; keys are sorted so identical content gives identical
bytes. Time series can also be exported as flat CSV.

Dependencies: numpy, pandas
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from app import __version__
from app.modules.core.errors import FormatError
from app.modules.erroranalysis.schemas.erroranalysis import (
    CalibrationFit,
    ErrorReport,
    StatisticalErrors,
    SystematicErrors,
)
from app.modules.identification.schemas.identification import IdentificationResult
from app.modules.lattice.schemas.lattice import LatticeGeometry, TimeGrid, TimeSeriesData
from app.modules.metrics.schemas.chipscan import ChipScanReport

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
CSV_COLUMNS = ["m", "n", "t", "x", "p"]


def complex_to_json(values) -> list:
    arr = np.asarray(values, dtype=complex)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def complex_from_json(payload) -> np.ndarray:
    arr = np.asarray(payload, dtype=float)
    if arr.shape[-1:] != (2,):
        raise FormatError("Complex values must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def provenance(config: dict, seed: Optional[int]) -> dict:
    return {"config_hash": config_hash(config), "seed": seed, "library_version": __version__}


def write_json(path: Path | str, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"format_version": FORMAT_VERSION, **payload}
    path.write_text(json.dumps(document, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.debug("wrote %s", path)
    return path


def read_json(path: Path | str) -> dict:
    """
    Raises:
        FileNotFoundError: missing file
        FormatError: not JSON or wrong format_version
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"{path} has no format_version {FORMAT_VERSION}")
    return payload


def time_series_to_json(data: TimeSeriesData) -> dict:
    return {
        "kind": "time-series",
        "n": data.n,
        "dt": data.grid.dt,
        "L": data.grid.num_samples,
        "shots": data.shots,
        "data": complex_to_json(data.values),
    }


def _first_key(payload: dict, *keys: str):
    for key in keys:
        if key in payload:
            return payload[key]
    raise KeyError(keys[0])


def time_series_from_json(payload: dict) -> TimeSeriesData:
    """Accepts the legacy ``num_samples``/``values`` keys alongside ``L``/``data``."""
    try:
        grid = TimeGrid(dt=payload["dt"], num_samples=_first_key(payload, "L", "num_samples"))
        values = complex_from_json(_first_key(payload, "data", "values"))
        data = TimeSeriesData(values=values, grid=grid, shots=payload.get("shots", "exact"))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"Malformed time series: {exc}") from exc
    if data.n != payload.get("n", data.n):
        raise FormatError(f"Declared n={payload['n']} but values are {data.n}×{data.n}")
    return data


def load_time_series(path: Path | str) -> tuple[TimeSeriesData, dict]:
    """Time series and the raw payload (for geometry, target and provenance)."""
    payload = read_json(path)
    if payload.get("kind", "time-series") != "time-series":
        raise FormatError(f"{path} holds {payload.get('kind')!r}, not a time series")
    return time_series_from_json(payload), payload


def time_series_to_frame(data: TimeSeriesData) -> pd.DataFrame:
    """One row per (m, n, t) with 1-based sites and the x, p quadratures."""
    n, length = data.n, data.grid.num_samples
    m_idx, n_idx, l_idx = np.meshgrid(
        np.arange(n), np.arange(n), np.arange(length), indexing="ij"
    )
    return pd.DataFrame(
        {
            "m": m_idx.ravel() + 1,
            "n": n_idx.ravel() + 1,
            "t": data.grid.times[l_idx.ravel()],
            "x": data.values.real.ravel(),
            "p": data.values.imag.ravel(),
        },
        columns=CSV_COLUMNS,
    )


def time_series_from_frame(frame: pd.DataFrame, shots="exact") -> TimeSeriesData:
    """
    Raises:
        FormatError: missing columns, fewer than two times or an uneven grid
    """
    missing = set(CSV_COLUMNS) - set(frame.columns)
    if missing:
        raise FormatError(f"CSV lacks columns {sorted(missing)}")
    times = np.unique(frame["t"].to_numpy(dtype=float))
    if times.size < 2:
        raise FormatError("CSV needs at least two sample times")
    dt = float(times[1] - times[0])
    index = np.rint((frame["t"].to_numpy(dtype=float) - times[0]) / dt).astype(int)
    length = int(index.max()) + 1
    if length != times.size or not np.allclose(times, times[0] + dt * np.arange(length)):
        raise FormatError("CSV sample times are not on a uniform grid")
    if times[0] != 0:
        logger.warning("CSV times start at %.3g ns; shifting to 0", times[0])

    n = int(frame["m"].max())
    values = np.zeros((n, n, length), dtype=complex)
    values[frame["m"] - 1, frame["n"] - 1, index] = frame["x"] + 1j * frame["p"]
    return TimeSeriesData(values=values, grid=TimeGrid(dt=dt, num_samples=length), shots=shots)


def write_time_series_csv(path: Path | str, data: TimeSeriesData) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    time_series_to_frame(data).to_csv(path, index=False, float_format="%.17g")
    return path


def read_time_series_csv(path: Path | str, shots="exact") -> TimeSeriesData:
    return time_series_from_frame(pd.read_csv(path), shots=shots)


def _statistical_to_json(stats: StatisticalErrors) -> dict:
    return {
        "per_entry": stats.per_entry.tolist(),
        "per_entry_max": stats.per_entry_max,
        "accuracy": stats.accuracy,
        "frequency": stats.frequency,
        "resamples": stats.resamples,
        "failures": stats.failures,
        "reliable": stats.reliable,
    }


def _systematic_to_json(syst: SystematicErrors) -> dict:
    return {
        "diagonal": syst.diagonal,
        "off_diagonal": syst.off_diagonal,
        "accuracy": syst.accuracy,
        "projected_map": syst.projected_map.tolist(),
        "map_phases": syst.map_phases.tolist(),
    }


def error_report_to_json(report: ErrorReport) -> dict:
    return {
        "statistical": None if report.statistical is None else _statistical_to_json(report.statistical),
        "systematic": None if report.systematic is None else _systematic_to_json(report.systematic),
    }


def identification_to_json(
    result: IdentificationResult,
    grid: TimeGrid,
    target: Optional[np.ndarray] = None,
    errors: Optional[ErrorReport] = None,
) -> dict:
    comparison = None
    if result.comparison is not None:
        c = result.comparison
        comparison = {
            "deviation": c.deviation.tolist(),
            "analog_accuracy": c.analog_accuracy,
            "max_deviation": c.max_deviation,
            "frequency_accuracy": c.frequency_accuracy,
            "frequency_deviations": c.frequency_deviations.tolist(),
            "initial_map_accuracy": c.initial_map_accuracy,
        }
    return {
        "kind": "identification",
        "status": "ok",
        "n": result.n,
        "side": result.side,
        "geometry": result.geometry.to_json_dict(),
        "grid": {"dt": grid.dt, "num_samples": grid.num_samples},
        "hamiltonian": result.hamiltonian.tolist(),
        "rotated_hamiltonian": result.rotated_hamiltonian.tolist(),
        "initial_map": complex_to_json(result.initial_map),
        "final_map": complex_to_json(result.final_map),
        "signs": result.signs.astype(int).tolist(),
        "diagonal_phases": result.diagonal_phases.tolist(),
        "final_phases": result.final_phases.tolist(),
        "frequencies": result.frequencies.tolist(),
        "mu_used": result.mu_used,
        "stages": [stage.model_dump() for stage in result.stages],
        "anchors_used": result.anchors_used,
        "fit": {
            "total_rms": result.fit.total_rms,
            "per_series_rms": result.fit.per_series_rms.tolist(),
            "instantaneous_rms": result.fit.instantaneous_rms.tolist(),
        },
        "leakage": result.leakage.model_dump(),
        "comparison": comparison,
        "target": None if target is None else np.asarray(target).tolist(),
        "errors": None if errors is None else error_report_to_json(errors),
    }


def failure_to_json(stage: str, message: str, diagnostics: dict[str, Any]) -> dict:
    return {
        "kind": "identification",
        "status": "failed",
        "stage": stage,
        "message": message,
        "diagnostics": diagnostics,
    }


def chip_scan_to_json(report: ChipScanReport) -> dict:
    payload = report.model_dump(mode="json")
    for group in ("qubits", "couplers"):
        for element in payload[group]:
            element["sites"] = [s + 1 for s in element["sites"]]
    payload["subsets"] = [[s + 1 for s in subset] for subset in payload["subsets"]]
    for failure in payload["failures"]:
        failure["subset"] = [s + 1 for s in failure["subset"]]
    return {"kind": "chip-scan", **payload}


def chip_scan_frame(report: ChipScanReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "element_id": e.element_id,
                "kind": e.kind,
                "median_dev_MHz": e.median_deviation_mhz,
                "S_median": e.s_median,
                "signflip_mean": e.signflip_mean,
                "coverage": e.coverage,
            }
            for e in report.qubits + report.couplers
        ],
        columns=["element_id", "kind", "median_dev_MHz", "S_median", "signflip_mean", "coverage"],
    )


def calibration_to_json(fit: CalibrationFit) -> dict:
    return {
        "kind": "calibration",
        "distances": fit.distances.tolist(),
        "phases_deg": fit.phases_deg.tolist(),
        "runs": fit.runs.tolist(),
        "sites": (fit.sites + 1).tolist(),
        "inliers": fit.inliers.tolist(),
        "envelope_slope": fit.envelope_slope,
        "envelope_intercept": fit.envelope_intercept,
        "total_ramp_time": fit.total_ramp_time,
        "offset_deg": fit.offset_deg,
        "wait_offset_deg": fit.wait_offset_deg,
        "wait_time": fit.wait_time,
        "quadratic": list(fit.quadratic),
    }


def geometry_from_payload(payload: dict) -> LatticeGeometry:
    try:
        return LatticeGeometry.from_json_dict(payload)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"Malformed geometry: {exc}") from exc


def load_geometry(path: Path | str) -> LatticeGeometry:
    """Geometry file {"n": N, "edges": [[i, j], ...]} with 1-based sites."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc
    return geometry_from_payload(payload)
