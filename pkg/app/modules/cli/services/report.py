"""
Tables and figures from result files. Formatting only; every number comes
from the files.

Dependencies: numpy, pandas, matplotlib
"""

import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from app.modules.core.errors import DimensionMismatchError, FormatError  # noqa: E402
from app.modules.erroranalysis.services.calibration import ramp_distance_table  # noqa: E402
from app.modules.storage.services.storage import complex_from_json  # noqa: E402

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "hamid-report"
SVG_METADATA = {"Date": None}


def _identifications(payloads: Sequence[dict]) -> list[dict]:
    results = [p for p in payloads if p.get("kind") == "identification" and p.get("status") == "ok"]
    sizes = {p["n"] for p in results}
    if len(sizes) > 1:
        raise DimensionMismatchError(f"Results mix system sizes {sorted(sizes)}")
    return results


def _calibrations(payloads: Sequence[dict]) -> list[dict]:
    found = []
    for p in payloads:
        if p.get("kind") == "calibration":
            found.append(p)
        elif p.get("kind") == "ramp-model":
            found.append(p["calibration"])
    return found


def deviation_table(results: Sequence[dict]) -> pd.DataFrame:
    rows = []
    for index, p in enumerate(results):
        h_hat = np.asarray(p["hamiltonian"])
        comparison = p.get("comparison")
        deviation = np.asarray(comparison["deviation"]) if comparison else np.full_like(h_hat, np.nan)
        for m in range(h_hat.shape[0]):
            for n in range(h_hat.shape[1]):
                rows.append(
                    {
                        "result": index,
                        "m": m + 1,
                        "n": n + 1,
                        "h_hat_MHz": h_hat[m, n],
                        "deviation_MHz": deviation[m, n],
                    }
                )
    return pd.DataFrame(rows, columns=["result", "m", "n", "h_hat_MHz", "deviation_MHz"])


def rms_table(results: Sequence[dict]) -> pd.DataFrame:
    frames = []
    for index, p in enumerate(results):
        rms = np.asarray(p["fit"]["instantaneous_rms"])
        times = np.arange(rms.size) * p["grid"]["dt"]
        frames.append(pd.DataFrame({"result": index, "l": np.arange(rms.size), "t": times, "rms": rms}))
    if not frames:
        return pd.DataFrame(columns=["result", "l", "t", "rms"])
    return pd.concat(frames, ignore_index=True)


def butterfly_table(results: Sequence[dict]) -> pd.DataFrame:
    """One row per (result, mode) with the flux value when the file records one."""
    rows = []
    for index, p in enumerate(results):
        for k, freq in enumerate(p["frequencies"]):
            rows.append({"result": index, "b": p.get("flux"), "k": k + 1, "frequency_MHz": freq})
    return pd.DataFrame(rows, columns=["result", "b", "k", "frequency_MHz"])


def phase_distance_table(calibrations: Sequence[dict]) -> pd.DataFrame:
    frames = []
    for index, c in enumerate(calibrations):
        distances = np.asarray(c["distances"])
        frames.append(
            pd.DataFrame(
                {
                    "calibration": index,
                    "run": c["runs"],
                    "site": c["sites"],
                    "ramp_distance_mhz": distances,
                    "phase_deg": c["phases_deg"],
                    "envelope_deg": c["envelope_slope"] * distances + c["envelope_intercept"],
                    "inlier": c["inliers"],
                }
            )
        )
    if not frames:
        return pd.DataFrame(
            columns=["calibration", "run", "site", "ramp_distance_mhz", "phase_deg", "envelope_deg", "inlier"]
        )
    return pd.concat(frames, ignore_index=True)


def initial_map_distance_table(results: Sequence[dict]) -> pd.DataFrame:
    frames = [
        ramp_distance_table(
            [(np.asarray(p["target"]), complex_from_json(p["initial_map"]))],
            np.asarray(p["idle_mhz"]),
        )
        for p in results
        if p.get("idle_mhz") is not None and p.get("target") is not None
    ]
    if not frames:
        return pd.DataFrame(columns=["ramp_distance_mhz", "initial_map_deviation"])
    return pd.concat(frames, ignore_index=True)


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def _heatmap(results: Sequence[dict], path: Path) -> Path:
    p = results[0]
    values = np.asarray(p["comparison"]["deviation"]) if p.get("comparison") else np.abs(np.asarray(p["hamiltonian"]))
    n = values.shape[0]
    fig, ax = plt.subplots(figsize=(4, 4))
    image = ax.imshow(values, cmap="viridis")
    ax.set_xticks(range(n), [str(k + 1) for k in range(n)])
    ax.set_yticks(range(n), [str(k + 1) for k in range(n)])
    ax.set_title("|ĥ - h₀| (MHz)" if p.get("comparison") else "|ĥ| (MHz)")
    fig.colorbar(image, ax=ax)
    return _save(fig, path)


def _rms_plot(table: pd.DataFrame, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3))
    for index, group in table.groupby("result"):
        ax.plot(group["t"], group["rms"], lw=0.8, label=str(index))
    ax.set_xlabel("t (ns)")
    ax.set_ylabel("RMS deviation")
    return _save(fig, path)


def _butterfly_plot(table: pd.DataFrame, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(4, 5))
    x = table["b"].astype(float) if table["b"].notna().all() else table["result"]
    ax.scatter(table["frequency_MHz"], x, s=4, c="k")
    ax.set_xlabel("frequency (MHz)")
    ax.set_ylabel("b" if table["b"].notna().all() else "result")
    return _save(fig, path)


def _phase_plot(table: pd.DataFrame, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3))
    inlier = table["inlier"].astype(bool)
    ax.scatter(table.loc[inlier, "ramp_distance_mhz"], table.loc[inlier, "phase_deg"], s=6)
    ax.scatter(table.loc[~inlier, "ramp_distance_mhz"], table.loc[~inlier, "phase_deg"], s=6, c="grey")
    ordered = table.sort_values("ramp_distance_mhz")
    ax.plot(ordered["ramp_distance_mhz"], ordered["envelope_deg"], c="r", lw=1)
    ax.set_xlabel("ramp distance (MHz)")
    ax.set_ylabel("phase (deg)")
    return _save(fig, path)


def write_report(payloads: Sequence[dict], out_dir: Path | str) -> list[Path]:
    """
    Write every table and figure the inputs support into ``out_dir``.

    Raises:
        FormatError: no input holds a result this report can render
        DimensionMismatchError: identification results of different N
    """
    if not payloads:
        raise FormatError("No result files given")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = _identifications(payloads)
    calibrations = _calibrations(payloads)
    if not results and not calibrations:
        raise FormatError("None of the inputs is a successful identification or calibration")

    written = []
    if results:
        deviation = deviation_table(results)
        rms = rms_table(results)
        butterfly = butterfly_table(results)
        for name, table in (("deviation", deviation), ("rms_vs_time", rms), ("butterfly", butterfly)):
            path = out_dir / f"{name}.csv"
            table.to_csv(path, index=False)
            written.append(path)
        scaling = initial_map_distance_table(results)
        if not scaling.empty:
            path = out_dir / "initial_map_vs_distance.csv"
            scaling.to_csv(path, index=False)
            written.append(path)
        written.append(_heatmap(results, out_dir / "deviation.svg"))
        written.append(_rms_plot(rms, out_dir / "rms_vs_time.svg"))
        written.append(_butterfly_plot(butterfly, out_dir / "butterfly.svg"))
    if calibrations:
        phases = phase_distance_table(calibrations)
        path = out_dir / "phase_vs_distance.csv"
        phases.to_csv(path, index=False)
        written.append(path)
        written.append(_phase_plot(phases, out_dir / "phase_vs_distance.svg"))

    logger.info("report: %d files in %s", len(written), out_dir)
    return written
