"""
Command-line entry point.

    python -m app simulate --config run.json --out out/
    python -m app identify out/data.json --config run.json --bootstrap 200 --systematic
    python -m app scan --config scan.json --out scan/
    python -m app report out/result.json --out figures/

Exit codes: 0 success, 1 usage or I/O problem, 2 identification failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from app import __version__
from app.modules.cli.schemas.config import RunConfig
from app.modules.cli.services.commands import (
    build_geometry,
    config_provenance,
    load_config,
    run_bootstrap,
    run_identify,
    run_ramp_model,
    run_simulate,
    scan_config,
)
from app.modules.cli.services.report import write_report
from app.modules.core.config import settings
from app.modules.core.errors import CoverageError, IdentificationError, IdentificationToolkitError
from app.modules.core.logs import configure_logging
from app.modules.metrics.services.chipscan import chip_scan
from app.modules.storage.services.storage import (
    chip_scan_frame,
    chip_scan_to_json,
    config_hash,
    failure_to_json,
    load_time_series,
    read_json,
    read_time_series_csv,
    write_json,
    write_time_series_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IDENTIFICATION = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hamid", description="Hamiltonian identification from time-series data.")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Run configuration (JSON)")
    common.add_argument("--out", type=Path, help="Output directory (config output_dir by default)")
    common.add_argument("--seed", type=int, help="Root seed, overrides the config")
    common.add_argument("--record", action="store_true", help="Append the run to the ledger")
    common.add_argument("--log-level", default=None)

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    simulate = sub.add_parser("simulate", parents=[common], help="Simulate a measurement record")
    simulate.add_argument("--csv", action="store_true", help="Also write the record as CSV")

    identify = sub.add_parser("identify", parents=[common], help="Identify ĥ from a data file")
    identify.add_argument("data", type=Path)
    identify.add_argument("--no-regularization", action="store_true")
    identify.add_argument("--bootstrap", type=int, metavar="N", help="Bootstrap resamples")
    identify.add_argument("--systematic", action="store_true", help="Ramp systematic errors")

    boot = sub.add_parser("bootstrap", parents=[common], help="Error bars for a result file")
    boot.add_argument("result", type=Path)
    boot.add_argument("--bootstrap", type=int, metavar="N", help="Bootstrap resamples")

    sub.add_parser("ramp-model", parents=[common], help="Ramp maps and calibration sweep")

    scan = sub.add_parser("scan", parents=[common], help="Chip-scan benchmark")
    scan.add_argument("--no-regularization", action="store_true")

    report = sub.add_parser("report", parents=[common], help="Tables and figures from results")
    report.add_argument("results", type=Path, nargs="*")
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = RunConfig.model_validate({**cfg.model_dump(), "seed": args.seed})
    return cfg


def _record(args, cfg: RunConfig, status: str, output: Path, metric=None) -> None:
    if not (args.record or settings.record_runs):
        return
    from app.modules.database.base import init_db
    from app.modules.runs.services.runs import RunLedgerService

    init_db()
    name, value = metric or (None, None)
    RunLedgerService().record(
        command=args.command,
        config_hash=config_hash(cfg.model_dump(mode="json")),
        seed=cfg.seed,
        status=status,
        output_path=str(output),
        metric_name=name,
        metric_value=value,
    )


def cmd_simulate(args, cfg: RunConfig, out: Path) -> int:
    data, payload = run_simulate(cfg)
    path = write_json(out / "data.json", payload)
    if args.csv:
        write_time_series_csv(out / "data.csv", data)
    _record(args, cfg, "ok", path)
    print(path)
    return EXIT_OK


def _load_data(path: Path, cfg: RunConfig):
    if path.suffix.lower() == ".csv":
        return read_time_series_csv(path), {"geometry": build_geometry(cfg).to_json_dict()}
    return load_time_series(path)


def cmd_identify(args, cfg: RunConfig, out: Path) -> int:
    if not args.data.is_file():
        raise FileNotFoundError(f"No data file {args.data}")
    data, payload = _load_data(args.data, cfg)
    path = out / "result.json"
    try:
        result, document = run_identify(
            cfg,
            data,
            payload,
            regularize=not args.no_regularization,
            resamples=args.bootstrap,
            systematic=args.systematic,
        )
    except IdentificationError as exc:
        logger.error("identification failed in %s: %s", exc.stage, exc)
        failed = failure_to_json(exc.stage, str(exc), exc.diagnostics)
        failed["provenance"] = config_provenance(cfg)
        write_json(path, failed)
        _record(args, cfg, "failed", path)
        return EXIT_IDENTIFICATION
    write_json(path, document)
    metric = ("analog_accuracy", result.comparison.analog_accuracy) if result.comparison else None
    _record(args, cfg, "ok", path, metric)
    print(path)
    return EXIT_OK


def cmd_bootstrap(args, cfg: RunConfig, out: Path) -> int:
    document = run_bootstrap(cfg, read_json(args.result), args.bootstrap)
    path = write_json(out / "errors.json", document)
    _record(args, cfg, "ok", path, ("per_entry_max", document["statistical"]["per_entry_max"]))
    print(path)
    return EXIT_OK


def cmd_ramp_model(args, cfg: RunConfig, out: Path) -> int:
    document, table = run_ramp_model(cfg)
    path = write_json(out / "ramp_model.json", document)
    table.to_csv(out / "phase_vs_distance.csv", index=False)
    _record(args, cfg, "ok", path, ("total_ramp_time", document["calibration"]["total_ramp_time"]))
    print(path)
    return EXIT_OK


def cmd_scan(args, cfg: RunConfig, out: Path) -> int:
    geometry = build_geometry(cfg)
    path = out / "scan.json"
    try:
        report = chip_scan(geometry, cfg.scan.b_values, scan_config(cfg, not args.no_regularization))
    except CoverageError as exc:
        logger.error("%s", exc)
        write_json(
            path,
            {"kind": "chip-scan", "complete": False, "message": str(exc), "coverage": exc.coverage},
        )
        _record(args, cfg, "failed", path)
        return EXIT_USAGE
    document = chip_scan_to_json(report)
    document["provenance"] = config_provenance(cfg)
    write_json(path, document)
    chip_scan_frame(report).to_csv(out / "scan.csv", index=False)
    _record(args, cfg, "ok", path, ("leakage_median_mhz", report.leakage_median_mhz))
    print(path)
    return EXIT_OK


def cmd_report(args, cfg: RunConfig, out: Path) -> int:
    if not args.results:
        raise FileNotFoundError("report needs at least one result file")
    payloads = [read_json(p) for p in args.results]
    for path in write_report(payloads, out):
        print(path)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "bootstrap": cmd_bootstrap,
    "ramp-model": cmd_ramp_model,
    "scan": cmd_scan,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    configure_logging(args.log_level)

    try:
        cfg = _config(args)
        out = args.out if args.out is not None else Path(cfg.output_dir)
        return COMMANDS[args.command](args, cfg, out)
    except (OSError, ValidationError, IdentificationToolkitError, ValueError) as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
