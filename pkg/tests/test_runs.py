import pytest

from app.modules.database.database import get_db_session
from app.modules.runs.models.run import RunRecord
from app.modules.runs.services.runs import RunLedgerService


def test_record_and_find(session_factory):
    ledger = RunLedgerService(session_factory)
    run_id = ledger.record(
        command="identify",
        config_hash="f" * 64,
        seed=3,
        status="ok",
        output_path="out/result.json",
        metric_name="analog_accuracy",
        metric_value=1e-4,
    )
    found = ledger.find_run(run_id)
    assert found["command"] == "identify"
    assert found["metric_value"] == pytest.approx(1e-4)
    assert ledger.find_run(run_id + 1) is None


def test_list_runs_filters_by_command(session_factory):
    ledger = RunLedgerService(session_factory)
    for command in ("simulate", "identify", "simulate"):
        ledger.record(command, "0" * 64, None, "ok")
    assert len(ledger.list_runs()) == 3
    assert [r["command"] for r in ledger.list_runs("simulate")] == ["simulate", "simulate"]


def test_session_rolls_back_on_error(session_factory):
    with pytest.raises(RuntimeError):
        with get_db_session(session_factory) as session:
            session.add(RunRecord(command="scan", config_hash="1" * 64, status="ok"))
            session.flush()
            raise RuntimeError("abort")
    assert RunLedgerService(session_factory).list_runs() == []
