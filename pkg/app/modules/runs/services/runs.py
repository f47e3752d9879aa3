"""
Run ledger: one row per CLI command that wrote an output file.
"""

import logging
from typing import Optional

from sqlalchemy.orm import sessionmaker

from app.modules.database.base import SessionLocal
from app.modules.database.database import get_db_session
from app.modules.runs.models.run import RunRecord

logger = logging.getLogger(__name__)


def _as_dict(row: RunRecord) -> dict:
    return {
        "id": row.id,
        "command": row.command,
        "config_hash": row.config_hash,
        "seed": row.seed,
        "status": row.status,
        "output_path": row.output_path,
        "metric_name": row.metric_name,
        "metric_value": row.metric_value,
    }


class RunLedgerService:
    def __init__(self, factory: sessionmaker = SessionLocal):
        self.factory = factory

    def record(
        self,
        command: str,
        config_hash: str,
        seed: Optional[int],
        status: str,
        output_path: Optional[str] = None,
        metric_name: Optional[str] = None,
        metric_value: Optional[float] = None,
    ) -> int:
        with get_db_session(self.factory) as session:
            row = RunRecord(
                command=command,
                config_hash=config_hash,
                seed=seed,
                status=status,
                output_path=output_path,
                metric_name=metric_name,
                metric_value=None if metric_value is None else float(metric_value),
            )
            session.add(row)
            session.flush()
            run_id = row.id
        logger.debug("recorded run %d (%s, %s)", run_id, command, status)
        return run_id

    def find_run(self, run_id: int) -> Optional[dict]:
        with get_db_session(self.factory) as session:
            row = session.query(RunRecord).filter_by(id=run_id).first()
            return None if row is None else _as_dict(row)

    def list_runs(self, command: Optional[str] = None) -> list[dict]:
        with get_db_session(self.factory) as session:
            query = session.query(RunRecord)
            if command is not None:
                query = query.filter_by(command=command)
            return [_as_dict(r) for r in query.order_by(RunRecord.id).all()]
