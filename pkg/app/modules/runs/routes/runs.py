"""
Run ledger endpoints.

Endpoints:
- GET /runs: Recorded command runs, optionally filtered by command
- GET /runs/{run_id}: One recorded run

Dependencies: FastAPI, SQLAlchemy
"""

from typing import Optional

from fastapi import APIRouter, Depends, HTTPException, status

from app.modules.runs.schemas.run import RunResponse
from app.modules.runs.services.runs import RunLedgerService

router = APIRouter()


def get_ledger() -> RunLedgerService:
    return RunLedgerService()


@router.get("", response_model=list[RunResponse])
async def list_runs(command: Optional[str] = None, ledger: RunLedgerService = Depends(get_ledger)):
    return ledger.list_runs(command)


@router.get("/{run_id}", response_model=RunResponse)
async def get_run(run_id: int, ledger: RunLedgerService = Depends(get_ledger)):
    run = ledger.find_run(run_id)
    if run is None:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail="Run not found")
    return run
