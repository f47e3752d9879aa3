"""
Simulation endpoint.

Endpoints:
- POST /simulate: RunConfig → time-series data file payload

Dependencies: FastAPI
"""

from fastapi import APIRouter, HTTPException, status

from app.modules.cli.schemas.config import RunConfig
from app.modules.cli.services.commands import run_simulate
from app.modules.core.errors import IdentificationToolkitError

router = APIRouter()


@router.post("")
async def simulate(config: RunConfig) -> dict:
    """
    Simulate a measurement record.

    Returns:
        The data-file payload: samples as [re, im] under "data", geometry, target, SPAM
        maps and provenance

    Raises:
        HTTPException: 422 when the configuration cannot be simulated
    """
    try:
        _, payload = run_simulate(config)
    except (IdentificationToolkitError, ValueError) as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))
    return {"format_version": 1, **payload}
