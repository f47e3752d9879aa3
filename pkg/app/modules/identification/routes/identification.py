"""
Identification endpoint.

Endpoints:
- POST /identify: data-file payload + RunConfig → identification result

Dependencies: FastAPI
"""

from fastapi import APIRouter, HTTPException, status
from pydantic import BaseModel, ConfigDict

from app.modules.cli.schemas.config import RunConfig
from app.modules.cli.services.commands import run_identify
from app.modules.core.errors import FormatError, IdentificationError, IdentificationToolkitError
from app.modules.storage.services.storage import time_series_from_json

router = APIRouter()


class IdentifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data: dict
    config: RunConfig = RunConfig()
    regularize: bool = True


@router.post("")
async def identify(request: IdentifyRequest) -> dict:
    """
    Identify ĥ, Ŝ and D̂_M from a time-series payload.

    Raises:
        HTTPException: 422 for malformed data, 500 with the failing stage when
            the pipeline breaks down
    """
    try:
        data = time_series_from_json(request.data)
    except FormatError as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))

    try:
        _, document = run_identify(request.config, data, request.data, regularize=request.regularize)
    except IdentificationError as exc:
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail={"stage": exc.stage, "message": str(exc), "diagnostics": exc.diagnostics},
        )
    except (IdentificationToolkitError, ValueError) as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))
    return {"format_version": 1, **document}
