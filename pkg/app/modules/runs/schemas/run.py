from typing import Optional

from pydantic import BaseModel


class RunResponse(BaseModel):
    id: int
    command: str
    config_hash: str
    seed: Optional[int] = None
    status: str
    output_path: Optional[str] = None
    metric_name: Optional[str] = None
    metric_value: Optional[float] = None
