from sqlalchemy import Column, DateTime, Float, Integer, String
from sqlalchemy.sql import func

from app.modules.database.base import Base


class RunRecord(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String(32), index=True, nullable=False)
    config_hash = Column(String(64), index=True, nullable=False)
    seed = Column(Integer)
    status = Column(String(16), nullable=False)
    output_path = Column(String(512))
    metric_name = Column(String(64))
    metric_value = Column(Float)
    created_at = Column(DateTime(timezone=True), server_default=func.now())

    def __repr__(self) -> str:
        return f"<RunRecord(id={self.id}, command='{self.command}', status='{self.status}')>"
