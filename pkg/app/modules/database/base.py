from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from ..core.config import settings

engine = create_engine(settings.database_url)
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

Base = declarative_base()


def init_db(bind=None) -> None:
    """Create the ledger tables on ``bind`` (the configured engine by default)."""
    # registers the tables on Base.metadata
    from app.modules.runs.models import run  # noqa: F401

    Base.metadata.create_all(bind=bind or engine)
