from contextlib import contextmanager

from sqlalchemy.orm import Session, sessionmaker

from app.modules.database.base import SessionLocal


@contextmanager
def get_db_session(factory: sessionmaker = SessionLocal):
    """Session from ``factory``, committed on success and rolled back on error."""
    db: Session = factory()
    try:
        yield db
        db.commit()
    except Exception:
        db.rollback()
        raise
    finally:
        db.close()
