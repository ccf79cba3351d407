from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker
from contextlib import contextmanager
import logging
from typing import Optional

from config import DATABASE_URL

logger = logging.getLogger(__name__)

# Unbound until a results store is configured
engine: Optional[Engine] = None
SessionLocal = sessionmaker(autocommit=False, autoflush=False)


def configure_engine(url: str = DATABASE_URL) -> Optional[Engine]:
    """
    Bind SessionLocal to the results store at url.
    An empty url disables persistence and returns None.
    """
    global engine
    if not url:
        engine = None
        return None
    engine = create_engine(
        url,
        pool_pre_ping=True,  # Verify connections before using them
        echo=False,  # Set to True for SQL query logging during development
    )
    SessionLocal.configure(bind=engine)
    return engine


def persistence_enabled() -> bool:
    return engine is not None


@contextmanager
def get_db_context():
    """
    Context manager for database sessions.

    Example:
        with get_db_context() as db:
            run = db.query(ExperimentRun).first()
    """
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()


def init_db():
    """
    Create all tables in the configured results store.
    """
    if engine is None:
        raise RuntimeError("No results store configured")
    from database_models import Base
    Base.metadata.create_all(bind=engine)
    logger.info("Results store tables ready")
