from pathlib import Path

import numpy as np
import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

from app.modules.database.base import Base, init_db
from app.modules.eigensolve.schemas.eigensolve import EigenSolveConfig
from app.modules.identification.schemas.identification import PipelineConfig
from app.modules.lattice.schemas.lattice import LatticeGeometry, TimeGrid
from app.modules.lattice.services.lattice import build_harper
from app.modules.simulator.services.simulator import simulate_exact

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def grid27_path() -> Path:
    return FIXTURES / "grid27.json"


@pytest.fixture
def chain5() -> LatticeGeometry:
    return LatticeGeometry.chain(5)


@pytest.fixture
def grid201() -> TimeGrid:
    return TimeGrid(dt=1.0, num_samples=201)


@pytest.fixture
def harper5(chain5):
    return build_harper(5, 0.35, 20.0, chain5)


@pytest.fixture
def exact5(harper5, grid201):
    return simulate_exact(harper5, None, None, grid201)


@pytest.fixture
def fast_pipeline() -> PipelineConfig:
    """Single start from the target eigenbasis, no random restarts."""
    return PipelineConfig(eigensolve=EigenSolveConfig(restarts=0, n_jobs=1))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def session_factory():
    engine = create_engine(
        "sqlite://", connect_args={"check_same_thread": False}, poolclass=StaticPool
    )
    init_db(engine)
    yield sessionmaker(autocommit=False, autoflush=False, bind=engine)
    Base.metadata.drop_all(bind=engine)
