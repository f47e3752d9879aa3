from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app import __version__
from app.modules.core.logs import configure_logging
from app.modules.database.base import init_db
from app.modules.identification.routes.identification import router as identify_router
from app.modules.runs.routes.runs import router as runs_router
from app.modules.simulator.routes.simulator import router as simulate_router


@asynccontextmanager
async def lifespan(app: FastAPI):
    configure_logging()
    init_db()
    yield


app = FastAPI(
    title="Hamiltonian Identification API",
    description="Simulate lattice time-series data and identify the generating Hamiltonian.",
    version=__version__,
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/")
async def root():
    return {"message": "Hamiltonian Identification API is running."}


app.include_router(simulate_router, prefix="/api/simulate", tags=["Simulate"])
app.include_router(identify_router, prefix="/api/identify", tags=["Identify"])
app.include_router(runs_router, prefix="/api/runs", tags=["Runs"])


if __name__ == "__main__":
    import uvicorn

    uvicorn.run("app.main:app", host="127.0.0.1", port=8000, reload=True)
