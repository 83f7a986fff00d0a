"""HTTP front end for germ analyses: service lifespan, request logging and error mapping."""

import logging
import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from germkit import __version__
from germkit.config import settings
from germkit.exceptions import GermError
from germkit.models import HealthResponse
from germkit.routers import analysis
from germkit.services.analysis import AnalysisService

logging.basicConfig(
    level=getattr(logging, settings.log_level.upper(), logging.INFO),
    format="%(asctime)s  %(levelname)-8s  %(name)s  %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    service = AnalysisService(
        truncation=settings.truncation,
        max_steps=settings.max_steps,
        min_retained_order=settings.min_retained_order,
        rate_iterations=settings.rate_iterations,
    )
    analysis.init_router(service)
    app.state.service = service

    logger.info(
        "Application started: N=%d  max_steps=%d",
        settings.truncation, settings.max_steps,
    )
    yield
    logger.info("Germ analysis service stopped")


app = FastAPI(
    title="Germ Dynamics Toolkit",
    description=(
        "Exact formal computations for superattracting and semi-superattracting "
        "germs of (C^2, 0): classification, blow-ups, valuations and normal forms."
    ),
    version=__version__,
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.middleware("http")
async def log_requests(request: Request, call_next):
    start = time.perf_counter()
    response = await call_next(request)
    elapsed = (time.perf_counter() - start) * 1000
    logger.info(
        "%s %s → %d  (%.0f ms)",
        request.method, request.url.path, response.status_code, elapsed,
    )
    return response


@app.exception_handler(GermError)
async def germ_error_handler(request: Request, exc: GermError):
    logger.warning("%s on %s %s: %s", exc.kind, request.method, request.url.path, exc)
    return JSONResponse(status_code=422, content={"detail": str(exc), "kind": exc.kind})


@app.exception_handler(ZeroDivisionError)
async def zero_division_handler(request: Request, exc: ZeroDivisionError):
    return JSONResponse(status_code=422, content={"detail": str(exc), "kind": "zero_division"})


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    logger.exception("Unhandled error on %s %s", request.method, request.url.path)
    return JSONResponse(
        status_code=500,
        content={"detail": "An internal error occurred while analysing the germ."},
    )


@app.get("/health", response_model=HealthResponse, tags=["system"])
async def health():
    """Report the service version and its default truncation."""
    service: AnalysisService = app.state.service
    return HealthResponse(status="healthy", version=__version__, truncation=service.truncation)


app.include_router(analysis.router)
