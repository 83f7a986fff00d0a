"""POST /analysis/{command}: the HTTP mirror of the command-line analyses."""

import logging

from fastapi import APIRouter
from fastapi.concurrency import run_in_threadpool

from germkit.models import AnalysisRequest, ErrorResponse
from germkit.services.analysis import AnalysisService
from germkit.services.parser import Command

logger = logging.getLogger(__name__)
router = APIRouter(prefix="/analysis", tags=["analysis"])

_service: AnalysisService | None = None


def init_router(service: AnalysisService) -> None:
    global _service
    _service = service


def _get_service() -> AnalysisService:
    assert _service is not None, "analysis router not initialized"
    return _service


@router.post(
    "/{command}",
    responses={422: {"model": ErrorResponse}},
)
async def run_analysis(command: Command, body: AnalysisRequest) -> dict:
    """Run one command on the posted germ; the body is the command's JSON report."""
    service = _get_service()
    job = service.job(
        command,
        body.germ,
        body.order,
        max_steps=body.max_steps,
        steps=body.steps,
        theta=body.theta,
        chart=body.chart,
        n_max=body.n_max,
        family=body.family,
    )
    logger.info("analysis request: %s", job.to_dict())
    report = await run_in_threadpool(service.run, job)
    return report.model_dump(by_alias=True)
