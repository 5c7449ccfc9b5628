# backend/api/sweeps.py

import logging
import os
import uuid

from fastapi import APIRouter, HTTPException
from fastapi.responses import FileResponse
from pydantic import ValidationError

from backend.api.schemas import SweepRequest, SweepResponse
from backend.config import Config
from backend.service.errors import ConfigError
from backend.service.scenarios import CANNED, canned
from backend.service.sweep_runner import SweepSpec, validate_spec
from backend.service.task_submitter import submit_sweep_job
from backend.service.task_tracker import get_task_status
from backend.utils.temp_manager import TempManager, cleanup_old_jobs

router = APIRouter()

# ---------------------------
# API Endpoints
# ---------------------------

@router.get("/scenarios")
def list_scenarios():
    """Canned scenario names with their descriptions."""
    return {name: body.get("description", "") for name, body in CANNED.items()}


@router.post("/sweep", response_model=SweepResponse)
def submit_sweep(req: SweepRequest):
    """
    Validate a sweep and hand it to the Celery pipeline. Invalid grids are
    rejected here, before anything is queued.
    """
    if (req.canned is None) == (req.scenario is None):
        raise HTTPException(status_code=422, detail="give exactly one of `canned` or `scenario`")
    try:
        scenario = canned(req.canned) if req.canned is not None else req.scenario
        validate_spec(SweepSpec.from_scenario(scenario, seed=req.seed, samples=req.samples))
    except ConfigError as e:
        raise HTTPException(status_code=422, detail={"key": e.key, "message": str(e)})
    except ValidationError as e:
        raise HTTPException(status_code=422, detail=[{"loc": list(err["loc"]), "msg": err["msg"]} for err in e.errors()])

    try:
        task_id = str(uuid.uuid4())
        cleanup_old_jobs(Config.OUTPUT_DIR)
        job_dir = TempManager(Config.OUTPUT_DIR).get_job_dir(f"job_{task_id}")
        submit_sweep_job(
            scenario=scenario,
            output_dir=str(job_dir),
            seed=req.seed,
            samples=req.samples,
            bits=req.bits,
            task_id=task_id,
        )
        return SweepResponse(task_id=task_id, message=f"Sweep '{scenario.name}' submitted.")
    except Exception as e:
        logging.exception("Failed to submit sweep")
        raise HTTPException(status_code=500, detail=str(e))


@router.get("/status/{task_id}")
def get_status(task_id: str):
    status_info = get_task_status(task_id)
    if not status_info:
        raise HTTPException(status_code=404, detail="Task not found")
    return status_info


@router.get("/download/{task_id}")
def download_results(task_id: str):
    """
    Download the result CSV of a completed sweep.
    """
    status_info = get_task_status(task_id)
    if not status_info:
        raise HTTPException(status_code=404, detail="Task not found")
    if status_info.get("status") != "SUCCESS":
        raise HTTPException(status_code=400, detail="Task not completed successfully")

    result_path = status_info.get("result_path")
    if not result_path or not os.path.exists(result_path):
        raise HTTPException(status_code=404, detail="Result file not found")

    return FileResponse(
        path=result_path,
        filename=status_info.get("result_filename", os.path.basename(result_path)),
        media_type="text/csv"
    )


@router.get("/config/status")
def get_config_status():
    """
    Get backend configuration status
    """
    settings = {
        "workers": Config.WORKERS,
        "seed": Config.SEED,
        "samples": Config.SAMPLES,
        "chunk_size": Config.CHUNK_SIZE,
        "output_dir": Config.OUTPUT_DIR,
    }
    try:
        Config.validate_config()
        return {"status": "ok", **settings, "message": "Backend configuration is valid"}
    except ValueError as e:
        return {"status": "error", **settings, "message": str(e)}
