# backend/service/task_submitter.py

from typing import Optional
from uuid import uuid4

from backend.api.schemas import ScenarioFile
from backend.service.task_tracker import store_task_status
from backend.tasks.pipeline import submit_sweep_task  # Celery task entry point

def submit_sweep_job(
    scenario: ScenarioFile,
    output_dir: str,
    seed: Optional[int] = None,
    samples: Optional[int] = None,
    bits: bool = False,
    task_id: Optional[str] = None
) -> str:
    """
    Submit a sweep to Celery via submit_sweep_task(). The scenario travels
    as its JSON dump; workers rebuild the HybridLink of each grid point.
    """
    if not task_id:
        task_id = str(uuid4())

    payload = {
        "task_id": task_id,
        "scenario": scenario.model_dump(mode="json"),
        "seed": seed,
        "samples": samples,
        "bits": bits,
        "output_dir": output_dir
    }

    # Submit to Celery
    submit_sweep_task.delay(payload)

    store_task_status(task_id, {
        "scenario": scenario.name,
        "status": "submitted",
        "progress": 0,
        "message": "Sweep submitted."
    })

    return task_id
