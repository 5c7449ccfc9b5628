# backend/tasks/pipeline.py

from backend.celery_worker import celery_app
from backend.service.processing_runner import run_pipeline
from backend.service.task_tracker import update_task_status


@celery_app.task
def submit_sweep_task(config: dict):
    task_id = config.get("task_id", "unknown")
    scenario = config.get("scenario", {})
    sweep = scenario.get("sweep") or {}
    print(f"[submit_sweep] task: {task_id}, scenario: {scenario.get('name', 'unnamed')}")

    # status must exist before any worker can report on this task
    update_task_status(task_id, "queued", {
        "message": "Sweep validation and point tasks enqueued.",
        "sweep_var": sweep.get("var"),
        "seed": config.get("seed")
    })
    result = run_pipeline(config)
    return {"submitted": True, "task_id": task_id, "celery_id": result.id}
