# backend/service/processing_runner.py

from celery import chain

from backend.service.task_tracker import update_task_status
from backend.tasks.sweep import launch_sweep_chord, validate_sweep_task


def run_pipeline(config: dict):
    """
    validate_sweep_task -> launch_sweep_chord. The chord itself (one task per
    grid point, then finalize) is created inside launch_sweep_chord so an
    invalid grid never reaches the workers.
    """
    task_id = config.get("task_id", "unknown")
    update_task_status(task_id, "validating", {"message": "Sweep received, validating grid."})

    return chain(
        validate_sweep_task.s(config),
        launch_sweep_chord.s(config)
    ).delay()
