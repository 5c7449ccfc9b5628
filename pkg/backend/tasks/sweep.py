# backend/tasks/sweep.py

import logging
from dataclasses import asdict
from pathlib import Path

from celery import chord

from backend.api.schemas import ScenarioFile
from backend.celery_worker import celery_app
from backend.service.errors import ConfigError, NumericError
from backend.service.scenarios import at_point, resolve
from backend.service.sweep_runner import ResultRow, SweepSpec, run_point, validate_spec
from backend.service.task_tracker import mark_point_done, update_task_status
from backend.utils.io import write_results, write_sidecar


def _spec_from_payload(config: dict) -> SweepSpec:
    scenario = ScenarioFile.model_validate(config["scenario"])
    # chunks run in-process; prefork workers cannot spawn pools
    return SweepSpec.from_scenario(scenario, seed=config.get("seed"), samples=config.get("samples"), workers=1)


@celery_app.task
def validate_sweep_task(config: dict):
    task_id = config.get("task_id", "unknown")
    print(f"[validate_sweep] task: {task_id}")
    try:
        spec = _spec_from_payload(config)
        validate_spec(spec)
    except (ConfigError, ValueError) as e:
        logging.exception(f"❌ [validate_sweep] Invalid sweep for task {task_id}")
        update_task_status(task_id, "FAILURE", {"message": "Invalid sweep configuration", "error": str(e)})
        return {"status": "error", "error": str(e)}
    return {"status": "success", "points": len(spec.series_list) * len(spec.values), "rows": spec.n_rows}


@celery_app.task
def run_sweep_point_task(config: dict, series_idx: int, grid_idx: int):
    print(f"[run_point] series {series_idx}, point {grid_idx}")
    try:
        spec = _spec_from_payload(config)
        scenario = at_point(spec.scenario, spec.var, spec.values[grid_idx], spec.series_list[series_idx])
        rows = run_point(spec, scenario, resolve(scenario), series_idx, grid_idx)
        return {"status": "success", "series_idx": series_idx, "grid_idx": grid_idx, "rows": [asdict(r) for r in rows]}
    except NumericError as e:
        logging.exception(f"❌ [run_point] Numeric failure at {e.point}")
        return {"status": "error", "series_idx": series_idx, "grid_idx": grid_idx, "error": str(e), "point": e.point}
    except Exception as e:
        logging.exception(f"❌ [run_point] Failed for series {series_idx}, point {grid_idx}")
        return {"status": "error", "series_idx": series_idx, "grid_idx": grid_idx, "error": str(e)}
    finally:
        mark_point_done(config.get("task_id", "unknown"))


@celery_app.task
def finalize_sweep_task(results, config: dict, output_dir: str, task_id: str):
    print(f"[finalize] task: {task_id}")
    print(f"[finalize] Received results from {len(results) if isinstance(results, list) else 'unknown'} point tasks")

    try:
        failed = [item for item in results or [] if item.get("status") != "success"]
        if failed:
            first = failed[0]
            raise RuntimeError(f"{len(failed)} point(s) failed; first: {first.get('error')} at {first.get('point', {})}")

        ordered = sorted(results, key=lambda item: (item["series_idx"], item["grid_idx"]))
        rows = [ResultRow(**row) for item in ordered for row in item["rows"]]

        spec = _spec_from_payload(config)
        fmt = "csv"
        out_path = Path(output_dir) / f"{spec.scenario.name}.{fmt}"
        write_results(rows, out_path, fmt=fmt, bits=config.get("bits", False))
        sidecar = write_sidecar(spec, out_path, bits=config.get("bits", False))

        update_task_status(task_id, "SUCCESS", {
            "message": "Sweep completed successfully",
            "rows": len(rows),
            "result_path": str(out_path),
            "sidecar_path": str(sidecar),
            "result_filename": out_path.name
        })
        print(f"[finalize] Updated task {task_id} status to SUCCESS")
        return {"status": "success", "task_id": task_id, "rows": len(rows)}

    except Exception as e:
        logging.exception(f"Finalization failed for task {task_id}")
        update_task_status(task_id, "FAILURE", {
            "message": f"Sweep failed: {str(e)}",
            "error": str(e)
        })
        print(f"[finalize] Updated task {task_id} status to FAILURE")
        return {"status": "error", "task_id": task_id, "error": str(e)}


@celery_app.task
def launch_sweep_chord(validation: dict, config: dict):
    """
    Creates the chord of point tasks. Doesn't wait for results.
    """
    task_id = config.get("task_id", "unknown")
    if validation.get("status") != "success":
        return {"status": "error", "error": validation.get("error")}

    spec = _spec_from_payload(config)
    point_tasks = [
        run_sweep_point_task.s(config, s_idx, g_idx)
        for s_idx in range(len(spec.series_list))
        for g_idx in range(len(spec.values))
    ]
    update_task_status(task_id, "processing", {
        "message": f"Evaluating {len(point_tasks)} sweep points...",
        "points": len(point_tasks)
    })

    print(f"[launch_sweep_chord] Creating chord with {len(point_tasks)} tasks for task {task_id}")
    chord(point_tasks)(finalize_sweep_task.s(config, config["output_dir"], task_id))
    return {"status": "chord_created", "point_tasks_count": len(point_tasks)}
