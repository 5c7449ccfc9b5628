# backend/utils/temp_manager.py

import shutil
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict

from backend.utils.io import SIDECAR_SUFFIX


class TempManager:
    """Per-job output directories (job_<task id>) for sweeps submitted through the API."""

    def __init__(self, base_dir: str = "temp"):
        self.temp_root = Path(base_dir)
        self.temp_root.mkdir(parents=True, exist_ok=True)

    def get_job_dir(self, job_id: str, create_if_missing: bool = True) -> Path:
        job_dir = self.temp_root / job_id
        if create_if_missing:
            job_dir.mkdir(parents=True, exist_ok=True)
        return job_dir

    def get_job_info(self, job_id: str) -> Dict[str, Any]:
        """Return metadata about the job, separating results from resolved-config sidecars."""
        job_dir = self.get_job_dir(job_id, create_if_missing=False)
        if not job_dir.exists():
            return {"exists": False}
        files = sorted(f.name for f in job_dir.glob("*") if f.is_file())
        return {
            "exists": True,
            "job_id": job_id,
            "path": str(job_dir),
            "created_at": datetime.fromtimestamp(job_dir.stat().st_mtime).isoformat(),
            "results": [f for f in files if not f.endswith(SIDECAR_SUFFIX)],
            "sidecars": [f for f in files if f.endswith(SIDECAR_SUFFIX)],
        }

    def delete_job(self, job_id: str) -> bool:
        job_dir = self.get_job_dir(job_id, create_if_missing=False)
        if job_dir.exists():
            shutil.rmtree(job_dir)
            return True
        return False

    def list_all_jobs(self) -> list:
        return sorted(d.name for d in self.temp_root.glob("job_*") if d.is_dir())


def cleanup_old_jobs(temp_base: str = "temp", max_age_sec: int = 86400) -> int:
    """Remove job folders older than max_age_sec; returns how many were removed."""
    temp_path = Path(temp_base)
    now = time.time()
    count = 0

    for job_dir in temp_path.glob("job_*"):
        if not job_dir.is_dir():
            continue
        if now - job_dir.stat().st_mtime > max_age_sec:
            shutil.rmtree(job_dir)
            count += 1

    return count
