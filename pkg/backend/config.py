# backend/config.py
from dotenv import load_dotenv
import os
from pathlib import Path

load_dotenv()

class Config:
    # Monte-Carlo engine
    WORKERS = int(os.getenv("MMFSO_WORKERS", 1))
    SEED = int(os.getenv("MMFSO_SEED", 20240601))
    SAMPLES = int(os.getenv("MMFSO_SAMPLES", 1_000_000))
    CHUNK_SIZE = int(os.getenv("MMFSO_CHUNK_SIZE", 65536))

    # Job output root for API submissions
    OUTPUT_DIR = os.getenv("MMFSO_OUTPUT_DIR", "temp")
    STATUS_TTL_SEC = int(os.getenv("MMFSO_STATUS_TTL_SEC", 7 * 24 * 3600))

    REDIS_HOST = os.getenv("REDIS_HOST", "localhost")
    REDIS_PORT = int(os.getenv("REDIS_PORT", 6379))
    CELERY_BROKER_URL = os.getenv("CELERY_BROKER_URL", f"redis://{REDIS_HOST}:{REDIS_PORT}/0")
    CELERY_RESULT_BACKEND = os.getenv("CELERY_RESULT_BACKEND", f"redis://{REDIS_HOST}:{REDIS_PORT}/0")


    @classmethod
    def validate_config(cls):
        """Validate configuration at startup"""
        if cls.WORKERS < 1:
            raise ValueError(
                f"MMFSO_WORKERS must be >= 1, got {cls.WORKERS}\n"
                f"Please set MMFSO_WORKERS to the number of worker processes"
            )
        if cls.SAMPLES < 1000:
            raise ValueError(
                f"MMFSO_SAMPLES must be >= 1000, got {cls.SAMPLES}\n"
                f"Monte-Carlo confidence intervals are not meaningful below that"
            )
        if cls.CHUNK_SIZE < 1024:
            raise ValueError(f"MMFSO_CHUNK_SIZE must be >= 1024, got {cls.CHUNK_SIZE}")
        if cls.STATUS_TTL_SEC < 60:
            raise ValueError(f"MMFSO_STATUS_TTL_SEC must be >= 60, got {cls.STATUS_TTL_SEC}")
        output_dir = Path(cls.OUTPUT_DIR)
        if output_dir.exists() and not output_dir.is_dir():
            raise ValueError(f"MMFSO_OUTPUT_DIR points to a file: {cls.OUTPUT_DIR}")
        return True
