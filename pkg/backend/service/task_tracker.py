# backend/service/task_tracker.py

import json

import redis

from backend.config import Config

# Connect to Redis
r = redis.Redis(host=Config.REDIS_HOST, port=Config.REDIS_PORT, decode_responses=True)


def _status_key(task_id: str) -> str:
    return f"sweep:{task_id}"


def _done_key(task_id: str) -> str:
    return f"sweep:{task_id}:points_done"


def store_task_status(task_id: str, status: dict):
    r.set(_status_key(task_id), json.dumps(status), ex=Config.STATUS_TTL_SEC)


def get_task_status(task_id: str):
    val = r.get(_status_key(task_id))
    if not val:
        return None
    status = json.loads(val)
    # point tasks count through a separate counter so they never race on the json blob
    done = r.get(_done_key(task_id))
    if done is not None:
        status["points_done"] = int(done)
        if status.get("points"):
            status["progress"] = round(100 * int(done) / status["points"])
    return status


def update_task_status(task_id: str, status: str, update: dict | None = None):
    current = get_task_status(task_id) or {}
    current.update(update or {})
    current["status"] = status
    store_task_status(task_id, current)


def mark_point_done(task_id: str) -> int:
    """Count one finished grid point (success or failure) of a sweep."""
    key = _done_key(task_id)
    done = r.incr(key)
    r.expire(key, Config.STATUS_TTL_SEC)
    return done
