# backend/tasks/__init__.py

from . import sweep
from . import pipeline
