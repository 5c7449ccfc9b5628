# backend/utils/io.py

import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import json5
import pandas as pd

from backend.api.schemas import ScenarioFile
from backend.service.errors import ConfigError
from backend.service.scenarios import canned, flatten, provenance
from backend.service.sweep_runner import CSV_COLUMNS

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".resolved.json"


def read_scenario_dict(path: str | Path) -> dict:
    """Parse a TOML or JSON/JSON5 scenario file into a plain dict."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file not found: {path}", key=str(path))
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix == ".toml":
            data = tomllib.loads(text)
        elif path.suffix in (".json", ".json5"):
            data = json5.loads(text)
        else:
            raise ConfigError(f"unsupported scenario format {path.suffix!r} (use .toml, .json or .json5)", key=str(path))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}", key=str(path)) from e
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{path}: {e}", key=str(path)) from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table/object", key=str(path))
    # a resolved sidecar carries the scenario under its own key
    if "scenario" in data and "provenance" in data:
        data = data["scenario"]
    return data


def load_scenario(path_or_name: str | Path) -> ScenarioFile:
    """Scenario from a file path, or a canned scenario by name."""
    path = Path(path_or_name)
    if not path.suffix and not path.exists():
        return canned(str(path_or_name))
    return ScenarioFile.model_validate(read_scenario_dict(path))


def sidecar_path(out_path: str | Path) -> Path:
    out_path = Path(out_path)
    return out_path.with_name(out_path.stem + SIDECAR_SUFFIX)


def results_frame(rows, bits: bool = False) -> pd.DataFrame:
    return pd.DataFrame([row.to_record(bits=bits) for row in rows], columns=CSV_COLUMNS)


def write_results(rows, out_path: str | Path, fmt: str = "csv", bits: bool = False) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    df = results_frame(rows, bits=bits)
    if fmt == "csv":
        df.to_csv(out_path, index=False, encoding="utf-8", lineterminator="\n")
    elif fmt == "json":
        with open(out_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(df.to_dict(orient="records"), f, indent=2)
            f.write("\n")
    else:
        raise ConfigError(f"unknown output format {fmt!r}", key="format")
    logger.info(f"[io] wrote {len(df)} rows to {out_path}")
    return out_path


def resolved_scenario(spec) -> ScenarioFile:
    """The sweep's scenario with every default and the effective seed/sample count made explicit."""
    data = spec.scenario.model_dump(mode="json")
    data["mc"].update({"seed": spec.seed, "samples": spec.samples})
    return ScenarioFile.model_validate(data)


def write_sidecar(spec, out_path: str | Path, bits: bool = False) -> Path:
    path = sidecar_path(out_path)
    payload = {
        "scenario": resolved_scenario(spec).model_dump(mode="json"),
        "provenance": provenance(spec.scenario),
        "resolved": flatten(spec.scenario),
        "units": {"rates": "bits" if bits else "nats", "target_rate": "nats/s", "bandwidth": "Hz"},
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, sort_keys=False)
        f.write("\n")
    return path
