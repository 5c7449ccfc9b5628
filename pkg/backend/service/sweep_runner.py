# backend/service/sweep_runner.py
"""
Sweep execution: one ResultRow per (series, grid point, metric), emitted in
series-then-grid order. Analytic metrics come straight from the HybridLink;
Monte-Carlo metrics go through mc_engine.estimate with a stream id derived
from the row position, so rows never share random numbers.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial

from backend.api.schemas import ScenarioFile
from backend.config import Config
from backend.service import e2e
from backend.service.errors import ConfigError, NumericError
from backend.service.mc_engine import MIN_SAMPLES, Estimate, RngSpec, chunk_size_for, estimate
from backend.service.scenarios import SWEEP_KEYS, at_point, modulation, resolve

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["sweep_var", "value", "metric", "estimate", "half_width_95", "n", "tag"]

# metric name -> (value of link and scenario, depends on the cellular closed forms)
ANALYTIC_METRICS = {
    "outage": (lambda link, sc: link.outage(), True),
    "outage_asymptote": (lambda link, sc: link.outage_asymptote(), True),
    "coverage": (lambda link, sc: 1.0 - link.outage(), True),
    "rate_coverage": (lambda link, sc: link.rate_coverage(), True),
    "diversity_gain": (lambda link, sc: link.diversity_gain(), False),
    "c1": (lambda link, sc: link.rate_c1(), True),
    "c1_low_snr": (lambda link, sc: link.rate_c1_low_snr(), True),
    "c1_jensen": (lambda link, sc: link.rate_c1_jensen(), True),
    "c1_throughput": (lambda link, sc: link.bandwidth * link.rate_c1(), True),
    "c2_quad": (lambda link, sc: link.rate_c2(), False),
    "c2_approx": (lambda link, sc: link.rate_c2_approx(), False),
    "c2_jensen": (lambda link, sc: link.rate_c2_jensen(), False),
    "c2_ceiling": (lambda link, sc: link.rate_c2_ceiling(), False),
    "rate": (lambda link, sc: link.rate(), True),
    "error_prob_quad": (lambda link, sc: link.error_prob_quad(modulation(sc)), True),
}

# metric name -> picklable sampler factory
MC_METRICS = {
    "outage_mc": lambda link, sc: partial(e2e.outage_mc, link),
    "coverage_mc": lambda link, sc: partial(e2e.coverage_mc, link),
    "error_prob": lambda link, sc: partial(e2e.error_prob_mc, link, modulation(sc)),
    "c1_mc": lambda link, sc: partial(e2e.c1_mc, link),
    "c2": lambda link, sc: partial(e2e.c2_mc, link),
    "rate_per_realization": lambda link, sc: partial(e2e.rate_per_realization_mc, link),
    "rate_coverage_mc": lambda link, sc: partial(e2e.rate_coverage_mc, link),
}

RATE_METRICS = {
    "c1", "c1_low_snr", "c1_jensen", "c1_throughput", "c2_quad", "c2_approx", "c2_jensen",
    "c2_ceiling", "rate", "c1_mc", "c2", "rate_per_realization",
}


@dataclass(frozen=True)
class ResultRow:
    sweep_var: str
    value: float
    metric: str
    estimate: float
    half_width_95: float
    n: int
    tag: str
    series_idx: int = 0
    grid_idx: int = 0
    base_metric: str = ""

    def to_record(self, bits: bool = False) -> dict:
        scale = 1.0 / math.log(2.0) if bits and self.base_metric in RATE_METRICS else 1.0
        return {
            "sweep_var": self.sweep_var,
            "value": self.value,
            "metric": self.metric,
            "estimate": self.estimate * scale,
            "half_width_95": self.half_width_95 * scale,
            "n": self.n,
            "tag": self.tag,
        }


@dataclass
class SweepSpec:
    scenario: ScenarioFile
    var: str
    values: list
    metrics: list
    series: list = field(default_factory=list)
    seed: int = Config.SEED
    samples: int = Config.SAMPLES
    chunk_size: int | None = None
    workers: int | None = None

    @classmethod
    def from_scenario(cls, scenario: ScenarioFile, seed: int | None = None, samples: int | None = None,
                      workers: int | None = None) -> "SweepSpec":
        mc = scenario.mc
        return cls(
            scenario=scenario,
            var=scenario.sweep.var,
            values=list(scenario.sweep.values),
            metrics=list(scenario.sweep.metrics),
            series=[dict(s) for s in scenario.sweep.series],
            seed=seed if seed is not None else (mc.seed if mc.seed is not None else Config.SEED),
            samples=samples if samples is not None else (mc.samples if mc.samples is not None else Config.SAMPLES),
            chunk_size=mc.chunk_size,
            workers=workers,
        )

    @property
    def series_list(self) -> list:
        return self.series or [{}]

    @property
    def n_rows(self) -> int:
        return len(self.series_list) * len(self.values) * len(self.metrics)


def series_label(series: dict) -> str:
    if not series:
        return ""
    return "[" + ",".join(f"{key.split('.')[-1]}={value}" for key, value in series.items()) + "]"


def stream_id(grid_idx: int, series_idx: int, metric_idx: int) -> int:
    return grid_idx << 32 | series_idx << 16 | metric_idx


def validate_spec(spec: SweepSpec) -> dict:
    """
    Reject an invalid sweep before any computation. Returns the resolved
    links keyed by (series_idx, grid_idx).
    """
    if not spec.metrics:
        raise ConfigError("sweep needs at least one metric", key="sweep.metrics")
    unknown = [m for m in spec.metrics if m not in ANALYTIC_METRICS and m not in MC_METRICS]
    if unknown:
        known = sorted(ANALYTIC_METRICS) + sorted(MC_METRICS)
        raise ConfigError(f"unknown metrics {unknown}; choose from {known}", key="sweep.metrics")
    if not spec.values:
        raise ConfigError("sweep grid is empty", key="sweep.values")
    if not all(math.isfinite(v) for v in spec.values):
        raise ConfigError("sweep grid contains non-finite values", key="sweep.values")
    if spec.var not in SWEEP_KEYS:
        raise ConfigError(f"unknown sweep variable {spec.var!r}", key="sweep.var")
    if len(spec.series_list) >= 1 << 16 or len(spec.metrics) >= 1 << 16:
        raise ConfigError("too many series or metrics for distinct random streams", key="sweep")
    if any(m in MC_METRICS for m in spec.metrics) and spec.samples < MIN_SAMPLES:
        raise ConfigError(f"need at least {MIN_SAMPLES} Monte-Carlo samples, got {spec.samples}", key="mc.samples")

    points = {}
    for s_idx, series in enumerate(spec.series_list):
        for g_idx, value in enumerate(spec.values):
            scenario = at_point(spec.scenario, spec.var, value, series)
            points[(s_idx, g_idx)] = (scenario, resolve(scenario))
    return points


def run_point(spec: SweepSpec, scenario: ScenarioFile, link, series_idx: int, grid_idx: int) -> list[ResultRow]:
    value = spec.values[grid_idx]
    label = series_label(spec.series_list[series_idx])
    rows = []
    for m_idx, metric in enumerate(spec.metrics):
        try:
            if metric in ANALYTIC_METRICS:
                fn, cellular = ANALYTIC_METRICS[metric]
                est = Estimate.exact(fn(link, scenario), tag=link.tag if cellular else "analytic")
            else:
                sampler = MC_METRICS[metric](link, scenario)
                est = estimate(
                    sampler,
                    spec.samples,
                    RngSpec(seed=spec.seed, stream_id=stream_id(grid_idx, series_idx, m_idx)),
                    workers=spec.workers,
                    chunk_size=spec.chunk_size or chunk_size_for(link.draws_per_sample),
                    params={spec.var: value, "metric": metric, **spec.series_list[series_idx]},
                )
        except NumericError as e:
            if not e.point:
                e.point = {spec.var: value, "metric": metric, **spec.series_list[series_idx]}
            raise
        rows.append(
            ResultRow(
                sweep_var=spec.var,
                value=float(value),
                metric=f"{metric}{label}",
                estimate=est.mean,
                half_width_95=est.half_width_95,
                n=est.n,
                tag=est.tag,
                series_idx=series_idx,
                grid_idx=grid_idx,
                base_metric=metric,
            )
        )
    return rows


def run_sweep(spec: SweepSpec) -> list[ResultRow]:
    points = validate_spec(spec)
    total = len(points)
    rows = []
    for count, ((s_idx, g_idx), (scenario, link)) in enumerate(sorted(points.items()), start=1):
        logger.info(f"[sweep] point {count}/{total}: {spec.var}={spec.values[g_idx]:g} {series_label(spec.series_list[s_idx])}")
        rows.extend(run_point(spec, scenario, link, s_idx, g_idx))
    return rows
