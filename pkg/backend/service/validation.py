# backend/service/validation.py
"""
Analytic-vs-Monte-Carlo cross-checks for one resolved operating point.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import partial

import numpy as np
import pandas as pd
from scipy import stats
from scipy.integrate import quad

from backend.service import e2e, hpa
from backend.service.cellular import EffSinrStats, InterferenceConfig, PrsSelection
from backend.service.mc_engine import RngSpec, estimate

logger = logging.getLogger(__name__)

SIGMA_FACTOR = 3.0
ABS_SLACK = 2e-3
REDUCTION_TOL = 1e-6
NORMALIZATION_TOL = 1e-3
_STREAM_BASE = 1 << 48


@dataclass(frozen=True)
class CheckResult:
    name: str
    analytic: float
    reference: float
    half_width_95: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "analytic": self.analytic,
            "reference": self.reference,
            "half_width_95": self.half_width_95,
            "result": "PASS" if self.passed else "FAIL",
        }


def _below(stats_obj, threshold: float, rng, size: int):
    return (stats_obj.sample(rng, size) <= threshold).astype(float)


def _draw(stats_obj, rng, size: int):
    return stats_obj.sample(rng, size)


def _sndr_below(link, threshold: float, rng, size: int):
    gamma_ni = hpa.distort_sample(link.optical.sample(rng, size), link.bussgang)
    return (gamma_ni <= threshold).astype(float)


class _Checker:
    def __init__(self, samples: int, seed: int, workers: int | None):
        self.samples = samples
        self.seed = seed
        self.workers = workers
        self.results: list[CheckResult] = []

    def _mc(self, metric):
        idx = len(self.results)
        return estimate(metric, self.samples, RngSpec(self.seed, _STREAM_BASE + idx), workers=self.workers)

    def against_mc(self, name: str, analytic: float, metric, relative: bool = False):
        est = self._mc(metric)
        slack = SIGMA_FACTOR * est.half_width_95 + (0.0 if relative else ABS_SLACK)
        passed = abs(analytic - est.mean) <= slack
        self.results.append(CheckResult(name, float(analytic), est.mean, est.half_width_95, bool(passed)))

    def exact(self, name: str, analytic: float, reference: float, tol: float):
        passed = abs(analytic - reference) <= tol
        self.results.append(CheckResult(name, float(analytic), float(reference), 0.0, bool(passed)))


def cellular_reduction_error(Nm: int, gamma_bar: float, points: int = 20) -> float:
    """Max deviation of the M=k=1, rho=1, interference-free cdf from Gamma(Nm, gamma_bar/Nm)."""
    reduced = EffSinrStats(gamma_bar, Nm, PrsSelection(M=1, k=1, rho=1.0), InterferenceConfig(Mz=0))
    x = np.linspace(0.05, 4.0, points) * gamma_bar
    return float(np.max(np.abs(reduced.cdf(x) - stats.gamma.cdf(x, Nm, scale=gamma_bar / Nm))))


def run_checks(link: e2e.HybridLink, samples: int, seed: int, workers: int | None = None) -> list[CheckResult]:
    c = _Checker(samples, seed, workers)
    los = link.los
    optical = link.optical

    c.exact("cellular cdf reduces to Gamma", cellular_reduction_error(los.Nm, los.gamma_bar), 0.0, REDUCTION_TOL)

    area, _ = quad(lambda u: optical.pdf(math.exp(u)) * math.exp(u),
                   math.log(optical.mean) - 30.0, math.log(optical.mean) + 12.0, limit=200)
    c.exact("fso pdf integrates to one", area, 1.0, NORMALIZATION_TOL)

    for factor in (0.25, 1.0, 2.0):
        x = factor * los.mean
        c.against_mc(f"cellular cdf at {factor:g} x mean", los.cdf(x), partial(_below, los, x))

    for factor in (0.1, 0.5, 1.0, 2.0):
        y = factor * optical.mean
        c.against_mc(f"fso cdf at {factor:g} x mean", optical.cdf(y), partial(_below, optical, y))

    ceiling = hpa.sndr_ceiling(link.kappa)
    for factor in (0.1, 0.5, 1.0):
        x = factor * min(optical.mean, 0.5 * ceiling)
        c.against_mc(f"sndr cdf at {x:.4g}", hpa.sndr_cdf(x, link.kappa, optical), partial(_sndr_below, link, x))

    for factor in (0.5, 1.0, 2.0):
        beta = factor * link.beta if link.beta > 0 else factor
        shifted = replace(link, beta=beta)
        c.against_mc(f"outage identity at beta={beta:.4g}", shifted.outage(), partial(e2e.outage_mc, shifted))

    c.against_mc("cellular mean", los.mean, partial(_draw, los), relative=True)
    c.against_mc("fso mean", optical.mean, partial(_draw, optical), relative=True)

    for r in c.results:
        log = logger.info if r.passed else logger.warning
        log(f"[validate] {r.name}: analytic {r.analytic:.6g} vs {r.reference:.6g} -> {'PASS' if r.passed else 'FAIL'}")
    return c.results


def results_table(results: list[CheckResult]) -> str:
    return pd.DataFrame([r.to_dict() for r in results]).to_string(index=False)
