# backend/service/hpa.py
"""
Memoryless amplifier models (SEL, TWTA, SSPA) under Bussgang linearization,
the distortion factor kappa and the backhaul rate characterizations.

Amplitudes are normalized by the RMS input amplitude sigma_r, so `ibo` is the
amplitude back-off A_sat/sigma_r and `ibo**2` the power back-off.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

from backend.service.errors import ConfigError, NumericError
from backend.service.specfun import erfc, erfcx, scaled_exp1

logger = logging.getLogger(__name__)

HETERODYNE_VARPI = 1.0
IMDD_VARPI = math.e / (2.0 * math.pi)
VARIANCE_CLAMP_TOL = 1e-12


class HpaModel(str, Enum):
    IDEAL = "ideal"
    SEL = "sel"
    TWTA = "twta"
    SSPA = "sspa"


@dataclass(frozen=True)
class HpaConfig:
    model: HpaModel = HpaModel.IDEAL
    ibo: float = 2.0
    sigma_r: float = 1.0
    G: float | None = None
    sigma1_sq: float = 1.0
    kappa_override: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", HpaModel(self.model))
        if self.ibo <= 0 or self.sigma_r <= 0 or self.sigma1_sq <= 0:
            raise ConfigError("ibo, sigma_r and sigma1_sq must be positive", key="hpa")
        if self.G is not None and self.G <= 0:
            raise ConfigError("relay gain G must be positive", key="hpa.g")
        if self.kappa_override is not None and self.kappa_override < 1:
            raise ConfigError(f"kappa must be >= 1, got {self.kappa_override}", key="hpa.kappa")

    @property
    def A_sat(self) -> float:
        return self.ibo * self.sigma_r

    @property
    def gain(self) -> float:
        # default gain drives the amplifier input at sigma_r
        if self.G is not None:
            return self.G
        return self.sigma_r / math.sqrt(self.sigma1_sq)


@dataclass(frozen=True)
class BussgangParams:
    zeta: float
    sigma_varsigma_sq: float
    kappa: float = 1.0


def _clamped_variance(value: float, scale: float, model: str) -> float:
    if value >= 0:
        return value
    if value >= -VARIANCE_CLAMP_TOL * scale:
        return 0.0
    raise NumericError(f"{model} distortion variance came out negative ({value})")


def _require(cfg: HpaConfig, model: HpaModel):
    if cfg.model != model:
        raise ConfigError(f"expected a {model.value} amplifier, got {cfg.model.value}", key="hpa.model")


def sel_params(cfg: HpaConfig) -> BussgangParams:
    _require(cfg, HpaModel.SEL)
    x = cfg.ibo
    rho = x * x
    s2 = cfg.sigma_r ** 2
    zeta = 1.0 - math.exp(-rho) + 0.5 * math.sqrt(math.pi) * x * float(erfc(x))
    var = _clamped_variance(s2 * (1.0 - math.exp(-rho) - zeta ** 2), s2, "SEL")
    return _with_kappa(cfg, zeta, var)


def twta_params(cfg: HpaConfig) -> BussgangParams:
    _require(cfg, HpaModel.TWTA)
    rho = cfg.ibo ** 2
    s2 = cfg.sigma_r ** 2
    e1 = float(scaled_exp1(rho))  # e^rho E1(rho) = -e^rho Ei(-rho)
    zeta = rho * (1.0 - rho * e1)
    var = s2 * (rho ** 2 * ((1.0 + rho) * e1 - 1.0) - zeta ** 2)
    return _with_kappa(cfg, zeta, _clamped_variance(var, s2, "TWTA"))


def sspa_params(cfg: HpaConfig) -> BussgangParams:
    """Unit smoothness factor only."""
    _require(cfg, HpaModel.SSPA)
    x = cfg.ibo
    rho = x * x
    s2 = cfg.sigma_r ** 2
    e1 = float(scaled_exp1(rho))
    zeta = 0.5 * x * (2.0 * x - math.sqrt(math.pi) * float(erfcx(x)) * (2.0 * rho - 1.0))
    var = s2 * (rho * (1.0 - rho * e1) - zeta ** 2)
    return _with_kappa(cfg, zeta, _clamped_variance(var, s2, "SSPA"))


def kappa(bp: BussgangParams, G: float, sigma1_sq: float) -> float:
    if bp.zeta <= 0:
        raise ConfigError(f"Bussgang scale zeta must be positive, got {bp.zeta}", key="hpa")
    return 1.0 + bp.sigma_varsigma_sq / (bp.zeta ** 2 * G ** 2 * sigma1_sq)


def _with_kappa(cfg: HpaConfig, zeta: float, var: float) -> BussgangParams:
    bp = BussgangParams(zeta=zeta, sigma_varsigma_sq=var)
    k = cfg.kappa_override if cfg.kappa_override is not None else kappa(bp, cfg.gain, cfg.sigma1_sq)
    return BussgangParams(zeta=zeta, sigma_varsigma_sq=var, kappa=k)


_PARAMS = {
    HpaModel.SEL: sel_params,
    HpaModel.TWTA: twta_params,
    HpaModel.SSPA: sspa_params,
}


def bussgang_params(cfg: HpaConfig) -> BussgangParams:
    if cfg.model == HpaModel.IDEAL:
        k = cfg.kappa_override if cfg.kappa_override is not None else 1.0
        return BussgangParams(zeta=1.0, sigma_varsigma_sq=0.0, kappa=k)
    return _PARAMS[cfg.model](cfg)


def sndr_map(gamma_r, kappa_value: float):
    """Optical SNDR gamma_r / ((kappa-1) gamma_r + 1)."""
    gamma_r = np.asarray(gamma_r, dtype=float)
    out = gamma_r / ((kappa_value - 1.0) * gamma_r + 1.0)
    return float(out) if out.ndim == 0 else out


def sndr_ceiling(kappa_value: float) -> float:
    return math.inf if kappa_value <= 1.0 else 1.0 / (kappa_value - 1.0)


def sndr_cdf(x, kappa_value: float, fso_stats):
    """F_ni(x) = F_r(x / (1 - (kappa-1) x)) below the ceiling 1/(kappa-1), 1 above it."""
    x = np.asarray(x, dtype=float)
    k1 = kappa_value - 1.0
    below = x < sndr_ceiling(kappa_value)
    mapped = np.where(below, x / np.where(below, 1.0 - k1 * x, 1.0), 0.0)
    out = np.ones_like(x)
    if np.any(below):
        out[below] = fso_stats.cdf(mapped[below])
    return float(out) if out.ndim == 0 else out


def distort_sample(signal_snr, bp: BussgangParams, G: float = 1.0, sigma1_sq: float = 1.0):
    """
    Per-sample SNDR of the linearized amplifier: the useful part is scaled by
    zeta^2 G^2 sigma1^2 and the distortion power sigma_varsigma^2 joins the
    noise in the denominator. Equal in distribution to sndr_map(gamma_r, kappa).
    """
    snr = np.asarray(signal_snr, dtype=float)
    useful = bp.zeta ** 2 * G ** 2 * sigma1_sq
    if bp.sigma_varsigma_sq == 0 and bp.kappa == 1.0:
        return snr
    # kappa may be pinned independently of (zeta, sigma_varsigma^2)
    distortion = (bp.kappa - 1.0) * useful
    return useful * snr / (distortion * snr + useful)


def _log_quad(func, center: float) -> float:
    lo, hi = math.log(center) - 30.0, math.log(center) + 16.0
    value, _ = quad(lambda u: func(math.exp(u)) * math.exp(u), lo, hi, limit=200, epsabs=1e-12, epsrel=1e-8)
    return value


def mean_sndr(kappa_value: float, fso_stats) -> float:
    """E[gamma_ni] by integrating the tail of the optical SNR law."""
    k1 = kappa_value - 1.0
    return _log_quad(lambda y: (1.0 - float(fso_stats.cdf(y))) / (k1 * y + 1.0) ** 2, fso_stats.mean)


def c2_rate(kappa_value: float, varpi: float, fso_stats) -> float:
    """Exact backhaul rate E[log(1 + varpi gamma_ni)] from the optical SNR cdf."""
    k1 = kappa_value - 1.0

    def integrand(y):
        x = y / (k1 * y + 1.0)
        return varpi / (1.0 + varpi * x) * (1.0 - float(fso_stats.cdf(y))) / (k1 * y + 1.0) ** 2

    return _log_quad(integrand, fso_stats.mean)


def c2_approx(kappa_value: float, varpi: float, mean_gamma_r: float) -> float:
    phi = varpi * mean_gamma_r
    psi = (kappa_value - 1.0) * mean_gamma_r + 1.0
    return math.log1p(phi / psi)


def c2_jensen(kappa_value: float, varpi: float, fso_stats) -> float:
    return math.log1p(varpi * mean_sndr(kappa_value, fso_stats))


def c2_ceiling(kappa_value: float, varpi: float) -> float:
    if kappa_value <= 1.0:
        return math.inf
    return math.log1p(varpi / (kappa_value - 1.0))
