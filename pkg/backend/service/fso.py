# backend/service/fso.py
"""
Optical backhaul hop: Beer-Lambert path loss, Gaussian-beam pointing-error
geometry, Double Generalized Gamma turbulence, and the unified
(heterodyne r=1 / IM-DD r=2) SNR statistics.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy import special
from scipy.integrate import quad
from scipy.stats import gaussian_kde

from backend.service.errors import ConfigError, NumericError
from backend.service.specfun import MeijerGSpec, erf, meijer_g, meijer_g_leading_terms

logger = logging.getLogger(__name__)

MAX_RATIONAL_DENOMINATOR = 20
CDF_CLAMP_TOL = 1e-6
_KDE_SAMPLES = 200_000
_KDE_SEED = 7
_LOG_SPAN = 60.0
_GAMMA_TAIL = 800.0
_LENGTH_KEYS = {
    "lambda2": "fso.lambda2_nm",
    "a": "fso.a_cm",
    "theta": "fso.theta_mrad",
    "L2": "fso.l2_m",
    "sigma_s": "fso.sigma_s_m",
}


@dataclass(frozen=True)
class FsoConfig:
    lambda2: float = 1550e-9
    a: float = 0.05
    theta: float = 10e-3
    sigma_atten_db_km: float = 0.43
    Cn2: float = 5e-14
    L2: float = 500.0
    sigma_s: float = 0.05
    omega_0: float = 0.1
    F_0: float = math.inf
    r: int = 2
    eta: float = 1.0
    sigma2_sq: float = 1e-7
    snr_reference: str = "mean"

    def __post_init__(self):
        for name, key in _LENGTH_KEYS.items():
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive", key=key)
        if self.omega_0 <= 0:
            raise ConfigError("beam waist omega_0 must be positive", key="fso.omega_0_mm")
        if self.F_0 == 0:
            raise ConfigError("radius of curvature F_0 must be non-zero", key="fso.f0_m")
        if self.r not in (1, 2):
            raise ConfigError(f"detection order r must be 1 or 2, got {self.r}", key="fso.r")
        if self.sigma2_sq <= 0:
            raise ConfigError("sigma2_sq must be positive", key="fso.sigma2_sq")
        if self.snr_reference not in ("mean", "printed"):
            raise ConfigError(f"unknown snr_reference {self.snr_reference!r}", key="fso.snr_reference")

    @property
    def attenuation_per_m(self) -> float:
        return self.sigma_atten_db_km * math.log(10.0) / 10.0 / 1000.0


@dataclass(frozen=True)
class PointingGeometry:
    sigma_rytov_sq: float
    Theta0: float
    Lambda0: float
    Lambda1: float
    omega_z: float
    v: float
    A0: float
    omega_zeq: float
    xi: float


@dataclass(frozen=True)
class DggParams:
    alpha1: float = 2.1690
    alpha2: float = 1.0
    m1: float = 0.55
    m2: float = 2.35
    Omega1: float = 1.5793
    Omega2: float = 0.9671
    p: int = field(default=0)
    q: int = field(default=0)

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "m1", "m2", "Omega1", "Omega2"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"DGG parameter {name} must be positive", key=f"fso.{name.lower()}")
        if self.p and self.q:
            return
        ratio = Fraction(self.alpha1 / self.alpha2).limit_denominator(MAX_RATIONAL_DENOMINATOR)
        if ratio.numerator > 60:
            raise ConfigError(
                f"alpha1/alpha2 = {self.alpha1 / self.alpha2:.6g} needs p = {ratio.numerator}; Meijer-G order too large",
                key="fso.alpha1",
            )
        exact = self.alpha2 * ratio.numerator / ratio.denominator
        if abs(exact - self.alpha1) > 1e-12:
            logger.warning(f"[fso] alpha1 rationalized from {self.alpha1} to {exact:.6g} (p/q = {ratio})")
            object.__setattr__(self, "alpha1", exact)
        object.__setattr__(self, "p", ratio.numerator)
        object.__setattr__(self, "q", ratio.denominator)

    def moment(self, t):
        """E[I_a^t]."""
        return (
            (self.Omega1 / self.m1) ** (t / self.alpha1) * special.gamma(self.m1 + t / self.alpha1) / special.gamma(self.m1)
            * (self.Omega2 / self.m2) ** (t / self.alpha2) * special.gamma(self.m2 + t / self.alpha2) / special.gamma(self.m2)
        )

    def normalized(self) -> "DggParams":
        """Rescale Omega1, Omega2 so that E[I_a] = 1."""
        mean = self.moment(1.0)
        # E[I_a] scales as Omega1^(1/alpha1) Omega2^(1/alpha2); split the correction evenly
        f = mean ** -0.5
        return DggParams(
            alpha1=self.alpha1, alpha2=self.alpha2, m1=self.m1, m2=self.m2,
            Omega1=self.Omega1 * f ** self.alpha1, Omega2=self.Omega2 * f ** self.alpha2,
            p=self.p, q=self.q,
        )


def path_loss(cfg: FsoConfig) -> float:
    geometric = math.pi * cfg.a ** 2 / (cfg.theta * cfg.L2) ** 2
    return geometric * math.exp(-cfg.attenuation_per_m * cfg.L2)


def rytov_variance(cfg: FsoConfig) -> float:
    return 1.23 * cfg.Cn2 * cfg.L2 ** (11.0 / 6.0) * (2.0 * math.pi / cfg.lambda2) ** (7.0 / 6.0)


def beam_geometry(cfg: FsoConfig) -> PointingGeometry:
    sigma_rytov_sq = rytov_variance(cfg)
    theta0 = 1.0 - cfg.L2 / cfg.F_0
    lambda0 = cfg.lambda2 * cfg.L2 / (math.pi * cfg.omega_0 ** 2)
    lambda1 = lambda0 / (theta0 ** 2 + lambda0 ** 2)
    spread = (theta0 + lambda0) * (1.0 + 1.63 * sigma_rytov_sq ** (6.0 / 5.0) * lambda1)
    if spread <= 0:
        raise ConfigError(f"beam focus parameters give a non-physical beam width (factor {spread})", key="fso.f0_m")
    omega_z = cfg.omega_0 * math.sqrt(spread)
    v = math.sqrt(math.pi) * cfg.a / (math.sqrt(2.0) * omega_z)
    erf_v = float(erf(v))
    omega_zeq = math.sqrt(omega_z ** 2 * math.sqrt(math.pi) * erf_v / (2.0 * v * math.exp(-v * v)))
    return PointingGeometry(
        sigma_rytov_sq=sigma_rytov_sq,
        Theta0=theta0,
        Lambda0=lambda0,
        Lambda1=lambda1,
        omega_z=omega_z,
        v=v,
        A0=erf_v ** 2,
        omega_zeq=omega_zeq,
        xi=omega_zeq / (2.0 * cfg.sigma_s),
    )


def sample_pointing(geom: PointingGeometry, sigma_s: float, rng, size=()):
    radial = rng.rayleigh(sigma_s, size)
    return geom.A0 * np.exp(-2.0 * radial ** 2 / geom.omega_zeq ** 2)


def _sample_gg(alpha: float, m: float, Omega: float, rng, size):
    return (Omega * rng.gamma(m, 1.0, size) / m) ** (1.0 / alpha)


def sample_turbulence(dgg: DggParams, rng, size=()):
    ix = _sample_gg(dgg.alpha1, dgg.m1, dgg.Omega1, rng, size)
    iy = _sample_gg(dgg.alpha2, dgg.m2, dgg.Omega2, rng, size)
    return ix * iy


def unified_snr(Iz, cfg: FsoConfig):
    return (cfg.eta * np.asarray(Iz)) ** cfg.r / cfg.sigma2_sq


def mu_from_link(cfg: FsoConfig, mean_iz: float) -> float:
    """Average electrical SNR (eta E[I_z])^r / sigma2^2."""
    return (cfg.eta * mean_iz) ** cfg.r / cfg.sigma2_sq


@dataclass
class OpticalSnrStats:
    """
    Law of gamma_r = g W^r with W = I_x I_y I_p / A0. The reference gain g is
    mu_r / E[W]^r ("mean") or mu_r (A0 I_l)^r ("printed").
    """
    cfg: FsoConfig
    dgg: DggParams
    geom: PointingGeometry
    mu_r: float

    def __post_init__(self):
        if self.mu_r <= 0:
            raise ConfigError(f"mu_r must be positive, got {self.mu_r}", key="fso.mu_r_db")

    @property
    def r(self) -> int:
        return self.cfg.r

    @property
    def xi_sq(self) -> float:
        return self.geom.xi ** 2

    def _w_moment(self, t):
        return self.dgg.moment(t) * self.xi_sq / (self.xi_sq + t)

    @cached_property
    def gain(self) -> float:
        if self.cfg.snr_reference == "printed":
            return self.mu_r * (self.geom.A0 * path_loss(self.cfg)) ** self.r
        return self.mu_r / self._w_moment(1.0) ** self.r

    @property
    def N(self) -> float:
        return self.dgg.alpha2 * self.dgg.p

    @cached_property
    def _meijer(self):
        d = self.dgg
        p, q, N = d.p, d.q, self.N
        b = [(d.m1 + k) / q for k in range(q)] + [(d.m2 + k) / p for k in range(p)] + [self.xi_sq / N]
        D = 1.0 / ((d.Omega1 / d.m1) ** q * (d.Omega2 / d.m2) ** p * q ** q * p ** p)
        log_K = (
            (1.0 - (p + q) / 2.0) * math.log(2.0 * math.pi)
            + (d.m1 - 0.5) * math.log(q) + (d.m2 - 0.5) * math.log(p)
            - special.gammaln(d.m1) - special.gammaln(d.m2)
        )
        K = math.exp(log_K) * self.xi_sq / N
        a_top = self.xi_sq / N + 1.0
        P = len(b)
        cdf_spec = MeijerGSpec(P, 1, (1.0, a_top), tuple(b) + (0.0,))
        pdf_spec = MeijerGSpec(P, 0, (a_top,), tuple(b))
        return D, K, cdf_spec, pdf_spec

    def _argument(self, y):
        D = self._meijer[0]
        return D * (np.asarray(y, dtype=float) / self.gain) ** (self.N / self.r)

    @property
    def scintillation_index(self) -> float:
        return self.dgg.moment(2.0) / self.dgg.moment(1.0) ** 2 * (
            (self.xi_sq / (self.xi_sq + 2.0)) / (self.xi_sq / (self.xi_sq + 1.0)) ** 2
        ) - 1.0

    @property
    def gamma_r_bar(self) -> float:
        """Average SNR E[gamma_r]; equals (sigma_si^2 + 1) mu_r for IM/DD under the mean reference."""
        return self.moment(1.0)

    @property
    def mean(self) -> float:
        return self.moment(1.0)

    @property
    def diversity_order(self) -> float:
        d = self.dgg
        return min(self.xi_sq, d.m1 * d.alpha1, d.m2 * d.alpha2) / self.r

    def moment(self, t: float) -> float:
        """E[gamma_r^t] from the product structure of W."""
        value = self.gain ** t * self._w_moment(self.r * t)
        if not math.isfinite(value):
            raise NumericError(f"optical SNR moment of order {t} is not finite")
        return float(value)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y).ravel()
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            try:
                _, K, cdf_spec, _ = self._meijer
                raw = K * meijer_g(cdf_spec, self._argument(flat[pos]))
            except NumericError as e:
                logger.warning(f"[fso] Meijer-G cdf failed ({e}); using nested quadrature")
                raw = np.array([self._cdf_quadrature(v) for v in flat[pos]])
            if np.any((raw < -CDF_CLAMP_TOL) | (raw > 1.0 + CDF_CLAMP_TOL)):
                logger.warning(f"[fso] cdf left [0, 1] before clamping (min {raw.min():.3g}, max {raw.max():.3g})")
            out[pos] = np.clip(raw, 0.0, 1.0)
        out = out.reshape(y.shape)
        return float(out) if out.ndim == 0 else out

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y).ravel()
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            try:
                _, K, _, pdf_spec = self._meijer
                out[pos] = self.N / (self.r * flat[pos]) * K * meijer_g(pdf_spec, self._argument(flat[pos]))
            except NumericError as e:
                logger.warning(f"[fso] Meijer-G pdf failed ({e}); using a smoothed Monte-Carlo density")
                out[pos] = self._pdf_kde(flat[pos])
        out = np.maximum(out, 0.0).reshape(y.shape)
        return float(out) if out.ndim == 0 else out

    def cdf_asymptote(self, y):
        """Leading high-SNR terms of the cdf (first residue of every lower pole)."""
        _, K, cdf_spec, _ = self._meijer
        return K * meijer_g_leading_terms(cdf_spec, self._argument(y))

    def _conditional_cdf(self, c: float) -> float:
        """
        P[Y U <= c] for the second turbulence factor Y and the normalized
        pointing gain U (P[U <= u] = u^xi^2), closed form in z = m2 Y^alpha2 / Omega2.
        """
        d = self.dgg
        zc = d.m2 * c ** d.alpha2 / d.Omega2
        if zc <= 0.0:
            return 0.0
        if not math.isfinite(zc) or zc > _GAMMA_TAIL:
            return 1.0
        s = self.xi_sq / d.alpha2
        below = special.gammainc(d.m2, zc)
        # zc^s Gamma(m2 - s, zc) / Gamma(m2)
        tail = zc ** s * _upper_gamma(d.m2 - s, zc) / special.gamma(d.m2)
        return float(below + tail)

    def _cdf_quadrature(self, y: float) -> float:
        """
        P[g W^r <= y] by integrating the conditional cdf over the first
        turbulence factor in u = log(m1 X^alpha1 / Omega1), split at the point
        where the conditional cdf leaves 1.
        """
        d = self.dgg
        t = (y / self.gain) ** (1.0 / self.r)
        if t <= 0.0:
            return 0.0
        log_norm = special.gammaln(d.m1)

        def integrand(u):
            x = (d.Omega1 * math.exp(u) / d.m1) ** (1.0 / d.alpha1)
            weight = math.exp(d.m1 * u - math.exp(u) - log_norm)
            return weight if x == 0.0 else self._conditional_cdf(t / x) * weight

        # the conditional cdf switches off where m2 (t/X)^alpha2 / Omega2 = 1
        u_kink = math.log(d.m1 / d.Omega1) + d.alpha1 * (math.log(t) - math.log(d.Omega2 / d.m2) / d.alpha2)
        u_lo = min(u_kink, 0.0) - _LOG_SPAN / d.m1
        u_hi = math.log(_GAMMA_TAIL)
        breaks = sorted({u_lo, min(max(u_kink, u_lo), u_hi), min(0.0, u_hi), u_hi})
        value = 0.0
        for a, b in zip(breaks[:-1], breaks[1:]):
            if b > a:
                part, _ = quad(integrand, a, b, limit=200, epsabs=0.0, epsrel=1e-9)
                value += part
        if not math.isfinite(value) or value < -CDF_CLAMP_TOL or value > 1.0 + CDF_CLAMP_TOL:
            raise NumericError(f"optical cdf quadrature left [0, 1] ({value:.3g}) at y={y:.6g}", point={"y": y})
        return min(max(value, 0.0), 1.0)

    @cached_property
    def _kde(self):
        rng = np.random.default_rng(_KDE_SEED)
        return gaussian_kde(np.log(self.sample(rng, _KDE_SAMPLES)))

    def _pdf_kde(self, y):
        return self._kde(np.log(y)) / y

    def sample(self, rng, size):
        """gamma_r samples through I_a and I_p under the configured reference gain."""
        w = sample_turbulence(self.dgg, rng, size) * sample_pointing(self.geom, self.cfg.sigma_s, rng, size) / self.geom.A0
        return self.gain * w ** self.r


def _upper_gamma(a: float, x: float) -> float:
    """Gamma(a, x) for x > 0 and any real a."""
    if a > 0:
        return float(special.gammaincc(a, x) * special.gamma(a))
    if a == 0:
        return float(special.exp1(x))
    return (_upper_gamma(a + 1.0, x) - x ** a * math.exp(-x)) / a


def varpi_for(cfg: FsoConfig) -> float:
    return 1.0 if cfg.r == 1 else math.e / (2.0 * math.pi)
