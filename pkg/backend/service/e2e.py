# backend/service/e2e.py
"""
End-to-end metrics of the decode-and-forward hybrid link: the SINDR is the
minimum of the cellular effective SINR and the optical SNDR.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special
from scipy.integrate import quad

from backend.service import hpa
from backend.service.cellular import EffSinrStats, blockage_mixed_cdf
from backend.service.errors import ConfigError
from backend.service.fso import OpticalSnrStats
from backend.service.hpa import BussgangParams

logger = logging.getLogger(__name__)

ASYMPTOTE_MIN_MU_R = 1e3


class Detection(str, Enum):
    HETERODYNE = "heterodyne"
    IMDD = "imdd"


@dataclass(frozen=True)
class ModulationScheme:
    name: str
    delta: float
    tau: float
    q: tuple
    v: int
    detection: Detection

    def __post_init__(self):
        if len(self.q) != self.v:
            raise ConfigError(f"{self.name}: expected {self.v} q-coefficients, got {len(self.q)}", key="e2e.modulation")

    @classmethod
    def ook(cls) -> "ModulationScheme":
        return cls("OOK", 1.0, 0.5, (0.5,), 1, Detection.IMDD)

    @classmethod
    def bpsk(cls) -> "ModulationScheme":
        return cls("BPSK", 1.0, 0.5, (1.0,), 1, Detection.HETERODYNE)

    @classmethod
    def mpsk(cls, M: int) -> "ModulationScheme":
        if M < 2 or M & (M - 1):
            raise ConfigError(f"M-PSK order must be a power of two >= 2, got {M}", key="e2e.modulation")
        v = max(M // 4, 1)
        q = tuple(math.sin((2 * k - 1) * math.pi / M) ** 2 for k in range(1, v + 1))
        return cls(f"{M}-PSK", 2.0 / max(math.log2(M), 2.0), 0.5, q, v, Detection.HETERODYNE)

    @classmethod
    def mqam(cls, M: int) -> "ModulationScheme":
        root = math.isqrt(M)
        if M < 4 or root * root != M or root % 2:
            raise ConfigError(f"M-QAM order must be an even square >= 4, got {M}", key="e2e.modulation")
        v = root // 2
        q = tuple(3.0 * (2 * k - 1) ** 2 / (2.0 * (M - 1)) for k in range(1, v + 1))
        return cls(f"{M}-QAM", 4.0 / math.log2(M) * (1.0 - 1.0 / root), 0.5, q, v, Detection.HETERODYNE)

    @classmethod
    def from_name(cls, name: str) -> "ModulationScheme":
        key = name.strip().lower().replace("-", "")
        if key == "ook":
            return cls.ook()
        if key == "bpsk":
            return cls.bpsk()
        if key == "qpsk":
            return cls.mpsk(4)
        if key.endswith("psk") and key[:-3].isdigit():
            return cls.mpsk(int(key[:-3]))
        if key.endswith("qam") and key[:-3].isdigit():
            return cls.mqam(int(key[:-3]))
        raise ConfigError(f"unknown modulation {name!r}", key="e2e.modulation")

    def symbol_error(self, gamma):
        """(delta/2) sum_k Q(tau, q_k gamma) for an SINDR realization."""
        gamma = np.asarray(gamma, dtype=float)
        total = np.zeros_like(gamma)
        for qk in self.q:
            total += special.gammaincc(self.tau, qk * gamma)
        return 0.5 * self.delta * total


def e2e_sindr(gamma_eff, gamma_ni):
    return np.minimum(gamma_eff, gamma_ni)


@dataclass
class HybridLink:
    """Everything the end-to-end metrics need for one operating point."""
    los: EffSinrStats
    nlos: EffSinrStats
    p_los: float
    optical: OpticalSnrStats
    bussgang: BussgangParams
    varpi: float
    beta: float = 1.0
    target_rate: float = 0.0
    bandwidth: float = 700e6

    def __post_init__(self):
        if self.beta < 0:
            raise ConfigError(f"SINDR threshold must be non-negative, got {self.beta}", key="e2e.beta_db")
        if self.bussgang.kappa < 1:
            raise ConfigError(f"kappa must be >= 1, got {self.bussgang.kappa}", key="hpa.kappa")

    @property
    def kappa(self) -> float:
        return self.bussgang.kappa

    @property
    def draws_per_sample(self) -> int:
        """Underlying random draws per end-to-end realization (sizes MC chunks)."""
        branch = 4 * self.los.sel.M * self.los.Nm
        return branch * (2 if self.p_los < 1.0 else 1) + 8

    @property
    def tag(self) -> str:
        tags = {self.los.tag} | ({self.nlos.tag} if self.p_los < 1.0 else set())
        return "numeric-fallback" if "numeric-fallback" in tags else "analytic"

    # ---- distributions --------------------------------------------------

    def cellular_cdf(self, x):
        return blockage_mixed_cdf(x, self.p_los, self.los, self.nlos)

    def optical_cdf(self, x):
        return hpa.sndr_cdf(x, self.kappa, self.optical)

    def outage(self, beta: float | None = None) -> float:
        beta = self.beta if beta is None else beta
        if beta <= 0:
            return 0.0
        f1 = float(self.cellular_cdf(beta))
        f2 = float(self.optical_cdf(beta))
        return f1 + f2 - f1 * f2

    def e2e_cdf(self, x):
        x = np.asarray(x, dtype=float)
        f1 = self.cellular_cdf(x)
        f2 = self.optical_cdf(x)
        return f1 + f2 - f1 * f2

    def outage_asymptote(self, beta: float | None = None) -> float:
        """
        Outage as mu_r grows: the optical hop uses its leading-pole expansion at the
        HPA-mapped threshold. The cellular cdf does not depend on mu_r, so its exact
        value is already its limit in this regime and enters unchanged.
        """
        beta = self.beta if beta is None else beta
        if self.optical.mu_r < ASYMPTOTE_MIN_MU_R:
            logger.warning(f"[e2e] high-SNR expansion used at mu_r = {10 * math.log10(self.optical.mu_r):.1f} dB (< 30 dB)")
        if beta >= hpa.sndr_ceiling(self.kappa):
            return 1.0
        mapped = beta / (1.0 - (self.kappa - 1.0) * beta)
        f1 = float(self.cellular_cdf(beta))
        f2 = float(self.optical.cdf_asymptote(mapped))
        return f1 + f2 - f1 * f2

    def diversity_gain(self) -> float:
        cellular = float(self.los.Nm) if self.los.sel.correlation == 1.0 else 1.0
        return min(cellular, self.optical.diversity_order)

    # ---- rates ------------------------------------------------------------

    def rate_c1(self) -> float:
        c1 = self.los.rate_c1()
        if self.p_los < 1.0:
            c1 = self.p_los * c1 + (1.0 - self.p_los) * self.nlos.rate_c1()
        return c1

    def _c1_moment_mix(self, fn) -> float:
        if self.p_los >= 1.0:
            return fn(self.los)
        return self.p_los * fn(self.los) + (1.0 - self.p_los) * fn(self.nlos)

    def rate_c1_low_snr(self) -> float:
        return self._c1_moment_mix(lambda s: s.rate_c1_low_snr())

    def rate_c1_jensen(self) -> float:
        return math.log1p(self._c1_moment_mix(lambda s: s.mean))

    def rate_c2(self) -> float:
        return hpa.c2_rate(self.kappa, self.varpi, self.optical)

    def rate_c2_approx(self) -> float:
        return hpa.c2_approx(self.kappa, self.varpi, self.optical.mean)

    def rate_c2_jensen(self) -> float:
        return hpa.c2_jensen(self.kappa, self.varpi, self.optical)

    def rate_c2_ceiling(self) -> float:
        return hpa.c2_ceiling(self.kappa, self.varpi)

    def rate(self) -> float:
        return min(self.rate_c1(), self.rate_c2())

    def rate_coverage(self, target: float | None = None) -> float:
        """P[B ln(1 + gamma_e2e) >= r] with r in nats/s and B in Hz."""
        target = self.target_rate if target is None else target
        if target <= 0:
            return 1.0
        return 1.0 - self.outage(math.expm1(target / self.bandwidth))

    def error_prob_quad(self, mod: ModulationScheme) -> float:
        """(delta/2) sum_k int F_e2e(x) q^tau x^(tau-1) e^(-q x) / Gamma(tau) dx."""
        ceiling = hpa.sndr_ceiling(self.kappa)
        total = []
        for qk in mod.q:
            def integrand(w, qk=qk):
                return float(self.e2e_cdf(w / qk)) * math.exp((mod.tau - 1.0) * math.log(w) - w - special.gammaln(mod.tau))

            upper = qk * ceiling
            body, _ = quad(integrand, 0.0, upper, limit=200, epsabs=1e-12)
            if math.isfinite(upper):
                body += float(special.gammaincc(mod.tau, upper))
            total.append(body)
        return 0.5 * mod.delta * math.fsum(total)

    # ---- sampling ---------------------------------------------------------

    def sample(self, rng, size: int) -> dict:
        """One chunk of end-to-end realizations."""
        gamma_eff = self.los.sample(rng, size)
        if self.p_los < 1.0:
            blocked = rng.random(size) >= self.p_los
            gamma_eff = np.where(blocked, self.nlos.sample(rng, size), gamma_eff)
        gamma_r = self.optical.sample(rng, size)
        gamma_ni = hpa.distort_sample(gamma_r, self.bussgang)
        return {
            "gamma_eff": gamma_eff,
            "gamma_r": gamma_r,
            "gamma_ni": gamma_ni,
            "gamma_e2e": e2e_sindr(gamma_eff, gamma_ni),
        }


def outage_mc(link: HybridLink, rng, size: int):
    return (link.sample(rng, size)["gamma_e2e"] <= link.beta).astype(float)


def coverage_mc(link: HybridLink, rng, size: int):
    return (link.sample(rng, size)["gamma_e2e"] > link.beta).astype(float)


def error_prob_mc(link: HybridLink, mod: ModulationScheme, rng, size: int):
    return mod.symbol_error(link.sample(rng, size)["gamma_e2e"])


def c1_mc(link: HybridLink, rng, size: int):
    return np.log1p(link.sample(rng, size)["gamma_eff"])


def c2_mc(link: HybridLink, rng, size: int):
    return np.log1p(link.varpi * link.sample(rng, size)["gamma_ni"])


def rate_per_realization_mc(link: HybridLink, rng, size: int):
    s = link.sample(rng, size)
    return np.minimum(np.log1p(s["gamma_eff"]), np.log1p(link.varpi * s["gamma_ni"]))


def rate_coverage_mc(link: HybridLink, rng, size: int):
    s = link.sample(rng, size)
    return (link.bandwidth * np.log1p(s["gamma_e2e"]) >= link.target_rate).astype(float)
