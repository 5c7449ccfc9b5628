# backend/service/cellular.py
"""
mmWave access hop: link budget, outdated-CSI partial relay selection over
correlated Gamma branches, Gamma interference, blockage, and the statistics
of the effective SINR gamma_eff = Y / (1 + Z).
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import special
from scipy.integrate import quad
from scipy.stats import beta as beta_dist
from scipy.stats import gamma as gamma_dist
from scipy.stats import ncx2

from backend.service.errors import CancellationError, ConfigError, NumericError
from backend.service.specfun import MeijerGSpec, bessel_j0, log_phi_coeffs, meijer_g

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 3e8
CANCELLATION_LIMIT = 1e8
MAX_MIXTURE_TERMS = 2_000_000
CDF_CLAMP_TOL = 1e-6
MIXTURE_SUM_TOL = 1e-6
MAX_MEIJER_COMPONENTS = 256
_LAGUERRE_NODES = 24
_JACOBI_NODES = 64


@dataclass(frozen=True)
class CellularConfig:
    fc: float = 30e9
    Gt: float = 4.0
    Gr: float = 4.0
    N: int = 64
    m: float = 1.0
    N0: float = -142.0
    Nf: float = 0.0
    B: float = 700e6
    L1: float = 50.0
    P_dbm: float = 23.0
    alpha_los: float = 2.0
    alpha_nlos: float = 4.0
    mu_block: float | None = None
    p_los: float | None = None
    pathloss_term: str = "literal"

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}", key="cellular.n")
        if self.m < 0.5:
            raise ConfigError(f"Nakagami m must be >= 0.5, got {self.m}", key="cellular.m")
        if self.B <= 0 or self.L1 <= 0 or self.fc <= 0:
            raise ConfigError("B, L1 and fc must be positive", key="cellular")
        if abs(self.N * self.m - round(self.N * self.m)) > 1e-9:
            raise ConfigError(f"N*m must be an integer, got {self.N * self.m}", key="cellular.m")
        if self.pathloss_term not in ("literal", "exponent"):
            raise ConfigError(f"unknown pathloss_term {self.pathloss_term!r}", key="cellular.pathloss_term")
        if self.p_los is not None and not 0.0 <= self.p_los <= 1.0:
            raise ConfigError(f"p_los must lie in [0, 1], got {self.p_los}", key="cellular.p_los")
        if self.alpha_los > self.alpha_nlos:
            logger.warning(f"[cellular] alpha_los={self.alpha_los} exceeds alpha_nlos={self.alpha_nlos}")

    @property
    def Nm(self) -> int:
        return int(round(self.N * self.m))

    def los_probability(self) -> float:
        if self.p_los is not None:
            return self.p_los
        if self.mu_block is None:
            return 1.0
        return p_los(self.L1, self.mu_block)


@dataclass(frozen=True)
class PrsSelection:
    M: int = 10
    k: int = 10
    rho: float | None = None
    fd: float | None = None
    Td: float | None = None

    def __post_init__(self):
        if self.M < 1 or not 1 <= self.k <= self.M:
            raise ConfigError(f"need 1 <= k <= M, got k={self.k}, M={self.M}", key="prs.k")
        if self.rho is None and (self.fd is None or self.Td is None):
            raise ConfigError("give either rho or both fd and Td", key="prs.rho")
        if not 0.0 <= self.correlation <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.correlation}", key="prs.rho")

    @property
    def correlation(self) -> float:
        if self.rho is not None:
            return self.rho
        return jakes_rho(self.fd, self.Td)


@dataclass(frozen=True)
class InterferenceConfig:
    Mz: int = 3
    gamma_z_bar: float = 10 ** 0.2
    Pr: float | None = None
    poisson: bool = False
    per_interferer: bool = False

    def __post_init__(self):
        if self.Mz < 0 or int(self.Mz) != self.Mz:
            raise ConfigError(f"Mz must be a non-negative integer, got {self.Mz}", key="interference.mz")
        if self.gamma_z_bar < 0:
            raise ConfigError("gamma_z_bar must be >= 0", key="interference.gamma_z_bar_db")

    @property
    def aggregate_mean(self) -> float:
        """Mean aggregate interference SNR. gamma_z_bar is the total unless per_interferer is set."""
        return self.gamma_z_bar * self.Mz if self.per_interferer else self.gamma_z_bar

    @property
    def beta(self) -> float:
        return self.Mz / self.aggregate_mean


def path_gain_db(cfg: CellularConfig, alpha: float, L1: float | None = None) -> float:
    L1 = cfg.L1 if L1 is None else L1
    if L1 <= 0:
        raise ConfigError(f"L1 must be positive, got {L1}", key="cellular.l1_m")
    free_space = 20.0 * math.log10(4.0 * math.pi * L1 * cfg.fc / SPEED_OF_LIGHT)
    if cfg.pathloss_term == "literal":
        extra = alpha * L1
    else:
        extra = 10.0 * alpha * math.log10(L1)
    return cfg.Gt + cfg.Gr - free_space - extra


def noise_power_dbm(cfg: CellularConfig) -> float:
    if cfg.B <= 0:
        raise ConfigError("B must be positive", key="cellular.b_mhz")
    return 10.0 * math.log10(cfg.B) + cfg.N0 + cfg.Nf


def average_snr(cfg: CellularConfig, alpha: float) -> float:
    """Aggregate MRC average SNR N * P * Omega / sigma_1^2 from the link budget (linear)."""
    snr_db = cfg.P_dbm + path_gain_db(cfg, alpha) - noise_power_dbm(cfg)
    return cfg.N * 10 ** (snr_db / 10.0)


def nlos_offset(cfg: CellularConfig) -> float:
    """Linear NLOS/LOS average SNR ratio from the path-gain difference."""
    return 10 ** ((path_gain_db(cfg, cfg.alpha_nlos) - path_gain_db(cfg, cfg.alpha_los)) / 10.0)


def jakes_rho(fd: float, Td: float) -> float:
    if fd < 0 or Td < 0:
        raise ConfigError("fd and Td must be non-negative", key="prs")
    return float(bessel_j0(2.0 * math.pi * fd * Td))


def p_los(d: float, mu: float) -> float:
    if d < 0 or mu <= 0:
        raise ConfigError(f"p_los needs d >= 0 and mu > 0, got d={d}, mu={mu}", key="cellular.mu_block_m")
    return math.exp(-d / mu)


def sample_correlated_snr_pair(sel: PrsSelection, Nm: int, gamma_bar: float, rng, size=()):
    """
    Outdated and updated aggregate SNRs of `size` candidates. Each of the Nm
    complex branches is h' = sqrt(rho) h + sqrt(1-rho) w with an independent
    innovation w, so both coordinates are Gamma(Nm, gamma_bar/Nm).
    """
    size = (size,) if isinstance(size, int) else tuple(size)
    rho = sel.correlation
    scale = math.sqrt(gamma_bar / Nm / 2.0)
    h = rng.standard_normal(size + (Nm, 2)) * scale
    if rho == 1.0:
        outdated = np.sum(h * h, axis=(-1, -2))
        return outdated, outdated.copy()
    w = rng.standard_normal(size + (Nm, 2)) * scale
    h_new = math.sqrt(rho) * h + math.sqrt(1.0 - rho) * w
    return np.sum(h * h, axis=(-1, -2)), np.sum(h_new * h_new, axis=(-1, -2))


def prs_select(M: int, k: int, outdated, updated):
    """
    Rank candidates by the outdated SNR (ascending, ties by index) and return
    the (outdated, updated) pair of rank k along the last axis.
    """
    outdated = np.asarray(outdated)
    updated = np.asarray(updated)
    if outdated.shape[-1] != M or updated.shape != outdated.shape:
        raise ConfigError(f"expected {M} candidate pairs, got shape {outdated.shape}", key="prs.m")
    if not 1 <= k <= M:
        raise ConfigError(f"rank k={k} outside 1..{M}", key="prs.k")
    order = np.argsort(outdated, axis=-1, kind="stable")
    idx = order[..., k - 1: k]
    return (
        np.take_along_axis(outdated, idx, axis=-1)[..., 0],
        np.take_along_axis(updated, idx, axis=-1)[..., 0],
    )


def sample_interference(icfg: InterferenceConfig, rng, size=()):
    if icfg.Mz == 0:
        return np.zeros(size)
    scale = icfg.aggregate_mean / icfg.Mz
    if icfg.poisson:
        shape = rng.poisson(icfg.Mz, size)
        return rng.gamma(np.maximum(shape, 1e-300), scale) * (shape > 0)
    return rng.gamma(icfg.Mz, scale, size)


def effective_sinr(updated, interference):
    return np.asarray(updated) / (np.asarray(interference) + 1.0)


@dataclass(frozen=True)
class GammaMixture:
    """sum_t w_t Gamma(shape_t, scale_t); weights may be negative."""
    shape: np.ndarray
    scale: np.ndarray
    weight: np.ndarray


def selected_snr_mixture(a: int, theta: float, M: int, k: int, rho: float) -> GammaMixture:
    """
    Law of the updated SNR of the rank-k candidate as a signed Gamma mixture.

    The order-statistic density is expanded binomially with index
    j = n + (M - k); conditioning on the outdated SNR turns each term into a
    finite mix of Gamma(a + v, theta (1 + j(1-rho)) / (1 + j)) laws. Within
    one j all terms share a sign, so they are summed in the log domain; the
    signs only meet when the mixture is evaluated.
    """
    point = {"a": a, "M": M, "k": k, "rho": rho}
    n_terms = sum((j * (a - 1) + 1) * (j * (a - 1) + 2) // 2 for j in range(M - k, M))
    if n_terms > MAX_MIXTURE_TERMS:
        raise CancellationError(f"selection mixture needs {n_terms} terms", point=point)

    lead = math.log(k) + special.gammaln(M + 1) - special.gammaln(k + 1) - special.gammaln(M - k + 1)
    log_rho = math.log(rho) if rho > 0 else -math.inf
    log_1mrho = math.log1p(-rho) if rho < 1 else -math.inf

    shapes, scales, weights = [], [], []
    for n in range(k):
        j = n + (M - k)
        sign_n = -1.0 if n % 2 else 1.0
        base_n = lead + special.gammaln(k) - special.gammaln(n + 1) - special.gammaln(k - n)
        log_phi = log_phi_coeffs(j, a - 1)
        i = np.arange(log_phi.size)[:, None]
        v = np.arange(log_phi.size)[None, :]
        valid = v <= i
        with np.errstate(invalid="ignore", divide="ignore"):
            log_w = (
                base_n
                + log_phi[:, None]
                + special.gammaln(a + i) - special.gammaln(a)
                + special.gammaln(i + 1) - special.gammaln(v + 1) - special.gammaln(np.where(valid, i - v, 0) + 1)
                + np.where(i - v > 0, (i - v) * log_1mrho, 0.0)
                + np.where(v > 0, v * log_rho, 0.0)
                - i * math.log1p(j * (1.0 - rho))
                - (a + v) * math.log1p(j)
            )
            log_w = np.where(valid, log_w, -np.inf)
            log_col = special.logsumexp(log_w, axis=0)
        keep = np.isfinite(log_col)
        w = sign_n * np.exp(log_col[keep])
        nz = w != 0.0
        shapes.append(a + np.arange(log_phi.size)[keep][nz])
        scales.append(np.full(int(nz.sum()), theta * (1.0 + j * (1.0 - rho)) / (1.0 + j)))
        weights.append(w[nz])

    weight = np.concatenate(weights)
    total = math.fsum(weight)
    magnitude = math.fsum(np.abs(weight))
    if not math.isfinite(magnitude) or total == 0 or magnitude / abs(total) > CANCELLATION_LIMIT:
        raise CancellationError(
            f"selection mixture lost its significant digits (sum|w|/|sum w| = {magnitude / abs(total) if total else math.inf:.3g})",
            point=point,
        )
    if abs(total - 1.0) > MIXTURE_SUM_TOL:
        raise CancellationError(f"selection mixture weights sum to {total:.9g}, not 1", point=point)

    return GammaMixture(
        shape=np.concatenate(shapes).astype(float),
        scale=np.concatenate(scales),
        weight=weight,
    )


def _log_interference_factor(shape_max: int, c, beta: float, Mz: int):
    """
    log E_Z[(1+Z)^u e^{-cZ}] for u = 0..shape_max, Z ~ Gamma(Mz, rate beta).
    Returned with shape (len(c), shape_max + 1).
    """
    c = np.atleast_1d(c)
    bc = beta + c[:, None]
    out = np.empty((c.size, shape_max + 1))
    t = np.arange(shape_max + 1)
    # log of (Mz)_t / (beta + c)^t, the moments of Z' ~ Gamma(Mz, rate beta + c)
    log_mom = special.gammaln(Mz + t)[None, :] - special.gammaln(Mz) - t[None, :] * np.log(bc)
    for u in range(shape_max + 1):
        tt = t[: u + 1]
        log_binom = special.gammaln(u + 1) - special.gammaln(tt + 1) - special.gammaln(u - tt + 1)
        out[:, u] = special.logsumexp(log_binom[None, :] + log_mom[:, : u + 1], axis=1)
    out += Mz * (math.log(beta) - np.log(bc))
    return out


@dataclass
class EffSinrStats:
    """
    Effective SINR of the selected link for a given aggregate average SNR.
    Closed forms come from the Gamma mixture; when it cancels catastrophically
    the conditional noncentral chi-square representation is integrated
    numerically and `tag` reports "numeric-fallback".
    """
    gamma_bar: float
    Nm: int
    sel: PrsSelection
    icfg: InterferenceConfig = field(default_factory=InterferenceConfig)

    def __post_init__(self):
        if self.gamma_bar <= 0:
            raise ConfigError(f"gamma_bar must be positive, got {self.gamma_bar}", key="cellular.gamma_bar_db")

    @property
    def theta(self) -> float:
        return self.gamma_bar / self.Nm

    @cached_property
    def mixture(self) -> GammaMixture | None:
        try:
            return selected_snr_mixture(self.Nm, self.theta, self.sel.M, self.sel.k, self.sel.correlation)
        except CancellationError as e:
            logger.warning(f"[cellular] {e}; switching to numerical integration")
            return None

    @property
    def tag(self) -> str:
        return "analytic" if self.mixture is not None else "numeric-fallback"

    # ---- analytic path -------------------------------------------------

    def _scale_groups(self):
        mix = self.mixture
        scales, inverse = np.unique(mix.scale, return_inverse=True)
        for g, s in enumerate(scales):
            members = inverse == g
            yield s, mix.shape[members].astype(int), mix.weight[members]

    def _mixture_cdf(self, x):
        Mz = self.icfg.Mz
        out = np.zeros_like(x)
        for s, shapes, w in self._scale_groups():
            c = x / s
            if Mz == 0:
                out += special.gammainc(shapes[None, :], c[:, None]) @ w
                continue
            # P(Y <= x(1+Z)) = 1 - E_Z[e^{-c(1+Z)} sum_{q<A} (c(1+Z))^q / q!]
            A_max = int(shapes.max())
            log_fac = _log_interference_factor(A_max - 1, c, self.icfg.beta, Mz)
            q = np.arange(A_max)
            safe_c = np.where(c > 0, c, 1.0)
            log_terms = q[None, :] * np.log(safe_c)[:, None] - special.gammaln(q + 1)[None, :] + log_fac
            cumulative = np.logaddexp.accumulate(log_terms, axis=1)
            tail = np.exp(cumulative[:, shapes - 1] - c[:, None])
            tail = np.where(c[:, None] > 0, tail, 1.0)
            out += (1.0 - tail) @ w
        return out

    def _mixture_pdf(self, x):
        Mz = self.icfg.Mz
        out = np.zeros_like(x)
        for s, shapes, w in self._scale_groups():
            c = x / s
            safe_c = np.where(c > 0, c, 1.0)
            log_base = (
                (shapes[None, :] - 1) * np.log(safe_c)[:, None]
                - c[:, None] - special.gammaln(shapes)[None, :] - math.log(s)
            )
            if Mz > 0:
                log_fac = _log_interference_factor(int(shapes.max()), c, self.icfg.beta, Mz)
                log_base = log_base + log_fac[:, shapes]
            dens = np.exp(log_base)
            dens = np.where((c[:, None] > 0) | (shapes[None, :] == 1), dens, 0.0)
            out += dens @ w
        return out

    # ---- numerical path ------------------------------------------------

    @cached_property
    def _order_nodes(self):
        """Gauss-Jacobi nodes of the Beta(k, M-k+1) law of the outdated-SNR rank."""
        M, k = self.sel.M, self.sel.k
        t, wt = special.roots_jacobi(_JACOBI_NODES, M - k, k - 1)
        u = 0.5 * (1.0 + t)
        outdated = special.gammaincinv(self.Nm, u) * self.theta
        return outdated, wt / wt.sum()

    @cached_property
    def _interference_nodes(self):
        if self.icfg.Mz == 0:
            return np.zeros(1), np.ones(1)
        t, wt = special.roots_genlaguerre(_LAGUERRE_NODES, self.icfg.Mz - 1)
        return t / self.icfg.beta, wt / wt.sum()

    def _selected_cdf_numeric(self, y):
        rho = self.sel.correlation
        x_nodes, x_w = self._order_nodes
        y = np.asarray(y, dtype=float)
        if rho == 1.0:
            u = special.gammainc(self.Nm, y / self.theta)
            return special.betainc(self.sel.k, self.sel.M - self.sel.k + 1, u)
        spread = (1.0 - rho) * self.theta / 2.0
        nc = rho * x_nodes / spread
        vals = special.chndtr(y[..., None] / spread, 2 * self.Nm, nc)
        return vals @ x_w

    def _selected_pdf_numeric(self, y):
        rho = self.sel.correlation
        y = np.asarray(y, dtype=float)
        if rho == 1.0:
            a, M, k = self.Nm, self.sel.M, self.sel.k
            F = special.gammainc(a, y / self.theta)
            f = gamma_dist.pdf(y, a, scale=self.theta)
            return beta_dist.pdf(F, k, M - k + 1) * f
        x_nodes, x_w = self._order_nodes
        spread = (1.0 - rho) * self.theta / 2.0
        vals = ncx2.pdf(y[..., None] / spread, 2 * self.Nm, rho * x_nodes / spread) / spread
        return vals @ x_w

    # ---- public surface ------------------------------------------------

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        if np.any(flat < 0):
            raise ValueError("SINR must be non-negative")
        if self.mixture is not None:
            raw = self._mixture_cdf(flat)
        else:
            z, wz = self._interference_nodes
            raw = self._selected_cdf_numeric(flat[:, None] * (1.0 + z[None, :])) @ wz
        if np.any((raw < -CDF_CLAMP_TOL) | (raw > 1.0 + CDF_CLAMP_TOL)):
            logger.warning(f"[cellular] cdf left [0, 1] before clamping (min {raw.min():.3g}, max {raw.max():.3g})")
        out = np.clip(raw, 0.0, 1.0).reshape(x.shape)
        return float(out) if out.ndim == 0 else out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        if self.mixture is not None:
            out = self._mixture_pdf(flat)
        else:
            z, wz = self._interference_nodes
            scale = 1.0 + z[None, :]
            out = (self._selected_pdf_numeric(flat[:, None] * scale) * scale) @ wz
        out = np.maximum(out, 0.0).reshape(x.shape)
        return float(out) if out.ndim == 0 else out

    def _interference_moment(self, p: float) -> float:
        """E[(1+Z)^-p]."""
        Mz = self.icfg.Mz
        if Mz == 0:
            return 1.0
        beta = self.icfg.beta
        return float(beta ** Mz * special.hyperu(Mz, Mz + 1 - p, beta))

    def moment(self, p: int) -> float:
        if p < 0:
            raise ValueError("moment order must be non-negative")
        if p == 0:
            return 1.0
        mix = self.mixture
        if mix is not None:
            log_g = special.gammaln(mix.shape + p) - special.gammaln(mix.shape) + p * np.log(mix.scale)
            selected = math.fsum(mix.weight * np.exp(log_g))
        else:
            selected, _ = quad(
                lambda y: p * y ** (p - 1) * (1.0 - float(self._selected_cdf_numeric(np.array(y)))),
                0, np.inf, limit=200,
            )
        return selected * self._interference_moment(p)

    @property
    def mean(self) -> float:
        return self.moment(1)

    def rate_c1(self) -> float:
        """
        Ergodic rate E[log(1 + gamma_eff)] in nats/s/Hz. One Meijer-G per mixture
        component while the mixture is small; larger mixtures integrate the
        closed-form cdf.
        """
        mix = self.mixture
        if mix is not None and mix.weight.size <= MAX_MEIJER_COMPONENTS:
            try:
                z, wz = self._interference_nodes
                total = []
                for A, s, w in zip(mix.shape, mix.scale, mix.weight):
                    spec = MeijerGSpec(1, 3, (1.0 - A, 1.0, 1.0), (1.0, 0.0))
                    g = meijer_g(spec, s / (1.0 + z))
                    total.append(w * float(np.dot(wz, g)) * math.exp(-special.gammaln(A)))
                return math.fsum(total)
            except NumericError as e:
                logger.warning(f"[cellular] Meijer-G rate evaluation failed ({e}); integrating numerically")
        return self.rate_c1_numeric()

    def rate_c1_numeric(self) -> float:
        center = max(self.mean, 1e-12)
        value, _ = quad(
            lambda u: (1.0 - self.cdf(math.exp(u))) * math.exp(u) / (1.0 + math.exp(u)),
            math.log(center) - 30.0, math.log(center) + 12.0, limit=200, epsabs=1e-13, epsrel=1e-8,
        )
        return value

    def rate_c1_low_snr(self) -> float:
        return self.mean

    def rate_c1_jensen(self) -> float:
        return math.log1p(self.mean)

    def sample(self, rng, size: int):
        """gamma_eff samples: PRS over M branch-level candidates, then interference."""
        outdated, updated = sample_correlated_snr_pair(self.sel, self.Nm, self.gamma_bar, rng, (size, self.sel.M))
        _, chosen = prs_select(self.sel.M, self.sel.k, outdated, updated)
        return effective_sinr(chosen, sample_interference(self.icfg, rng, size))


def blockage_mixed_cdf(x, p_los_value: float, los: EffSinrStats, nlos: EffSinrStats):
    if p_los_value >= 1.0:
        return los.cdf(x)
    if p_los_value <= 0.0:
        return nlos.cdf(x)
    return p_los_value * los.cdf(x) + (1.0 - p_los_value) * nlos.cdf(x)
