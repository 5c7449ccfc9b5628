# backend/service/specfun.py
"""
Real-valued special functions used by the closed forms, plus a Meijer-G
evaluator based on Mellin-Barnes contour integration.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.optimize import minimize_scalar

from backend.service.errors import MeijerGConvergenceError

logger = logging.getLogger(__name__)

# e^-37 ~ 1e-16 relative to the peak of the contour integrand
_TAIL_LOG = 37.0
_MAX_CONTOUR_POINTS = 2_000_000
PERTURB_EPS = 1e-6


def _as_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return arr


def bessel_j0(x):
    _as_finite(x)
    return special.j0(x)


def bessel_i(nu, x, scaled: bool = False):
    """
    Modified Bessel function of the first kind I_nu(x).
    With scaled=True returns e^{-x} I_nu(x), which stays finite for large x.
    """
    if np.any(np.asarray(nu) < 0) or np.any(np.asarray(x) < 0):
        raise ValueError(f"bessel_i needs nu >= 0 and x >= 0, got nu={nu!r}, x={x!r}")
    if scaled:
        return special.ive(nu, x)
    value = special.iv(nu, x)
    if np.any(np.isinf(value)):
        raise OverflowError(f"I_{nu}({x}) overflows; use bessel_i(..., scaled=True)")
    return value


def erf(x):
    return special.erf(x)


def erfc(x):
    return special.erfc(x)


def erfcx(x):
    """Scaled complementary error function e^{x^2} erfc(x)."""
    return special.erfcx(x)


def exp_integral_ei(x):
    """Principal-value exponential integral Ei(x), x != 0."""
    arr = _as_finite(x)
    if np.any(arr == 0):
        raise ValueError("Ei(x) has a logarithmic singularity at x = 0")
    return special.expi(x)


def scaled_exp1(x):
    """e^{x} E1(x) = -e^{x} Ei(-x) for x > 0, without overflow at large x."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("scaled_exp1 needs x > 0")
    small = np.exp(np.minimum(arr, 50.0)) * special.exp1(np.minimum(arr, 50.0))
    out = np.where(arr < 50.0, small, special.hyperu(1.0, 1.0, np.maximum(arr, 50.0)))
    return out if out.ndim else float(out)


def upper_incomplete_gamma(tau, x):
    """Non-regularized upper incomplete gamma Gamma(tau, x)."""
    if np.any(np.asarray(tau) <= 0) or np.any(np.asarray(x) < 0):
        raise ValueError(f"upper_incomplete_gamma needs tau > 0 and x >= 0, got tau={tau!r}, x={x!r}")
    return special.gammaincc(tau, x) * special.gamma(tau)


@lru_cache(maxsize=None)
def phi_coeffs(i: int, j: int, m: int) -> float:
    """
    Coefficient of x^i in (sum_{t=0}^{m} x^t / t!)^j.

    Built by the recursion Phi(i, j, m) = sum_t Phi(t, j-1, m) / (i-t)!,
    t in [max(0, i-m), min(i, (j-1)m)]. Out-of-range i gives 0.
    """
    if j < 0 or m < 0:
        raise ValueError(f"phi_coeffs needs j >= 0 and m >= 0, got j={j}, m={m}")
    if i < 0 or i > j * m:
        return 0.0
    if j == 0:
        return 1.0
    lo = max(0, i - m)
    hi = min(i, (j - 1) * m)
    return math.fsum(phi_coeffs(t, j - 1, m) / math.factorial(i - t) for t in range(lo, hi + 1))


@lru_cache(maxsize=256)
def log_phi_coeffs(j: int, m: int) -> np.ndarray:
    """
    log Phi(i, j, m) for i = 0..j*m, by the same recursion carried out in the
    log domain. Coefficients far below the float range stay finite here.
    """
    if j < 0 or m < 0:
        raise ValueError(f"log_phi_coeffs needs j >= 0 and m >= 0, got j={j}, m={m}")
    if j == 0:
        out = np.zeros(1)
    else:
        prev = log_phi_coeffs(j - 1, m)
        log_inv_fact = -special.gammaln(np.arange(m + 1) + 1.0)
        shifted = np.full((m + 1, prev.size + m), -np.inf)
        for s in range(m + 1):
            shifted[s, s : s + prev.size] = prev + log_inv_fact[s]
        out = special.logsumexp(shifted, axis=0)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class MeijerGSpec:
    m: int
    n: int
    a: tuple = ()
    b: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise ValueError(f"invalid Meijer-G orders m={self.m}, n={self.n}, p={self.p}, q={self.q}")

    @property
    def p(self) -> int:
        return len(self.a)

    @property
    def q(self) -> int:
        return len(self.b)

    @property
    def decay(self) -> float:
        """Exponential decay rate (in units of pi) of the integrand along the contour."""
        return self.m + self.n - 0.5 * (self.p + self.q)

    def strip(self) -> tuple:
        """Real interval separating the left and right pole families."""
        left = max((aj - 1.0 for aj in self.a[: self.n]), default=-np.inf)
        right = min(self.b[: self.m], default=np.inf)
        return left, right

    def log_kernel(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        for bj in self.b[: self.m]:
            out += special.loggamma(bj - s)
        for aj in self.a[: self.n]:
            out += special.loggamma(1.0 - aj + s)
        for bj in self.b[self.m:]:
            out -= special.loggamma(1.0 - bj + s)
        for aj in self.a[self.n:]:
            out -= special.loggamma(aj - s)
        return out


def _objective(spec: MeijerGSpec, log_x: float, c: float) -> float:
    # evaluated slightly off the real axis so denominator zeros do not look like saddles
    return float(np.real(spec.log_kernel(c + 0.5j))) + c * log_x


def _pick_contour(spec: MeijerGSpec, log_x: float) -> float:
    left, right = spec.strip()
    if not left < right:
        raise MeijerGConvergenceError(
            f"no contour separates the poles of {spec} (left {left}, right {right})"
        )
    if np.isfinite(left) and np.isfinite(right):
        margin = min(0.05, 0.25 * (right - left))
        res = minimize_scalar(
            lambda c: _objective(spec, log_x, c),
            bounds=(left + margin, right - margin),
            method="bounded",
            options={"xatol": 1e-4},
        )
        return float(res.x)

    span = 5.0
    while True:
        if np.isfinite(right):
            lo, hi = right - span, right - min(0.05, span / 4)
        else:
            lo, hi = left + min(0.05, span / 4), left + span
        res = minimize_scalar(
            lambda c: _objective(spec, log_x, c), bounds=(lo, hi), method="bounded", options={"xatol": 1e-4}
        )
        at_open_end = (np.isfinite(right) and res.x - lo < 1e-2) or (np.isfinite(left) and hi - res.x < 1e-2)
        if not at_open_end or span > 4096:
            return float(res.x)
        span *= 2.0


def _meijer_g_scalar(spec: MeijerGSpec, x: float) -> float:
    log_x = math.log(x)
    c = _pick_contour(spec, log_x)
    left, right = spec.strip()

    d = min(c - left, right - c)
    d = 1.0 if not np.isfinite(d) else min(d, 1.0)
    half = 0.5 * d
    base = _objective(spec, log_x, c)
    growth = max(_objective(spec, log_x, c - half), _objective(spec, log_x, c + half)) - base
    h = 2.0 * math.pi * half / (_TAIL_LOG + max(growth, 0.0))

    block = 512
    exponents = []
    peak = -np.inf
    start = 0
    while True:
        t = h * np.arange(start, start + block)
        s = c + 1j * t
        e = spec.log_kernel(s) + s * log_x
        e = np.where(np.isfinite(e), e, -np.inf + 0j)
        exponents.append(e)
        block_max = float(np.max(np.real(e)))
        peak = max(peak, block_max)
        start += block
        if block_max < peak - _TAIL_LOG and start * h > 4.0:
            break
        if start > _MAX_CONTOUR_POINTS:
            raise MeijerGConvergenceError(f"Meijer-G contour for {spec} at x={x} did not decay")

    e = np.concatenate(exponents)
    terms = np.real(np.exp(e - peak))
    terms[0] *= 0.5
    return math.exp(peak) * h / math.pi * math.fsum(terms)


def meijer_g(spec: MeijerGSpec, x):
    """
    G^{m,n}_{p,q}(x | a; b) for real parameters and x > 0.

    Integrates (1/2 pi i) * prod Gamma(b_j - s) prod Gamma(1 - a_j + s) /
    (prod Gamma(1 - b_j + s) prod Gamma(a_j - s)) * x^s along a vertical line
    through the real-axis saddle of the integrand.
    """
    if spec.decay <= 0:
        raise MeijerGConvergenceError(
            f"Mellin-Barnes integrand of {spec} does not decay (m+n-(p+q)/2 = {spec.decay})"
        )
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("meijer_g is only defined here for x > 0")
    values = np.array([_meijer_g_scalar(spec, float(v)) for v in arr.ravel()])
    if arr.ndim == 0:
        return float(values[0])
    return values.reshape(arr.shape)


def perturb_coinciding(values, eps: float = PERTURB_EPS) -> tuple:
    """Shift parameters that coincide modulo integers so every pole is simple."""
    out = [float(v) for v in values]
    for i in range(len(out)):
        clashes = 0
        for j in range(i):
            diff = out[i] - out[j]
            if abs(diff - round(diff)) < 1e-9:
                clashes += 1
        if clashes:
            out[i] += clashes * eps
    return tuple(out)


def _leading_terms(spec: MeijerGSpec, x, eps: float):
    b_right = perturb_coinciding(spec.b[: spec.m], eps)
    b_all = b_right + spec.b[spec.m:]
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for j, bj in enumerate(b_right):
        coef = 1.0
        for i, bi in enumerate(b_right):
            if i != j:
                coef *= special.gamma(bi - bj)
        for ai in spec.a[: spec.n]:
            coef *= special.gamma(1.0 - ai + bj)
        for bi in b_all[spec.m:]:
            coef *= special.rgamma(1.0 - bi + bj)
        for ai in spec.a[spec.n:]:
            coef *= special.rgamma(ai - bj)
        total = total + coef * x ** bj
    return total


def meijer_g_leading_terms(spec: MeijerGSpec, x, eps: float = PERTURB_EPS):
    """
    Small-argument expansion keeping the first residue of every Gamma(b_j - s),
    j <= m. Coinciding b_j are perturbed by eps and checked against eps/10.
    """
    coarse = _leading_terms(spec, x, eps)
    fine = _leading_terms(spec, x, eps / 10.0)
    scale = np.maximum(np.abs(fine), np.finfo(float).tiny)
    if np.any(np.abs(coarse - fine) / scale > 1e-4):
        logger.warning(f"[specfun] leading-term expansion of {spec} is sensitive to the pole perturbation")
    return float(fine) if np.ndim(fine) == 0 else fine
