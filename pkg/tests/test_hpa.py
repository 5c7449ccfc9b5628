# tests/test_hpa.py

import math

import numpy as np
from scipy.integrate import quad
import pytest

from backend.service.errors import ConfigError
from backend.service.hpa import (
    IMDD_VARPI,
    BussgangParams,
    HpaConfig,
    HpaModel,
    bussgang_params,
    c2_approx,
    c2_ceiling,
    distort_sample,
    sel_params,
    sndr_ceiling,
    sndr_map,
)

IBO_GRID = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0]


def _kappa(model: str, ibo: float) -> float:
    return bussgang_params(HpaConfig(model=model, ibo=ibo)).kappa


def test_sel_scale_at_unit_backoff():
    assert sel_params(HpaConfig(model="sel", ibo=1.0)).zeta == pytest.approx(0.771524, abs=1e-5)


@pytest.mark.parametrize(
    "model,expected",
    [("sel", 0.001666), ("sspa", 0.01082), ("twta", 0.04056)],
)
def test_distortion_factor_at_two(model, expected):
    assert _kappa(model, 2.0) - 1.0 == pytest.approx(expected, rel=1e-2)


def test_kappa_ordering_at_two():
    assert _kappa("twta", 2.0) > _kappa("sspa", 2.0) > _kappa("sel", 2.0) > 1.0


@pytest.mark.parametrize("ibo", IBO_GRID)
def test_twta_is_the_most_nonlinear(ibo):
    assert _kappa("twta", ibo) >= _kappa("sspa", ibo)
    assert _kappa("twta", ibo) >= _kappa("sel", ibo)


@pytest.mark.parametrize("ibo", [v for v in IBO_GRID if v >= 1.5])
def test_sspa_at_least_as_nonlinear_as_sel_above_the_crossover(ibo):
    assert _kappa("sspa", ibo) >= _kappa("sel", ibo)


def test_sel_is_harsher_than_sspa_near_unit_backoff():
    assert _kappa("sel", 1.0) > _kappa("sspa", 1.0)


_AM_AM = {
    "sel": lambda r, x: np.minimum(r, x),
    "sspa": lambda r, x: r / np.sqrt(1.0 + (r / x) ** 2),
}


def _split_quad(fn, kink):
    return quad(fn, 0.0, kink, epsabs=0, epsrel=1e-11)[0] + quad(fn, kink, np.inf, epsabs=0, epsrel=1e-11)[0]


@pytest.mark.parametrize("model", ["sel", "sspa"])
@pytest.mark.parametrize("ibo", [0.5, 1.0, 1.5, 2.0])
def test_bussgang_terms_match_the_am_am_curve(model, ibo):
    # squared Rayleigh envelope with unit power is Exp(1)
    g = _AM_AM[model]
    zeta = _split_quad(lambda u: math.sqrt(u) * g(math.sqrt(u), ibo) * math.exp(-u), ibo * ibo)
    power = _split_quad(lambda u: g(math.sqrt(u), ibo) ** 2 * math.exp(-u), ibo * ibo)
    bp = bussgang_params(HpaConfig(model=model, ibo=ibo))
    assert bp.zeta == pytest.approx(zeta, rel=1e-7)
    assert bp.sigma_varsigma_sq == pytest.approx(power - zeta ** 2, rel=1e-5, abs=1e-10)


@pytest.mark.parametrize("model", ["sel", "twta", "sspa"])
def test_distortion_variance_non_negative_and_vanishing(model):
    kappas = []
    for ibo in IBO_GRID:
        bp = bussgang_params(HpaConfig(model=model, ibo=ibo))
        assert bp.sigma_varsigma_sq >= 0.0
        assert bp.zeta > 0.0
        kappas.append(bp.kappa)
    assert all(k >= 1.0 for k in kappas)
    assert kappas[-1] - 1.0 < 0.05 * (kappas[0] - 1.0)


def test_ideal_amplifier_has_unit_kappa():
    bp = bussgang_params(HpaConfig(model="ideal"))
    assert bp.kappa == 1.0
    assert sndr_ceiling(bp.kappa) == math.inf
    assert c2_ceiling(bp.kappa, 1.0) == math.inf


def test_kappa_override_below_one_is_rejected():
    with pytest.raises(ConfigError):
        HpaConfig(model=HpaModel.SEL, kappa_override=0.5)


def test_kappa_override_pins_the_factor():
    assert bussgang_params(HpaConfig(model="twta", ibo=2.0, kappa_override=1.25)).kappa == 1.25


def test_sndr_map_saturates_at_ceiling():
    k = 1.1
    assert sndr_ceiling(k) == pytest.approx(10.0)
    assert sndr_map(1e12, k) == pytest.approx(10.0, rel=1e-9)
    assert sndr_map(1.0, 1.0) == 1.0


def test_distort_sample_matches_sndr_map():
    bp = bussgang_params(HpaConfig(model="sspa", ibo=1.5))
    snr = np.logspace(-2, 6, 9)
    np.testing.assert_allclose(distort_sample(snr, bp), sndr_map(snr, bp.kappa), rtol=1e-12)


def test_distort_sample_is_identity_without_distortion():
    snr = np.array([0.5, 2.0, 40.0])
    np.testing.assert_array_equal(distort_sample(snr, BussgangParams(zeta=1.0, sigma_varsigma_sq=0.0)), snr)


def test_c2_approx_tends_to_ceiling():
    k = _kappa("twta", 2.0)
    assert c2_approx(k, IMDD_VARPI, 1e9) == pytest.approx(c2_ceiling(k, IMDD_VARPI), rel=1e-6)
    assert c2_approx(1.0, 1.0, 10.0) == pytest.approx(math.log(11.0))
