# tests/test_e2e.py

import math
from dataclasses import replace

import numpy as np
import pytest

from backend.api.schemas import ScenarioFile
from backend.service import e2e, hpa
from backend.service.e2e import Detection, ModulationScheme, e2e_sindr
from backend.service.errors import ConfigError
from backend.service.hpa import BussgangParams
from backend.service.scenarios import apply_overrides, canned, resolve
from conftest import binomial_slack


def test_modulation_table_rows():
    ook = ModulationScheme.ook()
    assert (ook.delta, ook.tau, ook.q, ook.v, ook.detection) == (1.0, 0.5, (0.5,), 1, Detection.IMDD)
    bpsk = ModulationScheme.bpsk()
    assert (bpsk.delta, bpsk.q, bpsk.detection) == (1.0, (1.0,), Detection.HETERODYNE)
    qpsk = ModulationScheme.from_name("QPSK")
    assert qpsk.delta == 1.0 and qpsk.v == 1
    assert qpsk.q[0] == pytest.approx(0.5)
    psk8 = ModulationScheme.mpsk(8)
    assert psk8.delta == pytest.approx(2.0 / 3.0) and psk8.v == 2
    qam64 = ModulationScheme.from_name("64-QAM")
    assert qam64.v == 4
    assert qam64.delta == pytest.approx(4.0 / 6.0 * (1.0 - 1.0 / 8.0))
    assert qam64.q[0] == pytest.approx(3.0 / 126.0)


def test_unknown_modulations_are_rejected():
    with pytest.raises(ConfigError):
        ModulationScheme.from_name("FSK")
    with pytest.raises(ConfigError):
        ModulationScheme.mqam(8)
    with pytest.raises(ConfigError):
        ModulationScheme.mpsk(6)


def test_symbol_error_at_zero_snr():
    assert ModulationScheme.bpsk().symbol_error(0.0) == pytest.approx(0.5)


def test_sindr_is_the_weaker_hop():
    np.testing.assert_array_equal(e2e_sindr([1.0, 5.0], [3.0, 2.0]), [1.0, 2.0])


def test_outage_combines_independent_hops(small_link):
    small_link.cellular_cdf = lambda x: 0.1
    small_link.optical_cdf = lambda x: 0.2
    assert small_link.outage(1.0) == pytest.approx(0.28)


def test_zero_threshold_never_outages(small_link):
    assert small_link.outage(0.0) == 0.0


def test_outage_is_certain_beyond_the_distortion_ceiling(small_link):
    ceiling = hpa.sndr_ceiling(small_link.kappa)
    assert math.isfinite(ceiling)
    assert small_link.outage(1.01 * ceiling) == pytest.approx(1.0)
    assert small_link.outage_asymptote(1.01 * ceiling) == 1.0


def test_outage_increases_with_threshold(small_link):
    values = [small_link.outage(b) for b in (0.1, 0.5, 1.0, 2.0, 5.0)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_distortion_factor_below_one_is_rejected(small_link):
    with pytest.raises(ConfigError):
        replace(small_link, bussgang=BussgangParams(zeta=1.0, sigma_varsigma_sq=0.0, kappa=0.5))


def test_diversity_gain_is_the_minimum_of_both_hops(small_scenario):
    heterodyne = apply_overrides(small_scenario, {"fso.r": 1})
    full = resolve(apply_overrides(heterodyne, {"prs.rho": 1.0}))
    assert full.diversity_gain() == pytest.approx(min(4.0, full.optical.diversity_order))
    outdated = resolve(heterodyne)
    assert outdated.diversity_gain() == 1.0
    assert full.diversity_gain() > 1.0


def test_rate_is_bounded_by_both_hops(small_link):
    assert small_link.rate() == pytest.approx(min(small_link.rate_c1(), small_link.rate_c2()))
    assert small_link.rate_c2() <= small_link.rate_c2_ceiling()
    assert small_link.rate_c2_jensen() >= small_link.rate_c2()


def test_rate_coverage_limits(small_link):
    assert small_link.rate_coverage(0.0) == 1.0
    values = [small_link.rate_coverage(r) for r in (1e8, 5e8, 1e9, 2e9)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_backhaul_rate_approaches_ceiling():
    scenario = ScenarioFile.model_validate(
        {"cellular": {"n": 4, "gamma_bar_db": 10.0}, "prs": {"m": 2, "k": 2},
         "hpa": {"model": "twta", "ibo": 10 ** (3.0 / 20.0)}, "fso": {"r": 2, "mu_r_db": 60.0}}
    )
    link = resolve(scenario)
    ceiling = link.rate_c2_ceiling()
    assert ceiling == pytest.approx(math.log1p(link.varpi / (link.kappa - 1.0)))
    assert link.rate_c2() == pytest.approx(ceiling, rel=0.02)
    assert link.rate_c2_approx() == pytest.approx(ceiling, rel=0.02)


def test_bpsk_error_tends_to_one_half_at_low_snr(small_scenario):
    link = resolve(apply_overrides(small_scenario, {"cellular.gamma_bar_db": -50.0, "hpa.model": "ideal"}))
    assert link.error_prob_quad(ModulationScheme.bpsk()) == pytest.approx(0.5, rel=0.01)


@pytest.mark.slow
def test_error_probability_decreases_with_snr(small_scenario):
    values = []
    for gamma_bar_db in (-10.0, 0.0, 10.0, 20.0):
        link = resolve(apply_overrides(small_scenario, {"cellular.gamma_bar_db": gamma_bar_db}))
        values.append(link.error_prob_quad(ModulationScheme.bpsk()))
    assert all(b <= a for a, b in zip(values, values[1:]))


@pytest.mark.slow
def test_outage_matches_end_to_end_sampling(small_link, rng):
    n = 50_000
    gamma = small_link.sample(rng, n)["gamma_e2e"]
    for beta in (0.5, 1.0, 3.0):
        F = small_link.outage(beta)
        assert np.mean(gamma <= beta) == pytest.approx(F, abs=binomial_slack(F, n))


@pytest.mark.slow
def test_error_probability_matches_sampling(small_link, rng):
    mod = ModulationScheme.bpsk()
    n = 50_000
    mc = e2e.error_prob_mc(small_link, mod, rng, n)
    analytic = small_link.error_prob_quad(mod)
    assert np.mean(mc) == pytest.approx(analytic, abs=4.0 * np.std(mc) / math.sqrt(n) + 2e-3)


def test_asymptote_keeps_the_exact_cellular_term(small_link, monkeypatch):
    small_link.cellular_cdf = lambda x: 0.3
    monkeypatch.setattr(small_link.optical, "cdf_asymptote", lambda y: 0.0)
    assert small_link.outage_asymptote(0.5) == pytest.approx(0.3)
    monkeypatch.setattr(small_link.optical, "cdf_asymptote", lambda y: 0.1)
    assert small_link.outage_asymptote(0.5) == pytest.approx(0.3 + 0.1 - 0.03)


def test_asymptote_matches_outage_when_the_optical_expansion_is_exact(small_link, monkeypatch):
    monkeypatch.setattr(small_link.optical, "cdf_asymptote", small_link.optical.cdf)
    for beta in (0.2, 1.0, 3.0):
        assert small_link.outage_asymptote(beta) == pytest.approx(small_link.outage(beta), rel=1e-9)


def _canned_link(name: str, overrides: dict):
    return resolve(apply_overrides(canned(name), overrides))


def _db(value: float) -> float:
    return 10 ** (value / 10.0)


@pytest.mark.parametrize("beta_db", [2.5, 5.0])
def test_fresher_csi_lowers_outage(beta_db):
    fresh = _canned_link("fig5a", {"prs.rho": 0.9, "prs.k": 10})
    stale = _canned_link("fig5a", {"prs.rho": 0.1, "prs.k": 10})
    assert fresh.los.Nm == 64
    assert fresh.outage(_db(beta_db)) < stale.outage(_db(beta_db))


@pytest.mark.parametrize("beta_db", [-5.0, 0.0])
def test_coverage_grows_with_blockage_length(beta_db):
    coverage = [1.0 - _canned_link("fig8b", {"cellular.mu_block_m": mu}).outage(_db(beta_db)) for mu in (5.0, 63.0, 200.0)]
    assert coverage[0] < coverage[1] < coverage[2]


@pytest.mark.parametrize("target", [1.5e9, 2.0e9, 2.5e9])
def test_rate_coverage_falls_with_interferer_count(target):
    rc = [_canned_link("fig9a", {"interference.mz": mz}).rate_coverage(target) for mz in (1, 3, 6)]
    assert rc[0] > rc[1] > rc[2]


@pytest.mark.parametrize("target", [0.5e9, 1.0e9, 1.5e9])
def test_rate_coverage_falls_with_nlos_exponent(target):
    mild = _canned_link("fig9b", {"cellular.alpha_nlos": 2.5})
    harsh = _canned_link("fig9b", {"cellular.alpha_nlos": 3.5})
    assert mild.p_los == pytest.approx(0.1)
    assert mild.rate_coverage(target) > harsh.rate_coverage(target)


def test_amplifier_severity_orders_outage_and_ceilings():
    links = {model: _canned_link("fig7a", {"hpa.model": model, "fso.mu_r_db": 60.0}) for model in ("sel", "sspa", "twta")}
    outage = {model: link.outage() for model, link in links.items()}
    assert outage["twta"] > outage["sspa"] > outage["sel"]
    ceilings = {model: link.rate_c2_ceiling() for model, link in links.items()}
    assert ceilings["sel"] > ceilings["sspa"] > ceilings["twta"]
    for link in links.values():
        assert link.rate_c2() <= link.rate_c2_ceiling()


def test_dense_constellations_err_more(small_link):
    assert small_link.error_prob_quad(ModulationScheme.mqam(64)) > small_link.error_prob_quad(ModulationScheme.bpsk())


@pytest.mark.slow
def test_sampled_outage_slope_follows_diversity_gain(small_scenario, rng):
    # heterodyne, pointing-limited optical hop; the cellular hop is far above threshold
    base = {"fso.r": 1, "fso.sigma_s_m": 0.1, "hpa.model": "ideal", "cellular.gamma_bar_db": 40.0, "e2e.beta_db": 0.0}
    n = 200_000
    outages = []
    for mu_r_db in (30.0, 40.0):
        link = resolve(apply_overrides(small_scenario, {**base, "fso.mu_r_db": mu_r_db}))
        outages.append(float(np.mean(link.sample(rng, n)["gamma_e2e"] <= link.beta)))
    gain = link.diversity_gain()
    assert gain == pytest.approx(link.optical.diversity_order)
    assert gain < 1.0
    assert math.log10(outages[1] / outages[0]) == pytest.approx(-gain, rel=0.15)
    assert 0.8 < link.outage_asymptote() / outages[1] < 1.25
