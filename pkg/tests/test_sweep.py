# tests/test_sweep.py

import math

import pytest
from pydantic import ValidationError

from backend.api.schemas import ScenarioFile
from backend.service.errors import ConfigError
from backend.service.scenarios import CANNED, apply_overrides, at_point, canned, provenance, resolve
from backend.service.sweep_runner import ResultRow, SweepSpec, run_sweep, series_label, stream_id, validate_spec
from conftest import SMALL


def _spec(**sweep) -> SweepSpec:
    body = {**SMALL, "sweep": {"var": "mu_r_db", "values": [10.0, 20.0], "metrics": ["c2_approx"], **sweep}}
    return SweepSpec.from_scenario(ScenarioFile.model_validate(body), seed=3, samples=2000, workers=1)


def test_every_canned_scenario_validates():
    for name in CANNED:
        scenario = canned(name)
        assert scenario.name == name
        assert scenario.sweep.values and scenario.sweep.metrics


def test_unknown_canned_name():
    with pytest.raises(ConfigError):
        canned("fig42")


def test_unknown_scenario_keys_are_rejected():
    with pytest.raises(ValidationError):
        ScenarioFile.model_validate({"cellular": {"antennas": 64}})


def test_overrides_keep_unset_keys_unset(small_scenario):
    moved = apply_overrides(small_scenario, {"prs.rho": 0.1})
    assert moved.prs.rho == 0.1
    assert "mz" in moved.interference.model_fields_set
    assert "atten_db_km" not in moved.fso.model_fields_set


def test_at_point_sets_the_swept_key(small_scenario):
    moved = at_point(small_scenario, "beta_db", 3.0, {"prs.k": 1})
    assert moved.e2e.beta_db == 3.0
    assert moved.prs.k == 1


def test_provenance_labels(small_scenario):
    prov = provenance(small_scenario)
    assert prov["cellular.n"] == "scenario"
    assert prov["fso.cn2"] == "default (fso sub-system parameters)"
    assert prov["fso.sigma_s_m"] == "default (unverified)"
    assert not any(key.startswith(("sweep.", "mc.")) for key in prov)


def test_resolve_converts_units(small_scenario):
    link = resolve(small_scenario)
    assert link.los.gamma_bar == pytest.approx(10.0)
    assert link.los.Nm == 4
    assert link.beta == pytest.approx(1.0)
    assert link.optical.mu_r == pytest.approx(100.0)
    assert link.bandwidth == pytest.approx(700e6)
    assert link.p_los == 1.0


def test_link_budget_sets_the_average_snr_when_not_given():
    link = resolve(ScenarioFile())
    # 23 dBm, 50 m, alpha 2 taken as 2 dB per metre, -53.55 dBm noise, 64 antennas
    expected_db = 23.0 - 87.9636 - 2.0 * 50.0 + 53.549 + 10.0 * math.log10(64)
    assert 10.0 * math.log10(link.los.gamma_bar) == pytest.approx(expected_db, abs=1e-2)
    assert link.nlos.gamma_bar < link.los.gamma_bar


def test_exponent_path_loss_is_opt_in():
    link = resolve(ScenarioFile.model_validate({"cellular": {"pathloss_term": "exponent"}}))
    expected_db = 23.0 - 87.9636 - 20.0 * math.log10(50.0) + 53.549 + 10.0 * math.log10(64)
    assert 10.0 * math.log10(link.los.gamma_bar) == pytest.approx(expected_db, abs=1e-2)
    assert canned("fig7b").cellular.pathloss_term == "exponent"
    assert canned("fig9b").cellular.pathloss_term == "exponent"
    assert canned("fig9a").interference.per_interferer
    assert not canned("fig5a").interference.per_interferer


@pytest.mark.parametrize(
    "sweep,key",
    [
        ({"metrics": []}, "sweep.metrics"),
        ({"metrics": ["throughput"]}, "sweep.metrics"),
        ({"values": []}, "sweep.values"),
        ({"values": [1.0, float("nan")]}, "sweep.values"),
        ({"metrics": ["outage_mc"], "values": [10.0]}, None),
    ],
)
def test_invalid_sweeps_fail_before_computing(sweep, key):
    spec = _spec(**sweep)
    if key is None:
        spec.samples = 10
        key = "mc.samples"
    with pytest.raises(ConfigError) as info:
        validate_spec(spec)
    assert info.value.key == key


def test_two_point_grid_gives_two_rows():
    rows = run_sweep(_spec())
    assert [(r.value, r.metric, r.tag, r.n) for r in rows] == [
        (10.0, "c2_approx", "analytic", 0),
        (20.0, "c2_approx", "analytic", 0),
    ]
    assert rows[1].estimate > rows[0].estimate


def test_rows_follow_series_then_grid_order():
    rows = run_sweep(_spec(metrics=["c2_approx", "c2_ceiling"], series=[{"hpa.ibo": 1.0}, {"hpa.ibo": 4.0}]))
    assert len(rows) == 8
    assert [r.metric for r in rows[:4]] == [
        "c2_approx[ibo=1.0]", "c2_ceiling[ibo=1.0]", "c2_approx[ibo=1.0]", "c2_ceiling[ibo=1.0]",
    ]
    assert [r.value for r in rows[:4]] == [10.0, 10.0, 20.0, 20.0]
    assert all(r.metric.endswith("[ibo=4.0]") for r in rows[4:])


def test_monte_carlo_rows_are_reproducible():
    first = run_sweep(_spec(metrics=["c2"]))
    again = run_sweep(_spec(metrics=["c2"]))
    assert first == again
    assert all(r.tag == "monte-carlo" and r.n == 2000 and r.half_width_95 > 0 for r in first)


def test_stream_ids_are_distinct():
    ids = {stream_id(g, s, m) for g in range(4) for s in range(3) for m in range(5)}
    assert len(ids) == 60


def test_series_label():
    assert series_label({}) == ""
    assert series_label({"prs.rho": 0.1, "prs.k": 10}) == "[rho=0.1,k=10]"


def test_rates_convert_to_bits():
    row = ResultRow("mu_r_db", 10.0, "c2_approx", math.log(2.0), 0.0, 0, "analytic", base_metric="c2_approx")
    assert row.to_record(bits=True)["estimate"] == pytest.approx(1.0)
    outage = ResultRow("beta_db", 0.0, "outage", 0.3, 0.0, 0, "analytic", base_metric="outage")
    assert outage.to_record(bits=True)["estimate"] == 0.3
