# backend/service/scenarios.py
"""
Scenario registry and resolution.

A ScenarioFile holds values in file units. `resolve` converts them once into
the linear-domain dataclasses of cellular/fso/hpa and assembles the
HybridLink every metric runs on. Keys left unset in a scenario fall back to
the section defaults; `provenance` reports where each value came from.
"""

import logging
import math
from copy import deepcopy

import pandas as pd
from pydantic import BaseModel

from backend.api.schemas import ScenarioFile
from backend.service.cellular import (
    CellularConfig,
    EffSinrStats,
    InterferenceConfig,
    PrsSelection,
    average_snr,
    nlos_offset,
)
from backend.service.e2e import HybridLink, ModulationScheme
from backend.service.errors import ConfigError
from backend.service.fso import DggParams, FsoConfig, OpticalSnrStats, beam_geometry, varpi_for
from backend.service.hpa import HpaConfig, bussgang_params

logger = logging.getLogger(__name__)

SWEEP_KEYS = {
    "mu_r_db": "fso.mu_r_db",
    "gamma_bar_db": "cellular.gamma_bar_db",
    "beta_db": "e2e.beta_db",
    "ibo": "hpa.ibo",
    "rho": "prs.rho",
    "Mz": "interference.mz",
    "mu_block": "cellular.mu_block_m",
    "target_rate": "e2e.target_rate_nats",
    "l1_m": "cellular.l1_m",
}

CELLULAR_TABLE = "cellular system parameters"
FSO_TABLE = "fso sub-system parameters"
STATED = "stated simulation setting"
CONVENTION = "convention"
UNVERIFIED = "unverified"

DEFAULT_PROVENANCE = {
    "cellular.fc_ghz": CELLULAR_TABLE,
    "cellular.gt_db": CELLULAR_TABLE,
    "cellular.gr_db": CELLULAR_TABLE,
    "cellular.n": CELLULAR_TABLE,
    "cellular.n0_dbm_hz": CELLULAR_TABLE,
    "cellular.nf_db": CELLULAR_TABLE,
    "cellular.b_mhz": CELLULAR_TABLE,
    "cellular.l1_m": CELLULAR_TABLE,
    "cellular.m": CONVENTION,
    "cellular.p_dbm": UNVERIFIED,
    "cellular.alpha_los": STATED,
    "cellular.alpha_nlos": STATED,
    "cellular.pathloss_term": CONVENTION,
    "prs.m": STATED,
    "prs.k": UNVERIFIED,
    "prs.rho": UNVERIFIED,
    "interference.mz": STATED,
    "interference.gamma_z_bar_db": STATED,
    "interference.per_interferer": CONVENTION,
    "fso.lambda2_nm": FSO_TABLE,
    "fso.a_cm": FSO_TABLE,
    "fso.theta_mrad": FSO_TABLE,
    "fso.atten_db_km": FSO_TABLE,
    "fso.cn2": FSO_TABLE,
    "fso.l2_m": FSO_TABLE,
    "fso.sigma2_sq": FSO_TABLE,
    "fso.sigma_s_m": UNVERIFIED,
    "fso.omega_0_mm": UNVERIFIED,
    "fso.f0_m": CONVENTION,
    "fso.mu_r_db": UNVERIFIED,
    "fso.r": CONVENTION,
    "fso.eta": CONVENTION,
    "fso.snr_reference": CONVENTION,
    "fso.alpha1": CONVENTION,
    "fso.alpha2": CONVENTION,
    "fso.m1": CONVENTION,
    "fso.m2": CONVENTION,
    "fso.omega1": CONVENTION,
    "fso.omega2": CONVENTION,
    "hpa.ibo": UNVERIFIED,
    "e2e.beta_db": UNVERIFIED,
}

_HPA_SERIES = [{"hpa.model": name} for name in ("ideal", "sel", "sspa", "twta")]

CANNED = {
    "default": {
        "description": "Cellular and FSO tables with the stated simulation settings",
        "sweep": {"var": "mu_r_db", "values": [10.0, 20.0, 30.0], "metrics": ["outage", "rate"]},
    },
    "fig5a": {
        "description": "Outage vs SINDR threshold for outdated CSI and selection rank; SEL amplifier, IM/DD",
        "cellular": {"gamma_bar_db": 5.0},
        "hpa": {"model": "sel", "ibo": 2.0},
        "fso": {"r": 2, "mu_r_db": 30.0},
        "sweep": {
            "var": "beta_db",
            "values": [-10.0, -7.5, -5.0, -2.5, 0.0, 2.5, 5.0, 7.5, 10.0],
            "metrics": ["outage", "outage_mc"],
            "series": [
                {"prs.rho": 0.1, "prs.k": 1},
                {"prs.rho": 0.1, "prs.k": 10},
                {"prs.rho": 0.9, "prs.k": 1},
                {"prs.rho": 0.9, "prs.k": 10},
            ],
        },
    },
    "fig5b": {
        "description": "Symbol error probability per modulation with ideal hardware",
        "hpa": {"model": "ideal"},
        "fso": {"r": 1, "mu_r_db": 30.0},
        "sweep": {
            "var": "gamma_bar_db",
            "values": [-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0],
            "metrics": ["error_prob", "error_prob_quad"],
            "series": [{"e2e.modulation": "BPSK"}, {"e2e.modulation": "QPSK"}, {"e2e.modulation": "64-QAM"}],
        },
    },
    "fig6a": {
        "description": "Outage vs optical SNR for atmospheric loss and pointing-error severities; SSPA, heterodyne",
        "cellular": {"gamma_bar_db": 20.0},
        "hpa": {"model": "sspa", "ibo": 2.0},
        "fso": {"r": 1, "snr_reference": "printed"},
        "e2e": {"beta_db": 0.0},
        "sweep": {
            "var": "mu_r_db",
            "values": [40.0, 45.0, 50.0, 55.0, 60.0, 65.0, 70.0, 75.0, 80.0],
            "metrics": ["outage", "outage_mc"],
            "series": [
                {"fso.atten_db_km": 0.43, "fso.sigma_s_m": 0.05},
                {"fso.atten_db_km": 4.3, "fso.sigma_s_m": 0.05},
                {"fso.atten_db_km": 0.43, "fso.sigma_s_m": 0.1},
            ],
        },
    },
    "fig6b": {
        "description": "Outage vs SNDR threshold per amplifier model",
        "cellular": {"gamma_bar_db": 30.0},
        "hpa": {"ibo": 2.0},
        "fso": {"mu_r_db": 50.0},
        "sweep": {
            "var": "beta_db",
            "values": [-20.0, -17.5, -15.0, -12.5, -10.0, -7.5, -5.0, -2.5, 0.0, 2.5, 5.0],
            "metrics": ["outage"],
            "series": _HPA_SERIES,
        },
    },
    "fig7a": {
        "description": "Outage floors vs average optical SNR per amplifier model",
        "cellular": {"gamma_bar_db": 30.0},
        "hpa": {"ibo": 2.0},
        "e2e": {"beta_db": -5.0},
        "sweep": {
            "var": "mu_r_db",
            "values": [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
            "metrics": ["outage", "outage_mc"],
            "series": _HPA_SERIES,
        },
    },
    "fig7b": {
        "description": "Access-hop throughput vs distance, mmWave against a sub-6 GHz configuration",
        "cellular": {"p_dbm": 30.0, "pathloss_term": "exponent"},
        "sweep": {
            "var": "l1_m",
            "values": [50.0, 100.0, 200.0, 400.0, 800.0, 1600.0],
            "metrics": ["c1_throughput"],
            "series": [{}, {"cellular.fc_ghz": 3.5, "cellular.n": 4, "cellular.b_mhz": 10.0}],
        },
    },
    "fig8a": {
        "description": "Backhaul rate vs average optical SNR for a grid of input back-offs",
        "hpa": {"model": "twta"},
        "cellular": {"gamma_bar_db": 30.0},
        "sweep": {
            "var": "mu_r_db",
            "values": [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
            "metrics": ["rate", "c2_quad", "c2_approx", "c2_jensen", "c2_ceiling"],
            "series": [{"hpa.model": "ideal"}, {"hpa.ibo": 1.0}, {"hpa.ibo": 2.0}, {"hpa.ibo": 4.0}],
        },
    },
    "fig8b": {
        "description": "Coverage vs SINR threshold for blockage densities",
        "cellular": {"gamma_bar_db": 10.0},
        "fso": {"mu_r_db": 40.0},
        "sweep": {
            "var": "beta_db",
            "values": [-25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0],
            "metrics": ["coverage", "coverage_mc"],
            "series": [{"cellular.mu_block_m": 5.0}, {"cellular.mu_block_m": 63.0}, {"cellular.mu_block_m": 200.0}],
        },
    },
    "fig9a": {
        "description": "Rate coverage vs target rate for interferer counts",
        "cellular": {"gamma_bar_db": 20.0},
        "interference": {"per_interferer": True},
        "fso": {"mu_r_db": 40.0},
        "sweep": {
            "var": "target_rate",
            "values": [0.5e9, 1.0e9, 1.5e9, 2.0e9, 2.5e9, 3.0e9],
            "metrics": ["rate_coverage", "rate_coverage_mc"],
            "series": [{"interference.mz": 1}, {"interference.mz": 3}, {"interference.mz": 6}],
        },
    },
    "fig9b": {
        "description": "Rate coverage vs target rate for NLOS path-loss exponents at low LOS probability",
        "cellular": {"gamma_bar_db": 25.0, "p_los": 0.1, "pathloss_term": "exponent"},
        "fso": {"mu_r_db": 40.0},
        "sweep": {
            "var": "target_rate",
            "values": [0.5e9, 1.0e9, 1.5e9, 2.0e9, 2.5e9],
            "metrics": ["rate_coverage", "rate_coverage_mc"],
            "series": [{"cellular.alpha_nlos": 2.5}, {"cellular.alpha_nlos": 3.5}],
        },
    },
}


def canned(name: str) -> ScenarioFile:
    if name not in CANNED:
        raise ConfigError(f"unknown canned scenario {name!r}; choose from {', '.join(sorted(CANNED))}", key="name")
    return ScenarioFile.model_validate({"name": name, **deepcopy(CANNED[name])})


def _set_dotted(raw: dict, key: str, value):
    section, _, field = key.partition(".")
    if not field:
        raise ConfigError(f"override key {key!r} must look like 'section.key'", key=key)
    raw.setdefault(section, {})[field] = value


def apply_overrides(scenario: ScenarioFile, overrides: dict) -> ScenarioFile:
    """Copy of `scenario` with dotted keys replaced; unset keys stay unset."""
    if not overrides:
        return scenario
    raw = scenario.model_dump(mode="json", exclude_unset=True)
    for key, value in overrides.items():
        _set_dotted(raw, key, value)
    return ScenarioFile.model_validate(raw)


def at_point(scenario: ScenarioFile, var: str, value: float, series: dict | None = None) -> ScenarioFile:
    overrides = dict(series or {})
    overrides[SWEEP_KEYS[var]] = value
    return apply_overrides(scenario, overrides)


def flatten(scenario: ScenarioFile) -> dict:
    out = {}
    for section, model in scenario:
        if isinstance(model, BaseModel):
            for key, value in model.model_dump(mode="json").items():
                out[f"{section}.{key}"] = value
    return out


def provenance(scenario: ScenarioFile) -> dict:
    out = {}
    for section, model in scenario:
        if not isinstance(model, BaseModel) or section in ("sweep", "mc"):
            continue
        for key in type(model).model_fields:
            dotted = f"{section}.{key}"
            if key in model.model_fields_set:
                out[dotted] = "scenario"
            else:
                out[dotted] = f"default ({DEFAULT_PROVENANCE.get(dotted, CONVENTION)})"
    return out


def _db(value: float) -> float:
    return 10 ** (value / 10.0)


def cellular_config(scenario: ScenarioFile) -> CellularConfig:
    c = scenario.cellular
    return CellularConfig(
        fc=c.fc_ghz * 1e9,
        Gt=c.gt_db,
        Gr=c.gr_db,
        N=c.n,
        m=c.m,
        N0=c.n0_dbm_hz,
        Nf=c.nf_db,
        B=c.b_mhz * 1e6,
        L1=c.l1_m,
        P_dbm=c.p_dbm,
        alpha_los=c.alpha_los,
        alpha_nlos=c.alpha_nlos,
        mu_block=c.mu_block_m,
        p_los=c.p_los,
        pathloss_term=c.pathloss_term,
    )


def prs_selection(scenario: ScenarioFile) -> PrsSelection:
    p = scenario.prs
    rho = p.rho if p.fd_hz is None or p.td_s is None else None
    return PrsSelection(M=p.m, k=p.k, rho=rho, fd=p.fd_hz, Td=p.td_s)


def interference_config(scenario: ScenarioFile) -> InterferenceConfig:
    i = scenario.interference
    return InterferenceConfig(
        Mz=i.mz, gamma_z_bar=_db(i.gamma_z_bar_db), poisson=i.poisson, per_interferer=i.per_interferer
    )


def fso_config(scenario: ScenarioFile) -> FsoConfig:
    f = scenario.fso
    return FsoConfig(
        lambda2=f.lambda2_nm * 1e-9,
        a=f.a_cm * 1e-2,
        theta=f.theta_mrad * 1e-3,
        sigma_atten_db_km=f.atten_db_km,
        Cn2=f.cn2,
        L2=f.l2_m,
        sigma_s=f.sigma_s_m,
        omega_0=f.omega_0_mm * 1e-3,
        F_0=math.inf if f.f0_m is None else f.f0_m,
        r=f.r,
        eta=f.eta,
        sigma2_sq=f.sigma2_sq,
        snr_reference=f.snr_reference,
    )


def dgg_params(scenario: ScenarioFile) -> DggParams:
    f = scenario.fso
    dgg = DggParams(alpha1=f.alpha1, alpha2=f.alpha2, m1=f.m1, m2=f.m2, Omega1=f.omega1, Omega2=f.omega2)
    return dgg.normalized() if f.normalize_turbulence else dgg


def hpa_config(scenario: ScenarioFile) -> HpaConfig:
    h = scenario.hpa
    return HpaConfig(model=h.model, ibo=h.ibo, sigma_r=h.sigma_r, G=h.g, sigma1_sq=h.sigma1_sq, kappa_override=h.kappa)


def modulation(scenario: ScenarioFile) -> ModulationScheme:
    return ModulationScheme.from_name(scenario.e2e.modulation)


def resolve(scenario: ScenarioFile) -> HybridLink:
    """Build the linear-domain HybridLink of one operating point."""
    cell = cellular_config(scenario)
    sel = prs_selection(scenario)
    icfg = interference_config(scenario)
    if scenario.cellular.gamma_bar_db is not None:
        los_bar = _db(scenario.cellular.gamma_bar_db)
    else:
        los_bar = average_snr(cell, cell.alpha_los)
    nlos_bar = los_bar * nlos_offset(cell)

    fcfg = fso_config(scenario)
    optical = OpticalSnrStats(fcfg, dgg_params(scenario), beam_geometry(fcfg), mu_r=_db(scenario.fso.mu_r_db))

    link = HybridLink(
        los=EffSinrStats(los_bar, cell.Nm, sel, icfg),
        nlos=EffSinrStats(nlos_bar, cell.Nm, sel, icfg),
        p_los=cell.los_probability(),
        optical=optical,
        bussgang=bussgang_params(hpa_config(scenario)),
        varpi=varpi_for(fcfg),
        beta=_db(scenario.e2e.beta_db),
        target_rate=scenario.e2e.target_rate_nats,
        bandwidth=cell.B,
    )
    logger.debug(
        f"[scenario] {scenario.name}: gamma_bar los {los_bar:.4g} nlos {nlos_bar:.4g}, "
        f"p_los {link.p_los:.3g}, kappa {link.kappa:.6g}"
    )
    return link


def tables() -> list[tuple[str, pd.DataFrame]]:
    """Canned parameter tables with provenance labels, in display units."""
    cell = ScenarioFile().cellular
    fso = ScenarioFile().fso
    cellular_rows = [
        ("Carrier frequency", "fc", f"{cell.fc_ghz:g} GHz"),
        ("Transmit antenna element gain", "Gt", f"{cell.gt_db:g} dB"),
        ("Receive antenna element gain", "Gr", f"{cell.gr_db:g} dB"),
        ("Number of BS antennas", "N", f"{cell.n}"),
        ("Noise spectral density", "N0", f"{cell.n0_dbm_hz:g} dBm/Hz"),
        ("Noise figure", "Nf", f"{cell.nf_db:g} dB"),
        ("Bandwidth", "B", f"{cell.b_mhz:g} MHz"),
        ("Speed of light", "c", "3e8 m/s"),
        ("Link distance", "L1", f"{cell.l1_m:g} m"),
    ]
    fso_rows = [
        ("Wavelength", "lambda2", f"{fso.lambda2_nm:g} nm"),
        ("Receiver aperture radius", "a", f"{fso.a_cm:g} cm"),
        ("Divergence angle", "theta", f"{fso.theta_mrad:g} mrad"),
        ("Noise variance", "sigma2^2", f"{fso.sigma2_sq:g} A/Hz"),
        ("Weather attenuation", "sigma", f"{fso.atten_db_km:g} dB/km"),
        ("Refractive index structure constant", "Cn2", f"{fso.cn2:g}"),
        ("Link length", "L2", f"{fso.l2_m:g} m"),
        ("Jitter standard deviation", "sigma_s", f"{fso.sigma_s_m:g} m"),
        ("Beam waist", "omega_0", f"{fso.omega_0_mm:g} mm"),
    ]
    fso_prov = [FSO_TABLE] * 7 + [UNVERIFIED, UNVERIFIED]

    modulations = [
        ModulationScheme.ook(),
        ModulationScheme.bpsk(),
        ModulationScheme.mpsk(4),
        ModulationScheme.mpsk(8),
        ModulationScheme.mqam(16),
        ModulationScheme.mqam(64),
    ]
    mod_rows = [
        {
            "modulation": m.name,
            "delta": round(m.delta, 6),
            "tau": m.tau,
            "q": ", ".join(f"{q:.6g}" for q in m.q),
            "v": m.v,
            "detection": m.detection.value,
        }
        for m in modulations
    ]

    return [
        (
            "Cellular system parameters",
            pd.DataFrame(
                [{"parameter": p, "symbol": s, "value": v, "provenance": CELLULAR_TABLE} for p, s, v in cellular_rows]
            ),
        ),
        ("Modulation parameters", pd.DataFrame(mod_rows).assign(provenance="modulation table")),
        (
            "FSO sub-system parameters",
            pd.DataFrame(
                [
                    {"parameter": p, "symbol": s, "value": v, "provenance": prov}
                    for (p, s, v), prov in zip(fso_rows, fso_prov)
                ]
            ),
        ),
    ]
