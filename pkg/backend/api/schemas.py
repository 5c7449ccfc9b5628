# backend/api/schemas.py

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from backend.service.hpa import HpaModel

# ---------------------------
# Scenario file sections
# ---------------------------
# Every physical quantity carries its unit in the key name. Values are in
# file units (dB, GHz, MHz, cm, mm ...); conversion to the linear domain
# happens in backend.service.scenarios.resolve.

SweepVar = Literal[
    "mu_r_db", "gamma_bar_db", "beta_db", "ibo", "rho", "Mz", "mu_block", "target_rate", "l1_m",
]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CellularSection(_Section):
    fc_ghz: float = 30.0
    gt_db: float = 4.0
    gr_db: float = 4.0
    n: int = 64
    m: float = 1.0
    n0_dbm_hz: float = -142.0
    nf_db: float = 0.0
    b_mhz: float = 700.0
    l1_m: float = 50.0
    p_dbm: float = 23.0
    alpha_los: float = 2.0
    alpha_nlos: float = 4.0
    mu_block_m: Optional[float] = None
    p_los: Optional[float] = None
    pathloss_term: Literal["literal", "exponent"] = "literal"
    # LOS aggregate average SNR; when unset it comes from the link budget
    gamma_bar_db: Optional[float] = None


class PrsSection(_Section):
    m: int = 10
    k: int = 10
    rho: Optional[float] = 0.9
    fd_hz: Optional[float] = None
    td_s: Optional[float] = None


class InterferenceSection(_Section):
    mz: int = 3
    gamma_z_bar_db: float = 2.0
    poisson: bool = False
    per_interferer: bool = False


class FsoSection(_Section):
    lambda2_nm: float = 1550.0
    a_cm: float = 5.0
    theta_mrad: float = 10.0
    atten_db_km: float = 0.43
    cn2: float = 5e-14
    l2_m: float = 500.0
    sigma_s_m: float = 0.05
    omega_0_mm: float = 100.0
    f0_m: Optional[float] = None
    r: Literal[1, 2] = 2
    eta: float = 1.0
    sigma2_sq: float = 1e-7
    mu_r_db: float = 30.0
    snr_reference: Literal["mean", "printed"] = "mean"
    alpha1: float = 2.1690
    alpha2: float = 1.0
    m1: float = 0.55
    m2: float = 2.35
    omega1: float = 1.5793
    omega2: float = 0.9671
    normalize_turbulence: bool = False


class HpaSection(_Section):
    model: HpaModel = HpaModel.IDEAL
    ibo: float = 2.0
    sigma_r: float = 1.0
    g: Optional[float] = None
    sigma1_sq: float = 1.0
    kappa: Optional[float] = None


class E2eSection(_Section):
    beta_db: float = 0.0
    target_rate_nats: float = 0.0
    modulation: str = "BPSK"


class SweepSection(_Section):
    var: SweepVar = "mu_r_db"
    values: List[float] = Field(default_factory=list)
    metrics: List[str] = Field(default_factory=list)
    # each entry overrides dotted scenario keys for one curve, e.g. {"prs.rho": 0.1}
    series: List[Dict[str, Any]] = Field(default_factory=list)


class McSection(_Section):
    samples: Optional[int] = None
    seed: Optional[int] = None
    chunk_size: Optional[int] = None


class ScenarioFile(_Section):
    name: str = "custom"
    description: str = ""
    cellular: CellularSection = Field(default_factory=CellularSection)
    prs: PrsSection = Field(default_factory=PrsSection)
    interference: InterferenceSection = Field(default_factory=InterferenceSection)
    fso: FsoSection = Field(default_factory=FsoSection)
    hpa: HpaSection = Field(default_factory=HpaSection)
    e2e: E2eSection = Field(default_factory=E2eSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    mc: McSection = Field(default_factory=McSection)


# ---------------------------
# Request/Response Schemas
# ---------------------------

class SweepRequest(BaseModel):
    canned: Optional[str] = None
    scenario: Optional[ScenarioFile] = None
    seed: Optional[int] = None
    samples: Optional[int] = None
    bits: bool = False


class SweepResponse(BaseModel):
    task_id: str
    status: str = "submitted"
    message: Optional[str] = None
