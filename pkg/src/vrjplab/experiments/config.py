"""Experiment configuration and result records.

A config is a single flat JSON document with exactly these fields; unknown
keys are rejected so that a stored config always reproduces the same run.
``seed = 0`` means "draw a fresh seed from entropy and record it".
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

EXPERIMENT_NAMES = (
    "figure1",
    "gamma_law",
    "ward",
    "coarse_check",
    "decay_slope",
    "recurrence_scan",
    "transience_scan",
    "bounds_table",
    "sampler_crosscheck",
)

ExperimentName = Literal[
    "figure1",
    "gamma_law",
    "ward",
    "coarse_check",
    "decay_slope",
    "recurrence_scan",
    "transience_scan",
    "bounds_table",
    "sampler_crosscheck",
]

#: The headline moment-vs-scale figure sweeps these decay bases (three
#: spectral dimensions: below, at and above the critical one).  Its config
#: ``rho`` field is ignored.
FIGURE1_RHOS = (4.0, 2.0, 1.4)

#: Scale-k representative site: hierarchical distance from site 1 is exactly k.
def representative_site(k: int) -> int:
    return 1 if k == 0 else 2 ** (k - 1) + 1


class ExperimentConfig(BaseModel):
    """Full description of one run; identical configs give identical results."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    experiment: ExperimentName
    rho: float = Field(default=4.0, gt=1.0)
    wbar: float = Field(default=1.0, gt=0.0)
    n: int = Field(default=6, ge=0)
    s: float = Field(default=0.25, gt=0.0, lt=0.5)
    replicas: int = Field(default=200, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**63)
    method: Literal["sequential", "gibbs"] = "sequential"
    q_exponent: int = 0
    workers: int = Field(default=1, ge=1)
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _check_cross_field(self) -> "ExperimentConfig":
        if self.q_exponent != 0 and self.rho != 2:
            raise ValueError("q_exponent != 0 requires rho == 2 exactly")
        return self


_DEFAULTS: dict[str, dict] = {
    # Sweeps FIGURE1_RHOS internally; the headline chart is 50 environments
    # of the 1024-site box.
    "figure1": dict(n=10, replicas=50),
    "gamma_law": dict(rho=4.0, n=6, replicas=2000),
    # The unit-mean identity holds for every rho, but only the ordered phase
    # (dimension > 2) has light enough tails to verify it at this sample size.
    "ward": dict(rho=1.4, n=6, replicas=5000),
    "coarse_check": dict(rho=4.0, n=5, replicas=2000),
    "decay_slope": dict(rho=4.0, n=8, replicas=200),
    "recurrence_scan": dict(rho=4.0, n=7, replicas=200),
    "transience_scan": dict(rho=2.0**0.5, n=7, replicas=200),
    "bounds_table": dict(replicas=1),
    "sampler_crosscheck": dict(rho=4.0, n=3, replicas=2000),
}


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    """Config with the experiment's canonical defaults, plus explicit overrides."""
    if experiment not in EXPERIMENT_NAMES:
        raise ValueError(f"unknown experiment {experiment!r}")
    fields = dict(_DEFAULTS[experiment])
    fields.update(overrides)
    return ExperimentConfig(experiment=experiment, **fields)


class StatRow(BaseModel):
    """One measured statistic; ``rho`` is row-level because some experiments sweep it."""

    model_config = ConfigDict(frozen=True)

    statistic: str
    vertex_or_scale: str = ""
    rho: float
    value: float
    stderr: Optional[float] = None
    ci_lo: Optional[float] = None
    ci_hi: Optional[float] = None


class RunRecord(BaseModel):
    """Persisted numeric results of one run.

    Every value is reproduced bit-exactly by re-running the stored config
    (wall-clock time excepted, which is why it never enters the CSV).
    """

    model_config = ConfigDict(frozen=True)

    config: ExperimentConfig
    resolved_seed: int
    replica_seeds: list[int]
    rows: list[StatRow]
    wall_clock_s: float
    code_version: str
    failures: list[str] = []
