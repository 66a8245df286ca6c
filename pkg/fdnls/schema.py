from __future__ import annotations

import math
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import DomainError
from .messages import t

Mu = Literal[-1, 1]
Scheme = Literal["strang"]
Experiment = Literal[
    "simulate",
    "converge",
    "sharpness",
    "compact-support",
    "mi-region",
    "mi-gain",
    "mi-track",
    "mi-recurrence",
    "kernel-probe",
    "oracle-check",
]
Metric = Literal["torus", "lattice"]
RegionAxis = Literal["A", "alpha"]
ProbeSection = Literal["bound", "wavepacket", "strichartz"]

EXPERIMENTS = list(Experiment.__args__)
DISPERSIVE_EXPERIMENTS = {"converge", "sharpness", "compact-support", "kernel-probe"}
SEED_MAX = 2**64 - 1


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelParams(_Model):
    alpha: float = Field(2.0, gt=0.0, le=2.0)
    mu: Mu = -1

    @property
    def focusing(self) -> bool:
        return self.mu == -1

    @property
    def classical(self) -> bool:
        return self.alpha == 2.0

    @property
    def dispersive_range(self) -> bool:
        return 1.0 < self.alpha <= 2.0

    def require_dispersive_range(self) -> None:
        if not self.dispersive_range:
            raise DomainError(t("constraints.alpha_dispersive", alpha=self.alpha))


class SolverConfig(_Model):
    dt: Optional[float] = Field(None, gt=0.0)
    t_end: float = Field(1.0, ge=0.0)
    record_stride: int = Field(1, ge=1)
    scheme: Scheme = "strang"

    @model_validator(mode="after")
    def _dt_within_horizon(self) -> "SolverConfig":
        if self.dt is not None and self.t_end > 0 and self.dt > self.t_end:
            raise ValueError(t("constraints.dt_horizon", dt=self.dt, t_end=self.t_end))
        return self


class PlaneWaveSpec(_Model):
    """u_0 = A |n|^{-s} e^{inx} with complex A = A_abs e^{i phase}."""

    kind: Literal["plane_wave"] = "plane_wave"
    A: float = 1.0
    phase: float = 0.0
    n: int = 1
    s: float = 0.0

    @model_validator(mode="after")
    def _nondegenerate(self) -> "PlaneWaveSpec":
        if self.n == 0:
            raise ValueError(t("constraints.plane_wave_mode"))
        if self.A == 0:
            raise ValueError(t("constraints.plane_wave_amplitude"))
        return self

    @property
    def amplitude(self) -> complex:
        return complex(self.A * np.exp(1j * self.phase))

    @property
    def mode_amplitude(self) -> complex:
        """Amplitude of e^{inx} in u_0, i.e. A |n|^{-s}."""
        return self.amplitude * abs(self.n) ** (-self.s)


class Sideband(_Model):
    k: int
    phase: float = 0.0


class CWSpec(_Model):
    kind: Literal["cw"] = "cw"
    A: float = Field(1.0, gt=0.0)
    eps: float = Field(0.0, ge=0.0, le=1e-2)
    modes: List[Sideband] = []


class SobolevSpec(_Model):
    kind: Literal["sobolev"] = "sobolev"
    s: float = Field(1.0, gt=0.0)
    decay_eps: float = Field(0.05, gt=0.0)
    scale: float = Field(1.0, gt=0.0)
    k_cut: Optional[int] = Field(None, ge=1)
    seed: int = Field(0, ge=0, le=SEED_MAX)


class CompactMode(_Model):
    k: int
    amplitude: float = 1.0
    phase: float = 0.0


class CompactSpec(_Model):
    kind: Literal["compact"] = "compact"
    modes: List[CompactMode] = [CompactMode(k=1), CompactMode(k=2)]

    @property
    def k_max(self) -> int:
        return max(abs(m.k) for m in self.modes)


DatumSpec = Annotated[
    Union[PlaneWaveSpec, CWSpec, SobolevSpec, CompactSpec], Field(discriminator="kind")
]


class SharpnessSpec(_Model):
    T: float = Field(0.5, gt=0.0, le=1.0)
    eps: float = Field(0.3, gt=0.0, lt=1.0 / math.sqrt(2.0))
    n_times: int = Field(32, ge=2)


class CompactSweepSpec(_Model):
    k_max_list: List[int] = [1, 2, 4, 8]
    k_c: Optional[int] = Field(None, ge=1)
    leak_tol: float = Field(1e-8, gt=0.0)


class MISpec(_Model):
    axis: RegionAxis = "A"
    xi_points: int = Field(200, ge=2)
    A_min: float = Field(0.01, gt=0.0)
    A_max: float = Field(4.0, gt=0.0)
    A_points: int = Field(200, ge=1)
    alpha_min: float = Field(0.01, gt=0.0, le=2.0)
    alpha_max: float = Field(2.0, gt=0.0, le=2.0)
    alpha_points: int = Field(200, ge=1)
    A_list: List[float] = [0.25, 0.5, 1.0]
    mode: Optional[int] = None
    measure: bool = True
    localization_factor: float = Field(2.0, gt=1.0)
    peak_prominence: float = Field(0.5, gt=0.0)
    trough_depth: float = Field(0.1, gt=0.0, lt=1.0)
    alpha_list: List[float] = [2.0, 1.7, 1.4, 1.1]

    @model_validator(mode="after")
    def _ascending(self) -> "MISpec":
        if any(a <= 0 for a in self.A_list) or any(b <= a for a, b in zip(self.A_list, self.A_list[1:])):
            raise ValueError(t("constraints.A_list"))
        if not self.alpha_list or any(not 0.0 < a <= 2.0 for a in self.alpha_list) or len(set(self.alpha_list)) != len(self.alpha_list):
            raise ValueError(t("constraints.alpha_list", alpha_list=self.alpha_list))
        return self


class ProbeSpec(_Model):
    sections: List[ProbeSection] = ["bound", "wavepacket", "strichartz"]
    alpha_list: List[float] = [1.25, 1.5, 2.0]
    N_list: List[float] = [1.0, 0.5, 0.25]
    t_fractions: List[float] = [1.0, 0.5, 0.25, 0.125, 0.0625]
    t_values: Optional[List[float]] = None
    T: float = Field(1.0, gt=0.0)
    T_list: List[float] = [0.25, 0.5, 1.0]
    wavepacket_alpha_list: List[float] = [1.5, 2.0]
    wavepacket_M_list: List[int] = [64, 128, 256, 512, 1024]
    p: float = Field(1.0, ge=1.0)
    q: float = Field(math.inf, ge=1.0)
    safety: float = Field(0.1, gt=0.0, le=1.0)
    strichartz_M_list: List[int] = [16, 32, 64]
    strichartz_times: int = Field(64, ge=2)
    strichartz_tolerance: float = Field(2.0, ge=1.0)

    @model_validator(mode="after")
    def _alpha_range(self) -> "ProbeSpec":
        for a in [*self.alpha_list, *self.wavepacket_alpha_list]:
            if not 1.0 < a <= 2.0:
                raise ValueError(t("constraints.alpha_dispersive", alpha=a))
        return self


class RunConfig(_Model):
    experiment: Experiment
    alpha: float = Field(2.0, gt=0.0)
    mu: Mu = -1
    M: int = Field(64, ge=1)
    M_ref: Optional[int] = Field(None, ge=1)
    M_list: List[int] = [16, 32, 64, 128]
    dt: Optional[float] = Field(None, gt=0.0)
    t_end: float = Field(1.0, ge=0.0)
    t_eval: float = Field(0.5, ge=0.0)
    record_stride: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, le=SEED_MAX)
    out: str = "out"
    metric: Metric = "torus"
    datum: Optional[DatumSpec] = None
    check_dt_halving: bool = False
    sharpness: SharpnessSpec = SharpnessSpec()
    compact: CompactSweepSpec = CompactSweepSpec()
    mi: MISpec = MISpec()
    probe: ProbeSpec = ProbeSpec()

    @model_validator(mode="after")
    def _cross_checks(self) -> "RunConfig":
        if self.alpha > 2.0:
            raise ValueError(t("constraints.alpha_range", alpha=self.alpha))
        if self.experiment in DISPERSIVE_EXPERIMENTS and self.experiment != "kernel-probe":
            if not 1.0 < self.alpha <= 2.0:
                raise ValueError(t("constraints.alpha_dispersive", alpha=self.alpha))
        if len(self.M_list) < 3 and self.experiment in {"converge", "sharpness", "compact-support"}:
            raise ValueError(t("constraints.M_list_length"))
        if any(m < 1 for m in self.M_list) or any(b <= a for a, b in zip(self.M_list, self.M_list[1:])):
            raise ValueError(t("constraints.M_list_increasing"))
        if self.M_ref is not None and self.experiment in {"converge", "compact-support"}:
            need = 8 * max(self.M_list)
            if self.M_ref < need:
                raise ValueError(t("constraints.M_ref", M_ref=self.M_ref, need=need))
        if self.dt is not None and self.t_end > 0 and self.dt > self.t_end:
            raise ValueError(t("constraints.dt_horizon", dt=self.dt, t_end=self.t_end))
        if self.metric == "lattice" and self.datum is not None and self.datum.kind != "plane_wave":
            raise ValueError(t("constraints.lattice_metric_datum"))
        return self

    @property
    def params(self) -> ModelParams:
        return ModelParams(alpha=self.alpha, mu=self.mu)

    @property
    def solver(self) -> SolverConfig:
        return SolverConfig(dt=self.dt, t_end=self.t_end, record_stride=self.record_stride)
