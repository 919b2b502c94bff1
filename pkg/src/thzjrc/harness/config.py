"""Experiment configuration schema (TOML, ``schema_version = 1``).

Unknown keys are rejected.  Minimal example::

    schema_version = 1
    scenario = "ranging-fig11"
    trials = 100
    base_seed = 7

    [[waveforms]]
    kind = "msqp"
    n_subbands = 10
    length = 1007
    guard_len = 100

    [channel]
    sample_period_s = 1e-10

    [cpi]
    blocks = 128
    pad_factor = 4

    [sweep]
    snr_db = [-45.0, -40.0]
"""

import sys
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..channel import ChannelConfig, ImpairmentConfig
from ..radar import CfarConfig
from ..waveforms import (
    DeMsQpSpec,
    LfmSpec,
    MsQpSpec,
    ZcParams,
    default_alphabet,
    zc_root_design,
)

SCENARIOS = (
    "papr",
    "root-design-fig5",
    "false-alarm-fig10",
    "ranging-fig11",
    "velocity-fig12",
    "tradeoff-fig13-14",
    "xcorr-appendix",
    "loopback-ber",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``issues`` lists ``(field, message)``."""

    def __init__(self, issues):
        self.issues = list(issues)
        lines = [f"{loc}: {msg}" for loc, msg in self.issues]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))

    def as_dict(self):
        return {"error": "invalid-config", "issues": [{"field": f, "message": m} for f, m in self.issues]}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class WaveformCfg(_Strict):
    kind: Literal["msqp", "de-msqp", "zc", "lfm"] = "msqp"
    label: Optional[str] = None
    n_subbands: int = Field(10, ge=1)
    length: int = Field(1007, ge=1)
    lengths: Optional[List[int]] = None
    root: Union[int, Literal["designed"]] = "designed"
    guard_len: int = Field(100, ge=0)
    phase_search: bool = False
    alphabet_size: int = Field(2, ge=1)
    extension: int = Field(1, ge=1)
    cp_len: int = Field(0, ge=0)
    subband_sampling: bool = True
    sample_period_s: Optional[float] = Field(None, gt=0)
    bandwidth_hz: Optional[float] = Field(None, gt=0)
    duration_s: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == "lfm" and (self.bandwidth_hz is None or self.duration_s is None):
            raise ValueError("lfm waveform needs bandwidth_hz and duration_s")
        return self

    @property
    def name(self):
        if self.label:
            return self.label
        if self.kind == "lfm":
            return "lfm"
        root = self.root if self.root != "designed" else "d"
        if self.kind == "zc":
            return f"zc-L{self.length}-p{root}"
        tag = f"msqp-M{self.n_subbands}-L{self.length}-p{root}"
        return tag if self.kind == "msqp" else f"de-{tag}-x{self.extension}"


class ImpairmentsCfg(_Strict):
    enabled: bool = True
    iq_amp: float = 0.2
    iq_phase_deg: float = 10.0
    pn_sigma_deg: float = Field(0.3, ge=0)
    pn_initial: Literal["uniform", "zero"] = "uniform"

    def build(self):
        if not self.enabled:
            return ImpairmentConfig()
        return ImpairmentConfig(self.iq_amp, np.deg2rad(self.iq_phase_deg),
                                np.deg2rad(self.pn_sigma_deg), self.pn_initial)


class ChannelCfg(_Strict):
    carrier_hz: float = Field(300e9, gt=0)
    sample_period_s: float = Field(1e-10, gt=0)
    upsample_factor: int = Field(4, ge=1)
    snr_db: Optional[float] = None
    n_targets: int = Field(1, ge=0)
    range_m: Tuple[float, float] = (0.0, 3.0)
    velocity_mps: Tuple[float, float] = (-20.0, 20.0)
    impairments: ImpairmentsCfg = ImpairmentsCfg()

    @field_validator("range_m")
    @classmethod
    def _range_ok(cls, v):
        if v[0] < 0 or v[1] < v[0]:
            raise ValueError("range interval must satisfy 0 <= lo <= hi")
        return v

    @field_validator("velocity_mps")
    @classmethod
    def _vel_ok(cls, v):
        if v[1] < v[0]:
            raise ValueError("velocity interval must satisfy lo <= hi")
        return v


class CfarCfg(_Strict):
    threshold_db: float = 13.0
    train_cells: int = Field(32, ge=1)
    guard_cells: int = Field(4, ge=0)
    temp_radius: int = Field(40, ge=1)

    def build(self, threshold_db=None):
        t = self.threshold_db if threshold_db is None else threshold_db
        return CfarConfig(10 ** (t / 10), self.train_cells, self.guard_cells, self.temp_radius)


class CpiCfg(_Strict):
    blocks: int = Field(128, ge=1)
    pad_factor: int = Field(4, ge=1)


class SweepCfg(_Strict):
    snr_db: Optional[List[float]] = None
    threshold_db: Optional[List[float]] = None
    extension: Optional[List[int]] = None
    doppler_vl: Optional[List[float]] = None
    delay: int = Field(100, ge=0)


class ExperimentConfig(_Strict):
    schema_version: Literal[1] = 1
    scenario: Literal[SCENARIOS]
    trials: int = Field(1, ge=1)
    base_seed: int = 0
    scale: float = Field(1.0, gt=0, le=1)
    workers: int = Field(1, ge=1)
    waveforms: List[WaveformCfg] = Field(default_factory=lambda: [WaveformCfg()])
    channel: ChannelCfg = ChannelCfg()
    cfar: CfarCfg = CfarCfg()
    cpi: CpiCfg = CpiCfg()
    sweep: SweepCfg = SweepCfg()

    @model_validator(mode="after")
    def _check_waveforms(self):
        if not self.waveforms:
            raise ValueError("at least one waveform required")
        return self

    def override(self, **changes):
        """Copy with top-level fields replaced (``None`` values ignored), re-validated."""
        data = self.model_dump()
        data.update({k: v for k, v in changes.items() if v is not None})
        return validate_config(data)

    @property
    def blocks(self):
        return max(1, int(round(self.cpi.blocks * self.scale)))


def _issues(err):
    return [(".".join(str(p) for p in e["loc"]) or "<root>", e["msg"]) for e in err.errors()]


def validate_config(data):
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_issues(err)) from None
    # construct every waveform once so parameter errors surface here
    issues = []
    for i, w in enumerate(cfg.waveforms):
        try:
            build_waveform(w, cfg)
        except ValueError as exc:
            issues.append((f"waveforms.{i}", str(exc)))
    if issues:
        raise ConfigError(issues)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError([("<file>", f"{path}: {exc.strerror or exc}")]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([("<file>", f"{path}: {exc}")]) from None
    return validate_config(data)


# -- scaled waveform construction ---------------------------------------------


def scaled_length(length, scale, root=None):
    """Odd length near ``length * scale`` (>= 3) coprime with a fixed ``root``."""
    if scale == 1:
        return length
    n = max(3, int(round(length * scale)))
    if n % 2 == 0:
        n += 1
    while root is not None and np.gcd(root, n) != 1:
        n += 2
    return n


def _root_for(w, length):
    return zc_root_design(length) if w.root == "designed" else int(w.root)


def msqp_spec_for(w, cfg):
    fixed = None if w.root == "designed" else int(w.root)
    lengths = w.lengths or [w.length] * w.n_subbands
    lengths = [scaled_length(L, cfg.scale, fixed) for L in lengths]
    guard = int(round(w.guard_len * cfg.scale))
    subbands = [ZcParams(L, _root_for(w, L)) for L in lengths]
    return MsQpSpec(subbands, guard, default_alphabet(w.alphabet_size))


def build_waveform(w, cfg):
    """Concrete waveform description for one ``[[waveforms]]`` entry.

    Returns ``(kind, spec, sample_period_s)`` where ``spec`` is an
    ``MsQpSpec``, ``DeMsQpSpec``, ``ZcParams`` or ``LfmSpec``.
    """
    ts = w.sample_period_s or cfg.channel.sample_period_s
    if w.kind == "zc":
        fixed = None if w.root == "designed" else int(w.root)
        L = scaled_length(w.length, cfg.scale, fixed)
        return w.kind, ZcParams(L, _root_for(w, L)), ts
    if w.kind == "lfm":
        return w.kind, LfmSpec(w.bandwidth_hz, w.duration_s * cfg.scale, ts), ts
    spec = msqp_spec_for(w, cfg)
    if w.kind == "msqp":
        return w.kind, spec, ts
    return w.kind, DeMsQpSpec(spec, w.extension, cp_len=w.cp_len), ts


def channel_config(cfg, snr_db=None, targets=(), sample_period_s=None):
    ch = cfg.channel
    return ChannelConfig(
        carrier_hz=ch.carrier_hz,
        sample_period_s=sample_period_s or ch.sample_period_s,
        snr_db=snr_db,
        upsample_factor=ch.upsample_factor,
        impairments=ch.impairments.build(),
        targets=tuple(targets),
    )
