"""Mono-static echo channel: multi-target delay, Doppler and gain, receive I/Q
imbalance, shared-oscillator phase noise and additive noise.

Delays are applied cyclically within a block at ``upsample_factor`` times the
sample rate; Doppler rotation runs at the base rate and keeps its phase across
consecutive blocks of a coherent processing interval.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dsp import complex_noise, downsample, interp_filter, upsample_filter

__all__ = [
    "C0",
    "RangeAliasWarning",
    "Target",
    "ImpairmentConfig",
    "ChannelConfig",
    "normalized_doppler",
    "iq_coeffs",
    "phase_noise_path",
    "delay_samples",
    "delay_response",
    "delayed_copy",
    "delayed_copy_direct",
    "propagate",
    "propagate_cpi",
]

C0 = 299_792_458.0


class RangeAliasWarning(UserWarning):
    """Round-trip delay exceeds the block length; range wraps around."""


@dataclass(frozen=True)
class Target:
    range_m: float
    velocity_mps: float = 0.0
    gain: complex = 1.0

    def __post_init__(self):
        if self.range_m < 0:
            raise ValueError("target range must be non-negative")
        if abs(self.gain) == 0:
            raise ValueError("target gain must be non-zero")


@dataclass(frozen=True)
class ImpairmentConfig:
    iq_amp: float = 0.0
    iq_phase_rad: float = 0.0
    pn_sigma_rad: float = 0.0
    pn_initial: str = "uniform"

    def __post_init__(self):
        if self.pn_sigma_rad < 0:
            raise ValueError("phase-noise sigma must be non-negative")
        if self.pn_initial not in ("uniform", "zero"):
            raise ValueError(f"unknown phase-noise initial policy {self.pn_initial!r}")

    @classmethod
    def thz_default(cls):
        """Receiver impairments used in the reference simulations."""
        return cls(iq_amp=0.2, iq_phase_rad=np.deg2rad(10.0), pn_sigma_rad=np.deg2rad(0.3))

    @property
    def enabled(self):
        return self.iq_amp != 0 or self.iq_phase_rad != 0 or self.pn_sigma_rad != 0


@dataclass(frozen=True)
class ChannelConfig:
    carrier_hz: float = 300e9
    sample_period_s: float = 1e-10
    snr_db: float = None
    upsample_factor: int = 4
    impairments: ImpairmentConfig = field(default_factory=ImpairmentConfig)
    targets: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.carrier_hz <= 0 or self.sample_period_s <= 0:
            raise ValueError("carrier frequency and sample period must be positive")
        if self.upsample_factor < 1:
            raise ValueError("upsample factor must be >= 1")


def normalized_doppler(velocity_mps, carrier_hz, sample_period_s):
    """Per-sample Doppler ``2 u f_c T_s / c0`` (cycles per sample)."""
    return 2 * velocity_mps * carrier_hz * sample_period_s / C0


def iq_coeffs(cfg):
    """Receive I/Q imbalance coefficients ``(mu, nu)``."""
    eps, phi = cfg.iq_amp, cfg.iq_phase_rad
    mu = np.cos(phi) + 1j * eps * np.sin(phi)
    nu = eps * np.cos(phi) - 1j * np.sin(phi)
    return mu, nu


def phase_noise_path(length, cfg, seed=None):
    """Wiener phase-noise samples ``theta_n = theta_{n-1} + N(0, sigma^2)``."""
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = np.random.default_rng(seed)
    theta0 = rng.uniform(0, 2 * np.pi) if cfg.pn_initial == "uniform" else 0.0
    if cfg.pn_sigma_rad > 0:
        steps = rng.normal(0.0, cfg.pn_sigma_rad, size=length - 1)
    else:
        steps = np.zeros(length - 1)
    return theta0 + np.concatenate([[0.0], np.cumsum(steps)])


def delay_samples(range_m, sample_period_s, factor=1):
    """Round-trip delay in samples at ``factor`` times the base rate (rounded)."""
    return int(round(2 * range_m / C0 / (sample_period_s / factor)))


def delay_response(n, delay_hr, factor):
    """Base-rate frequency response of zero-stuff, cyclic shift by
    ``delay_hr`` high-rate samples, interpolation filter, decimate.

    ``Y[k] = X[k] * G[k]`` with ``G[k] = (1/f) sum_a H[k + aN] e^{-j2pi(k+aN)D/(fN)}``.
    """
    if delay_hr % factor == 0:
        return np.exp(-2j * np.pi * np.arange(n) * (delay_hr // factor) / n)
    h = interp_filter(factor)
    big = n * factor
    kernel = np.zeros(big)
    half = len(h) // 2
    np.add.at(kernel, np.arange(-half, half + 1) % big, h)
    kappa = np.arange(big)
    U = np.fft.fft(kernel) * np.exp(-2j * np.pi * kappa * delay_hr / big)
    return U.reshape(factor, n).sum(axis=0) / factor


def delayed_copy(x, delay_hr, factor):
    """Cyclically delay ``x`` (last axis) by ``delay_hr`` high-rate samples.

    Integer multiples of ``factor`` reduce to an exact cyclic shift.
    """
    x = np.asarray(x, dtype=complex)
    if delay_hr % factor == 0:
        return np.roll(x, delay_hr // factor, axis=-1)
    G = delay_response(x.shape[-1], delay_hr, factor)
    return np.fft.ifft(np.fft.fft(x, axis=-1) * G, axis=-1)


def delayed_copy_direct(x, delay_hr, factor):
    """Literal zero-stuff / shift / filter / decimate chain (1-D reference)."""
    up = upsample_filter(x, factor)
    return downsample(np.roll(up, delay_hr), factor, 0)


def _block_phases(n_blocks, block_len, stride, v):
    per_block = np.exp(2j * np.pi * v * stride * np.arange(n_blocks))
    return per_block[:, None] * np.exp(2j * np.pi * v * np.arange(block_len))[None, :]


def propagate_cpi(x, cfg, n_blocks=1, seed=None, block_stride=None, first_block=0):
    """Echo of ``n_blocks`` back-to-back transmissions of ``x``.

    ``x`` is either one block repeated ``n_blocks`` times or an
    ``(n_blocks, N)`` array of distinct blocks.  Returns ``(n_blocks, N)``.  ``block_stride`` is the time in
    samples between block starts (defaults to ``len(x)``; larger when a cyclic
    prefix is skipped).  Noise power is set from the mean power of the
    noiseless echo over the whole interval.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim == 2:
        if x.shape[0] != n_blocks:
            raise ValueError(f"{x.shape[0]} transmit blocks for {n_blocks} echo blocks")
    elif x.ndim != 1:
        raise ValueError("transmit signal must be 1-D or (n_blocks, N)")
    N = x.shape[-1]
    if N == 0:
        raise ValueError("empty transmit block")
    stride = N if block_stride is None else block_stride
    rng = np.random.default_rng(seed)
    imp = cfg.impairments
    f = cfg.upsample_factor

    total_len = (first_block + n_blocks) * stride
    max_tau = 0
    taus = []
    for tgt in cfg.targets:
        d_hr = delay_samples(tgt.range_m, cfg.sample_period_s, f)
        if d_hr >= N * f:
            warnings.warn(
                f"target at {tgt.range_m} m wraps around a {N}-sample block", RangeAliasWarning
            )
        taus.append(int(round(d_hr / f)))
        max_tau = max(max_tau, taus[-1])

    pn_on = imp.pn_sigma_rad > 0
    if pn_on:
        # path starts max_tau samples early so theta_{n - tau} exists for n < tau
        theta = phase_noise_path(total_len + max_tau, imp, rng)
        t_idx = first_block * stride + np.arange(n_blocks)[:, None] * stride + np.arange(N)[None, :]
        theta_rx = theta[t_idx + max_tau]

    echo = np.zeros((n_blocks, N), dtype=complex)
    for tgt, tau in zip(cfg.targets, taus):
        d_hr = delay_samples(tgt.range_m, cfg.sample_period_s, f)
        xd = delayed_copy(x, d_hr % (N * f), f)
        v = normalized_doppler(tgt.velocity_mps, cfg.carrier_hz, cfg.sample_period_s)
        t0 = first_block * stride
        contrib = tgt.gain * np.atleast_2d(xd) * _block_phases(n_blocks, N, stride, v)
        if v != 0 and t0:
            contrib *= np.exp(2j * np.pi * v * t0)
        if pn_on:
            contrib *= np.exp(1j * (theta[t_idx + max_tau - tau] - theta_rx))
        echo += contrib

    if cfg.snr_db is not None and np.isfinite(cfg.snr_db):
        power = np.mean(np.abs(echo) ** 2)
        if power > 0:
            sigma2 = power / 10 ** (cfg.snr_db / 10)
            # the LO rotation of circular noise leaves its distribution unchanged
            echo += complex_noise(rng, echo.shape, sigma2)

    if imp.iq_amp != 0 or imp.iq_phase_rad != 0:
        mu, nu = iq_coeffs(imp)
        echo = mu * echo + nu * np.conj(echo)
    return echo


def propagate(x, cfg, block_index=0, seed=None):
    """Echo of the ``block_index``-th transmission of ``x`` (one block)."""
    return propagate_cpi(x, cfg, 1, seed=seed, first_block=block_index)[0]
