"""Sensing receiver: subband sampling and reassembly, block correlation,
range-Doppler map, cell-averaging noise floor, peak detection with exclusion
around accepted peaks, and range/velocity estimation.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .channel import C0
from .dsp import cyclic_correlate

__all__ = [
    "CfarConfig",
    "RangeDopplerMap",
    "Detection",
    "DetectionReport",
    "subband_sample",
    "subband_reassemble",
    "subband_receive",
    "correlate_subblocks",
    "rdm",
    "cfar_floor",
    "temp_detect",
    "estimate_range",
    "estimate_velocity",
    "de_msqp_split",
    "match_targets",
    "strongest_cell",
]


@dataclass(frozen=True)
class CfarConfig:
    threshold: float = 10 ** 1.3
    train_cells: int = 32
    guard_cells: int = 4
    temp_radius: int = 40

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.train_cells < 1 or self.guard_cells < 0 or self.temp_radius < 1:
            raise ValueError("invalid CFAR window")

    @property
    def threshold_db(self):
        return 10 * np.log10(self.threshold)


@dataclass
class RangeDopplerMap:
    """``cells[n, k]``: range bin ``n``, Doppler bin ``k``."""

    cells: np.ndarray
    sample_period_s: float = 1e-10
    carrier_hz: float = 300e9
    # samples between consecutive correlated blocks (defaults to N)
    block_stride: int = None

    @property
    def n_range(self):
        return self.cells.shape[0]

    @property
    def n_doppler(self):
        return self.cells.shape[1]

    @cached_property
    def power(self):
        c = self.cells
        return c.real**2 + c.imag**2

    @property
    def stride(self):
        return self.n_range if self.block_stride is None else self.block_stride

    @property
    def range_resolution(self):
        return estimate_range(1, self.sample_period_s)

    @property
    def velocity_resolution(self):
        return estimate_velocity(1, self.n_doppler, self.stride, self.carrier_hz, self.sample_period_s)


@dataclass(frozen=True)
class Detection:
    range_bin: int
    doppler_bin: int
    range_m: float
    velocity_mps: float
    power: float
    floor: float


@dataclass
class DetectionReport:
    detections: list = field(default_factory=list)

    def __len__(self):
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)

    @property
    def cells(self):
        return {(d.range_bin, d.doppler_bin) for d in self.detections}


# -- subband front end --------------------------------------------------------


def _check_blocks(y, N):
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] % N:
        raise ValueError(f"input length {y.shape[-1]} is not a multiple of N={N}")
    return y.reshape(y.shape[:-1] + (-1, N))


def subband_sample(y, spec):
    """Per-subband low-rate samples of the composite signal.

    Returns a list with one ``(..., L_m)`` array per subband: the band-limited,
    down-converted component at sampling period ``N*T_s/L_m``.
    """
    N = spec.total_len
    Y = np.fft.fft(_check_blocks(y, N), axis=-1)
    parts = []
    for L, f in zip(spec.lengths, spec.offsets):
        parts.append(np.fft.ifft(Y[..., f : f + L], axis=-1) * np.sqrt(L / N))
    return parts


def subband_reassemble(parts, spec):
    """Inverse of :func:`subband_sample` (guard bins come back empty)."""
    N = spec.total_len
    lead = parts[0].shape[:-1]
    Y = np.zeros(lead + (N,), dtype=complex)
    for part, L, f in zip(parts, spec.lengths, spec.offsets):
        Y[..., f : f + L] = np.fft.fft(part, axis=-1) * np.sqrt(N / L)
    return np.fft.ifft(Y, axis=-1).reshape(lead[:-1] + (-1,))


def subband_receive(y, spec):
    """Band-select, sample each subband at its own low rate and rebuild the
    full-rate signal (length preserved)."""
    y = np.asarray(y, dtype=complex)
    return subband_reassemble(subband_sample(y, spec), spec).reshape(y.shape)


# -- correlation and map ------------------------------------------------------


def correlate_subblocks(blocks, reference):
    """Row ``q`` is the cyclic correlation of block ``q`` with ``reference``."""
    blocks = np.atleast_2d(np.asarray(blocks, dtype=complex))
    return cyclic_correlate(blocks, reference)


def rdm(corr, pad_factor=1, sample_period_s=1e-10, carrier_hz=300e9, block_stride=None):
    """Zero-padded FFT across blocks for every lag.

    ``corr`` is ``(Q, N)`` as returned by :func:`correlate_subblocks`; the map
    is ``(N, w*Q)``.
    """
    if pad_factor < 1:
        raise ValueError("pad factor must be >= 1")
    corr = np.atleast_2d(np.asarray(corr))
    Q = corr.shape[0]
    cells = np.fft.fft(corr, n=pad_factor * Q, axis=0).T
    return RangeDopplerMap(np.ascontiguousarray(cells), sample_period_s, carrier_hz, block_stride)


def cfar_floor(rd_map, cfg):
    """Cell-averaging noise floor along the range axis (cyclic).

    Averages ``train_cells`` cells each side of the cell under test, skipping
    ``guard_cells`` neighbours on each side.
    """
    power = rd_map.power if isinstance(rd_map, RangeDopplerMap) else np.abs(rd_map) ** 2
    N = power.shape[0]
    g, t = cfg.guard_cells, cfg.train_cells
    if 2 * (g + t) + 1 > N:
        raise ValueError("CFAR window longer than the range axis")
    # cyclic window sums from a prefix sum over a wrapped copy; cell n sits at
    # ext[n + w] and cs[i] = sum(ext[:i])
    w = g + t
    ext = np.concatenate([power[-w:], power, power[:w]], axis=0)
    cs = np.zeros((len(ext) + 1,) + power.shape[1:])
    np.cumsum(ext, axis=0, out=cs[1:])
    lead = cs[t : t + N] - cs[:N]
    lag = cs[2 * w + 1 : 2 * w + 1 + N] - cs[w + g + 1 : w + g + 1 + N]
    return (lead + lag) / (2 * t)


def estimate_range(range_bin, sample_period_s):
    return C0 * range_bin * sample_period_s / 2


def estimate_velocity(doppler_bin, n_doppler, block_len, carrier_hz, sample_period_s):
    """Signed velocity for Doppler bin ``k`` out of ``Q0`` (upper half negative)."""
    k = doppler_bin - n_doppler if doppler_bin >= n_doppler / 2 else doppler_bin
    return C0 * k / (2 * n_doppler * block_len * carrier_hz * sample_period_s)


def temp_detect(rd_map, floor, cfg):
    """Greedy peak acceptance with target exclusion nearby the main peak.

    Each range bin is represented by its strongest Doppler cell.  Repeatedly
    take the strongest remaining range bin; if it passes the CFAR test, record
    it and drop every range bin within ``temp_radius`` (cyclically), otherwise
    drop only that bin.
    """
    power = rd_map.power
    N = power.shape[0]
    k_hat = np.argmax(power, axis=1)  # first maximum = smallest k
    peak = power[np.arange(N), k_hat]
    ratio = peak / floor[np.arange(N), k_hat]
    # a bin failing the test only removes itself, so visiting the passing bins
    # in descending peak order is equivalent to the full sweep
    passing = np.flatnonzero(ratio >= cfg.threshold)
    order = passing[np.argsort(-peak[passing], kind="stable")]
    alive = np.ones(N, dtype=bool)
    r = cfg.temp_radius
    report = DetectionReport()
    for n in order:
        if alive[n]:
            k = int(k_hat[n])
            report.detections.append(
                Detection(
                    int(n),
                    k,
                    estimate_range(int(n), rd_map.sample_period_s),
                    estimate_velocity(k, rd_map.n_doppler, rd_map.stride, rd_map.carrier_hz,
                                      rd_map.sample_period_s),
                    float(peak[n]),
                    float(floor[n, k]),
                )
            )
            alive[np.arange(n - r, n + r + 1) % N] = False
    return report


def strongest_cell(rd_map):
    """``(n, k)`` of the global maximum, i.e. the first cell Algorithm-style
    detection would examine."""
    power = rd_map.power
    n, k = np.unravel_index(np.argmax(power), power.shape)
    return int(n), int(k)


def de_msqp_split(frame_rx, spec):
    """Strip the CP and cut a received DE-MS-QP frame into ``M'`` length-N blocks."""
    frame_rx = np.asarray(frame_rx, dtype=complex)
    body = frame_rx[..., spec.cp_len :]
    N = spec.base.total_len
    if body.shape[-1] != spec.extension * N:
        raise ValueError(
            f"frame length {frame_rx.shape[-1]} != cp {spec.cp_len} + {spec.extension} x {N}"
        )
    return body.reshape(body.shape[:-1] + (spec.extension, N))


def match_targets(report, targets, rd_map, range_tol=3, doppler_tol=3):
    """Split detections into matched and false alarms.

    A detection matches a target within ``range_tol`` range bins and
    ``doppler_tol`` Doppler bins (both cyclic).  Returns
    ``(matched: dict target_index -> Detection, false_alarms: list)``.
    """
    N, Q0 = rd_map.n_range, rd_map.n_doppler
    res_r = rd_map.range_resolution
    res_v = rd_map.velocity_resolution
    matched, false_alarms = {}, []
    for det in report:
        hit = None
        for i, tgt in enumerate(targets):
            n_true = tgt.range_m / res_r
            k_true = tgt.velocity_mps / res_v
            dn = abs((det.range_bin - n_true + N / 2) % N - N / 2)
            dk = abs((det.doppler_bin - k_true + Q0 / 2) % Q0 - Q0 / 2)
            if dn <= range_tol and dk <= doppler_tol and i not in matched:
                hit = i
                break
        if hit is None:
            false_alarms.append(det)
        else:
            matched[hit] = det
    return matched, false_alarms
