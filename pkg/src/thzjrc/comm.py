"""Communication receiver for DE-MS-QP frames.

Per subband the frame spectrum splits into ``M'`` interleaved residue
classes: class 0 is the sensing comb (reused as a pilot), classes
``1..M'-1`` are the data streams.  Each data stream is equalized with a
one-tap zero-forcing gain, brought back to the time domain with an
``L_m``-point IDFT, de-rotated and sliced to the nearest constellation point.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .waveforms import zc_generate

__all__ = [
    "StreamGrid",
    "BerReport",
    "strip_cp",
    "extract_streams",
    "sensing_comb",
    "channel_estimate",
    "equalize",
    "equalize_and_demap",
    "ml_detect",
    "bits_to_symbols",
    "symbols_to_bits",
    "ber_count",
    "qpsk_ber_theory",
]


@dataclass
class StreamGrid:
    """``streams[m][..., i, k]`` is bin ``M'*k + i`` of subband ``m``."""

    streams: list

    @property
    def n_subbands(self):
        return len(self.streams)


@dataclass(frozen=True)
class BerReport:
    bits_total: int
    bits_errored: int

    def __post_init__(self):
        if not 0 <= self.bits_errored <= self.bits_total:
            raise ValueError("errored bits outside [0, total]")

    @property
    def ber(self):
        return self.bits_errored / self.bits_total if self.bits_total else 0.0

    def __add__(self, other):
        return BerReport(self.bits_total + other.bits_total, self.bits_errored + other.bits_errored)


def strip_cp(frame_rx, spec):
    frame_rx = np.asarray(frame_rx, dtype=complex)
    if frame_rx.shape[-1] != spec.cp_len + spec.frame_len:
        raise ValueError(
            f"frame length {frame_rx.shape[-1]} != cp {spec.cp_len} + N' {spec.frame_len}"
        )
    return frame_rx[..., spec.cp_len :]


def extract_streams(frame_rx, spec):
    """Split a CP-free frame (or a stack of frames) into per-stream bins."""
    frame_rx = np.asarray(frame_rx, dtype=complex)
    Np, Mx = spec.frame_len, spec.extension
    if frame_rx.shape[-1] != Np:
        raise ValueError(f"frame length {frame_rx.shape[-1]} != N' = {Np}")
    Y = np.fft.fft(frame_rx, axis=-1)
    lead = Y.shape[:-1]
    streams = []
    for L, f in zip(spec.base.lengths, spec.ext_offsets):
        Lp = L * Mx
        Ym = Y[..., f : f + Lp] * np.sqrt(Lp / Np)
        streams.append(np.swapaxes(Ym.reshape(lead + (L, Mx)), -1, -2))
    return StreamGrid(streams)


def sensing_comb(spec):
    """Transmitted stream-0 bins per subband, in :func:`extract_streams` scaling."""
    Mx = spec.extension
    return [
        np.sqrt(Mx) * np.exp(1j * phi) * np.fft.fft(zc_generate(zc))
        for zc, phi in zip(spec.base.subbands, spec.base.phases)
    ]


def channel_estimate(grid, spec, tiny=1e-12):
    """Least-squares gains on the comb, linearly interpolated onto data bins.

    Returns, per subband, an array shaped like the subband's stream grid.
    """
    Mx = spec.extension
    out = []
    for Ym, ref in zip(grid.streams, sensing_comb(spec)):
        L = ref.shape[-1]
        ok = np.abs(ref) > tiny
        pos = Mx * np.arange(L)
        h0 = Ym[..., 0, :][..., ok] / ref[ok]
        gains = np.empty_like(Ym)
        flat_h0 = h0.reshape(-1, h0.shape[-1])
        flat_g = gains.reshape(-1, Mx, L)
        for j in range(flat_h0.shape[0]):
            for i in range(Mx):
                q = pos + i
                flat_g[j, i] = np.interp(q, pos[ok], flat_h0[j].real) + 1j * np.interp(
                    q, pos[ok], flat_h0[j].imag
                )
        out.append(gains)
    return out


def equalize(grid, gains, spec, phase_correction=True):
    """Soft symbol estimates per subband, shape ``(..., M'-1, L_m)``."""
    Mx = spec.extension
    out = []
    for Ym, H, zc, phi in zip(grid.streams, gains, spec.base.subbands, spec.base.phases):
        L = zc.length
        Z = Ym[..., 1:, :] / H[..., 1:, :]
        z = np.fft.ifft(Z, axis=-1)
        n = np.arange(L)
        i = np.arange(1, Mx)[:, None]
        rot = np.exp(-1j * phi) * np.ones((Mx - 1, L))
        if phase_correction:
            rot = rot * np.exp(2j * np.pi * i * n / (L * Mx))
        out.append(z * rot / np.sqrt(Mx))
    return out


def ml_detect(z, constellation):
    """Index of the nearest constellation point for every sample."""
    z = np.asarray(z)
    d = np.abs(z[..., None] - np.asarray(constellation)) ** 2
    return np.argmin(d, axis=-1)


def equalize_and_demap(grid, gains, spec, phase_correction=True):
    """Hard decisions (constellation indices) per subband, ``(..., M'-1, L_m)``."""
    return [ml_detect(z, spec.constellation) for z in equalize(grid, gains, spec, phase_correction)]


def symbols_to_bits(indices, bits_per_symbol):
    """MSB-first bits of each constellation index (flattened)."""
    idx = np.asarray(indices, dtype=np.int64).ravel()
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def bits_to_symbols(bits, bits_per_symbol):
    bits = np.asarray(bits, dtype=np.int64).reshape(-1, bits_per_symbol)
    return bits @ (1 << np.arange(bits_per_symbol - 1, -1, -1))


def ber_count(tx_bits, rx_bits):
    tx = np.asarray(tx_bits).ravel()
    rx = np.asarray(rx_bits).ravel()
    if tx.shape != rx.shape:
        raise ValueError(f"bit stream lengths differ: {tx.size} vs {rx.size}")
    return BerReport(int(tx.size), int(np.count_nonzero(tx != rx)))


def qpsk_ber_theory(ebn0_db):
    """Gray QPSK over AWGN: ``Q(sqrt(2 Eb/N0))``."""
    ebn0 = 10 ** (np.asarray(ebn0_db) / 10)
    return 0.5 * erfc(np.sqrt(ebn0))
