"""Transmit waveforms: Zadoff-Chu sequences, the multi-subband quasi-perfect
(MS-QP) sensing sequence, its data-embedded extension (DE-MS-QP) and the
chirp baseline.

Frequency-domain layout of an MS-QP sequence of length ``N``::

    | subband 0 (L_0 bins) | guard (L_G) | subband 1 (L_1) | guard | ... | guard |
    0                      f_1-L_G       f_1

Subband ``m`` carries the unitary ``L_m``-point DFT of its ZC sequence, rotated
by ``exp(j*phi_m)``.  The time-domain sequence is ``sqrt(N) * idft(spectrum)``,
which makes a single-band, guard-free sequence identical to its ZC generator.
"""

from dataclasses import dataclass, field, replace
from math import gcd

import numpy as np


__all__ = [
    "NoValidRoot",
    "ZcParams",
    "MsQpSpec",
    "DeMsQpSpec",
    "LfmSpec",
    "QPSK",
    "default_alphabet",
    "zc_generate",
    "zc_root_design",
    "sidelobe_residues",
    "msqp_spectrum",
    "msqp_build",
    "msqp_build_interp",
    "phase_rotation_search",
    "subsequence_extract",
    "time_extend",
    "de_msqp_streams",
    "de_msqp_build",
    "spectral_efficiency",
    "occupied_data_bins",
    "lfm_generate",
]

#: Gray-mapped QPSK, index = 2*b0 + b1.
QPSK = np.array([1 + 1j, -1 + 1j, 1 - 1j, -1 - 1j]) / np.sqrt(2)


class NoValidRoot(ValueError):
    """Neither (L-1)/2 nor (L+1)/2 is coprime with the ZC length."""


def default_alphabet(size=2):
    """``size`` equally spaced phases in [0, 2*pi); binary {0, pi} by default."""
    return tuple(2 * np.pi * k / size for k in range(size))


@dataclass(frozen=True)
class ZcParams:
    length: int
    root: int

    def __post_init__(self):
        if self.length < 1 or self.length % 2 == 0:
            raise ValueError(f"ZC length must be odd and positive, got {self.length}")
        if self.length > 1 and not 0 < self.root < self.length:
            raise ValueError(f"root {self.root} outside (0, {self.length})")
        if gcd(self.root, self.length) != 1:
            raise ValueError(f"gcd(root={self.root}, length={self.length}) != 1")

    @classmethod
    def designed(cls, length):
        """ZC parameters with the Doppler-robust root for ``length``."""
        return cls(length, zc_root_design(length))


@dataclass(frozen=True)
class MsQpSpec:
    subbands: tuple
    guard_len: int = 0
    phase_alphabet: tuple = field(default_factory=default_alphabet)
    chosen_phases: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "subbands", tuple(self.subbands))
        object.__setattr__(self, "phase_alphabet", tuple(float(p) for p in self.phase_alphabet))
        if not self.subbands:
            raise ValueError("at least one subband required")
        if self.guard_len < 0:
            raise ValueError("guard length must be non-negative")
        if self.chosen_phases is not None:
            phases = tuple(float(p) for p in self.chosen_phases)
            if len(phases) != len(self.subbands):
                raise ValueError("one phase per subband required")
            for p in phases:
                if not any(np.isclose(p, a) for a in self.phase_alphabet):
                    raise ValueError(f"phase {p} not in the alphabet")
            object.__setattr__(self, "chosen_phases", phases)

    @classmethod
    def uniform(cls, n_subbands, length, root=None, guard_len=0, **kw):
        """``n_subbands`` identical ZC subbands; root defaults to the designed one."""
        zc = ZcParams(length, zc_root_design(length) if root is None else root)
        return cls((zc,) * n_subbands, guard_len, **kw)

    @property
    def n_subbands(self):
        return len(self.subbands)

    @property
    def lengths(self):
        return [zc.length for zc in self.subbands]

    @property
    def total_len(self):
        return sum(self.lengths) + self.n_subbands * self.guard_len

    @property
    def offsets(self):
        """First DFT bin of each subband."""
        return [sum(self.lengths[:m]) + m * self.guard_len for m in range(self.n_subbands)]

    @property
    def phases(self):
        return self.chosen_phases if self.chosen_phases is not None else (0.0,) * self.n_subbands

    def with_phases(self, phases):
        return replace(self, chosen_phases=tuple(phases))


@dataclass(frozen=True)
class DeMsQpSpec:
    """Data-embedded MS-QP frame.

    ``guard_len_ext`` defaults to ``extension * base.guard_len``, the only
    choice for which the sensing component is the base MS-QP sequence
    repeated ``extension`` times.
    """

    base: MsQpSpec
    extension: int = 2
    guard_len_ext: int = None
    cp_len: int = 0
    constellation: np.ndarray = field(default_factory=lambda: QPSK.copy())

    def __post_init__(self):
        if self.extension < 1:
            raise ValueError("extension factor must be >= 1")
        if self.guard_len_ext is None:
            object.__setattr__(self, "guard_len_ext", self.extension * self.base.guard_len)
        if self.guard_len_ext < 0 or self.cp_len < 0:
            raise ValueError("guard and CP lengths must be non-negative")
        const = np.asarray(self.constellation, dtype=complex)
        if const.ndim != 1 or len(const) < 2:
            raise ValueError("constellation needs at least two points")
        if len(const) & (len(const) - 1):
            raise ValueError("constellation size must be a power of two")
        if not np.isclose(np.mean(np.abs(const) ** 2), 1.0):
            raise ValueError("constellation must have unit average power")
        object.__setattr__(self, "constellation", const)

    @property
    def ext_lengths(self):
        return [length * self.extension for length in self.base.lengths]

    @property
    def frame_len(self):
        """N' (without the cyclic prefix)."""
        return sum(self.ext_lengths) + self.base.n_subbands * self.guard_len_ext

    @property
    def ext_offsets(self):
        lens = self.ext_lengths
        return [sum(lens[:m]) + m * self.guard_len_ext for m in range(self.base.n_subbands)]

    @property
    def bits_per_symbol(self):
        return len(self.constellation).bit_length() - 1

    @property
    def n_streams(self):
        return self.extension - 1


@dataclass(frozen=True)
class LfmSpec:
    bandwidth_hz: float
    duration_s: float
    sample_period_s: float

    def __post_init__(self):
        if self.duration_s <= 0 or self.sample_period_s <= 0 or self.bandwidth_hz < 0:
            raise ValueError("LFM parameters must be positive")
        if self.bandwidth_hz * self.sample_period_s > 1 + 1e-12:
            raise ValueError("chirp bandwidth exceeds the sampling rate")


# -- Zadoff-Chu ---------------------------------------------------------------


def zc_generate(params):
    """``b[n] = exp(-j*pi*p*n*(n+1)/L)``."""
    n = np.arange(params.length, dtype=np.int64)
    # reduce the quadratic phase modulo 2L in integers to keep long sequences exact
    phase = (params.root * n * (n + 1)) % (2 * params.length)
    return np.exp(-1j * np.pi * phase / params.length)


def zc_root_design(length):
    """Doppler-robust root: ``(L-1)/2`` if coprime with ``L``, else ``(L+1)/2``."""
    if length < 3 or length % 2 == 0:
        raise ValueError(f"length must be odd and >= 3, got {length}")
    for p in ((length - 1) // 2, (length + 1) // 2):
        if gcd(p, length) == 1:
            return p
    raise NoValidRoot(f"no coprime root near L/2 for L={length}")


def sidelobe_residues(params, delay=0, offsets=None):
    """Centred residues ``<p(n - delay)>_L`` in ``[-(L-1)/2, (L-1)/2]``.

    By default evaluated for ``n = 0..L-1``; pass ``offsets`` to evaluate at
    explicit values of ``n - delay`` instead.
    """
    L, p = params.length, params.root
    if offsets is None:
        offsets = np.arange(L) - delay
    r = (p * np.asarray(offsets, dtype=np.int64)) % L
    return np.where(r > (L - 1) // 2, r - L, r)


# -- MS-QP --------------------------------------------------------------------


def _check_layout(spec):
    off = spec.offsets
    for m in range(1, len(off)):
        if off[m] < off[m - 1] + spec.lengths[m - 1]:
            raise ValueError("subbands overlap")


def msqp_spectrum(spec, phases=None):
    """Length-N spectrum (unitary per-subband ZC spectra, zero guards)."""
    _check_layout(spec)
    phases = spec.phases if phases is None else phases
    S = np.zeros(spec.total_len, dtype=complex)
    for zc, f, phi in zip(spec.subbands, spec.offsets, phases):
        S[f : f + zc.length] = np.exp(1j * phi) * np.fft.fft(zc_generate(zc)) / np.sqrt(zc.length)
    return S


def _subband_components(spec, phases=None):
    """(M, N) array whose rows are the per-subband time-domain components."""
    S = msqp_spectrum(spec, phases)
    N = spec.total_len
    out = np.zeros((spec.n_subbands, N), dtype=complex)
    for m, (zc, f) in enumerate(zip(spec.subbands, spec.offsets)):
        Sm = np.zeros(N, dtype=complex)
        Sm[f : f + zc.length] = S[f : f + zc.length]
        out[m] = np.sqrt(N) * np.fft.ifft(Sm)
    return out


def msqp_build(spec):
    """Time-domain MS-QP sequence of length ``spec.total_len``."""
    return np.sqrt(spec.total_len) * np.fft.ifft(msqp_spectrum(spec))


def msqp_build_interp(spec):
    """Same sequence as :func:`msqp_build`, evaluated from the closed-form
    Dirichlet-kernel interpolation of each ZC subsequence.  O(N * sum L_m);
    intended for cross-checking at small sizes.
    """
    _check_layout(spec)
    N = spec.total_len
    n = np.arange(N)[:, None]
    x = np.zeros(N, dtype=complex)
    for zc, f, phi in zip(spec.subbands, spec.offsets, spec.phases):
        L = zc.length
        l = np.arange(L)[None, :]
        d = n / N - l / L
        num = np.sin(L * np.pi * d)
        den = np.sin(np.pi * d)
        near = np.abs(den) < 1e-12
        kern = np.where(near, L, num / np.where(near, 1.0, den))
        kern = kern * np.exp(1j * np.pi * (L - 1) * d)
        inner = kern @ zc_generate(zc) / np.sqrt(L)
        x += np.exp(1j * (2 * np.pi * f * n[:, 0] / N + phi)) * inner
    return x / np.sqrt(N)


def subsequence_extract(spec, m):
    """Time-domain component of subband ``m`` (length N)."""
    if not 0 <= m < spec.n_subbands:
        raise ValueError(f"subband index {m} outside [0, {spec.n_subbands})")
    return _subband_components(spec)[m]


def _indices_to_phases(idx, alphabet):
    return tuple(alphabet[i] for i in idx)


def phase_rotation_search(spec, budget=2**20, seed=0, chunk=512):
    """Per-subband phases from ``spec.phase_alphabet`` minimizing the PAPR.

    Exhaustive when ``|alphabet|**M <= budget``, else ``budget`` seeded random
    assignments.  Ties go to the lexicographically smallest index list.
    Returns a tuple of phases.
    """
    alphabet = spec.phase_alphabet
    if not alphabet:
        raise ValueError("empty phase alphabet")
    M, A = spec.n_subbands, len(alphabet)
    # subbands are orthogonal, so the mean power does not depend on the phases
    # and minimizing the peak minimizes the PAPR
    comps = _subband_components(spec, phases=(0.0,) * M)
    rot = np.exp(1j * np.asarray(alphabet))

    uniform = np.allclose(np.angle(rot[1:] / rot[0]) % (2 * np.pi),
                          [2 * np.pi * k / A for k in range(1, A)]) if A > 1 else True
    exhaustive = A**M <= budget
    if exhaustive:
        # a global phase leaves the PAPR unchanged: pin subband 0 to index 0
        free = M - 1 if (uniform and M > 1) else M
        total = A**free

        def candidates(start, stop):
            k = np.arange(start, stop)
            digits = np.empty((len(k), free), dtype=np.int64)
            for j in range(free - 1, -1, -1):
                digits[:, j] = k % A
                k = k // A
            if free < M:
                digits = np.hstack([np.zeros((len(digits), 1), dtype=np.int64), digits])
            return digits
    else:
        rng = np.random.default_rng(seed)
        drawn = rng.integers(0, A, size=(budget, M))
        drawn[0] = 0
        total = budget

        def candidates(start, stop):
            return drawn[start:stop]

    best_peak, best_idx = np.inf, None
    for start in range(0, total, chunk):
        idx = candidates(start, min(start + chunk, total))
        x = rot[idx] @ comps
        peaks = np.max(x.real**2 + x.imag**2, axis=1)
        low = peaks.min()
        cand = min(tuple(r) for r in idx[peaks <= low * (1 + 1e-12)])
        if low < best_peak * (1 - 1e-12) or (low <= best_peak * (1 + 1e-12) and cand < best_idx):
            best_peak, best_idx = min(low, best_peak), cand
    return _indices_to_phases(best_idx, alphabet)


# -- DE-MS-QP -----------------------------------------------------------------


def time_extend(x, stream_index, extension):
    """Repeat ``x`` ``extension`` times, block ``g`` rotated by ``exp(j 2 pi g i / M')``."""
    x = np.asarray(x, dtype=complex)
    if not 0 <= stream_index < extension:
        raise ValueError(f"stream index {stream_index} outside [0, {extension})")
    g = np.arange(extension)[:, None]
    return (np.exp(2j * np.pi * g * stream_index / extension) * x[None, :]).ravel()


def _frame_spectrum(spec, data, data_scale=1.0):
    base = spec.base
    Mx = spec.extension
    if Mx > 1:
        if len(data) != base.n_subbands:
            raise ValueError(f"expected data for {base.n_subbands} subbands")
    Np = spec.frame_len
    S = np.zeros(Np, dtype=complex)
    for m, (zc, f, phi) in enumerate(zip(base.subbands, spec.ext_offsets, base.phases)):
        xm = time_extend(zc_generate(zc), 0, Mx)
        if Mx > 1:
            streams = np.asarray(data[m], dtype=complex)
            if streams.shape != (Mx - 1, zc.length):
                raise ValueError(
                    f"subband {m}: data shape {streams.shape}, expected {(Mx - 1, zc.length)}"
                )
            for i in range(1, Mx):
                xm = xm + data_scale * time_extend(streams[i - 1], i, Mx)
        Lp = zc.length * Mx
        S[f : f + Lp] = np.exp(1j * phi) * np.fft.fft(xm) / np.sqrt(Lp)
    # frame power equal to the MS-QP power: sensing gets 1/M' of it
    return S / np.sqrt(Mx)


def _check_symbols(spec, data):
    const = spec.constellation
    for block in data:
        arr = np.asarray(block, dtype=complex).ravel()
        dist = np.min(np.abs(arr[:, None] - const[None, :]), axis=1)
        if np.any(dist > 1e-9):
            raise ValueError("data symbols not drawn from the constellation")


def de_msqp_streams(spec, rng):
    """Random symbol indices, shape per subband ``(M'-1, L_m)``."""
    K = len(spec.constellation)
    return [rng.integers(0, K, size=(spec.extension - 1, L)) for L in spec.base.lengths]


def de_msqp_build(spec, data=None, data_scale=1.0, with_cp=True):
    """Build one DE-MS-QP frame.

    ``data`` holds, per subband, an array of shape ``(M'-1, L_m)`` of
    constellation symbols (may be omitted when ``M' == 1``).  ``data_scale``
    scales the embedded streams (0 leaves the bare repeated sensing part).
    """
    if spec.extension > 1:
        if data is None:
            raise ValueError("data symbols required when extension > 1")
        _check_symbols(spec, data)
    Np = spec.frame_len
    frame = np.sqrt(Np) * np.fft.ifft(_frame_spectrum(spec, data, data_scale))
    if with_cp and spec.cp_len:
        frame = np.concatenate([frame[-spec.cp_len :], frame])
    return frame


def spectral_efficiency(spec):
    """Data bits per second per hertz of a DE-MS-QP frame."""
    Np, M = spec.frame_len, spec.base.n_subbands
    Mx = spec.extension
    return (Np - M * spec.guard_len_ext) / (Np + spec.cp_len) * (Mx - 1) / Mx * spec.bits_per_symbol


def occupied_data_bins(spec, rng=None):
    """Count frame bins carrying data energy, by building a frame with a
    silent sensing part.  Used to cross-check :func:`spectral_efficiency`.
    """
    if spec.extension == 1:
        return 0
    rng = np.random.default_rng(0) if rng is None else rng
    idx = de_msqp_streams(spec, rng)
    data = [spec.constellation[i] for i in idx]
    full = np.fft.fft(de_msqp_build(spec, data, with_cp=False))
    sense = np.fft.fft(de_msqp_build(spec, data, data_scale=0.0, with_cp=False))
    return int(np.count_nonzero(np.abs(full - sense) > 1e-9))


# -- chirp baseline -----------------------------------------------------------


def lfm_generate(spec):
    """Unit-modulus linear chirp sweeping ``[-B/2, B/2]`` over the pulse."""
    n_samp = int(round(spec.duration_s / spec.sample_period_s))
    if n_samp < 1:
        raise ValueError("pulse shorter than one sample")
    t = np.arange(n_samp) * spec.sample_period_s
    k = spec.bandwidth_hz / spec.duration_s
    return np.exp(1j * np.pi * (k * t**2 - spec.bandwidth_hz * t))
