"""Numerical kernels shared by the waveform, channel and receiver code.

All routines operate on 1-D complex numpy arrays.  Transforms follow the
convention ``X[k] = sum_n x[n] exp(-j 2 pi k n / size)`` with the ``1/size``
factor carried by the inverse.
"""

import numpy as np

__all__ = [
    "dft",
    "idft",
    "cyclic_correlate",
    "interp_filter",
    "upsample_filter",
    "downsample",
    "papr_db",
    "awgn",
    "complex_noise",
]


def _as_complex(x):
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D sequence, got shape {x.shape}")
    return x


def dft(x, size=None):
    """Forward DFT of ``x`` zero-padded to ``size`` points (unnormalized)."""
    x = _as_complex(x)
    if size is None:
        size = len(x)
    if size <= 0:
        raise ValueError("transform size must be positive")
    if size < len(x):
        raise ValueError(f"transform size {size} shorter than input ({len(x)})")
    return np.fft.fft(x, n=size)


def idft(X, size=None):
    """Inverse of :func:`dft`; carries the ``1/size`` normalization."""
    X = _as_complex(X)
    if size is None:
        size = len(X)
    if size <= 0:
        raise ValueError("transform size must be positive")
    if size < len(X):
        raise ValueError(f"transform size {size} shorter than input ({len(X)})")
    return np.fft.ifft(X, n=size)


def cyclic_correlate(y, x):
    """Cyclic cross-correlation ``r[n] = sum_i y[i] conj(x[(i - n) mod N])``.

    Works along the last axis, so ``y`` may be a stack of blocks sharing the
    reference ``x``.
    """
    y = np.asarray(y, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1:
        raise ValueError("reference must be 1-D")
    if y.shape[-1] != x.shape[-1]:
        raise ValueError(f"length mismatch: {y.shape[-1]} vs {x.shape[-1]}")
    return np.fft.ifft(np.fft.fft(y, axis=-1) * np.conj(np.fft.fft(x)), axis=-1)


def interp_filter(factor, span=64, beta=8.0):
    """Kaiser-windowed sinc interpolation filter for an upsampling ``factor``.

    The filter spans ``span`` low-rate samples (``span * factor + 1`` taps),
    has its cutoff at ``1/(2*factor)`` of the high rate and unit gain at the
    centre tap, so it passes the original samples through unchanged.
    """
    half = span * factor // 2
    n = np.arange(-half, half + 1)
    return np.sinc(n / factor) * np.kaiser(len(n), beta)


def upsample_filter(x, factor, span=64, beta=8.0):
    """Zero-stuff ``x`` by ``factor`` and low-pass interpolate.

    Filtering is circular (the input is treated as one period of a periodic
    signal), which matches the cyclic delay model used downstream.
    """
    x = _as_complex(x)
    if factor < 1 or int(factor) != factor:
        raise ValueError("upsampling factor must be a positive integer")
    factor = int(factor)
    if factor == 1:
        return x.copy()
    up = np.zeros(len(x) * factor, dtype=complex)
    up[::factor] = x
    h = interp_filter(factor, span, beta)
    # wrap the centred kernel onto the circular grid
    kernel = np.zeros(len(up), dtype=float)
    half = len(h) // 2
    np.add.at(kernel, np.arange(-half, half + 1) % len(up), h)
    return np.fft.ifft(np.fft.fft(up) * np.fft.fft(kernel))


def downsample(x, factor, offset=0):
    """Keep every ``factor``-th sample starting at ``offset``."""
    x = _as_complex(x)
    if factor < 1:
        raise ValueError("decimation factor must be a positive integer")
    if not 0 <= offset < factor:
        raise ValueError(f"offset {offset} outside [0, {factor})")
    return x[offset::factor].copy()


def papr_db(x):
    """Peak-to-average power ratio of ``x`` in dB."""
    p = np.abs(_as_complex(x)) ** 2
    if len(p) == 0 or not np.any(p > 0):
        raise ValueError("PAPR undefined for an empty or all-zero sequence")
    return 10 * np.log10(p.max() / p.mean())


def complex_noise(rng, shape, variance):
    """Circularly symmetric Gaussian samples of total ``variance``."""
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def awgn(x, snr_db, seed=None):
    """Add complex white Gaussian noise at ``snr_db`` relative to the mean power of ``x``.

    ``snr_db=None`` or ``inf`` disables the noise.  ``seed`` may be an int or a
    ``numpy.random.Generator``.
    """
    x = np.asarray(x, dtype=complex)
    if snr_db is None or np.isposinf(snr_db):
        return x.copy()
    power = np.mean(np.abs(x) ** 2)
    if power <= 0:
        raise ValueError("input has zero power; SNR is undefined")
    rng = np.random.default_rng(seed)
    return x + complex_noise(rng, x.shape, power / 10 ** (snr_db / 10))
