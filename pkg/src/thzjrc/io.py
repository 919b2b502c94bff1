"""File formats: waveform dumps, range-Doppler maps, demodulated bits and
BER summaries.

Waveform binary layout (little-endian)::

    offset  size  field
    0       4     magic b"JRCW"
    4       4     uint32 format version (1)
    8       8     uint64 sample count n
    16      8     float64 sample period [s]
    24      16*n  float64 pairs (re, im)
"""

import csv
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "WAVEFORM_MAGIC",
    "write_waveform",
    "read_waveform",
    "write_waveform_csv",
    "read_waveform_csv",
    "write_rdm_csv",
    "write_rdm_npy",
    "write_bits",
    "read_bits",
    "write_ber_csv",
    "read_ber_csv",
]

WAVEFORM_MAGIC = b"JRCW"
_HEADER = struct.Struct("<4sIQd")


def write_waveform(path, samples, sample_period_s):
    samples = np.asarray(samples, dtype="<c16").ravel()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(WAVEFORM_MAGIC, 1, samples.size, float(sample_period_s)))
        fh.write(samples.view("<f8").tobytes())


def read_waveform(path):
    """Return ``(samples, sample_period_s)``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n, period = _HEADER.unpack_from(data)
    if magic != WAVEFORM_MAGIC or version != 1:
        raise ValueError(f"{path}: not a version-1 waveform file")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * n:
        raise ValueError(f"{path}: expected {n} samples, found {body.size / 2}")
    return body.view("<c16").astype(complex), period


def write_waveform_csv(path, samples):
    samples = np.asarray(samples, dtype=complex).ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for i, s in enumerate(samples):
            w.writerow([i, repr(float(s.real)), repr(float(s.imag))])


def read_waveform_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])


def write_rdm_csv(path, rd_map):
    """One row per cell: ``n, k, power``."""
    power = rd_map.power if hasattr(rd_map, "power") else np.abs(rd_map) ** 2
    n, k = np.indices(power.shape)
    with open(path, "w", newline="") as fh:
        fh.write("n,k,power\n")
        np.savetxt(fh, np.column_stack([n.ravel(), k.ravel(), power.ravel()]),
                   fmt=["%d", "%d", "%.17g"], delimiter=",")


def write_rdm_npy(path, rd_map):
    """Complex cell matrix in ``.npy`` format."""
    cells = rd_map.cells if hasattr(rd_map, "cells") else np.asarray(rd_map)
    # file handle keeps the exact path (np.save would append ".npy")
    with open(path, "wb") as fh:
        np.save(fh, cells)


def write_bits(path, bits):
    """uint64 bit count followed by MSB-first packed bytes."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", bits.size))
        fh.write(np.packbits(bits).tobytes())


def read_bits(path):
    data = Path(path).read_bytes()
    (n,) = struct.unpack_from("<Q", data)
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8, offset=8))[:n]


_BER_FIELDS = ["snr_db", "bits", "errors", "ber"]


def write_ber_csv(path, rows):
    """``rows`` of ``(snr_db, BerReport)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_BER_FIELDS)
        for snr, rep in rows:
            w.writerow([repr(float(snr)), rep.bits_total, rep.bits_errored, repr(rep.ber)])


def read_ber_csv(path):
    with open(path, newline="") as fh:
        return [
            {"snr_db": float(r["snr_db"]), "bits": int(r["bits"]), "errors": int(r["errors"]),
             "ber": float(r["ber"])}
            for r in csv.DictReader(fh)
        ]
