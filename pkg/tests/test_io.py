import numpy as np
import pytest

from thzjrc import io as jrc_io
from thzjrc.comm import BerReport
from thzjrc.radar import RangeDopplerMap


def test_waveform_binary_round_trip(tmp_path, rng):
    x = rng.standard_normal(257) + 1j * rng.standard_normal(257)
    p = tmp_path / "w.bin"
    jrc_io.write_waveform(p, x, 1e-10)
    y, ts = jrc_io.read_waveform(p)
    assert np.array_equal(x, y) and ts == 1e-10
    raw = p.read_bytes()
    assert raw[:4] == b"JRCW" and len(raw) == 24 + 16 * 257


def test_waveform_binary_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ValueError):
        jrc_io.read_waveform(p)
    p.write_bytes(b"JR")
    with pytest.raises(ValueError):
        jrc_io.read_waveform(p)
    jrc_io.write_waveform(p, np.ones(4), 1.0)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError):
        jrc_io.read_waveform(p)


def test_waveform_csv_round_trip(tmp_path, rng):
    x = np.exp(2j * np.pi * rng.random(50))
    p = tmp_path / "w.csv"
    jrc_io.write_waveform_csv(p, x)
    assert p.read_text().splitlines()[0] == "index,re,im"
    assert np.array_equal(jrc_io.read_waveform_csv(p), x)


def test_rdm_csv(tmp_path):
    cells = np.arange(6).reshape(3, 2) * (1 + 1j)
    p = tmp_path / "m.csv"
    jrc_io.write_rdm_csv(p, RangeDopplerMap(cells))
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    assert data.shape == (6, 3)
    assert np.allclose(data[:, 2], (np.abs(cells) ** 2).ravel())
    assert np.array_equal(data[3, :2], [1, 1])


def test_rdm_npy(tmp_path, rng):
    cells = rng.standard_normal((4, 5)) + 0j
    p = tmp_path / "m.npy"
    jrc_io.write_rdm_npy(p, RangeDopplerMap(cells))
    assert np.array_equal(np.load(p), cells)


@pytest.mark.parametrize("n", [0, 1, 7, 8, 1001])
def test_bits_round_trip(tmp_path, rng, n):
    bits = rng.integers(0, 2, n).astype(np.uint8)
    p = tmp_path / "b.bin"
    jrc_io.write_bits(p, bits)
    assert p.stat().st_size == 8 + (n + 7) // 8
    assert np.array_equal(jrc_io.read_bits(p), bits)


def test_bits_msb_first(tmp_path):
    p = tmp_path / "b.bin"
    jrc_io.write_bits(p, [1, 0, 0, 0, 0, 0, 0, 1, 1])
    assert p.read_bytes()[8:] == bytes([0x81, 0x80])


def test_ber_csv_round_trip(tmp_path):
    rows = [(float("inf"), BerReport(100, 0)), (7.0, BerReport(2000, 3))]
    p = tmp_path / "ber.csv"
    jrc_io.write_ber_csv(p, rows)
    back = jrc_io.read_ber_csv(p)
    assert back[0]["snr_db"] == float("inf") and back[0]["ber"] == 0.0
    assert back[1] == {"snr_db": 7.0, "bits": 2000, "errors": 3, "ber": 0.0015}
