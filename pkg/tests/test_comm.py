import numpy as np
import pytest

from thzjrc.comm import (
    BerReport,
    ber_count,
    bits_to_symbols,
    channel_estimate,
    equalize,
    equalize_and_demap,
    extract_streams,
    ml_detect,
    qpsk_ber_theory,
    sensing_comb,
    strip_cp,
    symbols_to_bits,
)
from thzjrc.dsp import complex_noise
from thzjrc.waveforms import QPSK, DeMsQpSpec, MsQpSpec, de_msqp_build, de_msqp_streams


def make_spec(M=3, L=31, guard=4, ext=4, cp=0):
    return DeMsQpSpec(MsQpSpec.uniform(M, L, guard_len=guard), extension=ext, cp_len=cp)


def random_frame(spec, rng, **kw):
    idx = de_msqp_streams(spec, rng)
    return idx, de_msqp_build(spec, [spec.constellation[i] for i in idx], **kw)


def ideal_gains(spec):
    return [np.ones_like(s) for s in extract_streams(np.zeros(spec.frame_len), spec).streams]


def test_sensing_stream_equals_comb(rng):
    spec = make_spec()
    _, frame = random_frame(spec, rng)
    grid = extract_streams(frame, spec)
    for Ym, ref in zip(grid.streams, sensing_comb(spec)):
        assert np.allclose(Ym[0], ref)


def test_zero_data_leaves_data_bins_empty(rng):
    spec = make_spec()
    _, frame = random_frame(spec, rng, data_scale=0.0)
    for Ym in extract_streams(frame, spec).streams:
        assert np.abs(Ym[1:]).max() < 1e-9


def test_extraction_preserves_energy(rng):
    """Bins outside the guards hold all energy; scaling is per-subband Parseval."""
    spec = make_spec(ext=2)
    _, frame = random_frame(spec, rng)
    grid = extract_streams(frame, spec)
    Np = spec.frame_len
    for Ym, Lp in zip(grid.streams, spec.ext_lengths):
        e_bins = np.sum(np.abs(Ym) ** 2) * Np / Lp
        assert e_bins > 0
    total = sum(np.sum(np.abs(Ym) ** 2) * Np / Lp for Ym, Lp in zip(grid.streams, spec.ext_lengths))
    assert np.isclose(total / Np, np.sum(np.abs(frame) ** 2))


def test_extract_stack_of_frames(rng):
    spec = make_spec(ext=2)
    frames = np.stack([random_frame(spec, rng)[1] for _ in range(3)])
    grid = extract_streams(frames, spec)
    assert grid.streams[0].shape == (3, 2, 31)
    assert np.allclose(grid.streams[1][2], extract_streams(frames[2], spec).streams[1])


def test_extract_length_check():
    spec = make_spec()
    with pytest.raises(ValueError):
        extract_streams(np.ones(spec.frame_len + 1), spec)


def test_strip_cp(rng):
    spec = make_spec(cp=7)
    _, frame = random_frame(spec, rng)
    body = strip_cp(frame, spec)
    assert body.shape[-1] == spec.frame_len
    assert np.allclose(frame[:7], body[-7:])
    with pytest.raises(ValueError):
        strip_cp(body, spec)


def test_flat_gain_is_estimated_exactly(rng):
    spec = make_spec()
    _, frame = random_frame(spec, rng)
    h = 0.7 * np.exp(0.4j)
    for H in channel_estimate(extract_streams(h * frame, spec), spec):
        assert np.allclose(H, h)


def test_unit_channel_gives_unit_gains(rng):
    spec = make_spec(ext=2)
    _, frame = random_frame(spec, rng)
    for H in channel_estimate(extract_streams(frame, spec), spec):
        assert np.allclose(H, 1.0)


def test_estimate_error_variance_at_20db(rng):
    """LS estimate error on comb bins has variance sigma_bin^2 / |ref|^2."""
    spec = make_spec(M=2, L=101, ext=2)
    _, frame = random_frame(spec, rng)
    sigma2 = np.mean(np.abs(frame) ** 2) / 100
    trials = 200
    noise = complex_noise(rng, (trials, spec.frame_len), sigma2)
    grid = extract_streams(frame + noise, spec)
    gains = channel_estimate(grid, spec)
    for H, ref, Lp in zip(gains, sensing_comb(spec), spec.ext_lengths):
        err = H[:, 0, :] - 1.0
        expected = sigma2 * Lp / np.abs(ref) ** 2
        ratio = np.mean(np.abs(err) ** 2) / np.mean(expected)
        assert 0.5 < ratio < 2.0


@pytest.mark.parametrize("ext", [2, 3, 4])
@pytest.mark.parametrize("M", [1, 2, 4])
def test_noiseless_loopback(M, ext):
    rng = np.random.default_rng(100 * M + ext)
    spec = make_spec(M=M, ext=ext, cp=5)
    idx, frame = random_frame(spec, rng)
    grid = extract_streams(strip_cp(frame, spec), spec)
    dec = equalize_and_demap(grid, channel_estimate(grid, spec), spec)
    for a, b in zip(idx, dec):
        assert np.array_equal(a, b)


def test_loopback_through_frequency_flat_gain(rng):
    spec = make_spec(ext=4)
    idx, frame = random_frame(spec, rng)
    grid = extract_streams(-0.3j * frame, spec)
    dec = equalize_and_demap(grid, channel_estimate(grid, spec), spec)
    assert all(np.array_equal(a, b) for a, b in zip(idx, dec))


def test_single_bin_fault_stays_in_its_stream(rng):
    spec = make_spec(ext=4)
    _, frame = random_frame(spec, rng)
    gains = ideal_gains(spec)
    clean = equalize(extract_streams(frame, spec), gains, spec)
    grid = extract_streams(frame, spec)
    grid.streams[1][2, 5] += 3.0
    hit = equalize(grid, gains, spec)
    for m, (a, b) in enumerate(zip(clean, hit)):
        diff = np.abs(a - b).max(axis=-1)
        if m == 1:
            assert diff[1] > 1e-3
            assert np.all(np.delete(diff, 1) < 1e-12)
        else:
            assert np.all(diff < 1e-12)


def test_missing_phase_correction_breaks_detection(rng):
    spec = make_spec(ext=4)
    idx, frame = random_frame(spec, rng)
    grid = extract_streams(frame, spec)
    dec = equalize_and_demap(grid, ideal_gains(spec), spec, phase_correction=False)
    wrong = sum(np.count_nonzero(a != b) for a, b in zip(idx, dec))
    assert wrong > 0


def _ber_at(ebn0_db, rng, min_errors=100, max_frames=20000):
    """Measured BER with ideal gains; Eb/N0 from the equalized noise variance."""
    spec = make_spec(M=4, L=251, guard=8, ext=4)
    idx, frame = random_frame(spec, rng)
    gains = ideal_gains(spec)
    probe = complex_noise(np.random.default_rng(0), (64, spec.frame_len), 1.0)
    var_unit = np.mean(np.concatenate(
        [np.abs(z.ravel()) ** 2 for z in equalize(extract_streams(probe, spec), gains, spec)]))
    es_n0 = 10 ** (ebn0_db / 10) * spec.bits_per_symbol
    sigma2 = 1.0 / (es_n0 * var_unit)
    tx_bits = np.concatenate([symbols_to_bits(i, 2) for i in idx])
    rep = BerReport(0, 0)
    frames, batch = 0, 100
    while rep.bits_errored < min_errors and frames < max_frames:
        noise = complex_noise(rng, (batch, spec.frame_len), sigma2)
        dec = equalize_and_demap(extract_streams(frame + noise, spec), gains, spec)
        rx_bits = np.concatenate([symbols_to_bits(d, 2).reshape(batch, -1) for d in dec], axis=1)
        rep = rep + ber_count(np.tile(tx_bits, (batch, 1)), rx_bits)
        frames += batch
    return rep


@pytest.mark.slow
@pytest.mark.parametrize("ebn0_db", [4.0, 7.0, 10.0])
def test_qpsk_ber_matches_theory(ebn0_db):
    rep = _ber_at(ebn0_db, np.random.default_rng(int(ebn0_db)))
    assert rep.bits_errored >= 100
    theory = qpsk_ber_theory(ebn0_db)
    assert theory / 3 <= rep.ber <= 3 * theory


def test_qpsk_ber_7db_fast():
    rep = _ber_at(7.0, np.random.default_rng(7), min_errors=100, max_frames=200)
    assert rep.bits_errored >= 100
    assert qpsk_ber_theory(7.0) / 3 <= rep.ber <= 3 * qpsk_ber_theory(7.0)


def test_qpsk_theory_value():
    assert np.isclose(qpsk_ber_theory(7.0), 7.7e-4, rtol=0.02)
    assert np.isclose(qpsk_ber_theory(0.0), 0.0786, rtol=0.01)


def test_ml_detect_gray_qpsk():
    assert np.array_equal(ml_detect(QPSK, QPSK), np.arange(4))
    z = QPSK * 0.4 + 0.05
    assert np.array_equal(ml_detect(z, QPSK), np.arange(4))
    # neighbours differ by one bit
    for a in range(4):
        for b in range(4):
            if np.isclose(abs(QPSK[a] - QPSK[b]), np.sqrt(2)):
                assert bin(a ^ b).count("1") == 1


def test_bit_packing_round_trip(rng):
    idx = rng.integers(0, 16, size=100)
    bits = symbols_to_bits(idx, 4)
    assert bits.size == 400
    assert np.array_equal(bits_to_symbols(bits, 4), idx)
    assert np.array_equal(symbols_to_bits([2], 2), [1, 0])


def test_ber_count_examples():
    assert ber_count([0, 1, 1], [0, 1, 1]) == BerReport(3, 0)
    rep = ber_count([0, 1, 1, 0], [1, 1, 0, 0])
    assert rep.bits_errored == 2 and rep.ber == 0.5
    assert ber_count([], []).ber == 0.0
    with pytest.raises(ValueError):
        ber_count([0, 1], [0])
    with pytest.raises(ValueError):
        BerReport(2, 3)
