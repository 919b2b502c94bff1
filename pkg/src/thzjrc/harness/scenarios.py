"""Scenario pipelines.

Every scenario is a function ``(cfg, pool) -> list[ResultRow]``.  Monte Carlo
work is expressed as a picklable per-trial function of ``(context, trial)``
mapped over trial indices by ``pool``; the trial's random stream comes from
``(base_seed, trial)`` only, so every sweep point and every waveform variant
sees the same targets and noise draws for a given trial.
"""

from dataclasses import dataclass
from functools import partial

import numpy as np

from ..channel import Target, propagate_cpi
from ..comm import (
    ber_count,
    channel_estimate,
    equalize_and_demap,
    extract_streams,
    strip_cp,
    symbols_to_bits,
)
from ..dsp import complex_noise, cyclic_correlate, papr_db
from ..radar import (
    cfar_floor,
    correlate_subblocks,
    de_msqp_split,
    match_targets,
    rdm,
    strongest_cell,
    subband_receive,
    subband_sample,
    temp_detect,
)
from ..waveforms import (
    DeMsQpSpec,
    de_msqp_build,
    de_msqp_streams,
    lfm_generate,
    msqp_build,
    phase_rotation_search,
    zc_generate,
)
from .config import build_waveform, channel_config
from .results import ResultRow, rate_halfwidth

Z95 = 1.96


def trial_rng(base_seed, trial):
    return np.random.default_rng(np.random.SeedSequence([base_seed, trial]))


# -- waveform preparation -----------------------------------------------------


@dataclass
class Prepared:
    """Transmit-side state shared by all trials of one waveform variant."""

    name: str
    kind: str
    spec: object
    sample_period_s: float
    reference: np.ndarray
    subband_sampling: bool = False

    @property
    def block_len(self):
        return self.reference.shape[-1]


def prepare(w, cfg):
    kind, spec, ts = build_waveform(w, cfg)
    if kind in ("msqp", "de-msqp") and w.phase_search:
        base = spec if kind == "msqp" else spec.base
        base = base.with_phases(phase_rotation_search(base, seed=cfg.base_seed))
        spec = base if kind == "msqp" else DeMsQpSpec(
            base, spec.extension, spec.guard_len_ext, spec.cp_len, spec.constellation
        )
    if kind == "msqp":
        ref = msqp_build(spec)
    elif kind == "de-msqp":
        ref = msqp_build(spec.base)
    elif kind == "zc":
        ref = zc_generate(spec)
    else:
        ref = lfm_generate(spec)
    return Prepared(w.name, kind, spec, ts, ref, kind == "msqp" and w.subband_sampling)


def draw_targets(cfg, rng, velocity=None):
    ch = cfg.channel
    out = []
    for _ in range(ch.n_targets):
        d = rng.uniform(*ch.range_m)
        u = rng.uniform(*ch.velocity_mps) if velocity is None else velocity
        out.append(Target(d, u))
    return out


def sensing_map(prep, cfg, targets, snr_db, rng):
    """Range-Doppler map of one coherent processing interval."""
    ch = channel_config(cfg, snr_db, targets, prep.sample_period_s)
    Q, N = cfg.blocks, prep.block_len
    if prep.kind == "de-msqp":
        spec = prep.spec
        # Q' frames of M' subblocks each
        n_frames = max(1, Q // spec.extension)
        frames = np.stack([
            de_msqp_build(spec, [spec.constellation[i] for i in de_msqp_streams(spec, rng)],
                          with_cp=False)
            for _ in range(n_frames)
        ])
        y = propagate_cpi(frames, ch, n_frames, seed=rng)
        blocks = de_msqp_split(y, spec).reshape(-1, N)
    else:
        blocks = propagate_cpi(prep.reference, ch, Q, seed=rng)
        if prep.subband_sampling:
            blocks = subband_receive(blocks, prep.spec)
    corr = correlate_subblocks(blocks, prep.reference)
    return rdm(corr, cfg.cpi.pad_factor, prep.sample_period_s, ch.carrier_hz, block_stride=N)


def _cyclic_offset(a, b, period):
    return (a - b + period / 2) % period - period / 2


def cell_errors(rd_map, cell, target):
    """Absolute range/velocity errors of ``cell`` in metres, m/s and bins."""
    n, k = cell
    res_r, res_v = rd_map.range_resolution, rd_map.velocity_resolution
    dn = _cyclic_offset(n, target.range_m / res_r, rd_map.n_range)
    dk = _cyclic_offset(k, target.velocity_mps / res_v, rd_map.n_doppler)
    return abs(dn) * res_r, abs(dk) * res_v, abs(dn), abs(dk)


# -- trial functions (module level so worker processes can pickle them) ------


def _estimation_trial(ctx, trial):
    cfg, preps, snrs = ctx
    rng = trial_rng(cfg.base_seed, trial)
    targets = draw_targets(cfg, rng)
    noise_seed = rng.integers(2**63)
    out = np.empty((len(preps), len(snrs), 4))
    for i, prep in enumerate(preps):
        for j, snr in enumerate(snrs):
            m = sensing_map(prep, cfg, targets, snr, np.random.default_rng([noise_seed, j]))
            out[i, j] = cell_errors(m, strongest_cell(m), targets[0])
    return out


def _false_alarm_trial(ctx, trial):
    cfg, preps, thresholds, snr = ctx
    rng = trial_rng(cfg.base_seed, trial)
    targets = draw_targets(cfg, rng, velocity=None)
    noise_seed = rng.integers(2**63)
    # per variant and threshold: (false alarm in CPI, all targets detected)
    out = np.zeros((len(preps), len(thresholds), 2))
    for i, prep in enumerate(preps):
        m = sensing_map(prep, cfg, targets, snr, np.random.default_rng(noise_seed))
        floor = cfar_floor(m, cfg.cfar.build())
        for j, t in enumerate(thresholds):
            report = temp_detect(m, floor, cfg.cfar.build(t))
            hits, fas = match_targets(report, targets, m)
            out[i, j] = (len(fas) > 0, len(hits) == len(targets))
    return out


def _loopback_trial(ctx, trial):
    cfg, preps, snrs = ctx
    rng = trial_rng(cfg.base_seed, trial)
    out = np.zeros((len(preps), len(snrs), 2), dtype=np.int64)
    for i, prep in enumerate(preps):
        spec = prep.spec
        idx = de_msqp_streams(spec, rng)
        frame = de_msqp_build(spec, [spec.constellation[s] for s in idx])
        tx_bits = symbols_to_bits(np.concatenate([s.ravel() for s in idx]), spec.bits_per_symbol)
        noise = complex_noise(rng, frame.shape, 1.0)
        power = np.mean(np.abs(frame) ** 2)
        for j, snr in enumerate(snrs):
            y = frame if snr is None else frame + noise * np.sqrt(power / 10 ** (snr / 10))
            grid = extract_streams(strip_cp(y, spec), spec)
            dec = equalize_and_demap(grid, channel_estimate(grid, spec), spec)
            rx_bits = symbols_to_bits(np.concatenate([d.ravel() for d in dec]), spec.bits_per_symbol)
            rep = ber_count(tx_bits, rx_bits)
            out[i, j] = (rep.bits_total, rep.bits_errored)
    return out


def _xcorr_trial(ctx, trial):
    cfg, preps = ctx
    rng = trial_rng(cfg.base_seed, trial)
    rows = []
    for prep in preps:
        x = prep.reference / np.sqrt(np.mean(np.abs(prep.reference) ** 2))
        sym = np.exp(1j * (np.pi / 4 + np.pi / 2 * rng.integers(0, 4, size=x.shape)))
        rows.append(np.abs(cyclic_correlate(sym, x)))
    return rows


# -- scenarios ----------------------------------------------------------------


def _sweep_snrs(cfg):
    if cfg.sweep.snr_db:
        return list(cfg.sweep.snr_db)
    return [cfg.channel.snr_db]


def _snr_value(snr):
    return float("inf") if snr is None else float(snr)


def run_papr(cfg, pool):
    rows = []
    for w in cfg.waveforms:
        kind, spec, _ = build_waveform(w, cfg)
        row = partial(ResultRow, cfg.scenario, w.name, "none", 0.0, trials=1, seed=cfg.base_seed)
        if kind == "msqp":
            rows.append(row(metric="papr_unrotated_db", value=papr_db(msqp_build(spec))))
            phases = phase_rotation_search(spec, seed=cfg.base_seed)
            rows.append(row(metric="papr_searched_db", value=papr_db(msqp_build(spec.with_phases(phases)))))
        elif kind == "de-msqp":
            rng = trial_rng(cfg.base_seed, 0)
            vals = [
                papr_db(de_msqp_build(spec, [spec.constellation[i] for i in de_msqp_streams(spec, rng)]))
                for _ in range(cfg.trials)
            ]
            rows.append(ResultRow(cfg.scenario, w.name, "none", 0.0, "papr_mean_db", float(np.mean(vals)),
                                  cfg.trials, cfg.base_seed))
        else:
            prep = prepare(w, cfg)
            rows.append(row(metric="papr_db", value=papr_db(prep.reference)))
    return rows


def sidelobe_geometry(rx, ref, rel_db=-20.0, radius=40):
    """Peak location and sidelobe spread of a cyclic correlation.

    Returns ``(peak_lag, max_distance, far_level_db)``: the largest cyclic
    distance from the peak of any lag within ``rel_db`` of the peak, and the
    strongest lag beyond ``radius`` relative to the peak.
    """
    p = np.abs(cyclic_correlate(rx, ref)) ** 2
    n = len(p)
    peak = int(np.argmax(p))
    dist = np.abs(_cyclic_offset(np.arange(n), peak, n))
    strong = p >= p[peak] * 10 ** (rel_db / 10)
    far = dist > radius
    far_db = 10 * np.log10(p[far].max() / p[peak]) if far.any() else -np.inf
    return peak, float(dist[strong].max()), float(far_db)


def run_root_design(cfg, pool):
    """Correlation geometry of each subband under a Doppler rotation.

    The composite sequence is rotated by ``v*N`` cycles per period and each
    subband is correlated against its own reference at the subband's native
    sample rate, where distances are counted in subband samples.
    """
    rows = []
    vls = cfg.sweep.doppler_vl or [0.4]
    radius = cfg.cfar.temp_radius
    for w in cfg.waveforms:
        prep = prepare(w, cfg)
        if prep.kind != "msqp":
            continue
        spec, x = prep.spec, prep.reference
        N = spec.total_len
        refs = [r[0] for r in subband_sample(x, spec)]
        for vl in vls:
            xd = x * np.exp(2j * np.pi * vl * np.arange(N) / N)
            geo = [sidelobe_geometry(r[0], ref, radius=radius) for r, ref in zip(subband_sample(xd, spec), refs)]
            row = partial(ResultRow, cfg.scenario, w.name, "doppler_vl", float(vl), trials=1, seed=cfg.base_seed)
            rows.append(row(metric="max_sidelobe_distance", value=max(g[1] for g in geo)))
            rows.append(row(metric="far_sidelobe_db", value=max(g[2] for g in geo)))
    return rows


def run_false_alarm(cfg, pool):
    preps = [prepare(w, cfg) for w in cfg.waveforms]
    thresholds = cfg.sweep.threshold_db or [cfg.cfar.threshold_db]
    snr = _sweep_snrs(cfg)[0]
    res = np.array(pool(partial(_false_alarm_trial, (cfg, preps, thresholds, snr)), range(cfg.trials)))
    n = cfg.trials
    hw = rate_halfwidth(n)
    rows = []
    for i, prep in enumerate(preps):
        for j, t in enumerate(thresholds):
            row = partial(ResultRow, cfg.scenario, prep.name, "threshold_db", float(t), trials=n, seed=cfg.base_seed)
            rows.append(row(metric="false_alarm_rate", value=float(res[:, i, j, 0].mean())))
            rows.append(row(metric="false_alarm_rate_ci95", value=hw))
            rows.append(row(metric="detection_rate", value=float(res[:, i, j, 1].mean())))
    return rows


_ESTIMATION_METRICS = ("range_error_m", "velocity_error_mps", "range_error_bins", "velocity_error_bins")


def run_estimation(cfg, pool):
    preps = [prepare(w, cfg) for w in cfg.waveforms]
    snrs = _sweep_snrs(cfg)
    res = np.array(pool(partial(_estimation_trial, (cfg, preps, snrs)), range(cfg.trials)))
    return _error_rows(cfg, preps, "snr_db", [_snr_value(s) for s in snrs], res)


def _error_rows(cfg, preps, sweep_var, values, res):
    n = res.shape[0]
    rows = []
    for i, prep in enumerate(preps):
        for j, val in enumerate(values):
            row = partial(ResultRow, cfg.scenario, prep.name, sweep_var, float(val), trials=n, seed=cfg.base_seed)
            for c, metric in enumerate(_ESTIMATION_METRICS):
                errs = res[:, i, j, c]
                rows.append(row(metric="mean_" + metric, value=float(errs.mean())))
                sem = errs.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
                rows.append(row(metric="mean_" + metric + "_ci95", value=float(Z95 * sem)))
    return rows


def run_tradeoff(cfg, pool):
    """Sensing error versus extension factor, one variant per SNR."""
    exts = cfg.sweep.extension or [w.extension for w in cfg.waveforms]
    snrs = _sweep_snrs(cfg)
    rows = []
    for w in cfg.waveforms:
        preps = [prepare(w.model_copy(update={"kind": "de-msqp", "extension": e}), cfg) for e in exts]
        res = np.array(pool(partial(_estimation_trial, (cfg, preps, snrs)), range(cfg.trials)))
        # res: (trials, extension, snr, metric); report one variant per SNR
        base = w.label or f"de-msqp-M{w.n_subbands}-L{w.length}"
        for j, snr in enumerate(snrs):
            variant = Prepared(f"{base}-snr{_snr_value(snr):g}", "de-msqp", None, 0.0, np.zeros(1))
            rows += _error_rows(cfg, [variant], "extension", exts, res[:, None, :, j, :])
    return rows


def run_xcorr(cfg, pool):
    preps = [prepare(w, cfg) for w in cfg.waveforms]
    per_trial = pool(partial(_xcorr_trial, (cfg, preps)), range(cfg.trials))
    rows = []
    for i, prep in enumerate(preps):
        mags = np.array([t[i] for t in per_trial])
        N = mags.shape[1]
        row = partial(ResultRow, cfg.scenario, prep.name, "block_len", float(N), trials=cfg.trials, seed=cfg.base_seed)
        rows.append(row(metric="max_lag_mean_abs_xcorr", value=float(mags.mean(axis=0).max())))
        rows.append(row(metric="mean_max_abs_xcorr", value=float(mags.max(axis=1).mean())))
        rows.append(row(metric="sqrt_block_len", value=float(np.sqrt(N))))
    return rows


def run_loopback(cfg, pool):
    preps = [prepare(w, cfg) for w in cfg.waveforms]
    for p in preps:
        if p.kind != "de-msqp":
            raise ValueError(f"loopback-ber needs de-msqp waveforms, got {p.kind!r}")
    snrs = _sweep_snrs(cfg)
    res = np.array(pool(partial(_loopback_trial, (cfg, preps, snrs)), range(cfg.trials)))
    rows = []
    for i, prep in enumerate(preps):
        for j, snr in enumerate(snrs):
            bits, errs = res[:, i, j].sum(axis=0)
            row = partial(ResultRow, cfg.scenario, prep.name, "snr_db", _snr_value(snr), trials=cfg.trials,
                          seed=cfg.base_seed)
            rows.append(row(metric="ber", value=float(errs / bits) if bits else 0.0))
            rows.append(row(metric="bits", value=float(bits)))
            rows.append(row(metric="bit_errors", value=float(errs)))
    return rows


SCENARIO_FUNCS = {
    "papr": run_papr,
    "root-design-fig5": run_root_design,
    "false-alarm-fig10": run_false_alarm,
    "ranging-fig11": run_estimation,
    "velocity-fig12": run_estimation,
    "tradeoff-fig13-14": run_tradeoff,
    "xcorr-appendix": run_xcorr,
    "loopback-ber": run_loopback,
}

DESCRIPTIONS = {
    "papr": "peak-to-average power before and after the subband phase search",
    "root-design-fig5": "per-subband correlation sidelobe spread under Doppler, by root",
    "false-alarm-fig10": "false-alarm and detection rate versus CFAR threshold",
    "ranging-fig11": "mean range error versus SNR",
    "velocity-fig12": "mean velocity error versus SNR",
    "tradeoff-fig13-14": "sensing error versus extension factor at fixed SNRs",
    "xcorr-appendix": "data/reference cross-correlation magnitude versus the sqrt(N) bound",
    "loopback-ber": "bit error rate of the embedded data streams over AWGN",
}
