"""Command-line entry point.

``run`` writes result rows as CSV (to ``--out`` or stdout), ``validate``
checks a configuration, ``list-scenarios`` prints the scenario ids and
``export`` writes waveform, range-Doppler map, bit or BER files for the first
waveform of a configuration.  Failures exit nonzero with a JSON error object
on stderr.
"""

import argparse
import json
import sys

import numpy as np

from .. import io as jrc_io
from ..comm import BerReport, channel_estimate, equalize_and_demap, extract_streams, strip_cp, symbols_to_bits
from ..dsp import awgn
from ..waveforms import de_msqp_build, de_msqp_streams
from .config import SCENARIOS, ConfigError, load_config
from .results import emit, format_rows
from .runner import run
from .scenarios import DESCRIPTIONS, draw_targets, prepare, sensing_map, trial_rng

EXPORT_KINDS = ("waveform", "waveform-csv", "rdm-csv", "rdm-npy", "bits", "ber-csv")


def _fail(kind, message, code, **extra):
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def _load(args):
    cfg = load_config(args.config)
    return cfg.override(base_seed=args.seed, trials=args.trials, scale=args.scale)


def _add_overrides(p):
    p.add_argument("config", help="TOML experiment configuration")
    p.add_argument("--seed", type=int, help="override base_seed")
    p.add_argument("--trials", type=int, help="override the number of Monte Carlo trials")
    p.add_argument("--scale", type=float, help="override the length/CPI scale in (0, 1]")


def build_parser():
    ap = argparse.ArgumentParser(prog="thzjrc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write CSV rows")
    _add_overrides(p)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--workers", type=int, help="worker processes for trials")

    p = sub.add_parser("validate", help="check a configuration without running it")
    _add_overrides(p)

    sub.add_parser("list-scenarios", help="print the available scenario ids")

    p = sub.add_parser("export", help="write a waveform, map, bit or BER file")
    _add_overrides(p)
    p.add_argument("--kind", choices=EXPORT_KINDS, default="waveform")
    p.add_argument("--out", required=True, help="output path")
    return ap


def _export(cfg, kind, out):
    w = cfg.waveforms[0]
    prep = prepare(w, cfg)
    rng = trial_rng(cfg.base_seed, 0)
    snr = cfg.sweep.snr_db[0] if cfg.sweep.snr_db else cfg.channel.snr_db
    if kind in ("waveform", "waveform-csv"):
        x = prep.reference
        if prep.kind == "de-msqp":
            spec = prep.spec
            x = de_msqp_build(spec, [spec.constellation[i] for i in de_msqp_streams(spec, rng)])
        if kind == "waveform":
            jrc_io.write_waveform(out, x, prep.sample_period_s)
        else:
            jrc_io.write_waveform_csv(out, x)
    elif kind in ("rdm-csv", "rdm-npy"):
        targets = draw_targets(cfg, rng)
        m = sensing_map(prep, cfg, targets, snr, rng)
        (jrc_io.write_rdm_csv if kind == "rdm-csv" else jrc_io.write_rdm_npy)(out, m)
    else:
        if prep.kind != "de-msqp":
            raise ValueError("bit and BER export need a de-msqp waveform")
        spec = prep.spec
        snrs = (cfg.sweep.snr_db or [cfg.channel.snr_db]) if kind == "ber-csv" else [snr]
        idx = de_msqp_streams(spec, rng)
        frame = de_msqp_build(spec, [spec.constellation[i] for i in idx])
        tx = symbols_to_bits(np.concatenate([s.ravel() for s in idx]), spec.bits_per_symbol)
        rows = []
        for s in snrs:
            grid = extract_streams(strip_cp(awgn(frame, s, rng), spec), spec)
            dec = equalize_and_demap(grid, channel_estimate(grid, spec), spec)
            rx = symbols_to_bits(np.concatenate([d.ravel() for d in dec]), spec.bits_per_symbol)
            rows.append((float("inf") if s is None else s, BerReport(tx.size, int(np.count_nonzero(tx != rx)))))
        if kind == "bits":
            jrc_io.write_bits(out, rx)
        else:
            jrc_io.write_ber_csv(out, rows)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name in SCENARIOS:
            print(f"{name}\t{DESCRIPTIONS[name]}")
        return 0
    try:
        cfg = _load(args)
        if args.command == "validate":
            print(json.dumps({"valid": True, "scenario": cfg.scenario, "trials": cfg.trials}))
            return 0
        if args.command == "export":
            _export(cfg, args.kind, args.out)
            return 0
        if args.workers:
            cfg = cfg.override(workers=args.workers)
        rows = run(cfg)
        if args.out:
            emit(rows, args.out)
        else:
            sys.stdout.write(format_rows(rows))
        return 0
    except ConfigError as exc:
        return _fail("invalid-config", str(exc), 2, issues=exc.as_dict()["issues"])
    except OSError as exc:
        return _fail("io-error", str(exc), 3)
    except ValueError as exc:
        return _fail("run-error", str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
