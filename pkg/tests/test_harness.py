import json
from pathlib import Path

import numpy as np
import pytest

from thzjrc.harness import COLUMNS, ConfigError, ResultRow, emit, load_config, read_rows, run, validate_config
from thzjrc.harness.cli import main
from thzjrc.harness.config import SCENARIOS, scaled_length
from thzjrc.harness.results import format_rows, rate_halfwidth

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = {
    "scenario": "ranging-fig11",
    "trials": 3,
    "base_seed": 5,
    "waveforms": [{"kind": "msqp", "n_subbands": 4, "length": 61, "guard_len": 5}],
    "cpi": {"blocks": 16, "pad_factor": 2},
    "channel": {"range_m": [0.0, 1.0]},
    "cfar": {"train_cells": 8, "guard_cells": 2, "temp_radius": 5},
    "sweep": {"snr_db": [-10.0]},
}


def write_toml(path, text):
    path.write_text(text)
    return str(path)


# -- configuration ------------------------------------------------------------


@pytest.mark.parametrize("path", sorted(CONFIGS.rglob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    assert cfg.scenario in SCENARIOS


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        validate_config({**SMALL, "tirals": 4})
    assert any(f == "tirals" for f, _ in err.value.issues)
    with pytest.raises(ConfigError):
        validate_config({**SMALL, "cpi": {"blocks": 4, "padding": 2}})


def test_bad_values_rejected():
    for bad in ({"trials": 0}, {"scale": 1.5}, {"scenario": "nope"}, {"schema_version": 2},
                {"channel": {"range_m": [2.0, 1.0]}}, {"waveforms": []},
                {"waveforms": [{"kind": "lfm"}]}, {"waveforms": [{"kind": "zc", "length": 10, "root": 2}]}):
        with pytest.raises(ConfigError):
            validate_config({**SMALL, **bad})


def test_config_error_payload():
    with pytest.raises(ConfigError) as err:
        validate_config({**SMALL, "trials": -1})
    payload = err.value.as_dict()
    assert payload["error"] == "invalid-config"
    assert payload["issues"][0]["field"] == "trials"


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    with pytest.raises(ConfigError):
        load_config(write_toml(tmp_path / "x.toml", "scenario = [unclosed"))


def test_override_ignores_none():
    cfg = validate_config(SMALL)
    assert cfg.override(trials=None, base_seed=9).base_seed == 9
    assert cfg.override(trials=None).trials == 3
    with pytest.raises(ConfigError):
        cfg.override(scale=0)


def test_scaled_length():
    assert scaled_length(1007, 1) == 1007
    assert scaled_length(1007, 0.1) % 2 == 1
    assert np.gcd(scaled_length(1007, 0.3, root=3), 3) == 1
    assert scaled_length(5, 0.01) == 3


# -- results ------------------------------------------------------------------


def test_empty_rows_header_only(tmp_path):
    p = tmp_path / "r.csv"
    emit([], p)
    assert p.read_bytes() == (",".join(COLUMNS) + "\r\n").encode()
    assert read_rows(p) == []


def test_many_rows_round_trip(tmp_path, rng):
    rows = [ResultRow("papr", f"v{i % 7}", "snr_db", float(i) / 3, "m", float(v), 10, i)
            for i, v in enumerate(rng.standard_normal(10_000))]
    p = tmp_path / "r.csv"
    emit(rows, p)
    assert read_rows(p) == rows


def test_emit_error_names_path(tmp_path):
    target = tmp_path / "nodir" / "r.csv"
    with pytest.raises(OSError, match="nodir"):
        emit([], target)
    with pytest.raises(ValueError):
        emit([], tmp_path / "r.json", format="json")


def test_read_rows_rejects_foreign_header(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("a,b\n")
    with pytest.raises(ValueError):
        read_rows(p)


def test_rate_halfwidth_shrinks_with_trials():
    widths = [rate_halfwidth(n) for n in (1, 10, 100, 1000)]
    assert all(a > b for a, b in zip(widths, widths[1:]))
    assert np.isclose(rate_halfwidth(100), 0.098)
    with pytest.raises(ValueError):
        rate_halfwidth(0)


# -- running ------------------------------------------------------------------


def test_run_is_deterministic():
    a = format_rows(run(SMALL))
    b = format_rows(run(SMALL))
    assert a == b
    c = format_rows(run({**SMALL, "base_seed": 6}))
    assert a != c


def test_workers_do_not_change_results():
    assert format_rows(run(SMALL)) == format_rows(run({**SMALL, "workers": 2}))


def test_ranging_rows_shape():
    rows = run(SMALL)
    metrics = {r.metric for r in rows}
    assert {"mean_range_error_m", "mean_velocity_error_mps", "mean_range_error_bins"} <= metrics
    assert all(r.trials == 3 and r.seed == 5 and r.sweep_var == "snr_db" for r in rows)


def test_loopback_scenario_noiseless():
    rows = run({"scenario": "loopback-ber", "trials": 2,
                "waveforms": [{"kind": "de-msqp", "n_subbands": 2, "length": 31, "guard_len": 3,
                               "extension": 4, "cp_len": 4}]})
    ber = [r for r in rows if r.metric == "ber"]
    assert ber and all(r.value == 0.0 for r in ber)


# -- CLI ----------------------------------------------------------------------


def small_toml(tmp_path, extra=""):
    return write_toml(tmp_path / "small.toml", f"""
schema_version = 1
scenario = "ranging-fig11"
trials = 2
base_seed = 5
{extra}
[[waveforms]]
kind = "msqp"
n_subbands = 4
length = 61
guard_len = 5

[channel]
range_m = [0.0, 1.0]

[cfar]
train_cells = 8
guard_cells = 2
temp_radius = 5

[cpi]
blocks = 16
pad_factor = 2

[sweep]
snr_db = [-10.0]
""")


def test_cli_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    names = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
    assert names == list(SCENARIOS)


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", small_toml(tmp_path)]) == 0
    assert json.loads(capsys.readouterr().out)["valid"] is True


def test_cli_invalid_config_exit_code(tmp_path, capsys):
    assert main(["validate", small_toml(tmp_path, "bogus = 1")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "invalid-config"
    assert err["issues"][0]["field"] == "bogus"
    assert main(["run", small_toml(tmp_path), "--trials", "0"]) == 2


def test_cli_run_out_and_overrides(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["run", small_toml(tmp_path), "--out", str(out), "--seed", "8", "--trials", "1"]) == 0
    rows = read_rows(out)
    assert rows and all(r.seed == 8 and r.trials == 1 for r in rows)
    out2 = tmp_path / "r2.csv"
    main(["run", small_toml(tmp_path), "--out", str(out2), "--seed", "8", "--trials", "1"])
    assert out.read_bytes() == out2.read_bytes()


def test_cli_run_to_stdout(tmp_path, capsys):
    assert main(["run", small_toml(tmp_path), "--trials", "1"]) == 0
    assert capsys.readouterr().out.startswith(",".join(COLUMNS))


def test_cli_io_error(tmp_path, capsys):
    code = main(["run", small_toml(tmp_path), "--trials", "1", "--out", str(tmp_path / "no" / "r.csv")])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "io-error"


def test_cli_scale_override(tmp_path, capsys):
    assert main(["validate", small_toml(tmp_path), "--scale", "0.5"]) == 0
    assert main(["validate", small_toml(tmp_path), "--scale", "2"]) == 2


@pytest.mark.parametrize("kind", ["waveform", "waveform-csv", "rdm-csv", "rdm-npy"])
def test_cli_export_sensing(tmp_path, kind):
    out = tmp_path / f"x.{kind}"
    assert main(["export", small_toml(tmp_path), "--kind", kind, "--out", str(out)]) == 0
    assert out.stat().st_size > 0


def test_cli_export_bits_and_ber(tmp_path, capsys):
    cfg = write_toml(tmp_path / "de.toml", """
scenario = "loopback-ber"
[[waveforms]]
kind = "de-msqp"
n_subbands = 2
length = 31
guard_len = 3
extension = 2
cp_len = 4
""")
    from thzjrc import io as jrc_io

    bits = tmp_path / "b.bin"
    assert main(["export", cfg, "--kind", "bits", "--out", str(bits)]) == 0
    assert jrc_io.read_bits(bits).size == 2 * 31 * 2
    ber = tmp_path / "ber.csv"
    assert main(["export", cfg, "--kind", "ber-csv", "--out", str(ber)]) == 0
    assert jrc_io.read_ber_csv(ber)[0]["errors"] == 0
    # bit export needs a data-carrying waveform
    assert main(["export", small_toml(tmp_path), "--kind", "bits", "--out", str(bits)]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "run-error"
