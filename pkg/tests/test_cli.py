import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from intertrade.cli import main
from intertrade.fileio import read_series, read_table
from intertrade.synth import poisson_tick_stream


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def ticks(tmp_path):
    path = tmp_path / "ticks.csv"
    text = poisson_tick_stream(0.1, 5, seed=1, equity="BG").to_csv()
    path.write_text(text + "2005-08-22,12:00:00,BG\n2005-08-22,noon,BG\n")
    return path


def test_generate_writes_spec_header(tmp_path, capsys):
    code, out, _ = run(capsys, "--out-dir", tmp_path, "--seed", 4, "generate", "fgn", "-n", 4096,
                       "--param", "H=0.7")
    assert code == 0
    values, meta = read_series(tmp_path / "fgn.csv")
    assert values.size == 4096
    spec = json.loads(meta["spec"])
    assert spec == {"kind": "fgn", "n": 4096, "params": {"H": 0.7}, "seed": 4}


def test_generate_is_reproducible(tmp_path, capsys):
    for d in ("a", "b"):
        run(capsys, "--out-dir", tmp_path / d, "generate", "iid-weibull", "-n", 100,
            "--param", "alpha=1.22", "--param", "beta=1.41")
    assert (tmp_path / "a" / "iid-weibull.csv").read_bytes() == (tmp_path / "b" / "iid-weibull.csv").read_bytes()


def test_tick_commands(tmp_path, ticks, capsys):
    code, out, _ = run(capsys, "--out-dir", tmp_path, "ingest", ticks)
    assert code == 0
    info = json.loads(out)
    assert info["malformed"] == 1 and info["rejected"] == 1
    code, out, _ = run(capsys, "--out-dir", tmp_path, "durations", ticks, "--equity", "BG")
    assert code == 0
    values, meta = read_series(tmp_path / "durations.csv")
    assert values.dtype == np.int64 and meta["equity_id"] == "BG"
    code, _, _ = run(capsys, "--out-dir", tmp_path, "intraday", ticks, "--interval", 600)
    assert code == 0
    cols, _ = read_table(tmp_path / "intraday.csv")
    assert cols["mean_duration"].size == 24


def test_distribution_commands(tmp_path, capsys):
    run(capsys, "--out-dir", tmp_path, "generate", "iid-qexp", "-n", 50_000,
        "--param", "g0=4.09", "--param", "gamma=5.5")
    series = tmp_path / "iid-qexp.csv"
    assert run(capsys, "--out-dir", tmp_path, "pdf", series)[0] == 0
    assert (tmp_path / "pdf.csv").read_text().startswith("# atom_mass=")
    assert run(capsys, "--out-dir", tmp_path, "fit-weibull", series)[0] == 0
    fit = json.loads((tmp_path / "weibull.json").read_text())
    assert fit["model"] == "weibull" and fit["zero_policy"] == "exclude" and "input_hash" in fit
    assert run(capsys, "--out-dir", tmp_path, "fit-qexp", series)[0] == 0
    assert json.loads((tmp_path / "qexp.json").read_text())["model"] == "qexp"


def test_scaling_commands(tmp_path, capsys):
    run(capsys, "--out-dir", tmp_path, "generate", "binomial-cascade", "-n", 1 << 14, "--param", "p=0.3")
    series = tmp_path / "binomial-cascade.csv"
    for cmd in ("dfa", "dma"):
        code, out, _ = run(capsys, "--out-dir", tmp_path, "--threads", 2, cmd, series)
        assert code == 0 and "H" in json.loads(out)
    for cmd in ("mfdfa", "mfdma"):
        code, out, _ = run(capsys, "--out-dir", tmp_path, cmd, series, "--no-demean")
        assert code == 0
        assert (tmp_path / f"{cmd}_spectrum.csv").exists()
    code, out, _ = run(capsys, "--out-dir", tmp_path, "spectrum", tmp_path / "mfdfa.csv")
    assert code == 0
    cols, _ = read_table(tmp_path / "spectrum.csv")
    assert np.all(np.diff(cols["alpha"]) >= 0)
    code, _, _ = run(capsys, "--out-dir", tmp_path, "--seed", 9, "shuffle", series)
    a, _ = read_series(series)
    b, meta = read_series(tmp_path / "shuffled.csv")
    assert code == 0 and meta["seed"] == "9"
    assert np.array_equal(np.sort(a), np.sort(b))


def test_config_defaults_for_command(tmp_path, capsys):
    run(capsys, "--out-dir", tmp_path, "generate", "fgn", "-n", 4096, "--param", "H=0.6")
    cfg = tmp_path / "defaults.yaml"
    cfg.write_text(yaml.safe_dump({"dma": {"theta": 0.5, "s-min": 16}}))
    code, out, _ = run(capsys, "--out-dir", tmp_path, "--config", cfg, "dma", tmp_path / "fgn.csv")
    assert code == 0
    side = json.loads((tmp_path / "dma.json").read_text())
    assert side["theta"] == 0.5 and side["scales"][0] == 16
    cfg.write_text(yaml.safe_dump({"dma": {"window": 3}}))
    assert run(capsys, "--config", cfg, "dma", tmp_path / "fgn.csv")[0] == 1


def test_study_command(tmp_path, capsys):
    run(capsys, "--out-dir", tmp_path, "generate", "fgn", "-n", 1 << 12, "--param", "H=0.7")
    cfg = tmp_path / "study.yaml"
    cfg.write_text(yaml.safe_dump({"input": {"series": "fgn.csv"},
                                   "analyses": {"dfa": {}, "intraday": {}}}))
    code, out, _ = run(capsys, "--out-dir", tmp_path / "run", "--config", cfg, "study")
    assert code == 2  # intraday needs ticks
    assert "dfa: ok" in out and "intraday: FAILED" in out
    assert (tmp_path / "run" / "manifest.json").exists()


def test_exit_codes(tmp_path, capsys):
    assert run(capsys, "dfa")[0] == 1  # missing positional
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "study")[0] == 1  # no --config
    assert run(capsys, "--threads", 0, "generate", "fgn")[0] == 1
    assert run(capsys, "generate", "fgn", "-n", 1000)[0] == 1  # not a power of two
    assert run(capsys, "dfa", tmp_path / "missing.csv")[0] == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("value\n1\nx\n")
    assert run(capsys, "dfa", bad)[0] == 2
    const = tmp_path / "const.csv"
    const.write_text("value\n" + "5\n" * 4096)
    code, _, err = run(capsys, "--out-dir", tmp_path, "dfa", const)
    assert code == 3 and "nonzero fluctuation" in err
    zeros = tmp_path / "zeros.csv"
    x = np.zeros(1 << 14)
    x[::97] = 3.0
    x[2000:6000] = 0.0  # a zero run longer than the largest box
    zeros.write_text("value\n" + "\n".join(map(str, x)) + "\n")
    code, _, err = run(capsys, "--out-dir", tmp_path, "mfdfa", zeros)
    assert code == 3 and "per-minute" in err


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "intertrade", "--version"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "intertrade" in proc.stdout
