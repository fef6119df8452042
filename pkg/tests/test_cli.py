import math
import subprocess
import sys

import pytest

from kerrpol import cli
from kerrpol.errors import ConfigError
from kerrpol.experiment import BenchConfig


def read_csv(path):
    text = path.read_text(encoding="utf-8")
    rows = [line for line in text.split("\n") if line and not line.startswith("#")]
    header = rows[0].split(",")
    return header, [dict(zip(header, map(float, r.split(",")))) for r in rows[1:]], text


def comments(text):
    return [line for line in text.splitlines() if line.startswith("#")]


def test_parse_config_empty(tmp_path):
    f = tmp_path / "empty.cfg"
    f.write_text("")
    assert cli.parse_config(f) == BenchConfig()


def test_parse_config_values(tmp_path):
    f = tmp_path / "bench.cfg"
    f.write_text("# the Fig. 3 point\npulse_energy = 83.7   # pJ\n\nthermal_exponent=2\n")
    cfg = cli.parse_config(f)
    assert cfg.pulse_energy == 83.7
    assert cfg.thermal_exponent == 2.0


@pytest.mark.parametrize("body, fragment", [
    ("fiber_end_loss = 1.5\n", "fiber_end_loss"),
    ("pulse_energy 83.7\n", ":1:"),
    ("a = 1\n", "unknown key"),
    ("pulse_energy = 1\npulse_energy = 2\n", ":2:"),
    ("optics_loss = lots\n", "not a number"),
])
def test_parse_config_errors(tmp_path, body, fragment):
    f = tmp_path / "bad.cfg"
    f.write_text(body)
    with pytest.raises(ConfigError, match=fragment):
        cli.parse_config(f)


def test_parse_config_missing(tmp_path):
    with pytest.raises(ConfigError):
        cli.parse_config(tmp_path / "nope.cfg")
    assert cli.main(["rotate-sweep", "--config", str(tmp_path / "nope.cfg")]) == 1


def test_rotate_sweep_csv(tmp_path):
    out = tmp_path / "rot.csv"
    assert cli.main(["rotate-sweep", "--energy", "83.7", "--out", str(out), "--no-timestamp"]) == 0
    header, rows, text = read_csv(out)
    assert header == list(cli.ROTATE_COLUMNS)
    assert len(rows) == 91
    assert min(r["corrected_db"] for r in rows) == pytest.approx(-5.1, abs=0.05)
    assert all(r["theta_deg"] == 4 * r["phi_deg"] for r in rows)
    assert "\r" not in text
    data = [line for line in text.splitlines() if not line.startswith("#")]
    assert all(len(line.split(",")) == 6 for line in data)
    assert "# command: rotate-sweep" in comments(text)
    assert "# analysis_frequency_mhz: 17.5" in comments(text)
    # 9 significant digits
    assert data[41].split(",")[2] == f"{rows[40]['variance_linear']:.9g}"


def test_rotate_sweep_without_kerr(tmp_path):
    cfg = tmp_path / "flat.cfg"
    cfg.write_text("kerr_coefficient = 0\npulse_energy = 50\n")
    out = tmp_path / "flat.csv"
    assert cli.main(["rotate-sweep", "--config", str(cfg), "--out", str(out)]) == 0
    _, rows, _ = read_csv(out)
    assert all(abs(r["corrected_db"]) < 1e-9 for r in rows)


def test_rotate_sweep_requires_energy(tmp_path):
    assert cli.main(["rotate-sweep", "--out", str(tmp_path / "x.csv")]) == 1


def test_energy_sweep_csv(tmp_path):
    out = tmp_path / "energy.csv"
    assert cli.main(["energy-sweep", "--e-start", "10", "--e-end", "200", "--e-step", "5",
                     "--out", str(out), "--no-timestamp"]) == 0
    header, rows, text = read_csv(out)
    assert header == list(cli.ENERGY_COLUMNS)
    sq = [r["squeezing_db"] for r in rows]
    ang = [abs(r["theta_sq_deg"]) for r in rows]
    assert all(b < a for a, b in zip(sq, sq[1:]))
    assert all(b < a for a, b in zip(ang, ang[1:]))
    assert "# soliton_energy_pj: 56.0" in comments(text)


def test_calibrate_writes_config(tmp_path):
    out = tmp_path / "cal.cfg"
    assert cli.main(["calibrate", "--target-db", "-5.1", "--at-energy", "83.7", "--out", str(out)]) == 0
    cfg = cli.parse_config(out)
    assert cfg.kerr_coefficient == pytest.approx(0.01423, abs=1e-5)
    zero = tmp_path / "zero.cfg"
    assert cli.main(["calibrate", "--target-db", "0", "--at-energy", "83.7", "--out", str(zero)]) == 0
    assert cli.parse_config(zero).kerr_coefficient == 0.0
    assert cli.main(["calibrate", "--target-db", "-20", "--at-energy", "83.7"]) == 2


def report_fields(text):
    return dict(line.split(": ", 1) for line in text.splitlines()
                if line and not line.startswith("#") and not line.startswith("note"))


def test_analyze(capsys):
    assert cli.main(["analyze", "--measured-db", "-5.1", "--eta", "0.795"]) == 0
    f = report_fields(capsys.readouterr().out)
    assert float(f["inferred_source_db"]) == pytest.approx(-8.83, abs=0.005)
    assert cli.main(["analyze", "--measured-db", "-5.1", "--losses", "0.04,0.078,0.10"]) == 0
    f = report_fields(capsys.readouterr().out)
    assert float(f["eta"]) == pytest.approx(0.7966, abs=1e-4)
    assert cli.main(["analyze", "--measured-db", "-7.0", "--eta", "0.795"]) == 2
    assert "loss floor" in capsys.readouterr().err


def test_analyze_from_raw_levels(capsys):
    # shot noise read at -57 dBm and a squeezed trace 5.1 dB lower, both on a -86.1 dBm floor
    from kerrpol.analysis import add_powers_dbm
    raw = add_powers_dbm(-62.1, -86.1)
    shot = add_powers_dbm(-57.0, -86.1)
    assert cli.main(["analyze", "--raw-dbm", repr(raw), "--shot-dbm", repr(shot),
                     "--electronic-dbm", "-86.1", "--eta", "0.795"]) == 0
    f = report_fields(capsys.readouterr().out)
    assert float(f["measured_db"]) == pytest.approx(-5.1, abs=1e-6)
    assert cli.main(["analyze", "--raw-dbm", "-62"]) == 1


def test_analyze_flag_conflict():
    assert cli.main(["analyze", "--measured-db", "-5", "--eta", "0.8", "--losses", "0.1"]) == 1


def test_verify_oracle(tmp_path):
    out = tmp_path / "oracle.txt"
    assert cli.main(["verify-oracle", "--alpha2", "4", "--gamma", "0.05", "--nmax", "30",
                     "--out", str(out)]) == 0
    text = out.read_text()
    worst = float([line for line in comments(text) if "max_rel_deviation" in line][0].split(": ")[1])
    assert worst <= 0.05
    assert len([line for line in text.splitlines() if not line.startswith("#")]) == 17


def test_verify_oracle_no_kerr():
    worst, _ = cli.oracle_deviation(4.0, 0.0, 30)
    assert worst <= 1e-6


def test_verify_oracle_truncation():
    assert cli.main(["verify-oracle", "--alpha2", "200", "--nmax", "30"]) == 2


def test_byte_identical_outputs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert cli.main(["rotate-sweep", "--energy", "60", "--no-timestamp", "--out", str(out)]) == 0
    # output_path differs by design; everything else must match
    strip = lambda p: [line for line in p.read_bytes().split(b"\n") if not line.startswith(b"# output_path")]
    assert strip(a) == strip(b)
    c = tmp_path / "c.csv"
    assert cli.main(["rotate-sweep", "--energy", "60", "--no-timestamp", "--out", str(a)]) == 0
    first = a.read_bytes()
    assert cli.main(["rotate-sweep", "--energy", "60", "--no-timestamp", "--out", str(a)]) == 0
    assert a.read_bytes() == first
    assert cli.main(["rotate-sweep", "--energy", "60", "--out", str(c)]) == 0
    assert any(line.startswith("# timestamp: ") for line in comments(c.read_text()))


def test_global_flags_before_verb(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["--no-timestamp", "--out", str(out), "energy-sweep", "--e-end", "30"]) == 0
    assert out.exists()


def test_usage_errors():
    assert cli.main([]) == 1
    assert cli.main(["rotate-sweep", "--phi-step", "0", "--energy", "1"]) == 1
    assert cli.main(["calibrate"]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kerrpol", "analyze", "--measured-db", "-5.1",
                           "--eta", "0.795", "--no-timestamp"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "inferred_source_db: -8.83" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "kerrpol", "analyze", "--measured-db", "-7",
                           "--eta", "0.795"], capture_output=True, text=True)
    assert proc.returncode == 2
