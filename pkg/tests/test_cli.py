import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gupsim import dispersion as disp
from gupsim.cli import main

CONFIGS = Path(__file__).parent.parent / "configs"

SCAN_CFG = """
id = "scan"
[model]
alpha_prime = {alpha_prime!r}
[packet]
sigma_k = 0.02
k0 = 1.0
[times]
values = [0.0, 100.0, 200.0, 300.0]
"""


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_dispersion_sample(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["dispersion", "sample", "--alpha-prime", "0.01", "--k-min", "0.5",
                 "--k-max", "2", "--n", "7", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["k", "omega", "v_g", "beta", "hbar_eff"]
    assert len(rows) == 7
    m = disp.DispersionModel(0.01)
    for r in rows:
        k = float(r[0])
        # repr formatting round-trips bit for bit
        assert float(r[1]) == disp.omega_exact(k, m)
        assert float(r[2]) == disp.group_velocity_exact(k, m)
        assert float(r[3]) == disp.gvd_beta_exact(k, m)
    assert out.read_bytes().count(b"\r\n") == 8


def test_dispersion_sample_pole_rows_empty(capsys):
    assert main(["dispersion", "sample", "--alpha-prime", "-0.25", "--k-min", "1",
                 "--k-max", "3", "--n", "3"]) == 0
    header, rows = read_csv_text(capsys.readouterr().out)
    assert rows[1][0] == "2.0" and rows[1][1:4] == ["", "", ""]
    assert rows[0][1] != ""


def read_csv_text(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def test_packet_analytic(capsys):
    assert main(["packet", "analytic", "--alpha", "1", "--k0", "1", "--alpha-prime", "0.001",
                 "--t-max", "100", "--n-t", "5"]) == 0
    header, rows = read_csv_text(capsys.readouterr().out)
    assert header == ["t", "width_exact", "width_ratio", "width_paper_eq17"]
    ratios = [float(r[2]) for r in rows]
    assert ratios[0] == 1.0 and all(b > a for a, b in zip(ratios, ratios[1:]))


def test_evolve_baseline_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = str(CONFIGS / "baseline.toml")
    assert main(["evolve", "--config", cfg, "--emit-fields", "--out", str(a)]) == 0
    assert main(["evolve", "--config", cfg, "--emit-fields", "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    assert "stats.csv" in names and "report.json" in names and "field_t0.csv" in names
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    report = json.loads((a / "report.json").read_text())
    assert report["pass"] is True
    assert all(c["deviation"] < 1e-6 for c in report["comparisons"])
    assert "sign_convention" in report["conventions"]
    assert report["tolerances"]["width_rel"] == 1e-6
    header, _ = read_csv(a / "stats.csv")
    assert header == ["t", "norm", "centroid", "rms_width", "predicted_width", "rel_dev"]


def test_report_json_key_order(tmp_path):
    main(["evolve", "--config", str(CONFIGS / "baseline.toml"), "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "report.json").read_text())
    for section in ("conventions", "tolerances", "environment"):
        assert list(rep[section]) == sorted(rep[section])


def test_failed_comparison_exit_2(tmp_path):
    cfg = write(tmp_path, "tight.toml", '[model]\nalpha_prime = 0.01\n[packet]\nk0 = 1.0\n'
                '[tolerances]\nv_g_rel = 1e-15\nwidth_rel = 1e-15\n'
                '[times]\nvalues = [0.0, 1.0, 2.0]\n')
    assert main(["evolve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert json.loads((tmp_path / "o" / "report.json").read_text())["pass"] is False


def test_config_error_exit_1(tmp_path, capsys):
    cfg = write(tmp_path, "bad.toml", "[model]\nalpah_prime = 1.0\n")
    assert main(["evolve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "model.alpah_prime" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_no_partial_outputs(tmp_path):
    # the packet experiment succeeds, then the GKG run hits unstable modes
    cfg = write(tmp_path, "unstable.toml",
                '[model]\nalpha_prime = 0.05\n[packet]\nk0 = 1.0\n'
                '[times]\nvalues = [0.0, 1.0]\n'
                '[gkg]\nenabled = true\nn = 256\nlength = 30.0\n')
    out = tmp_path / "o"
    assert main(["report", "--config", str(cfg), "--out", str(out)]) == 1
    assert not out.exists() or list(out.iterdir()) == []


def test_usage_errors_exit_1():
    assert main([]) == 1
    assert main(["dispersion", "sample", "--k-min", "1"]) == 1
    assert main(["scan", "--config", "x.toml", "--parameter", "c"]) == 1


def test_print_config(capsys):
    assert main(["--print-config"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["tolerances"]["width_rel"] == 0.01 and d["gkg"]["sign_convention"] == "derivation_consistent"


def test_gkg_opcheck(capsys):
    assert main(["gkg", "opcheck", "--beta-prime", "0.01", "--k", "1"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["eigenvalue_p"] == pytest.approx(1.01, rel=1e-10)
    assert res["eigenvalue_p_sq"] == pytest.approx(1.02, rel=1e-10)


def test_gkg_run(tmp_path):
    assert main(["gkg", "run", "--config", str(CONFIGS / "gkg.toml"), "--out", str(tmp_path)]) == 0
    header, rows = read_csv(tmp_path / "gkg_stats.csv")
    assert header == ["t", "norm", "centroid", "rms_width", "energy"]
    assert len(rows) == 4
    rep = json.loads((tmp_path / "gkg_report.json").read_text())
    assert rep["conventions"]["sign_convention"] == "derivation_consistent"


def test_gkg_run_fd(tmp_path):
    cfg = write(tmp_path, "fd.toml", '[packet]\nk0 = 5.0\n[gkg]\nenabled = true\nsolver = "fd"\n'
                'n = 2048\nlength = 60.0\ntimes = [0.0, 1.0]\n')
    assert main(["gkg", "run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "gkg_report.json").read_text())
    assert [c["name"] for c in rep["comparisons"]] == ["gkg_fd_vs_spectral"]


def test_scan_alpha_prime_ordering(tmp_path):
    cfg = write(tmp_path, "s.toml", SCAN_CFG.format(alpha_prime=0.0))
    out = tmp_path / "o"
    assert main(["scan", "--config", str(cfg), "--parameter", "alpha_prime",
                 "--values", "0.01", "-0.01", "0", "--out", str(out)]) == 0
    header, rows = read_csv(out / "scan_summary.csv")
    assert header[:4] == ["parameter", "value", "v_g_predicted", "v_g_measured"]
    assert [float(r[1]) for r in rows] == [-0.01, 0.0, 0.01]
    vg = [float(r[3]) for r in rows]
    assert vg[0] > vg[1] > vg[2]
    assert vg[0] == pytest.approx(1.0305, abs=1e-4) and vg[2] == pytest.approx(0.9705, abs=1e-4)
    assert sorted(p.name for p in out.glob("scan_*.json")) == ["scan_000.json", "scan_001.json",
                                                               "scan_002.json"]


def test_scan_k0_trend(tmp_path):
    # for alpha' > 0, dv_g/dk0 < 0 below k = sqrt(3/a)
    cfg = write(tmp_path, "s.toml", SCAN_CFG.format(alpha_prime=0.01))
    out = tmp_path / "o"
    main(["scan", "--config", str(cfg), "--parameter", "k0",
          "--values", "1.4", "0.8", "1.2", "1.0", "--out", str(out)])
    _, rows = read_csv(out / "scan_summary.csv")
    vg = np.array([float(r[3]) for r in rows])
    assert np.all(np.diff(vg) < 0)
    dv = (-3 * 0.01 * 1.0 + 0.01**2 * 1.0) / (1 + 0.01) ** 3  # d v_g / d k0 at k0 = 1
    assert dv < 0


def test_scan_concurrency_byte_identical(tmp_path, monkeypatch):
    cfg = write(tmp_path, "s.toml", SCAN_CFG.format(alpha_prime=0.0))
    args = ["scan", "--config", str(cfg), "--parameter", "alpha", "--values", "2500", "1250"]
    main(args + ["--workers", "1", "--out", str(tmp_path / "a")])
    main(args + ["--workers", "2", "--out", str(tmp_path / "b")])
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_scan_empty(tmp_path):
    cfg = write(tmp_path, "s.toml", SCAN_CFG.format(alpha_prime=0.0))
    out = tmp_path / "o"
    assert main(["scan", "--config", str(cfg), "--parameter", "alpha_prime",
                 "--out", str(out)]) == 0
    header, rows = read_csv(out / "scan_summary.csv")
    assert rows == [] and header[0] == "parameter"


def test_report(tmp_path, capsys):
    cfg = write(tmp_path, "r.toml", '[model]\nalpha_prime = -0.01\n[packet]\nk0 = 1.0\n'
                '[times]\nvalues = [0.0, 0.5]\n[curves]\nk_min = 5.0\nk_max = 15.0\nn = 51\n')
    out = tmp_path / "o"
    code = main(["report", "--config", str(cfg), "--out", str(out)])
    assert json.loads(capsys.readouterr().out)["experiment_id"] == "experiment"
    summary = json.loads((out / "summary.json").read_text())
    assert code == (0 if summary["pass"] else 2)
    m = disp.DispersionModel(-0.01)
    for name in ("dispersion_exact.csv", "dispersion_first_order.csv", "dispersion_free.csv"):
        header, rows = read_csv(out / name)
        assert header == ["k", "omega", "v_g", "beta", "hbar_eff", "excluded"]
        assert len(rows) == 51
    _, rows = read_csv(out / "dispersion_exact.csv")
    flagged = [r for r in rows if r[5] == "1"]
    assert flagged and all(abs(float(r[0]) - 10.0) < 2.5 and r[1] == "" for r in flagged)
    for r in rows:
        if r[5] == "0":
            assert float(r[1]) == disp.omega_exact(float(r[0]), m)
    _, free = read_csv(out / "dispersion_free.csv")
    assert all(r[5] == "0" and float(r[2]) == 1.0 for r in free)


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "gupsim.cli", "gkg", "opcheck",
                          "--beta-prime", "0", "--k", "2"], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["eigenvalue_p"] == pytest.approx(2.0)
