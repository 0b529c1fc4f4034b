import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from berslab.bers import bers_map
from berslab.cli import main
from berslab.families import family_diffeo
from berslab.numerics import Grid
from berslab.scattering import KGrid, scattering_coefficients


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    return main([*args, "--out", str(out)]), out


def certificates(out):
    return json.loads((out / "certificates.json").read_text())


@pytest.fixture(scope="module")
def suite_dirs(tmp_path_factory):
    base = tmp_path_factory.mktemp("suite")
    codes = [main(["suite", "--out", str(base / "a")]),
             main(["suite", "--out", str(base / "b"), "--threads", "4"])]
    return codes, base / "a", base / "b"


def test_suite_passes(suite_dirs):
    codes, out, _ = suite_dirs
    assert codes == [0, 0]
    certs = certificates(out)
    assert len(certs) > 100 and all(c["pass"] for c in certs)
    assert set(certs[0]) == {"check_name", "lhs", "rhs", "residual", "tolerance", "pass", "anchor"}
    for name in ("geodesic", "schwarzian", "cocycle", "bers", "scatter", "trace", "diagnose",
                 "criticality", "noncontrol"):
        assert (out / f"{name}.csv").is_file()
    for name in ("trace", "diagnose_reports", "noncontrol"):
        json.loads((out / f"{name}.json").read_text())


def test_outputs_are_bit_identical_across_threads(suite_dirs):
    _, a, b = suite_dirs
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_csv_schema_round_trips_doubles(suite_dirs):
    _, out, _ = suite_dirs
    with open(out / "scatter.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "a_re", "a_im", "b_re", "b_im", "abs_R"]
    data = np.loadtxt(out / "scatter.csv", delimiter=",", skiprows=1)
    # 17 significant digits reproduce every double exactly
    phi = family_diffeo("gauss_bump{0.5,0,1}", Grid())
    sd = scattering_coefficients(bers_map(phi), KGrid())
    assert np.array_equal(data[:, 0], sd.k)
    assert np.array_equal(data[:, 1] + 1j * data[:, 2], sd.a)
    assert np.array_equal(data[:, 3] + 1j * data[:, 4], sd.b)


def test_bers_roundtrip_and_trace(tmp_path):
    code, out = run(tmp_path, "bers", "roundtrip")
    assert code == 0
    header = (out / "bers.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "x" and "potential" in header and "distinguished_solution" in header
    code, out = run(tmp_path, "trace", name="trace")
    assert code == 0
    summary = json.loads((out / "trace.json").read_text())
    assert summary["pass"] is True
    assert summary["first_lhs"] == pytest.approx(summary["first_rhs"], rel=1e-6)


def test_tolerance_override_fails_with_exit_3(tmp_path):
    code, out = run(tmp_path, "trace", "--tol", "first_trace=0")
    assert code == 3
    first = next(c for c in certificates(out) if c["check_name"] == "first_trace")
    assert first["tolerance"] == 0.0 and first["pass"] is False


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"output_dir": str(tmp_path / "from_config"),
                               "tolerances": {"flux": 1e-3}, "family": "gauss_bump{0.2,0,1}"}))
    code, out = run(tmp_path, "scatter", "--config", str(cfg), "--tol", "flux=1e-4", name="from_flag")
    assert code == 0
    assert out.is_dir() and not (tmp_path / "from_config").exists()
    flux = next(c for c in certificates(out) if c["check_name"] == "flux")
    assert flux["tolerance"] == 1e-4


def test_config_family_is_used(tmp_path):
    cfg = tmp_path / "cfg.json"
    outs = []
    for amp in ("0.2", "0.4"):
        cfg.write_text(json.dumps({"family": f"gauss_bump{{{amp},0,1}}"}))
        code, out = run(tmp_path, "trace", "--config", str(cfg), name=amp)
        assert code == 0
        outs.append(json.loads((out / "trace.json").read_text())["first_lhs"])
    assert outs[0] != outs[1]


def test_sampled_family(tmp_path, grid):
    path = tmp_path / "u.csv"
    x = np.linspace(-15, 15, 3001)
    np.savetxt(path, np.column_stack([x, 0.3 * np.exp(-x ** 2)]), delimiter=",", header="x,value", comments="")
    code, _ = run(tmp_path, "trace", "--family", f"sampled{{{path}}}")
    assert code == 0


@pytest.mark.parametrize("payload", ["{not json", json.dumps({"grid": {"n": 50}}),
                                     json.dumps({"colour": 1}), json.dumps({"tolerances": {"nope": 1}}),
                                     json.dumps({"grid": {"n": 4001.5}}), json.dumps([1, 2])])
def test_bad_config_exits_2_without_outputs(tmp_path, payload, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(payload)
    code, out = run(tmp_path, "suite", "--config", str(cfg))
    assert code == 2
    assert not out.exists()
    assert "configuration error" in capsys.readouterr().err


@pytest.mark.parametrize("flags", [["--family", "nonsense{1}"], ["--family", "gauss_bump{0.5,0,0}"],
                                   ["--tol", "flux"], ["--tol", "flux=-1"], ["--threads", "0"],
                                   ["--family", "sampled{/nonexistent.csv}"]])
def test_bad_flags_exit_2(tmp_path, flags):
    code, out = run(tmp_path, "scatter", *flags)
    assert code == 2 and not out.exists()


def test_bad_seed_exits_2(tmp_path, monkeypatch):
    monkeypatch.setenv("BERSLAB_SEED", "abc")
    code, out = run(tmp_path, "diagnose")
    assert code == 2 and not out.exists()


def test_seed_is_respected(tmp_path, monkeypatch):
    monkeypatch.setenv("BERSLAB_SEED", "7")
    code, out = run(tmp_path, "diagnose")
    assert code == 0
    again, out2 = run(tmp_path, "diagnose", name="again")
    assert (out / "certificates.json").read_bytes() == (out2 / "certificates.json").read_bytes()


def test_numerical_failure_exits_3_with_error_certificate(tmp_path):
    # a huge bump is a valid input whose reflection coefficient saturates
    code, out = run(tmp_path, "scatter", "--family", "gauss_bump{50,0,1}")
    assert code == 3
    certs = certificates(out)
    assert certs[-1]["check_name"].startswith("scatter.error") and certs[-1]["pass"] is False


def test_figures(tmp_path):
    code, out = run(tmp_path, "cocycle", "--figures")
    assert code == 0
    png = (out / "cocycle.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
    code, out = run(tmp_path, "cocycle", name="plain")
    assert not (out / "cocycle.png").exists()


def test_console_script(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "berslab.cli", "cocycle", "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "certificates passed" in proc.stdout
    bad = subprocess.run([sys.executable, "-m", "berslab.cli", "frobnicate"], capture_output=True, text=True)
    assert bad.returncode == 2
