import json
import math
import subprocess
import sys

import pytest

from conftest import MPEMBA_RHO, MPEMBA_SIGMA
from gmadlab.cli import main
from gmadlab.config import encode_complex_matrix

FAST_QUTRIT = {
    "spectrum": [0, 0.8, 1],
    "beta": 1.0,
    "parametrization": {"type": "qutrit", "s1": 0.5, "sbar": 0.745, "alpha0": 0.745},
    "optimizer": {"n_starts": 4},
    "grid_size": 6,
    "seed": 5,
}
MPEMBA = {
    "spectrum": [0, 0.5, 1],
    "beta": 0.1,
    "allow_degenerate_gaps": True,
    "parametrization": {"type": "couplings", "g10": 0.8, "g21": 0.2, "g20": 0.1},
}


@pytest.fixture
def files(tmp_path, monkeypatch):
    monkeypatch.delenv("GMADLAB_SEED", raising=False)
    paths = {}
    for name, data in {"qutrit": FAST_QUTRIT, "mpemba": MPEMBA,
                       "states": {"rho": encode_complex_matrix(MPEMBA_RHO),
                                  "sigma": encode_complex_matrix(MPEMBA_SIGMA)}}.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(data))
        paths[name] = str(p)
    paths["dir"] = tmp_path
    return paths


def test_verify_exit_codes(files, tmp_path, capsys):
    assert main(["verify", "--config", files["qutrit"]]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**FAST_QUTRIT, "parametrization": {"type": "general", "unitaries": [
        [[1, 0.3], [0, 1]], [[1, 0, 0], [0, 1, 0], [0, 0, 1]]]}}))
    assert main(["verify", "--config", str(bad)]) == 1
    broken = tmp_path / "broken.json"
    broken.write_text('{"spectrum": [0, 1]}')
    assert main(["verify", "--config", str(broken)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["verify", "--config", str(tmp_path / "nope.json")]) == 2


def test_sweep_output(files):
    out = files["dir"] / "s.csv"
    assert main(["sweep", "--config", files["qutrit"], "--kind", "coherent", "--constraint", "ball",
                 "--grid", "4", "--betas", "1,inf", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    assert lines[1] == "beta,epsilon,functional_kind,constraint,value"
    assert len(lines) == 2 + 8
    assert lines[-1].startswith("inf,1,coherent,ball,")


def test_capacitance_and_mawer(files, capsys):
    out = files["dir"] / "c.csv"
    assert main(["capacitance", "--config", files["qutrit"], "--out", str(out)]) == 0
    header = out.read_text().splitlines()[1]
    assert header == "epsilon,ball_mef,chi,incoherent_ball,incoherent_envelope"
    side = json.loads((files["dir"] / "c.json").read_text())
    assert set(side) == {"mawer", "activated", "ratios", "config_sha256"}
    capsys.readouterr()
    assert main(["mawer", "--config", files["qutrit"]]) == 0
    assert json.loads(capsys.readouterr().out)["mawer"] == side["mawer"]


def test_mpemba_command(files, tmp_path):
    out = tmp_path / "m.csv"
    assert main(["mpemba", "--config", files["mpemba"], "--states", files["states"],
                 "--iters", "3", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 2 + 4
    side = json.loads((tmp_path / "m.json").read_text())
    assert 1 in side["crossings"]
    mismatch = tmp_path / "mm.json"
    sigma = MPEMBA_SIGMA.copy()
    sigma[1, 1] += 0.05
    sigma[2, 2] -= 0.05
    mismatch.write_text(json.dumps({"rho": encode_complex_matrix(MPEMBA_RHO),
                                    "sigma": encode_complex_matrix(sigma)}))
    assert main(["mpemba", "--config", files["mpemba"], "--states", str(mismatch),
                 "--iters", "3", "--out", str(out)]) == 2


def test_seed_env_changes_hash(files, monkeypatch, capsys):
    main(["verify", "--config", files["qutrit"]])
    h1 = json.loads(capsys.readouterr().out)["config_sha256"]
    monkeypatch.setenv("GMADLAB_SEED", "99")
    main(["verify", "--config", files["qutrit"]])
    h2 = json.loads(capsys.readouterr().out)["config_sha256"]
    assert h1 != h2


def test_bad_beta_list(files):
    with pytest.raises(SystemExit):
        main(["sweep", "--config", files["qutrit"], "--betas", "1,warm"])


def test_console_entry_point(files):
    r = subprocess.run([sys.executable, "-m", "gmadlab.cli", "verify", "--config", files["mpemba"]],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["beta"] == 0.1
    assert not math.isnan(json.loads(r.stdout)["residuals"]["trace_preservation"])
