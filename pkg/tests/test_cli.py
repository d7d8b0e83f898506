import json
import subprocess
import sys
from pathlib import Path

from oscbands.cli import main, validate_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def clusters_cfg():
    return {
        "task": "clusters",
        "potential": {"dim": 1, "terms": [{"alpha": [1], "coeff": 1.0}]},
        "params": {"hbar": 0.1, "J": 150},
        "checks": [{"name": "shifts-constant", "value": -0.005, "tol": 1e-9}],
        "output": {"json": "report.json", "csv": "clusters.csv"},
    }


def test_validate_ok(tmp_path, capsys):
    path = write_cfg(tmp_path, clusters_cfg())
    assert main(["validate", path]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ok")


def test_validate_violations():
    assert validate_config({"task": "nope"}) != []
    bad = clusters_cfg()
    bad["params"] = {"hbar": 0.1, "J": 40, "J_trust": 40}
    msgs = validate_config(bad)
    assert any("J_trust" in m for m in msgs)
    missing = {"task": "clusters", "params": {"hbar": 0.1}}
    assert any("potential" in m for m in validate_config(missing))
    unknown = validate_config({"task": "frobnicate"})
    assert any("allowed" in m for m in unknown)


def test_run_clusters_and_exit_codes(tmp_path, capsys):
    path = write_cfg(tmp_path, clusters_cfg())
    rc = main(["run", path, "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["verdicts"][0]["passed"] is True
    assert (tmp_path / "clusters.csv").exists()
    capsys.readouterr()

    # failing verdict -> exit 1
    failing = clusters_cfg()
    failing["checks"][0]["value"] = 123.0
    rc = main(["run", write_cfg(tmp_path, failing, "f.json"), "--out", str(tmp_path)])
    assert rc == 1
    capsys.readouterr()

    # schema violation -> exit 2
    bad = {"task": "frobnicate"}
    rc = main(["run", write_cfg(tmp_path, bad, "b.json"), "--out", str(tmp_path)])
    assert rc == 2
    capsys.readouterr()

    # numeric failure (clustering collapses at huge hbar * strong V) -> exit 3
    numeric = {
        "task": "clusters",
        "potential": {"dim": 1, "terms": [{"alpha": [2], "coeff": 60.0}]},
        "params": {"hbar": 0.4, "J": 60},
    }
    rc = main(["run", write_cfg(tmp_path, numeric, "n.json"), "--out", str(tmp_path)])
    assert rc == 3
    capsys.readouterr()


def test_report_determinism(tmp_path, capsys):
    path = write_cfg(tmp_path, clusters_cfg())
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["run", path, "--out", str(out1)]) == 0
    assert main(["run", path, "--out", str(out2)]) == 0
    capsys.readouterr()
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_szego_zero_potential(tmp_path, capsys):
    cfg = {
        "task": "szego",
        "potential": {"dim": 1, "terms": []},
        "params": {"energy": 1.0, "n_list": [6, 12], "phi_powers": [1]},
        "checks": [{"name": "gap-decay"}],
        "output": {"json": "szego.json"},
    }
    rc = main(["run", write_cfg(tmp_path, cfg), "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "szego.json").read_text())
    assert report["results"]["phi"]["1"]["gaps"] == [0.0, 0.0]
    capsys.readouterr()


def test_recover_hessian_config(tmp_path, capsys):
    rc = main(["run", str(CONFIG_DIR / "criterion10_hessian.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    capsys.readouterr()


def test_shipped_configs_validate():
    for path in sorted(CONFIG_DIR.glob("*.json")):
        cfg = json.loads(path.read_text())
        assert validate_config(cfg) == [], f"{path.name} fails validation"


def test_console_entry_point(tmp_path):
    # the installed script parses arguments and validates configs
    path = write_cfg(tmp_path, clusters_cfg())
    proc = subprocess.run([sys.executable, "-m", "oscbands.cli", "validate", path],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("ok")
