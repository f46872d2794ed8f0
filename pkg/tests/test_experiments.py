import json

import pytest

from holderlab.cli import main
from holderlab.errors import ConfigError
from holderlab.experiments import (
    ExperimentConfig,
    default_config,
    emit_plot_data,
    ExperimentReport,
    load_config,
    run_experiment,
)

SMALL_AUDIT = {
    "experiment": "kernel-audit",
    "seed": 3,
    "conditions": {"betas": [0.3], "lag_k_min": 4, "lag_k_max": 7, "mesh_points": 64},
}

SMALL_SWEEP = {
    "experiment": "fractional-sweep",
    "seed": 3,
    "sweep": {"cases": [[1.5, 0.3]]},
    "conditions": {"betas": [0.0], "lag_k_min": 4, "lag_k_max": 7, "mesh_points": 64},
}

SMALL_BROWNIAN = {
    "experiment": "brownian-regularity",
    "seed": 5,
    "simulation": {"steps": 256, "grid_points": 512, "grid_length": 4.0,
                   "ensemble": 120},
    "moments": {"p": 2.0, "beta": 0.5, "lag_k_min": 1, "lag_k_max": 4,
                "pairs_per_lag": 48},
    "conditions": {"betas": [0.5], "lag_k_min": 4, "lag_k_max": 7,
                   "mesh_points": 64},
}

SMALL_POISSON = {
    "experiment": "poisson-regularity",
    "seed": 5,
    "simulation": {"steps": 256, "grid_points": 1024, "grid_length": 2.0,
                   "ensemble": 120},
    "noise": {"intensity": 10.0},
    "kernel": {"alpha": 1.5},
    "moments": {"p": 2.0, "beta": 0.5, "lag_k_min": 1, "lag_k_max": 4,
                "pairs_per_lag": 48},
    "conditions": {"betas": [0.5], "lag_k_min": 4, "lag_k_max": 7,
                   "mesh_points": 64},
}

SMALL_EMBED = {"experiment": "embedding-check", "seed": 2,
               "campanato": {"budget": 128, "n_centers": 12}}

ALL_SMALL = [SMALL_AUDIT, SMALL_SWEEP, SMALL_BROWNIAN, SMALL_POISSON, SMALL_EMBED]


def _write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_unknown_keys_rejected(tmp_path):
    path = _write(tmp_path, {"experiment": "kernel-audit", "mystery": 1})
    with pytest.raises(ConfigError):
        load_config(path)
    path = _write(tmp_path, {"experiment": "kernel-audit",
                             "conditions": {"betaz": [0.1]}})
    with pytest.raises(ConfigError):
        load_config(path)


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="quantum-audit")


def test_default_configs_exist():
    for preset in ("kernel-audit", "fractional-sweep", "brownian-regularity",
                   "poisson-regularity", "embedding-check"):
        cfg = default_config(preset, seed=1)
        assert cfg.experiment == preset
        assert cfg.seed == 1


def test_kernel_audit_small(tmp_path):
    cfg = load_config(_write(tmp_path, SMALL_AUDIT))
    report = run_experiment(cfg, out_dir=tmp_path / "out")
    assert report.passed
    assert (tmp_path / "out" / "report.json").exists()
    assert (tmp_path / "out" / "timing.json").exists()
    plots = sorted(p.name for p in (tmp_path / "out" / "plots").iterdir())
    assert "manifest.json" in plots
    # one CSV per condition table
    assert sum(1 for p in plots if p.endswith(".csv")) == 3


def test_embedding_check_invalid_theta(tmp_path):
    data = dict(SMALL_EMBED)
    data["campanato"] = {"theta": 1.0}
    cfg = load_config(_write(tmp_path, data))
    with pytest.raises(ConfigError):
        run_experiment(cfg, out_dir=tmp_path / "bad")
    marker = json.loads((tmp_path / "bad" / "FAILED.json").read_text())
    assert marker["invalid_config"]
    assert not (tmp_path / "bad" / "report.json").exists()


@pytest.mark.parametrize("config", ALL_SMALL,
                         ids=[c["experiment"] for c in ALL_SMALL])
def test_determinism_byte_identical(tmp_path, config):
    cfg_path = _write(tmp_path, config)
    outs = []
    for run in ("a", "b"):
        cfg = load_config(cfg_path)
        run_experiment(cfg, out_dir=tmp_path / run)
        outs.append((tmp_path / run / "report.json").read_bytes())
    assert outs[0] == outs[1]


def test_verdict_structure(tmp_path):
    cfg = load_config(_write(tmp_path, SMALL_BROWNIAN))
    report = run_experiment(cfg)
    claims = [v.claim for v in report.verdicts]
    assert any("gamma1" in c for c in claims)
    assert any("Monte Carlo" in c for c in claims)
    assert any("exact quadrature" in c for c in claims)
    data = report.to_dict()
    # every verdict quantity traces back to module outputs
    mc = [v for v in report.verdicts if "Monte Carlo" in v.claim][0]
    assert mc.fitted == pytest.approx(data["modules"]["moments"]["fitted_gamma"])


def test_emit_plot_data_empty_report(tmp_path):
    report = ExperimentReport(experiment="kernel-audit", config={},
                              verdicts=[], modules={}, seed=0)
    written = emit_plot_data(report, tmp_path / "plots")
    assert written == []
    manifest = json.loads((tmp_path / "plots" / "manifest.json").read_text())
    assert manifest["files"] == []


def test_emit_plot_lags_match_config(tmp_path):
    cfg = load_config(_write(tmp_path, SMALL_BROWNIAN))
    report = run_experiment(cfg, out_dir=tmp_path / "out")
    rows = (tmp_path / "out" / "plots" / "moments_lag.csv").read_text().strip().splitlines()
    lags = [float(r.split(",")[0]) for r in rows[1:]]
    expected = [2.0**-k for k in range(1, 5)]
    assert lags == expected


# --- CLI ------------------------------------------------------------------

def test_cli_audit_exit_zero(tmp_path, capsys):
    path = _write(tmp_path, SMALL_AUDIT)
    code = main(["audit-kernel", "--config", str(path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS" in out


def test_cli_config_error_exit_two(tmp_path):
    path = _write(tmp_path, {"experiment": "kernel-audit", "nope": True})
    assert main(["run", "--config", str(path)]) == 2


def test_cli_verdict_failure_exit_one(tmp_path):
    # small brownian run: the field-exponent sharpness verdict fails (the
    # measured parabolic exponent is 1, not beta), so the run exits 1
    path = _write(tmp_path, SMALL_BROWNIAN)
    assert main(["run", "--config", str(path)]) == 1


def test_cli_numerical_failure_exit_three(tmp_path):
    # a lattice too coarse for the Ito lag dt/2 trips the aliasing guard
    data = dict(SMALL_BROWNIAN)
    data["simulation"] = {"steps": 1024, "grid_points": 64,
                          "grid_length": 4.0, "ensemble": 120}
    path = _write(tmp_path, data)
    assert main(["run", "--config", str(path)]) == 3


def test_cli_invalid_theta_exit_two(tmp_path):
    data = {"experiment": "embedding-check", "campanato": {"theta": 0.9}}
    path = _write(tmp_path, data)
    assert main(["run", "--config", str(path)]) == 2


def test_cli_seed_flag_overrides(tmp_path):
    path = _write(tmp_path, SMALL_EMBED)
    code = main(["run", "--config", str(path), "--seed", "77",
                 "--out", str(tmp_path / "o")])
    assert code == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["rng"]["seed"] == 77


def test_cli_env_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("HOLDERLAB_SEED", "123")
    path = _write(tmp_path, SMALL_EMBED)
    code = main(["run", "--config", str(path), "--out", str(tmp_path / "o")])
    assert code == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["rng"]["seed"] == 123


def test_cli_simulate_moments_seminorm_chain(tmp_path):
    path = _write(tmp_path, SMALL_BROWNIAN)
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "ensemble.bin").exists()
    side = json.loads((tmp_path / "ensemble.json").read_text())
    assert side["dtype"] == "float32"
    assert main(["moments", "--ensemble", str(tmp_path / "ensemble"),
                 "--lag-k-min", "1", "--lag-k-max", "4", "--pairs", "32",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "moments.csv").exists()
    assert main(["seminorm", "--ensemble", str(tmp_path / "ensemble"),
                 "--scale-k-min", "2", "--scale-k-max", "4",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "seminorm.json").exists()


def test_cli_emit_plots_roundtrip(tmp_path):
    path = _write(tmp_path, SMALL_AUDIT)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "r")]) == 0
    code = main(["emit-plots", "--report", str(tmp_path / "r" / "report.json"),
                 "--out", str(tmp_path / "p")])
    assert code == 0
    assert (tmp_path / "p" / "manifest.json").exists()
