import filecmp
import json

import numpy as np
import pytest

from levywave.cli_io import (ArtifactError, ExperimentConfig, config_from_dict, dump_config,
                             emit_plot_data, load_config, main)
from levywave.errors import ConfigError

SMALL = {
    "noise": {"N": [2, 4, 8], "epsilon": 0.05, "p": 1.8, "q": 1.2},
    "grid": {"T": 0.25, "A": 0.25, "R": 0.5, "dt": 0.0625, "dx": 0.0625},
    "analysis": {"windows": [{"radius": 0.25}], "lags": [1, 2], "h": [0.5, 0.25, 0.125, 0.0625]},
    "run": {"replicates": 200, "p4_replicates": 200, "moment_replicates": 4, "path_replicates": 4,
            "kernel_sweep_scale": 0.05},
}


def _write(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return p


def test_defaults_are_valid():
    cfg = config_from_dict({})
    assert cfg.grid.R >= cfg.grid.A + cfg.grid.T
    assert cfg.noise.kind == "stable" and cfg.equation.d == 1


def test_hash_ignores_the_output_directory():
    a = config_from_dict({"output": {"directory": "x"}})
    b = config_from_dict({"output": {"directory": "y"}})
    c = config_from_dict({"run": {"seed": 1}})
    assert a.hash() == b.hash() != c.hash()


@pytest.mark.parametrize("raw,field", [
    ({"grid": {"R": 1.5}}, "grid.R"),
    ({"grid": {"dx": "fine"}}, "grid.dx"),
    ({"run": {"seed": 1.5}}, "run.seed"),
    ({"grid": {"spacing": 1}}, "grid.spacing"),
    ({"solver": {}}, "solver"),
    ({"noise": {"alpha": 2.5}}, "noise.alpha"),
    ({"noise": {"kind": "gamma"}}, "noise.kind"),
    ({"noise": {"p": 1.2, "q": 1.0}}, "noise.p"),
    ({"equation": {"sigma": {"kind": "cubic"}}}, "equation.sigma.kind"),
    ({"grid": {"dt": 0.3}}, "grid.dt"),
])
def test_invalid_configs_name_the_field(raw, field):
    with pytest.raises(ConfigError) as exc:
        config_from_dict(raw)
    assert exc.value.field == field


def test_light_cone_message():
    with pytest.raises(ConfigError, match="finite speed of propagation"):
        config_from_dict({"grid": {"T": 1.0, "A": 1.0, "R": 1.9}})


def test_round_trip(tmp_path):
    cfg = config_from_dict(SMALL)
    dump_config(cfg, tmp_path / "c.json")
    back = load_config(tmp_path / "c.json")
    assert back.to_dict() == cfg.to_dict()
    assert isinstance(back, ExperimentConfig)


def test_main_reports_config_errors(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["simulate", "--config", str(p)]) == 2
    assert main(["simulate", "--config", str(_write(tmp_path, {"grid": {"R": 0.1}}))]) == 2
    assert "grid.R" in capsys.readouterr().err


def test_simulate_is_byte_reproducible(tmp_path):
    cfg = _write(tmp_path, SMALL)
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert main(["simulate", "--config", str(cfg), "--seed", "3", "--out", str(o)]) in (0, 1)
    cmp = filecmp.dircmp(outs[0], outs[1])
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    man = json.loads((outs[0] / "manifest.json").read_text())
    assert man["seed"] == 3 and man["command"] == "simulate"
    assert any(f.endswith("N2_u.npy") for f in man["files"])
    u = np.load(outs[0] / "simulate/rep_0000/N2_u.npy")
    assert u.shape == (5, 17)


def test_seed_changes_the_output(tmp_path):
    cfg = _write(tmp_path, SMALL)
    main(["simulate", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "a")])
    main(["simulate", "--config", str(cfg), "--seed", "2", "--out", str(tmp_path / "b")])
    a = np.load(tmp_path / "a/simulate/rep_0000/N8_u.npy")
    b = np.load(tmp_path / "b/simulate/rep_0000/N8_u.npy")
    assert not np.array_equal(a, b)


def test_sobolev_command_emits_plot_tables(tmp_path):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "s"
    main(["sobolev", "--config", str(cfg), "--out", str(out)])
    header = (out / "plot/profiles.csv").read_text().splitlines()[0]
    assert header == "t,r,window,value"
    assert (out / "plot/increments.csv").exists()
    fits = json.loads((out / "plot/fits.json").read_text())
    assert isinstance(fits, list)


def test_emit_plot_data_errors(tmp_path):
    assert emit_plot_data(str(tmp_path), []) == []
    with pytest.raises(ArtifactError):
        emit_plot_data(str(tmp_path), ["profiles"])
    with pytest.raises(ArtifactError):
        emit_plot_data(str(tmp_path), ["histograms"])
