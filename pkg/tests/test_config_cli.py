import csv
import io
import json
import math

import numpy as np
import pytest

from mirrorcp.cli import main
from mirrorcp.config import RunConfig, config_hash, dump_config, load_config, parse_config
from mirrorcp.errors import ConfigError
from mirrorcp.params import ThermalConfig, TrapConfig


def _table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def _meta(text):
    out = {}
    for ln in text.splitlines():
        if ln.startswith("# ") and ": " in ln:
            k, v = ln[2:].split(": ", 1)
            out[k] = v
    return out


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({})
        assert cfg == RunConfig()

    def test_round_trip(self):
        data = {
            "atom": {"q": 2, "m": 0.5, "Omega": 1.5, "M": 3},
            "thermal": {"beta": "inf", "beta_bar": 2.0},
            "trap": {"omega_trap": [2, 2, 3], "z_bar": 7, "gamma": 0.1},
            "grid": {"dt": 0.02, "n": 500},
            "scan": {"z": [1, 2, 3], "temperatures": [[0, 0], [1, 2]]},
            "noise": {"kernel": "full", "eps": 0.01, "include_free": True},
            "ensemble": {"count": 200, "burn_in": 0.3},
            "seed": 42,
            "output": {"path": "x.csv"},
        }
        cfg = parse_config(data)
        again = parse_config(json.loads(dump_config(cfg)))
        assert again == cfg
        assert cfg.thermal.beta == math.inf
        assert json.loads(dump_config(cfg))["thermal"]["beta"] == "inf"

    def test_hash_ignores_output_only(self):
        a = parse_config({"seed": 1})
        b = parse_config({"seed": 1, "output": {"path": "elsewhere.csv"}})
        c = parse_config({"seed": 2})
        assert config_hash(a) == config_hash(b) != config_hash(c)

    @pytest.mark.parametrize(
        "data,where",
        [
            ([], "top level"),
            ({"nope": {}}, "unknown section"),
            ({"atom": {"q": "x"}}, "atom.q"),
            ({"atom": {"m": -1}}, "atom"),
            ({"atom": {"mass": 1}}, "unknown field"),
            ({"trap": {"omega_trap": [1, 2]}}, "trap.omega_trap"),
            ({"scan": {"z": []}}, "scan.z"),
            ({"scan": {"zmin": 5, "zmax": 1}}, "zmin"),
            ({"scan": {"temperatures": [[1]]}}, "temperatures"),
            ({"noise": {"kernel": "white"}}, "noise.kernel"),
            ({"ensemble": {"count": 0}}, "ensemble.count"),
            ({"seed": -3}, "seed"),
            ({"output": {"format": "parquet"}}, "output.format"),
        ],
    )
    def test_errors_name_the_field(self, data, where):
        with pytest.raises(ConfigError, match=where):
            parse_config(data)

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(bad)


def _write_cfg(tmp_path, data):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)


class TestForceScan:
    def test_output(self, tmp_path, capsys):
        assert main(["force-scan", "--zmin", "0.1", "--zmax", "10", "--zsteps", "3"]) == 0
        text = capsys.readouterr().out
        meta = _meta(text)
        assert meta["command"] == "force-scan" and len(meta["config_sha256"]) == 64
        rows = _table(text)
        assert [float(r["z"]) for r in rows] == pytest.approx([0.1, 1.0, 10.0])
        assert float(rows[1]["F_total"]) == pytest.approx(-0.01958049377307635, rel=1e-14)
        assert all(r["flag"] == "ok" for r in rows)

    def test_domain_rows_are_flagged(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, {"scan": {"z": [-1.0, 1.0]}})
        assert main(["force-scan", "--config", cfg]) == 0
        rows = _table(capsys.readouterr().out)
        assert len(rows) == 2
        assert rows[0]["flag"].startswith("domain_error") and rows[0]["F_total"] == "nan"
        assert rows[1]["flag"] == "ok"

    def test_dimensionless(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, {"atom": {"q": 2.0, "m": 0.5, "Omega": 2.0}, "scan": {"z": [0.5]}})
        main(["force-scan", "--config", cfg])
        phys = _table(capsys.readouterr().out)[0]
        main(["force-scan", "--config", cfg, "--dimensionless"])
        dim = _table(capsys.readouterr().out)[0]
        assert float(dim["z"]) == pytest.approx(1.0)
        assert float(dim["F_total"]) == pytest.approx(float(phys["F_total"]) * 0.5 / (4.0 * 8.0), rel=1e-14)


class TestThermalScan:
    def test_columns_and_reference(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, {"scan": {"z": [50.0], "temperatures": [[0, 0], [100, 100]]}})
        assert main(["thermal-scan", "--config", cfg]) == 0
        rows = _table(capsys.readouterr().out)
        assert list(rows[0]) == ["z", "T_field", "T_osc", "F_thermal_retarded", "F_thermal_dispersive",
                                 "F_total", "F_high_T_reference", "flag"]
        hot = rows[1]
        assert float(hot["F_total"]) == pytest.approx(float(hot["F_high_T_reference"]), rel=1e-3)
        assert float(rows[0]["F_high_T_reference"]) == 0.0


class TestKernel:
    def test_lags_and_diagnostics(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, {"grid": {"dt": 0.1, "n": 20}, "trap": {"z_bar": 2.0}})
        assert main(["kernel", "--config", cfg]) == 0
        text = capsys.readouterr().out
        rows = _table(text)
        assert len(rows) == 39
        assert float(rows[0]["lag"]) == pytest.approx(-1.9)
        assert len(rows[0]) == 10
        meta = _meta(text)
        assert "min_eigenvalue_ratio" in meta and "clipped_mass" in meta

    def test_ill_conditioned_exit_code(self, tmp_path, capsys):
        cfg = _write_cfg(tmp_path, {"grid": {"dt": 0.05, "n": 100}, "trap": {"z_bar": 1.0},
                                    "noise": {"kernel": "full"}})
        assert main(["kernel", "--config", cfg]) == 4
        assert "IllConditionedError" in capsys.readouterr().err


ENSEMBLE_CFG = {
    "trap": {"omega_trap": [2, 2, 2], "z_bar": 5.0, "gamma": 0.1},
    "grid": {"dt": 0.04, "n": 12501},
    "ensemble": {"count": 100},
    "seed": 3,
}


class TestEnsembleCommands:
    def test_simulate_outputs(self, tmp_path):
        cfg = _write_cfg(tmp_path, ENSEMBLE_CFG)
        out = tmp_path / "sim.csv"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        rows = _table(out.read_text())
        assert [r["axis"] for r in rows] == ["x", "y", "z"]
        assert all(r["count"] == "100" and r["seed"] == "3" for r in rows)
        man = json.loads((tmp_path / "sim.csv.json").read_text())
        assert man["seed"] == 3 and man["versions"]["mirrorcp"]
        assert man["config"]["trap"]["z_bar"] == 5.0
        assert "time" not in json.dumps(man).lower()

    def test_simulate_regime_exit_code(self, tmp_path):
        data = dict(ENSEMBLE_CFG, trap={"omega_trap": [2, 2, 2], "z_bar": 1.5, "gamma": 0.1})
        cfg = _write_cfg(tmp_path, data)
        out = tmp_path / "sim.csv"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 5
        assert out.exists() and (tmp_path / "sim.csv.json").exists()
        assert json.loads((tmp_path / "sim.csv.json").read_text())["regime_messages"]

    def test_dispersion_scan_slope(self, tmp_path):
        cfg = _write_cfg(tmp_path, dict(ENSEMBLE_CFG, scan={"z": [5.0, 10.0]}))
        out = tmp_path / "scan.csv"
        assert main(["dispersion-scan", "--config", cfg, "--out", str(out)]) == 0
        text = out.read_text()
        assert len(_table(text)) == 6
        assert "slope_z" in _meta(text)
        man = json.loads((tmp_path / "scan.csv.json").read_text())
        assert man["slope"][2] == pytest.approx(-6.0, abs=0.5)

    def test_domain_exit_code(self, tmp_path):
        cfg = _write_cfg(tmp_path, ENSEMBLE_CFG)
        assert main(["simulate", "--config", cfg, "--count", "10", "--out", str(tmp_path / "a.csv")]) == 3

    def test_step_size_exit_code(self, tmp_path):
        cfg = _write_cfg(tmp_path, dict(ENSEMBLE_CFG, grid={"dt": 0.2, "n": 1000}))
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a.csv")]) == 4


class TestUsage:
    def test_bad_config_exit_code(self, tmp_path, capsys):
        assert main(["force-scan", "--config", str(tmp_path / "none.json")]) == 2
        assert "ConfigError" in capsys.readouterr().err

    def test_argparse_errors(self):
        with pytest.raises(SystemExit) as exc:
            main(["force-scan", "--format", "xlsx"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_bad_override(self):
        assert main(["force-scan", "--zsteps", "0"]) == 2


@pytest.mark.parametrize("argv", [
    ["force-scan", "--zsteps", "7"],
    ["thermal-scan", "--zmin", "1", "--zmax", "5", "--zsteps", "3"],
    ["kernel"],
])
def test_reruns_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(argv + ["--out", str(a)])
    main(argv + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_thermal_config_inf_in_dict():
    assert RunConfig(thermal=ThermalConfig(beta=2.0)).to_dict()["thermal"]["beta_bar"] == "inf"
    assert RunConfig(trap=TrapConfig()).to_dict()["trap"]["omega_trap"] == [2.0, 2.0, 2.0]
    assert np.isfinite(RunConfig().scan.z_values()).all()
