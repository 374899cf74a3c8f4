import json
import os
from pathlib import Path

import pytest

from julialab.cli import main
from julialab.config import ConfigError, load_config, parse_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

Z2_MAP = {"numerator": [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]], "denominator": [[1.0, 0.0]]}


def small_config(tmp_path, **sections):
    data = {"map": Z2_MAP}
    data.update(sections)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)


class TestConfigValidation:
    def test_negative_r0_rejected(self, tmp_path, capsys):
        cfg = small_config(tmp_path, schedule={"r0": -0.5, "k_max": 5})
        code = main(["dimension", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 2
        assert "schedule.r0" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = small_config(tmp_path, schedule={"r0": 0.5, "k_max": 5, "shape": "dyadic"})
        code = main(["dimension", "--config", cfg, "--out", str(tmp_path / "o")])
        assert code == 2
        assert "unknown key" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["sample", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
        assert code == 2

    def test_bad_statistic(self, tmp_path):
        cfg = small_config(tmp_path, recurrence={"statistic": "mode"})
        with pytest.raises(SystemExit):
            # argparse path is fine; load_config raises before argparse exits
            raise SystemExit(main(["verify", "--config", cfg, "--out", str(tmp_path / "o")]))

    def test_parse_defaults(self):
        cfg = parse_config({"map": Z2_MAP})
        assert cfg.schedule.r0 == 0.5
        assert cfg.recurrence.statistic == "mean-return"

    def test_degree_one_map_rejected(self, tmp_path):
        data = {"map": {"numerator": [[0.0, 0.0], [1.0, 0.0]], "denominator": [[1.0, 0.0]]}}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="degree"):
            load_config(path)


class TestSampleCommand:
    def test_emits_csv_in_walk_order(self, tmp_path):
        cfg = small_config(tmp_path, sampler={"count": 500, "burn_in": 30, "seed": 3})
        out = tmp_path / "out"
        assert main(["sample", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "sample.csv").read_text().splitlines()
        assert lines[0] == "re,im"
        assert len(lines) == 501
        report = json.loads((out / "report.json").read_text())
        assert report["results"]["count"] == 500

    def test_jlab_out_env_default(self, tmp_path, monkeypatch):
        cfg = small_config(tmp_path, sampler={"count": 100, "burn_in": 20, "seed": 3})
        monkeypatch.chdir(tmp_path)
        monkeypatch.setenv("JLAB_OUT", str(tmp_path / "from-env"))
        assert main(["sample", "--config", cfg]) == 0
        assert (tmp_path / "from-env" / "sample.csv").exists()


class TestDimensionCommand:
    def test_z2_small(self, tmp_path):
        cfg = small_config(
            tmp_path,
            sampler={"count": 50_000, "burn_in": 50, "seed": 4},
            schedule={"r0": 0.5, "k_max": 9},
            thermo={"period_n": 8, "tol": 1e-4, "local_dimension_probes": 6},
        )
        out = tmp_path / "out"
        assert main(["dimension", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["results"]["bowen_dimension"] == pytest.approx(1.0, abs=0.02)
        assert (out / "pressure_curve.csv").exists()
        assert (out / "local_dimension.csv").exists()


class TestOracleCommand:
    def test_rejects_non_power_map(self, tmp_path, capsys):
        data = {"map": {"numerator": [[0.05, 0.0], [0.0, 0.0], [1.0, 0.0]], "denominator": [[1.0, 0.0]]}}
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(data))
        code = main(["oracle", "--config", path.as_posix(), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "z^d" in capsys.readouterr().err


class TestDeterminism:
    def test_worker_count_does_not_change_artifacts(self, tmp_path):
        cfg = small_config(
            tmp_path,
            sampler={"count": 20_000, "burn_in": 40, "seed": 12},
            schedule={"r0": 0.5, "k_max": 8},
            recurrence={"n_max": 200_000, "probes": 4, "periodic_probes": [[1.0, 0.0]]},
        )
        outs = []
        for workers in ("1", "3"):
            out = tmp_path / f"out-{workers}"
            code = main(["verify", "--config", cfg, "--workers", workers, "--out", str(out)])
            assert code == 0
            outs.append(out)
        for name in ("comparison_report.json", "report.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_seed_override_changes_sample(self, tmp_path):
        cfg = small_config(tmp_path, sampler={"count": 200, "burn_in": 30, "seed": 3})
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["sample", "--config", cfg, "--out", str(a)]) == 0
        assert main(["sample", "--config", cfg, "--seed", "99", "--out", str(b)]) == 0
        assert (a / "sample.csv").read_bytes() != (b / "sample.csv").read_bytes()


@pytest.mark.parametrize(
    "name",
    [
        "z2_verify.json",
        "z2_sample.json",
        "z2_dimension.json",
        "z3_dimension.json",
        "z2c_dimension.json",
        "z2_covariance.json",
        "z2_oracle.json",
        "z2_recurrence.json",
        "z2_verify_quick.json",
    ],
)
def test_shipped_configs_parse(name):
    cfg = load_config(CONFIG_DIR / name)
    assert cfg.map.degree >= 2
