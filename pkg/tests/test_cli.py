import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hribm.biofilm import read_positions
from hribm.cli import ConfigError, DEFAULTS, load_config, main, run_scenario


class TestConfig:
    def test_defaults_reproduce_production_constants(self):
        conf = load_config(None)
        phys = conf["physical"]
        assert float(phys["mu0_pa_s"]) == 1e-3
        assert float(phys["rho0_kg_m3"]) == 998.0
        assert float(phys["l_m"]) == 1e-5
        assert float(phys["omega"]) == 0.033
        assert float(phys["mu_b"]) == 250.0
        assert float(phys["rho_b"]) == 0.12
        assert float(phys["d0"]) == 0.159
        assert float(phys["cutoff"]) == 0.162
        assert float(phys["f_max_n"]) == 1.3223e-9
        assert float(conf["sar"]["nu_rad_s"]) == 49.91
        assert float(conf["sar"]["strain_amplitude"]) == 0.13
        assert float(conf["creep"]["f_max_n"]) == 2.9091e-9

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/path.ini")

    def test_unknown_key_rejected(self, tmp_path):
        f = tmp_path / "bad.ini"
        f.write_text("[sar]\nfrequency = 3\n")
        with pytest.raises(ConfigError):
            load_config(str(f))

    def test_unknown_section_rejected(self, tmp_path):
        f = tmp_path / "bad.ini"
        f.write_text("[nonsense]\nx = 1\n")
        with pytest.raises(ConfigError):
            load_config(str(f))

    def test_override(self, tmp_path):
        f = tmp_path / "ok.ini"
        f.write_text("[sar]\nseed = 7\n")
        conf = load_config(str(f))
        assert conf["sar"]["seed"] == "7"
        assert conf["sar"]["nu_rad_s"] == "49.91"  # untouched default


class TestGenBiofilmScenario:
    def test_deterministic_and_micrometers(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_scenario("gen-biofilm", None, str(a), seed=1)
        run_scenario("gen-biofilm", None, str(b), seed=1)
        fa = (a / "positions.txt").read_bytes()
        fb = (b / "positions.txt").read_bytes()
        assert fa == fb
        X = read_positions(a / "positions.txt")
        assert X.shape[0] == round(0.9 * 2.7 * 0.9 / 0.159 ** 3)

    def test_seed_changes_output(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_scenario("gen-biofilm", None, str(a), seed=1)
        run_scenario("gen-biofilm", None, str(b), seed=2)
        assert (a / "positions.txt").read_bytes() != (b / "positions.txt").read_bytes()

    def test_manifest_reproduces_run(self, tmp_path):
        a = tmp_path / "a"
        run_scenario("gen-biofilm", None, str(a), seed=5)
        # the manifest is itself a valid config: rerunning from it must
        # reproduce the artifact bit for bit
        b = tmp_path / "b"
        run_scenario("gen-biofilm", str(a / "manifest.txt"), str(b))
        assert (a / "positions.txt").read_bytes() == (b / "positions.txt").read_bytes()


class TestValidateScenario:
    def test_fluid_validation_artifact(self, tmp_path):
        cfgf = tmp_path / "cfg.ini"
        cfgf.write_text("[validate]\nny = 16\nnu_dt = 0.008\n")
        out = tmp_path / "out"
        paths = run_scenario("validate-fluid", str(cfgf), str(out))
        names = {p.name for p in paths}
        assert "manifest.txt" in names and "validation.csv" in names
        lines = (out / "validation.csv").read_text().splitlines()
        assert lines[0] == "nu_rad_s,ny,nu_dt,max_error_m_per_s"
        err = float(lines[1].split(",")[3])
        assert err < 1e-8


class TestCliEntry:
    def test_missing_config_exit_2(self, tmp_path, capsys):
        rc = main(["sar", "--config", "/no/such/file.ini", "--out", str(tmp_path)])
        assert rc == 2

    def test_bad_scenario_rejected(self):
        with pytest.raises(SystemExit):
            main(["warp-drive"])

    def test_gen_biofilm_cli(self, tmp_path, capsys):
        rc = main(["gen-biofilm", "--out", str(tmp_path / "o"), "--seed", "3"])
        assert rc == 0
        assert (tmp_path / "o" / "positions.txt").is_file()
        assert (tmp_path / "o" / "manifest.txt").is_file()

    def test_threads_validated(self, tmp_path):
        rc = main(["gen-biofilm", "--out", str(tmp_path), "--threads", "0"])
        assert rc == 2

    def test_console_script_runs(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "hribm.cli", "gen-biofilm", "--out", str(tmp_path / "cli"), "--seed", "2"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert (tmp_path / "cli" / "positions.txt").is_file()
