import json

import pytest

from degwave import cli
from degwave.config import dumps_config, loads_config, parse_config
from degwave.errors import DomainError, ParseError, UnknownKey

from conftest import C_S_DEFAULT, CONFIGS

CONFIG_FILES = sorted(p.name for p in CONFIGS.glob("*.toml"))
FAST = ["--set", "time.T=1.0", "--set", "grid.dx=0.05", "--set", "grid.x_min=-10",
        "--set", "grid.x_max=10"]


class TestConfig:
    @pytest.mark.parametrize("name", CONFIG_FILES)
    def test_bundled_configs_parse(self, name):
        cfg = parse_config(CONFIGS / name)
        assert cfg.diffusion().m > 1
        assert cfg.grid().dx > 0

    @pytest.mark.parametrize("name", CONFIG_FILES)
    def test_round_trip(self, name):
        cfg = parse_config(CONFIGS / name)
        again = loads_config(dumps_config(cfg))
        assert again.data == cfg.data and again.digest() == cfg.digest()

    @pytest.mark.parametrize("text,err", [
        ("[grid]\ndxx = 0.1\n", UnknownKey),
        ("[plots]\nx = 1\n", UnknownKey),
        ("[diffusion]\nm = 0.5\n", DomainError),
        ("[reaction]\ns1 = 0.6\ns2 = 0.5\n", DomainError),
        ("[time]\ndt_safety = 0.7\n", DomainError),
        ("[grid]\ndx = \"fine\"\n", DomainError),
        ("[grid\n", ParseError),
    ])
    def test_rejects(self, text, err):
        with pytest.raises(err):
            loads_config(text)

    def test_parse_error_location(self):
        with pytest.raises(ParseError) as exc:
            loads_config("[grid]\ndx = = 1\n")
        assert exc.value.details["line"] == 2

    def test_overrides(self):
        cfg = loads_config("", ["init.sigma=2", "grid.symmetric=false", "reaction.kind=logistic"])
        assert cfg["init"]["sigma"] == 2.0 and cfg["grid"]["symmetric"] is False
        assert cfg.reaction().kind == "logistic"
        with pytest.raises(ParseError):
            loads_config("", ["init.sigma"])

    def test_defaults_fill_in(self):
        cfg = loads_config("")
        assert cfg["reaction"]["s2"] == 0.55 and cfg["time"]["dt_safety"] == 0.4


def run_cli(tmp_path, *argv):
    out = tmp_path / argv[0]
    code = cli.main([*argv, "--out", str(out)])
    return code, out


class TestCli:
    def test_validate(self, tmp_path):
        code, out = run_cli(tmp_path, "validate", "--config", str(CONFIGS / "small_spreading.toml"))
        assert code == cli.EXIT_OK
        res = json.loads((out / "validation.json").read_text())
        assert res["reaction"]["ok"]

    @pytest.mark.parametrize("override", ["reaction.s2=0.9", "diffusion.m=0.5", "grid.nope=1"])
    def test_config_errors_exit_2(self, tmp_path, override):
        code, _ = run_cli(tmp_path, "validate", "--config", str(CONFIGS / "small_spreading.toml"),
                          "--set", override)
        assert code == cli.EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        code, _ = run_cli(tmp_path, "validate", "--config", str(tmp_path / "none.toml"))
        assert code == cli.EXIT_CONFIG

    def test_numerical_failure_exit_3(self, tmp_path):
        code, _ = run_cli(tmp_path, "stationary", "--config", str(CONFIGS / "small_spreading.toml"),
                          "--case", "CompactShort", "--target", "0.35")
        assert code == cli.EXIT_NUMERIC

    def test_undecided_exit_4(self, tmp_path):
        code, out = run_cli(tmp_path, "classify", "--config", str(CONFIGS / "small_spreading.toml"),
                            "--set", "classify.T=0.2", "--set", "classify.doublings=0")
        assert code == cli.EXIT_UNDECIDED
        assert json.loads((out / "classification.json").read_text())["verdict"] == "Undecided"

    def test_stationary(self, tmp_path):
        code, out = run_cli(tmp_path, "stationary", "--config", str(CONFIGS / "small_spreading.toml"))
        assert code == cli.EXIT_OK
        res = json.loads((out / "stationary.json").read_text())
        assert res["first_integral_error"] < 1e-6

    def test_waves_cs(self, tmp_path):
        code, out = run_cli(tmp_path, "waves", "--config", str(CONFIGS / "small_spreading.toml"),
                            "--which", "cs")
        assert code == cli.EXIT_OK
        res = json.loads((out / "waves.json").read_text())
        assert res["c_s"] == pytest.approx(C_S_DEFAULT, abs=1e-8)
        assert (out / "wave_small.csv").read_text().startswith("zeta,u,v,psi")

    def test_simulate_is_deterministic(self, tmp_path):
        args = ["simulate", "--config", str(CONFIGS / "small_spreading.toml"), *FAST,
                "--set", "time.snapshot_times=[0.0, 0.5, 1.0]", "--plots"]
        a = cli.main([*args, "--out", str(tmp_path / "a")])
        b = cli.main([*args, "--out", str(tmp_path / "b")])
        assert a == b == cli.EXIT_OK
        for name in ("fronts.csv", "snapshots.csv", "summary.json", "resolved_config.toml"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert (tmp_path / "a" / "fronts.gp").exists()
        man = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert {f["name"] for f in man["files"]} >= {"fronts.csv", "snapshots.csv"}
        sets = [a for a in args if "=" in a]
        assert man["config_hash"] == parse_config(CONFIGS / "small_spreading.toml", sets).digest()

    def test_oracle_needs_no_config(self, tmp_path):
        code, out = run_cli(tmp_path, "oracle")
        assert code == cli.EXIT_OK
        res = json.loads((out / "oracle.json").read_text())
        assert res["numeric"]["speed_error"] < 1e-5

    def test_parser_lists_all_subcommands(self):
        sub = cli.build_parser()._subparsers._group_actions[0]
        assert set(sub.choices) == {"validate", "stationary", "waves", "simulate", "classify",
                                    "terrace", "envelopes", "oracle"}
