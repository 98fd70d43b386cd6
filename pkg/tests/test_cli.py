import json
import subprocess
import sys

import pytest

from fatigue.cli import ConfigError, main, parse_config

MINIMAL = """
actions:
  - {name: a, payoff: 1}
  - {name: b, payoff: 10}
gamma: 1.0
"""


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "fatigue", *args], capture_output=True, text=True)


class TestParseConfig:
    def test_minimal(self):
        cfg = parse_config(MINIMAL, command="stationary")
        assert cfg.spec.actions == ("a", "b") and cfg.spec.gamma == 1.0
        assert cfg.command == "stationary" and cfg.format == "csv"

    def test_gamma_zero(self):
        with pytest.raises(ConfigError, match="strictly positive"):
            parse_config(MINIMAL.replace("gamma: 1.0", "gamma: 0"), command="stationary")

    def test_unknown_top_level(self):
        with pytest.raises(ConfigError, match="discount"):
            parse_config(MINIMAL + "discount: 0.9\n", command="stationary")

    def test_unknown_param(self):
        with pytest.raises(ConfigError, match=r"params\.beam"):
            parse_config(MINIMAL + "command: horizon\nparams: {beam: 3}\n")

    @pytest.mark.parametrize(
        "extra,field",
        [
            ("command: simulate\nparams: {T: 0}\n", "params.T"),
            ("command: simulate\nparams: {T: 1.5}\n", "params.T"),
            ("command: discounted\nparams: {lambda: 1.0}\n", "params.lambda"),
            ("command: horizon\nparams: {grid: [5, 3]}\n", "params.grid"),
            ("command: simulate\nparams: {strategy: lucky}\n", "params.strategy"),
            ("command: stationary\nseed: -1\n", "seed"),
            ("command: stationary\noutput: {format: xml}\n", "output.format"),
        ],
    )
    def test_field_messages(self, extra, field):
        with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
            parse_config(MINIMAL + extra)

    def test_missing_problem(self):
        with pytest.raises(ConfigError, match="no problem"):
            parse_config("command: stationary\n")

    def test_malformed(self):
        with pytest.raises(ConfigError, match="malformed"):
            parse_config("actions: [\n")

    def test_spec_file(self, tmp_path):
        (tmp_path / "p.yaml").write_text(MINIMAL)
        cfg = parse_config("spec: p.yaml\ncommand: stationary\n", base_dir=tmp_path)
        assert cfg.spec.payoffs == (1.0, 10.0)

    def test_mapping_actions(self):
        cfg = parse_config("actions: {a: 1, b: 10}\ngamma: 0.5\ncommand: greedy\n")
        assert cfg.spec.actions == ("a", "b")


class TestRun:
    def test_stationary_summary(self, capsys):
        assert main(["stationary", "--payoffs", "a=1,b=10", "--gamma", "1"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 1
        assert "value=2.75" in out[0] and "support={a,b}" in out[0]

    def test_horizon_csv(self, tmp_path, capsys):
        out = tmp_path / "v.csv"
        assert main(["horizon", "--payoffs", "a=1,b=10", "--gamma", "1", "--grid", "10:30:10", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "T,v_T,delta" and len(lines) == 4
        assert [p.name for p in tmp_path.iterdir()] == ["v.csv"]

    def test_simulate_decimated(self, tmp_path, capsys):
        out = tmp_path / "trace.csv"
        args = ["simulate", "--payoffs", "a=1,b=10", "--gamma", "1", "--strategy", "doubling"]
        assert main(args + ["--T", "98304", "--keep-every", "96", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "T,U_T" and len(lines) == 1 + 98304 // 96
        assert lines[-1].startswith("98304,")
        v = float(lines[1].split(",")[1])
        assert repr(float(format(v, ".17g"))) == repr(v)

    def test_json(self, tmp_path, capsys):
        out = tmp_path / "s.json"
        assert main(["stationary", "--payoffs", "a=1,b=10", "--gamma", "0.5", "--format", "json", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert abs(data["x"]["a"] - 1 / 11) <= 1e-12 and data["support"] == ["a", "b"]

    def test_deterministic_random(self, tmp_path, capsys):
        texts = []
        for k in range(2):
            out = tmp_path / f"r{k}.csv"
            main(["simulate", "--payoffs", "a=1,b=10,c=3", "--gamma", "0.8", "--strategy", "random", "--T", "5000", "--seed", "7", "--out", str(out)])
            texts.append(out.read_bytes())
        assert texts[0] == texts[1]
        out = tmp_path / "r2.csv"
        main(["simulate", "--payoffs", "a=1,b=10,c=3", "--gamma", "0.8", "--strategy", "random", "--T", "5000", "--seed", "8", "--out", str(out)])
        assert out.read_bytes() != texts[0]

    def test_history_round_trip(self, tmp_path, capsys):
        hist = tmp_path / "h.txt"
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        base = ["simulate", "--payoffs", "a=1,b=10", "--gamma", "1", "--format", "json"]
        assert main(base + ["--strategy", "greedy", "--T", "3000", "--history-out", str(hist), "--out", str(a)]) == 0
        assert main(base + ["--strategy", "file", "--history", str(hist), "--out", str(b)]) == 0
        da, db = json.loads(a.read_text()), json.loads(b.read_text())
        assert da["trace"] == db["trace"] and da["final"] == db["final"]

    def test_sweep_patience(self, tmp_path, capsys):
        out = tmp_path / "p.csv"
        cfg = tmp_path / "c.yaml"
        cfg.write_text(MINIMAL + "params: {kind: patience, lambdas: [0.5, 0.8], beam_width: 16}\n")
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
        assert out.read_text().splitlines()[0] == "lambda,delta,V_star,lower,upper,excess_lower,excess_upper"

    def test_threads_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("FATIGUE_THREADS", "3")
        assert main(["sweep", "--payoffs", "a=1,b=10", "--gamma", "1"]) == 0
        monkeypatch.setenv("FATIGUE_THREADS", "many")
        assert main(["sweep", "--payoffs", "a=1,b=10", "--gamma", "1"]) == 2


class TestExitCodes:
    def test_config_error(self):
        r = run_cli("stationary", "--payoffs", "a=1", "--gamma", "0")
        assert r.returncode == 2
        err = json.loads(r.stderr)
        assert err["error"] == "config" and "strictly positive" in err["message"]

    def test_runtime_error(self, tmp_path):
        hist = tmp_path / "h.txt"
        hist.write_text("a:3\n")
        r = run_cli("simulate", "--payoffs", "a=1,b=10", "--gamma", "1", "--strategy", "file", "--history", str(hist), "--T", "10")
        assert r.returncode == 1
        assert "exhausted" in json.loads(r.stderr)["message"]

    def test_ok(self):
        r = run_cli("greedy", "--payoffs", "a=1,b=10", "--gamma", "1")
        assert r.returncode == 0 and "greedy value=" in r.stdout
