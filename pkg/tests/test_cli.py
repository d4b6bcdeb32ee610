"""Tests for the ``h2b`` command-line tool."""

import json
import subprocess
import sys

import numpy as np
import pytest

from h2b.cli import ExperimentConfig, build_parser, main, read_trace, write_trace
from h2b.errors import ParameterError
from h2b.signalgen import HeartModel, SensorConfig, generate_ipi_series, render_trace
from h2b.types import Location

SUBCOMMANDS = [["gen"], ["extract"], ["quantize"], ["reconcile"], ["pair"], ["bench"],
               ["attack"], ["nist"], ["analyze"], ["analyze", "bit-table"],
               ["analyze", "sparsity"], ["analyze", "bench"], ["analyze", "attack"],
               ["analyze", "nist"]]


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


class TestConfig:
    """ExperimentConfig validation and JSON round trip."""

    def test_round_trip(self):
        """Test that to_json and from_json are inverse."""
        cfg = ExperimentConfig(seed=9, band=(3, 6), trials=7)
        assert ExperimentConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg

    def test_unknown_key(self):
        """Test that unknown config keys are rejected."""
        with pytest.raises(ParameterError):
            ExperimentConfig.from_json({"seed": 1, "colour": "red"})

    @pytest.mark.parametrize("field,value", [("seed", -1), ("trials", 0), ("m", 0),
                                             ("levels", 48), ("rate", 10.0),
                                             ("band", (5, 9))])
    def test_invalid(self, field, value):
        """Test that constraints of downstream modules are enforced at load time."""
        with pytest.raises(ParameterError):
            ExperimentConfig(**{field: value})


class TestTraceFiles:
    """CSV trace with a JSON sidecar."""

    def test_round_trip(self, tmp_path):
        """Test that samples, rate, location and beat times survive a write and read."""
        trace = render_trace(generate_ipi_series(HeartModel(seed=1), 10),
                             SensorConfig.at(Location.WRIST), seed=1)
        csv_path, json_path = write_trace(trace, tmp_path / "t")
        back = read_trace(csv_path)
        np.testing.assert_array_equal(back.samples, trace.samples)
        np.testing.assert_array_equal(back.true_beat_times, trace.true_beat_times)
        assert back.sampling_rate == trace.sampling_rate
        assert back.location is Location.WRIST
        assert csv_path.read_text().splitlines()[0] == "sampling_rate,location"
        assert "true_beat_times_ms" in json.loads(json_path.read_text())

    def test_missing_header(self, tmp_path):
        """Test that a CSV without the header is rejected."""
        (tmp_path / "bad.csv").write_text("1.0\n2.0\n")
        with pytest.raises(ParameterError):
            read_trace(tmp_path / "bad.csv")


class TestUsage:
    """Help text, usage errors and exit codes."""

    @pytest.mark.parametrize("words", SUBCOMMANDS, ids=" ".join)
    def test_help(self, words, capsys):
        """Test that --help prints usage and exits 0 for every subcommand."""
        with pytest.raises(SystemExit) as exc:
            main(words + ["--help"])
        assert exc.value.code == 0
        assert "usage:" in capsys.readouterr().out

    def test_unknown_flag(self, capsys):
        """Test that an unknown flag is a usage error with exit 2."""
        with pytest.raises(SystemExit) as exc:
            main(["bench", "--no-such-flag"])
        assert exc.value.code == 2

    def test_unknown_subcommand(self, capsys):
        """Test that an unknown subcommand is a usage error with exit 2."""
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_bad_band(self, capsys):
        """Test that a malformed --band is a usage error."""
        with pytest.raises(SystemExit) as exc:
            main(["bench", "--band", "4-6"])
        assert exc.value.code == 2

    def test_pipeline_failure(self, workdir, capsys):
        """Test that an unreadable input exits 1 with a reason on stderr."""
        code, out, err = run(["extract", "--trace", "missing.csv"], capsys)
        assert code == 1
        assert err.startswith("h2b extract:")

    def test_invalid_parameter_exit_one(self, capsys):
        """Test that a parameter rejected by a module exits 1."""
        code, _, err = run(["bench", "--trials", "0"], capsys)
        assert code == 1 and "trials" in err

    def test_console_script(self):
        """Test that the module runs as a script with usage errors giving exit 2."""
        proc = subprocess.run([sys.executable, "-m", "h2b.cli", "--bogus"],
                              capture_output=True, text=True)
        assert proc.returncode == 2
        assert "usage:" in proc.stderr

    def test_parser_lists_all_commands(self):
        """Test that every required subcommand is registered."""
        choices = build_parser()._subparsers._group_actions[0].choices
        assert set(choices) == {"gen", "extract", "quantize", "reconcile", "pair", "bench",
                                "analyze", "attack", "nist"}


class TestPair:
    """End-to-end pairing from the command line."""

    def test_noise_free(self, capsys):
        """Test that a noise-free pair exits 0 with identical 64-hex keys."""
        code, out, _ = run(["pair", "--noise-free", "--seed", "4"], capsys)
        assert code == 0
        lines = dict(line.split() for line in out.splitlines())
        assert lines["initiator"] == lines["responder"]
        assert len(lines["initiator"]) == 64
        int(lines["initiator"], 16)

    def test_json_report(self, capsys):
        """Test that --json reports verification, keys and diagnostics."""
        code, out, _ = run(["pair", "--noise-free", "--json"], capsys)
        report = json.loads(out)
        assert code == 0 and report["verified"] is True
        assert report["mismatch_bits"] == 0
        assert report["initiator_key"] == report["responder_key"]

    def test_from_files(self, workdir, capsys):
        """Test that generated trace files pair through --alice and --bob."""
        assert run(["gen", "--out-dir", "traces", "--noise", "0", "--jitter", "0"],
                   capsys)[0] == 0
        code, out, _ = run(["pair", "--alice", "traces/chest.csv",
                            "--bob", "traces/waist.csv", "--json"], capsys)
        assert code == 0 and json.loads(out)["verified"]

    def test_one_side_only(self, capsys):
        """Test that --alice without --bob exits 1."""
        assert run(["pair", "--alice", "a.csv"], capsys)[0] == 1

    def test_different_hearts_fail(self, workdir, capsys):
        """Test that traces of two different hearts fail to pair with exit 1."""
        run(["gen", "--out-dir", "a", "--locations", "chest", "--seed", "1"], capsys)
        run(["gen", "--out-dir", "b", "--locations", "waist", "--seed", "2"], capsys)
        code, _, err = run(["pair", "--alice", "a/chest.csv", "--bob", "b/waist.csv"], capsys)
        assert code == 1
        assert err.startswith("pairing failed:")


class TestStages:
    """gen, extract, quantize and reconcile chained through files."""

    def test_chain(self, workdir, capsys):
        """Test that the stages compose into a verified exchange with one flipped bit."""
        assert run(["gen", "--out-dir", "tr", "--locations", "chest", "--seed", "5"],
                   capsys)[0] == 0
        assert run(["extract", "--trace", "tr/chest.csv", "--out", "ipis.json"], capsys)[0] == 0
        ipis = json.loads((workdir / "ipis.json").read_text())
        assert set(ipis) >= {"intervals_ms", "beat_times_ms", "source_rate"}
        assert run(["quantize", "--ipis", "ipis.json", "--levels", "64", "--band", "4:6",
                    "--bits", "128", "--out", "a.json"], capsys)[0] == 0
        key = json.loads((workdir / "a.json").read_text())
        assert len(key["bits"]) == 128 and key["band"] == [4, 6]
        flipped = dict(key, bits=("1" if key["bits"][0] == "0" else "0") + key["bits"][1:])
        (workdir / "b.json").write_text(json.dumps(flipped))
        assert run(["reconcile", "--role", "alice", "--key", "a.json", "--matrix-seed", "11",
                    "--out", "msg.json"], capsys)[0] == 0
        assert len(json.loads((workdir / "msg.json").read_text())["y"]) == 50
        code, out, _ = run(["reconcile", "--role", "bob", "--key", "b.json",
                            "--matrix-seed", "11", "--message", "msg.json"], capsys)
        report = json.loads(out)
        assert code == 0 and report["verified"] and report["corrected_bits"] == 1
        assert len(report["final_key"]) == 64

    def test_bob_wrong_seed(self, workdir, capsys):
        """Test that bob with a different matrix seed rejects alice's message."""
        run(["gen", "--out-dir", "tr", "--locations", "chest"], capsys)
        run(["extract", "--trace", "tr/chest.csv", "--out", "i.json"], capsys)
        run(["quantize", "--ipis", "i.json", "--bits", "128", "--out", "k.json"], capsys)
        run(["reconcile", "--role", "alice", "--key", "k.json", "--matrix-seed", "1",
             "--out", "m.json"], capsys)
        code, out, err = run(["reconcile", "--role", "bob", "--key", "k.json",
                              "--matrix-seed", "2", "--message", "m.json"], capsys)
        assert code == 1
        assert json.loads(out)["verified"] is False
        assert err.startswith("reconciliation failed:")

    def test_extract_window_override(self, workdir, capsys):
        """Test that an even --window exits 1 through the smoother's validation."""
        run(["gen", "--out-dir", "tr", "--locations", "chest"], capsys)
        assert run(["extract", "--trace", "tr/chest.csv", "--window", "30"], capsys)[0] == 1


class TestReproducibility:
    """Outputs depend only on the config file and seed."""

    def test_bench_identical_bytes(self, workdir, capsys):
        """Test that two identical bench runs give identical CSV bytes."""
        argv = ["bench", "--method", "cs", "--mismatch-rate", "0.1", "--trials", "500",
                "--seed", "7"]
        code1, first, _ = run(argv, capsys)
        code2, second, _ = run(argv, capsys)
        assert code1 == code2 == 0
        assert first == second
        lines = first.splitlines()
        assert lines[0] == "trial,method,n,m,flips,success"
        assert len(lines) == 501
        assert {line.split(",")[4] for line in lines[1:]} == {"13"}

    def test_bench_threads(self, capsys):
        """Test that the thread count does not change the output."""
        argv = ["bench", "--method", "rs", "--trials", "40", "--seed", "3"]
        assert run(argv, capsys)[1] == run(argv + ["--threads", "3"], capsys)[1]

    def test_bench_json(self, capsys):
        """Test that --json reports the success rate."""
        code, out, _ = run(["bench", "--method", "rs", "--mismatch-rate", "0", "--trials", "5",
                            "--json"], capsys)
        assert code == 0 and json.loads(out)["success_rate"] == 1.0

    def test_config_file(self, workdir, capsys):
        """Test that a config file sets defaults and explicit flags override it."""
        cfg = ExperimentConfig(seed=7, trials=20).to_json()
        (workdir / "cfg.json").write_text(json.dumps(cfg))
        from_file = run(["bench", "--config", "cfg.json"], capsys)[1]
        from_flags = run(["bench", "--seed", "7", "--trials", "20"], capsys)[1]
        assert from_file == from_flags
        overridden = run(["bench", "--config", "cfg.json", "--trials", "5"], capsys)[1]
        assert len(overridden.splitlines()) == 6

    def test_bad_config_file(self, workdir, capsys):
        """Test that an unknown config key exits 1."""
        (workdir / "cfg.json").write_text(json.dumps({"sed": 1}))
        code, _, err = run(["bench", "--config", "cfg.json"], capsys)
        assert code == 1 and "sed" in err


class TestAnalyze:
    """Table and report subcommands."""

    def test_bit_table(self, capsys):
        """Test that the bit table has six rows and entropy and mismatch columns."""
        code, out, _ = run(["analyze", "bit-table", "--pairs", "50", "--seed", "3"], capsys)
        assert code == 0
        header, *rows = out.strip().splitlines()
        cols = header.split(",")
        assert "entropy" in cols and "mismatch" in cols
        assert len(rows) == 6
        assert [int(r.split(",")[cols.index("bit")]) for r in rows] == [1, 2, 3, 4, 5, 6]

    def test_sparsity_csv(self, capsys):
        """Test that the sparsity table has one row per trial."""
        code, out, _ = run(["analyze", "sparsity", "--trials", "100", "--seed", "1"], capsys)
        assert code == 0
        assert len(out.strip().splitlines()) == 101

    def test_attack_report(self, capsys):
        """Test that a small passive attack run reports zero successes as JSON."""
        code, out, _ = run(["analyze", "attack", "--trials", "4", "--users", "2"], capsys)
        report = json.loads(out)
        assert code == 0 and report["success_count"] == 0

    def test_nist_from_file(self, workdir, capsys):
        """Test that nist reads a 0/1 file and flags an all-zero sequence."""
        (workdir / "zeros.txt").write_text("0" * 2000)
        code, out, _ = run(["nist", "--bits", "zeros.txt"], capsys)
        report = json.loads(out)
        assert code == 0 and report["bits"] == 2000 and report["passed"] is False
        assert len(report["p_values"]) == 5

    def test_nist_too_short(self, workdir, capsys):
        """Test that fewer than 1000 bits exits 1."""
        (workdir / "short.txt").write_text("01" * 100)
        code, _, err = run(["nist", "--bits", "short.txt"], capsys)
        assert code == 1 and "1000" in err


class TestWriteScope:
    """Nothing is written outside the paths given on the command line."""

    @pytest.mark.parametrize("argv", [
        ["pair", "--noise-free", "--json"],
        ["bench", "--trials", "5"],
        ["analyze", "bit-table", "--pairs", "3"],
        ["analyze", "sparsity", "--trials", "100"],
        ["attack", "--trials", "2", "--users", "2"],
    ], ids=lambda a: " ".join(a[:2]))
    def test_only_out_written(self, argv, workdir, capsys):
        """Test that with --out only that file appears in the working directory."""
        assert run(argv + ["--out", "report.txt"], capsys)[0] == 0
        assert sorted(p.name for p in workdir.iterdir()) == ["report.txt"]
        assert capsys.readouterr().out == ""

    def test_gen_writes_only_out_dir(self, workdir, capsys):
        """Test that gen writes its traces under --out-dir only."""
        run(["gen", "--out-dir", "d", "--locations", "chest,wrist"], capsys)
        assert [p.name for p in workdir.iterdir()] == ["d"]
        assert sorted(p.name for p in (workdir / "d").iterdir()) == [
            "chest.csv", "chest.json", "wrist.csv", "wrist.json"]
