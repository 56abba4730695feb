import json
import subprocess
import sys
from pathlib import Path

import pytest

from sparsematch.cli import build_parser, load_config_file, main, parse_strategies
from sparsematch.harness import ConfigError

REPO_ROOT = Path(__file__).resolve().parents[1]
TRIPS = str(REPO_ROOT / "data" / "nyc_sample_trips.csv")
ZONES = str(REPO_ROOT / "data" / "nyc_sample_zones.csv")


def run_cli(args, cwd=str(REPO_ROOT)):
    return subprocess.run(
        [sys.executable, "-m", "sparsematch.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def test_parse_strategies():
    configs = parse_strategies("offline,kvv,random:3,varopt:5", "montecarlo")
    assert [c.label for c in configs] == ["offline", "kvv", "random k=3", "varopt k=5"]
    assert configs[3].weights == "montecarlo"
    assert configs[1].weights is None
    with pytest.raises(ConfigError):
        parse_strategies(" , ", "montecarlo")


def test_config_file_parsing(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("# comment\nfamily = block\nn = 20\ntrials = 5\n")
    values = load_config_file(str(path))
    assert values == {"family": "block", "n": "20", "trials": "5"}
    bad = tmp_path / "bad.conf"
    bad.write_text("family block\n")
    with pytest.raises(ConfigError):
        load_config_file(str(bad))


def test_synth_runs_and_is_deterministic(tmp_path):
    args = ["synth", "--family", "bahmani", "--n", "20", "--seed", "7", "--trials", "5",
            "--mc", "10", "--strategies", "offline,random:3,varopt:3"]
    first = run_cli(args)
    second = run_cli(args)
    assert first.returncode == 0, first.stderr
    assert first.stdout == second.stdout
    assert first.stdout.startswith("strategy,k,mean,ci95,trials")


def test_synth_json_output(tmp_path):
    out = tmp_path / "rows.json"
    code = main(["synth", "--family", "block", "--n", "20", "--seed", "1", "--trials", "4",
                 "--mc", "8", "--strategies", "offline,kvv", "--format", "json",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert {d["strategy"] for d in doc} == {"offline", "kvv"}


def test_config_file_with_cli_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("family = block\nn = 20\ntrials = 3\nmc = 8\nstrategies = offline,kvv\n")
    out1 = tmp_path / "a.csv"
    code = main(["synth", "--config", str(conf), "--seed", "2", "--out", str(out1)])
    assert code == 0
    rows = out1.read_text().strip().split("\n")
    assert len(rows) == 3  # header + offline + kvv
    assert rows[1].endswith(",3")  # trials from the file
    out2 = tmp_path / "b.csv"
    code = main(["synth", "--config", str(conf), "--seed", "2", "--trials", "5", "--out", str(out2)])
    assert code == 0
    assert out2.read_text().strip().split("\n")[1].endswith(",5")  # CLI wins


def test_weights_round_trip(tmp_path):
    cache = tmp_path / "w.json"
    code = main(["weights", "--family", "block", "--n", "20", "--seed", "3", "--mc", "15",
                 "--weights-out", str(cache)])
    assert code == 0
    doc = json.loads(cache.read_text())
    assert doc["n"] == 20
    assert doc["entries"]
    out = tmp_path / "rows.csv"
    code = main(["synth", "--family", "block", "--n", "20", "--seed", "3", "--trials", "4",
                 "--strategies", "offline,varopt:5", "--weights", "file",
                 "--weights-in", str(cache), "--out", str(out)])
    assert code == 0
    assert len(out.read_text().strip().split("\n")) == 3


def test_bounds_subcommand(tmp_path):
    out = tmp_path / "bounds.csv"
    code = main(["bounds", "--family", "block", "--n", "20", "--seed", "1", "--trials", "10",
                 "--mc", "10", "--k-values", "3,5", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0].startswith("family,k,z,heavy_fraction,bound,empirical_mean")
    assert len(lines) == 3
    for line in lines[1:]:
        assert line.split(",")[-1] in ("sound", "violated")


def test_nyc_subcommand(tmp_path):
    out = tmp_path / "series.csv"
    code = main(["nyc", "--trips", TRIPS, "--zones", ZONES, "--seed", "1", "--trials", "3",
                 "--mc", "10", "--start", "2025-05-14T08:05:00", "--intervals", "2",
                 "--strategies", "offline,random:5", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "timestamp,strategy,cumulative_unmet"
    assert len(lines) == 1 + 2 * 2


def test_exit_code_2_on_config_error():
    assert main(["synth", "--family", "block", "--n", "15", "--trials", "2"]) == 2
    assert main(["synth", "--trials", "2"]) == 2  # no instance source
    assert main(["synth", "--family", "block", "--n", "20",
                 "--strategies", "warp:3"]) == 2


def test_exit_code_3_on_io_error(tmp_path):
    assert main(["nyc", "--trips", "/nonexistent/trips.csv", "--zones", ZONES]) == 3
    assert main(["synth", "--family", "block", "--n", "20", "--trials", "2", "--mc", "5",
                 "--strategies", "offline", "--out", "/nonexistent/dir/out.csv"]) == 3


def test_parser_rejects_unknown_subcommand():
    parser = build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["transmogrify"])


def test_synth_from_instance_file(tmp_path):
    from helpers import complete_uniform
    from sparsematch.instance import instance_to_json

    inst_path = tmp_path / "inst.json"
    inst_path.write_text(instance_to_json(complete_uniform(6)))
    out = tmp_path / "rows.csv"
    code = main(["synth", "--instance", str(inst_path), "--seed", "4", "--trials", "3",
                 "--mc", "5", "--strategies", "offline,random:2", "--out", str(out)])
    assert code == 0
    assert len(out.read_text().strip().split("\n")) == 3


def test_bad_start_timestamp_is_config_error():
    assert main(["nyc", "--trips", TRIPS, "--zones", ZONES, "--trials", "2", "--mc", "5",
                 "--strategies", "offline", "--start", "not-a-time"]) == 2
