"""End-to-end command-line behaviour, driven in-process via main(argv)."""

import json
import subprocess
import sys

import pytest

from vpsband.cli import EXIT_DOMAIN, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from vpsband.model import read_samples_csv
from vpsband.prober import ProbeConfig, Reflector, probe

SIM_CONFIG = """\
capacity_bps = 10e6
var_delay_rate = 1000
w1_bytes = 100
w2_bytes = 1100
n_pairs = 60
n_trials = 300
seed = 0
ns = 5,10
"""


def write_config(tmp_path, text=SIM_CONFIG):
    path = tmp_path / "sim.conf"
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# parse
# ---------------------------------------------------------------------------

def test_parse_bundled_logs_json(data_dir, tmp_path, capsys):
    out = tmp_path / "samples.csv"
    code = main(
        ["parse", str(data_dir / "sender.log"), str(data_dir / "receiver.log"),
         "--out", str(out), "--json"]
    )
    assert code == EXIT_OK
    diagnostics = json.loads(capsys.readouterr().out)
    assert diagnostics == {
        "parsed": 7,
        "malformed": 0,
        "matched": 2,
        "unmatched": 2,
        "paired": None,
        "duplicates": 1,
    }
    with open(out, newline="") as fp:
        samples = read_samples_csv(fp)
    assert [s.serial for s in samples] == [1353080554, 1353091581]


def test_parse_to_stdout_by_default(data_dir, capsys):
    code = main(["parse", str(data_dir / "sender.log"), str(data_dir / "receiver.log")])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("direction,serial,sent_at,bytes,delay_s")
    assert "matched 2" in out


def test_parse_without_matches_exits_domain(tmp_path, capsys):
    sender = tmp_path / "s.log"
    receiver = tmp_path / "r.log"
    sender.write_text("SNDP 9 77 -h a -n 100 -s 1\n")
    receiver.write_text(
        "RCDP 12 2 1.2.3.4 5 6.7.8.9 10 11.0 0.5 0X0 0X0 999 0 0\n"
    )
    code = main(["parse", str(sender), str(receiver), "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_DOMAIN
    assert "matched" in capsys.readouterr().err


def test_parse_missing_file_exits_io(tmp_path):
    code = main(["parse", str(tmp_path / "nope.log"), str(tmp_path / "nope2.log")])
    assert code == EXIT_IO


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def test_estimate_fixture_single_batch_json(data_dir, capsys):
    code = main(
        ["estimate", str(data_dir / "samples_mean815.csv"), "--batch-size", "20", "--json"]
    )
    assert code == EXIT_OK
    est = json.loads(capsys.readouterr().out)
    assert est["mbps"] == 9.82
    assert round(est["mbps"], 1) == 9.8
    assert est["n_pairs"] == 20
    assert est["sd_bps"] is None
    assert est["relative_error"] is None
    assert est["mean_delay_diff_s"] == pytest.approx(0.000815, abs=1e-12)


def test_estimate_fixture_batched_spread(data_dir, capsys):
    code = main(
        ["estimate", str(data_dir / "samples_mean815.csv"), "--batch-size", "5", "--json"]
    )
    assert code == EXIT_OK
    est = json.loads(capsys.readouterr().out)
    assert est["sd_bps"] > 0
    assert 0 < est["relative_error"] < 1
    assert est["mean_delay_diff_s"] == pytest.approx(0.000815, abs=1e-12)


def test_estimate_human_output_shows_units(data_dir, capsys):
    code = main(["estimate", str(data_dir / "samples_mean815.csv")])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "available bandwidth: 9.82 Mbit/s" in out
    assert "0.815 ms" in out


def test_estimate_requires_both_size_flags(data_dir):
    with pytest.raises(SystemExit) as exc_info:
        main(["estimate", str(data_dir / "samples_mean815.csv"), "--w1", "100"])
    assert exc_info.value.code == EXIT_USAGE


def test_estimate_three_sizes_needs_explicit_flags(tmp_path, capsys):
    path = tmp_path / "three.csv"
    path.write_text(
        "direction,serial,sent_at,bytes,delay_s\n"
        "forward,1,0.0,100,0.009\n"
        "forward,2,0.1,1100,0.0098\n"
        "forward,3,0.2,512,0.0093\n"
        "forward,4,10.0,100,0.009\n"
        "forward,5,10.1,1100,0.0098\n"
    )
    with pytest.raises(SystemExit) as exc_info:
        main(["estimate", str(path)])
    assert exc_info.value.code == EXIT_USAGE
    assert "[100, 512, 1100]" in capsys.readouterr().err

    code = main(["estimate", str(path), "--w1", "100", "--w2", "1100", "--json"])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["n_pairs"] == 2


def test_estimate_missing_file_exits_io(tmp_path):
    assert main(["estimate", str(tmp_path / "nope.csv")]) == EXIT_IO


def test_estimate_bad_header_exits_domain(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("serial,delay\n1,0.5\n")
    assert main(["estimate", str(path)]) == EXIT_DOMAIN
    assert "line 1" in capsys.readouterr().err


def test_estimate_empty_file_exits_domain(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("direction,serial,sent_at,bytes,delay_s\n")
    assert main(["estimate", str(path)]) == EXIT_DOMAIN


def test_estimate_rejects_zero_batch_size(data_dir):
    with pytest.raises(SystemExit) as exc_info:
        main(["estimate", str(data_dir / "samples_mean815.csv"), "--batch-size", "0"])
    assert exc_info.value.code == EXIT_USAGE


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_writes_deterministic_outputs(tmp_path, capsys):
    config = write_config(tmp_path)
    code = main(["simulate", config, "--out-dir", str(tmp_path / "a"), "--json"])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["n_pairs"] == 60
    assert summary["seed"] == 0
    assert [p["n"] for p in summary["error_vs_n"]] == [5, 10]

    assert main(["simulate", config, "--out-dir", str(tmp_path / "b")]) == EXIT_OK
    capsys.readouterr()
    for name in ("samples.csv", "error_vs_n.csv"):
        first = (tmp_path / "a" / name).read_bytes()
        second = (tmp_path / "b" / name).read_bytes()
        assert first == second, f"{name} differs between identical runs"

    with open(tmp_path / "a" / "samples.csv", newline="") as fp:
        assert len(read_samples_csv(fp)) == 120  # two samples per pair


def test_simulate_seed_override_changes_samples(tmp_path, capsys):
    config = write_config(tmp_path)
    main(["simulate", config, "--out-dir", str(tmp_path / "a")])
    main(["simulate", config, "--out-dir", str(tmp_path / "c"), "--seed", "7"])
    capsys.readouterr()
    assert (tmp_path / "a" / "samples.csv").read_bytes() != (
        tmp_path / "c" / "samples.csv"
    ).read_bytes()


def test_simulate_single_trial_skips_error_table(tmp_path, capsys):
    config = write_config(tmp_path, SIM_CONFIG.replace("n_trials = 300", "n_trials = 1"))
    code = main(["simulate", config, "--out-dir", str(tmp_path / "d"), "--json"])
    assert code == EXIT_OK
    captured = capsys.readouterr()
    assert "n_trials < 2" in captured.err
    summary = json.loads(captured.out)
    assert summary["error_table_csv"] is None
    assert (tmp_path / "d" / "samples.csv").exists()
    assert not (tmp_path / "d" / "error_vs_n.csv").exists()


def test_simulate_bad_config_exits_domain(tmp_path, capsys):
    config = write_config(tmp_path, "capacity_bps=10e6\n")
    assert main(["simulate", config, "--out-dir", str(tmp_path / "e")]) == EXIT_DOMAIN
    assert "missing required key" in capsys.readouterr().err


def test_simulate_missing_config_exits_io(tmp_path):
    assert main(["simulate", str(tmp_path / "nope.conf"), "--out-dir", str(tmp_path)]) == EXIT_IO


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------

def test_plan_reference_conditions_json(capsys):
    code = main(["plan", "--var-rate", "1000", "--diff", "0.0008", "--eta", "0.244", "--json"])
    assert code == EXIT_OK
    plan = json.loads(capsys.readouterr().out)
    assert plan["n"] == 50
    assert plan["analytic_n"] == 53
    assert plan["extrapolated"] is False


@pytest.mark.parametrize("eta", ["0.244", "24.4", "24.4%"])
def test_plan_accepts_fraction_and_percent_targets(eta, capsys):
    code = main(["plan", "--var-rate", "1000", "--diff", "0.0008", "--eta", eta, "--json"])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["n"] == 50


def test_plan_tight_target_is_flagged_extrapolated(capsys):
    code = main(["plan", "--var-rate", "1000", "--diff", "0.0008", "--eta", "0.01", "--json"])
    assert code == EXIT_OK
    plan = json.loads(capsys.readouterr().out)
    assert plan["extrapolated"] is True
    assert plan["n"] > 200


def test_plan_rejects_bad_targets(capsys):
    assert main(["plan", "--var-rate", "1000", "--diff", "0.0008", "--eta", "-0.1"]) == EXIT_USAGE
    assert main(["plan", "--var-rate", "-5", "--diff", "0.0008", "--eta", "0.2"]) == EXIT_USAGE
    capsys.readouterr()


# ---------------------------------------------------------------------------
# probe / reflect
# ---------------------------------------------------------------------------

def test_probe_cli_loopback_with_csv(tmp_path, capsys):
    out = tmp_path / "probe.csv"
    with Reflector(host="127.0.0.1") as reflector:
        code = main(
            ["probe", "--target", f"127.0.0.1:{reflector.address[1]}",
             "--count", "10", "--spacing", "0.002", "--out", str(out), "--json"]
        )
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["sent"] == 20
    assert summary["pairs"] + summary["lost_pairs"] == 10
    assert "symmetric" in summary["caveat"]
    assert "estimate" in summary  # may be null when loopback noise wins

    with open(out, newline="") as fp:
        samples = read_samples_csv(fp)
    assert len(samples) == 2 * summary["pairs"]


def test_probe_cli_silent_target_exits_domain(capsys):
    import socket

    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as black_hole:
        black_hole.bind(("127.0.0.1", 0))
        port = black_hole.getsockname()[1]
        code = main(
            ["probe", "--target", f"127.0.0.1:{port}",
             "--count", "2", "--spacing", "0.01", "--timeout", "0.3"]
        )
    assert code == EXIT_DOMAIN
    assert "no echoes" in capsys.readouterr().err


def test_probe_cli_rejects_bad_shape(capsys):
    code = main(["probe", "--target", "127.0.0.1:6000", "--w1", "8"])
    assert code == EXIT_USAGE
    assert "header" in capsys.readouterr().err


def test_probe_cli_rejects_target_without_port():
    with pytest.raises(SystemExit) as exc_info:
        main(["probe", "--target", "localhost"])
    assert exc_info.value.code == EXIT_USAGE


def test_reflect_bind_conflict_exits_domain(capsys):
    with Reflector(host="127.0.0.1") as holder:
        code = main(["reflect", "--listen", f"127.0.0.1:{holder.address[1]}"])
    assert code == EXIT_DOMAIN
    assert "cannot bind" in capsys.readouterr().err


def test_reflect_subprocess_answers_probes():
    proc = subprocess.Popen(
        [sys.executable, "-c", "from vpsband.cli import main; raise SystemExit(main())",
         "reflect", "--listen", "127.0.0.1:0", "--json"],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        host, port = json.loads(proc.stdout.readline())["listening"]
        result = probe(
            ProbeConfig(host=host, port=port, count=5, spacing_s=0.005, timeout_s=2.0)
        )
        assert len(result.pairs) + result.lost_pairs == 5
        assert result.received > 0
    finally:
        proc.terminate()
        proc.wait(timeout=5)


# ---------------------------------------------------------------------------
# reproduce-paper
# ---------------------------------------------------------------------------

def test_reproduce_outputs_and_reruns_identically(tmp_path, capsys):
    first = tmp_path / "ref_a"
    second = tmp_path / "ref_b"
    code = main(["reproduce-paper", "--out-dir", str(first), "--json"])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["seed"] == 42
    assert [p["n"] for p in summary["error_vs_n"]] == [5, 10, 20, 30, 50, 100, 200]
    assert summary["plan"] == {
        "n": 50,
        "analytic_n": 53,
        "extrapolated": False,
        "scaled_target": 0.244,
    }
    assert summary["skipped_batches"] >= 0

    assert main(["reproduce-paper", "--out-dir", str(second)]) == EXIT_OK
    capsys.readouterr()
    for name in ("samples.csv", "error_vs_n.csv", "averaging_curves.csv", "plan.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()

    curves = (first / "averaging_curves.csv").read_text().splitlines()
    assert curves[0] == "batch_size,batch_index,mbps"
    assert len(curves) == 1 + 150 + 60 + 30  # batches of 20, 50, 100 over 3000 pairs


# ---------------------------------------------------------------------------
# top-level usage
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["plan"]])
def test_usage_errors_exit_64(argv):
    with pytest.raises(SystemExit) as exc_info:
        main(argv)
    assert exc_info.value.code == EXIT_USAGE


def test_installed_script_entry_point():
    done = subprocess.run(
        ["vpsband", "plan", "--var-rate", "2000", "--diff", "0.0008", "--eta", "0.244", "--json"],
        capture_output=True,
        text=True,
    )
    assert done.returncode == EXIT_OK
    assert json.loads(done.stdout)["n"] == 13
