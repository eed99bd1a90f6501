"""Command-line interface: dispatch, outputs, config handling, exit codes."""

import json

import numpy as np
import pytest

from streamwalk.cli import RunConfig, dispatch, dump_config, parse_config_file


def run_cli(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_thresholds_rows(capsys):
    code, out, _ = run_cli(capsys, "thresholds", "--lmax", "6")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "L,alpha_L"
    rows = [ln.split(",") for ln in lines[1:]]
    assert rows[0] == ["1", "inf"]
    assert float(rows[1][1]) == 1.0
    assert float(rows[5][1]) == pytest.approx(np.sqrt(2) - 1, abs=1e-15)


def test_profile_values(capsys):
    code, out, _ = run_cli(capsys, "profile", "--alpha", "0.8", "--L", "2")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "j,u,ell_style"
    us = [float(ln.split(",")[1]) for ln in lines[1:]]
    assert us == pytest.approx([5 / 19, 9 / 19, 5 / 19], abs=1e-12)


def test_profile_json_sidecar_fields(capsys):
    code, out, _ = run_cli(capsys, "profile", "--alpha", "0.8", "--L", "2", "--json")
    doc = json.loads(out)
    assert set(doc) >= {"alpha", "L", "omega", "phi", "d0", "dL1", "Z"}
    assert doc["d0"] == pytest.approx(2.2 / 19)


def test_profile_linear_solver_for_subcritical(capsys):
    code, out, _ = run_cli(capsys, "profile", "--alpha", "0.3", "--L", "2", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["solver"] == "linear" and doc["omega"] is None


def test_profile_closed_solver_outside_window_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        dispatch(["profile", "--alpha", "0.3", "--L", "2", "--solver", "closed"])
    assert exc.value.code == 2


def test_simulate_zero_steps(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--alpha", "0.8", "--beta", "1",
                           "--steps", "0", "--seed", "7")
    assert code == 0
    assert out == "n,position,delta,dir\n"


def test_simulate_then_verify_roundtrip(tmp_path, capsys):
    log = tmp_path / "run.csv"
    code, _, _ = run_cli(capsys, "simulate", "--alpha", "0.8", "--beta", "1",
                         "--confine", "2", "--steps", "5000", "--seed", "11",
                         "--out", str(log))
    assert code == 0
    assert (tmp_path / "run.csv.meta.json").exists()
    code, out, _ = run_cli(capsys, "verify", str(log), "--L", "2")
    doc = json.loads(out)
    assert code == 0
    assert doc["lipschitz"] == "pass"
    assert doc["confinement_instances"]["checked"] == doc["confinement_instances"]["held"]
    assert doc["proposition"]["verdict"] in ("holds", "violated")
    assert doc["upstream_jumps"] > 0
    assert doc["max_stream"] > 0


def test_verify_detects_corruption(tmp_path, capsys):
    log = tmp_path / "run.csv"
    run_cli(capsys, "simulate", "--alpha", "0.8", "--beta", "1", "--confine", "2",
            "--steps", "2000", "--seed", "4", "--out", str(log))
    lines = log.read_text().split("\n")
    n, pos, delta, d = lines[100].split(",")
    lines[100] = f"{n},{pos},{float(delta) + 2.5},{d}"
    log.write_text("\n".join(lines))
    code, out, _ = run_cli(capsys, "verify", str(log), "--L", "2")
    assert code == 1
    assert json.loads(out)["lipschitz"] == "fail"


def test_verify_requires_alpha_without_sidecar(tmp_path):
    raw = tmp_path / "bare.csv"
    raw.write_text("n,position,delta,dir\n0,0,0,1\n")
    with pytest.raises(SystemExit) as exc:
        dispatch(["verify", str(raw), "--L", "2"])
    assert exc.value.code == 2


def test_verify_proposition_flags(tmp_path, capsys):
    log = tmp_path / "run.csv"
    run_cli(capsys, "simulate", "--alpha", "0.8", "--beta", "1", "--confine", "2",
            "--steps", "20000", "--seed", "5", "--out", str(log))
    code, out, _ = run_cli(capsys, "verify", str(log), "--L", "2",
                           "--eps", "0.1", "--D", "3.0")
    doc = json.loads(out)
    assert doc["proposition"]["eps"] == 0.1 and doc["proposition"]["D"] == 3.0
    assert doc["proposition"]["verdict"] == "holds"
    assert code == 0


def test_record_thin_emits_snapshot(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--alpha", "0.8", "--confine", "2",
                           "--steps", "500", "--seed", "2", "--record", "thin")
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "j,ell"
    assert sum(int(ln.split(",")[1]) for ln in lines[1:]) == 500


def test_invalid_arguments_exit_2():
    for argv in (
        ["simulate", "--alpha", "0.8", "--steps", "-3"],
        ["simulate", "--alpha", "0.8", "--steps", "10", "--confine", "0"],
        ["thresholds", "--lmax", "0"],
        ["profile", "--L", "2"],  # alpha missing
        ["experiment", "nosuch", "--alpha", "0.5"],
        ["nosuchcommand"],
    ):
        with pytest.raises(SystemExit) as exc:
            dispatch(argv)
        assert exc.value.code == 2


def test_error_messages_name_the_parameter(capsys):
    with pytest.raises(SystemExit):
        dispatch(["profile", "--L", "2"])
    err = capsys.readouterr().err
    assert "--alpha" in err


class TestConfig:
    def test_dump_and_reload_identical(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "experiment", "trapping", "--alpha", "0.8",
                               "--trials", "5", "--horizon", "1500", "--seed", "3",
                               "--dump-config")
        assert code == 0
        cfgfile = tmp_path / "cfg.txt"
        cfgfile.write_text(out)
        code, out2, _ = run_cli(capsys, "experiment", "trapping",
                                "--config", str(cfgfile), "--dump-config")
        assert code == 0 and out2 == out

    def test_flags_override_file(self, tmp_path, capsys):
        cfgfile = tmp_path / "cfg.txt"
        cfgfile.write_text("alpha=0.5\ntrials=9\n")
        code, out, _ = run_cli(capsys, "experiment", "trapping",
                               "--config", str(cfgfile), "--alpha", "0.7",
                               "--dump-config")
        assert "alpha=0.7" in out and "trials=9" in out

    def test_unknown_key_rejected_by_name(self, tmp_path, capsys):
        cfgfile = tmp_path / "cfg.txt"
        cfgfile.write_text("walrus=1\n")
        with pytest.raises(SystemExit) as exc:
            dispatch(["experiment", "trapping", "--config", str(cfgfile)])
        assert exc.value.code == 2
        assert "walrus" in capsys.readouterr().err

    def test_parse_round_trip_through_dataclass(self, tmp_path):
        cfg = RunConfig(alpha=0.8, trials=7, out=None, gamma=0.25)
        cfgfile = tmp_path / "cfg.txt"
        cfgfile.write_text(dump_config(cfg))
        loaded = RunConfig()
        for k, v in parse_config_file(str(cfgfile), lambda m: None).items():
            setattr(loaded, k, v)
        assert loaded == cfg


class TestExperimentCommand:
    def test_writes_files_and_summary(self, tmp_path, capsys):
        prefix = tmp_path / "exp"
        code, _, _ = run_cli(capsys, "experiment", "trapping", "--alpha", "0.8",
                             "--trials", "6", "--horizon", "2000", "--seed", "1",
                             "--out-prefix", str(prefix))
        assert code == 0
        trials = (tmp_path / "exp.trials.csv").read_text()
        assert trials.startswith("trial,seed,trapped,")
        doc = json.loads((tmp_path / "exp.summary.json").read_text())
        assert doc["params"]["config"]["alpha"] == 0.8
        assert doc["trials"] == 6

    def test_trial_csv_byte_identical_across_threads(self, tmp_path, capsys):
        outs = []
        for threads, name in ((1, "a"), (3, "b")):
            prefix = tmp_path / name
            code, _, _ = run_cli(capsys, "experiment", "range", "--alpha", "0.4",
                                 "--trials", "8", "--horizon", "3000", "--seed", "12",
                                 "--threads", str(threads), "--out-prefix", str(prefix))
            assert code == 0
            outs.append((tmp_path / f"{name}.trials.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_stdout_summary(self, capsys):
        code, out, _ = run_cli(capsys, "experiment", "coupling", "--alpha", "0.8",
                               "--L", "2", "--trials", "2", "--horizon", "20000",
                               "--seed", "6")
        doc = json.loads(out)
        assert code == 0 and doc["experiment"] == "coupling"

    def test_convergence_files(self, tmp_path, capsys):
        prefix = tmp_path / "conv"
        code, _, _ = run_cli(capsys, "experiment", "convergence", "--alpha", "0.8",
                             "--L", "2", "--horizon", "20000", "--seed", "2",
                             "--out-prefix", str(prefix))
        assert code == 0
        header = (tmp_path / "conv.checkpoints.csv").read_text().split("\n")[0]
        assert header == "n,sup_err,d0_hat,dL1_hat"
