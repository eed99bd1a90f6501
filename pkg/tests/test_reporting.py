"""Serialization: lossless floats, CSV round trips, JSON summaries."""

import io
import json
import math

import numpy as np
import pytest

from streamwalk import WalkParameters, reporting, run_walk
from streamwalk import experiments as E


class TestScalarFormat:
    @pytest.mark.parametrize(
        "x", [0.1, 1 / 3, 5 / 19, 2.2 / 19, 1e-300, 1.7e308, -0.0, 123456789.123456]
    )
    def test_floats_round_trip(self, x):
        assert float(reporting.fmt(x)) == x

    def test_specials(self):
        assert reporting.fmt(math.inf) == "inf"
        assert reporting.fmt(-math.inf) == "-inf"
        assert reporting.fmt(math.nan) == "nan"
        assert reporting.fmt(None) == ""
        assert reporting.fmt(True) == "1" and reporting.fmt(False) == "0"
        assert reporting.fmt(np.int64(7)) == "7"


class TestTrajectoryCsv:
    def test_round_trip(self):
        p = WalkParameters(alpha=0.8, beta=1.0, confinement=2, seed=3)
        log = run_walk(p, 500, record_interval=1)
        buf = io.StringIO()
        reporting.write_trajectory_csv(log, buf)
        buf.seek(0)
        back = reporting.read_trajectory_csv(buf, p)
        assert back.n_steps == 500
        assert np.array_equal(back.positions, log.positions)
        assert np.array_equal(back.deltas, log.deltas)
        assert np.array_equal(back.dirs, log.dirs)
        assert back.final_position == log.final_position
        assert back.final_local_times == log.final_local_times

    def test_empty_log(self):
        p = WalkParameters(alpha=0.8, seed=1)
        log = run_walk(p, 0)
        buf = io.StringIO()
        reporting.write_trajectory_csv(log, buf)
        assert buf.getvalue() == "n,position,delta,dir\n"
        buf.seek(0)
        back = reporting.read_trajectory_csv(buf, p)
        assert back.n_steps == 0 and back.final_position == 0

    def test_rejects_thinned_logs(self):
        log = run_walk(WalkParameters(alpha=0.5, seed=1), 100, record_interval=0)
        with pytest.raises(ValueError):
            reporting.write_trajectory_csv(log, io.StringIO())

    def test_rejects_bad_header(self):
        with pytest.raises(ValueError):
            reporting.read_trajectory_csv(
                io.StringIO("a,b\n"), WalkParameters(alpha=0.5)
            )


def test_snapshot_csv():
    log = run_walk(WalkParameters(alpha=0.8, confinement=2, seed=5), 100, record_interval=0)
    buf = io.StringIO()
    reporting.write_snapshot_csv(log.final_local_times, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "j,ell"
    rows = [tuple(map(int, ln.split(","))) for ln in lines[1:]]
    assert [j for j, _ in rows] == sorted(j for j, _ in rows)
    assert sum(c for _, c in rows) == 100


def test_profile_csv():
    buf = io.StringIO()
    u = np.array([5, 9, 5]) / 19
    reporting.write_profile_csv(u, u * 4.15625, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "j,u,ell_style"
    first = lines[1].split(",")
    assert first[0] == "1" and float(first[1]) == u[0]


def test_trial_csv_header_and_missing_fields():
    rows = [
        {"trial": 0, "seed": 1, "trapped": True, "x": -2, "interior_length": 2,
         "site_count": 4, "profile_err": 0.011, "range_early": 4, "range_final": 4},
        {"trial": 1, "seed": 2, "trapped": False, "x": None, "interior_length": None,
         "site_count": None, "profile_err": math.nan, "range_early": 5, "range_final": 9},
    ]
    buf = io.StringIO()
    reporting.write_trial_csv(rows, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "trial,seed,trapped,x,interior_length,site_count,profile_err,range_early,range_final"
    assert lines[1].startswith("0,1,1,-2,2,4,")
    assert lines[2] == "1,2,0,,,,,5,9"


def test_summary_json_echoes_params_and_is_valid_json():
    s = E.trapping_probability_experiment(0.8, 1.0, trials=4, horizon=2000, seed=9)
    doc = json.loads(reporting.summary_json(s, include_rows=True))
    assert doc["experiment"] == "trapping"
    assert doc["params"]["alpha"] == 0.8
    assert doc["master_seed"] == 9
    assert len(doc["rows"]) == 4
    assert doc["trial_seeds"][0] == s.trial_seeds[0]


def test_jsonable_handles_numpy_and_specials():
    out = reporting._jsonable(
        {"a": np.float64(0.5), "b": np.int32(3), "c": [np.inf, np.nan],
         "d": np.array([1.0, 2.0]), "e": np.bool_(True)}
    )
    assert out == {"a": 0.5, "b": 3, "c": ["inf", "nan"], "d": [1.0, 2.0], "e": True}
