# Copyright © 2024 ffrank authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Unit tests for functions defined in harness.py source file."""

import json
from dataclasses import replace

import pandas as pd
import pytest

from ffrank import ensemble
from ffrank.analytic import Mode, ldpc_rate, make_ensemble, rank_limit
from ffrank.config import CHECKS, ExperimentConfig, config_from_document, parse_ensemble
from ffrank.degrees import point, truncated_poisson
from ffrank.errors import ConfigError, DomainError, RejectionBudgetExhausted
from ffrank.harness import (
    CSV_COLUMNS,
    TrialRecord,
    emit_curve,
    ldpc_rate_mc,
    records_frame,
    run_experiment,
    run_trial,
    verify_worked_examples,
)

CSV_HEADER = ("trial,seed,m,rank,nullity,n_star,m_star,bound,bound_tight,"
              "kernel_zero_on_core,wall_ms")

# ensemble, n, seed
trials = (
        (parse_ensemble("regular-3-3"), 60, 1),
        (parse_ensemble("mixed-3-15", q=3), 90, 2),
        (make_ensemble(truncated_poisson(1, 2.0), point(4), q=4), 80, 3),
)

# acceptance runs: ensemble, n, trials, tolerance
acceptance = (
        (parse_ensemble("regular-3-3"), 1200, 10, 0.02),
        (parse_ensemble("mixed-3-15"), 3000, 10, 0.02),
        (parse_ensemble("d=tpoisson:ell=1,mean=2.5;k=point:3"), 3000, 20, 0.01),
        (parse_ensemble("d=tpoisson:ell=1,mean=3.0;k=point:3"), 3000, 20, 0.01),
)


def _config(tmp_path, ens, n, trials_count, **kwargs):
    return ExperimentConfig(ensemble=ens, n=n, trials=trials_count,
                            csv_path=tmp_path / "trials.csv",
                            json_path=tmp_path / "summary.json", **kwargs)


@pytest.fixture(autouse=True)
def no_thread_cap(monkeypatch):
    """Run without the worker cap from the environment."""
    monkeypatch.delenv("FFRANK_THREADS", raising=False)


@pytest.mark.parametrize("ens, n, seed", trials)
def test_run_trial_all_checks(ens, n, seed):
    """Check the record of one trial with every check enabled."""
    ens = replace(ens, n=n)
    record = run_trial(ens, 0, seed, CHECKS)
    assert record.rank + record.nullity == n
    assert record.nullity >= record.bound
    assert 0 <= record.n_star <= n
    assert 0 <= record.m_star <= record.m
    assert record.bound == n - record.n_star - (record.m - record.m_star)
    assert isinstance(record.bound_tight, bool)
    assert isinstance(record.kernel_zero_on_core, bool)
    assert record.wall_ms >= 0


def test_run_trial_rank_only():
    """Check that structural columns stay empty without their checks."""
    record = run_trial(parse_ensemble("regular-3-3", n=30), 4, 99, ("rank",))
    assert (record.trial, record.seed) == (4, 99)
    assert record.n_star is None and record.bound is None
    assert record.kernel_zero_on_core is None


def test_run_experiment_outputs(tmp_path):
    """Check the CSV header, the records and the summary."""
    cfg = _config(tmp_path, parse_ensemble("regular-3-3", n=60), 60, 4, seed=5, workers=1)
    summary = run_experiment(cfg)

    with open(cfg.csv_path, encoding="utf-8") as fin:
        assert fin.readline().strip() == CSV_HEADER
    frame = pd.read_csv(cfg.csv_path)
    assert list(frame["trial"]) == [0, 1, 2, 3]
    assert (frame["rank"] + frame["nullity"] == 60).all()
    assert (frame["nullity"] >= frame["bound"]).all()
    assert summary.completed == 4
    assert summary.mean_rank_fraction == pytest.approx((frame["rank"] / 60).mean(), abs=1e-12)
    assert summary.rank_limit == pytest.approx(1.0, abs=1e-9)
    assert summary.mean_core_var_fraction == pytest.approx((frame["n_star"] / 60).mean())

    with open(cfg.json_path, encoding="utf-8") as fin:
        document = json.load(fin)
    assert document["passed"] == summary.passed
    assert document["failures"] == []
    assert document["ensemble"]["d"] == "point:3"


def test_run_experiment_deterministic(tmp_path):
    """Check that results do not depend on the number of workers."""
    ens = parse_ensemble("mixed-3-15", n=90)
    first = tmp_path / "first"
    second = tmp_path / "second"
    first.mkdir()
    second.mkdir()
    run_experiment(_config(first, ens, 90, 6, seed=11, workers=1))
    run_experiment(_config(second, ens, 90, 6, seed=11, workers=3))
    one = pd.read_csv(first / "trials.csv").drop(columns=["wall_ms"])
    many = pd.read_csv(second / "trials.csv").drop(columns=["wall_ms"])
    pd.testing.assert_frame_equal(one, many)


def test_run_experiment_flushes_failures(tmp_path, monkeypatch):
    """Check that failed trials are recorded before the error propagates."""
    monkeypatch.setattr(ensemble, "CONDITIONING_BUDGET", 0)
    cfg = _config(tmp_path, parse_ensemble("regular-3-3", n=30), 30, 2, workers=1)
    with pytest.raises(RejectionBudgetExhausted):
        run_experiment(cfg)
    with open(cfg.csv_path, encoding="utf-8") as fin:
        assert fin.read().strip() == CSV_HEADER
    with open(cfg.json_path, encoding="utf-8") as fin:
        document = json.load(fin)
    assert document["completed"] == 0
    assert not document["passed"]
    assert [f["trial"] for f in document["failures"]] == [0, 1]
    assert {f["error"] for f in document["failures"]} == {"RejectionBudgetExhausted"}


def test_records_frame_empty_columns():
    """Check that missing values leave integer columns integral."""
    records = [run_trial(parse_ensemble("regular-3-3", n=30), 0, 1, ("rank",))]
    frame = records_frame(records)
    assert tuple(frame.columns) == CSV_COLUMNS
    row = frame.to_csv(index=False).splitlines()[1].split(",")
    assert row[:5] == [str(v) for v in (0, 1, records[0].m, records[0].rank, records[0].nullity)]
    assert row[5:10] == ["", "", "", "", ""]
    assert frame["n_star"].isna().all()


def test_records_frame_full_width_seeds():
    """Check that seeds above 2**63 survive the CSV conversion."""
    seeds = (5, 1 << 63, (1 << 64) - 1)
    records = [TrialRecord(trial=t, seed=s, m=10, rank=10, nullity=20) for t, s in enumerate(seeds)]
    frame = records_frame(records)
    assert str(frame["seed"].dtype) == "UInt64"
    lines = frame.to_csv(index=False).splitlines()[1:]
    assert [line.split(",")[1] for line in lines] == [str(s) for s in seeds]


def test_run_experiment_writes_full_width_seeds(tmp_path):
    """Check the CSV of a run whose trial seeds use the top bit."""
    # the first trial gets the largest possible seed
    seed = ensemble.splitmix64(0) ^ ((1 << 64) - 1)
    cfg = _config(tmp_path, parse_ensemble("regular-3-3", n=30), 30, 5, seed=seed, workers=1)
    summary = run_experiment(cfg)
    assert summary.completed == 5
    frame = pd.read_csv(cfg.csv_path, dtype={"seed": str})
    expected = [ensemble.split_trial_seed(seed, t) for t in range(5)]
    assert expected[0] == (1 << 64) - 1
    assert list(frame["seed"]) == [str(s) for s in expected]
    assert list(frame["trial"]) == list(range(5))


def test_emit_curve_hand_value(tmp_path):
    """Check the 3,3-regular curve at alpha = 1/2."""
    path = tmp_path / "curve.csv"
    frame = emit_curve(parse_ensemble("regular-3-3"), 11, path)
    assert len(frame) == 11
    assert frame["alpha"].iloc[5] == pytest.approx(0.5)
    assert frame["phi"].iloc[5] == pytest.approx(-0.078125, abs=1e-12)
    assert list(frame.columns) == ["alpha", "phi", "phi_small"]
    with open(path, encoding="utf-8") as fin:
        assert fin.readline().strip() == "alpha,phi,phi_small"


@pytest.mark.parametrize("preset", ("mixed-3-15", "spiked-3-200"))
def test_emit_curve_bump(preset):
    """Check the shape of the curves with a rank deficit."""
    frame = emit_curve(parse_ensemble(preset), 1001)
    assert frame["phi"].iloc[0] == pytest.approx(0.0, abs=1e-12)
    assert frame["phi"].iloc[-1] == pytest.approx(0.0, abs=1e-12)
    assert frame["phi"].max() > 1e-4
    assert 0 < frame["phi"].idxmax() < 1000


def test_emit_curve_invalid():
    """Check that a curve needs two points."""
    with pytest.raises(DomainError):
        emit_curve(parse_ensemble("regular-3-3"), 1)


def test_verify_worked_examples():
    """Check that every assertion of the worked examples passes."""
    checks = verify_worked_examples()
    assert len(checks) == 14
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]


def test_ldpc_rate_mc_regular():
    """Check the empirical rate of the 3,6-regular code."""
    ens = make_ensemble(point(3), point(6))
    mean, stderr = ldpc_rate_mc(ens, 600, 3, 0)
    assert mean >= 0.5
    assert mean == pytest.approx(ldpc_rate(ens), abs=0.02)
    assert stderr >= 0


def test_ldpc_rate_mc_invalid():
    """Check the domain of the rate estimate."""
    with pytest.raises(DomainError):
        ldpc_rate_mc(make_ensemble(point(3), point(6)), 600, 0, 0)


def test_experiment_trials_must_be_positive():
    """Check that zero trials are refused by the configuration."""
    with pytest.raises(ConfigError):
        config_from_document({"ensemble": {"preset": "regular-3-3"},
                              "experiment": {"n": 30, "trials": 0}})


@pytest.mark.slow
@pytest.mark.parametrize("ens, n, count, tolerance", acceptance)
def test_rank_matches_limit(tmp_path, ens, n, count, tolerance):
    """Check the empirical rank against the analytic limit at desk scale."""
    cfg = _config(tmp_path, ens, n, count, seed=2024, tolerance=tolerance, checks=("rank",))
    summary = run_experiment(cfg)
    assert summary.completed == count
    assert summary.rank_limit == pytest.approx(rank_limit(ens), abs=1e-12)
    assert abs(summary.mean_rank_fraction - summary.rank_limit) <= tolerance
    assert summary.passed


def test_exact_mode_experiment(tmp_path):
    """Check an experiment over exact degree sequences."""
    ens = make_ensemble(point(3), point(6), mode=Mode.EXACT_DEGREES)
    summary = run_experiment(_config(tmp_path, ens, 60, 2, workers=1))
    frame = pd.read_csv(tmp_path / "trials.csv")
    assert (frame["m"] == 30).all()
    assert summary.completed == 2
