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

"""Unit tests for functions defined in config.py source file."""

import json
import os

import pytest

from ffrank.analytic import Mode
from ffrank.config import (
    CHECKS,
    DEFAULT_TOLERANCE,
    apply_env_overrides,
    config_from_document,
    load_config,
    parse_ensemble,
    validate_document,
    worker_limit,
)
from ffrank.degrees import point
from ffrank.errors import ConfigError, DomainError

# ensemble text, q, expected mode, expected mean variable degree, expected mean check degree
ensembles = (
        ("regular-3-3", 2, Mode.SIMPLE, 3.0, 3.0),
        ("mixed-3-15", 2, Mode.MULTIGRAPH, 5.4, 5.4),
        ("spiked-3-200", 3, Mode.MULTIGRAPH, (570 + 1400) / 197, 10.0),
        ("d=point:3;k=point:6", 5, Mode.SIMPLE, 3.0, 6.0),
        (" d = explicit:2=0.5,4=0.5 ; k = point:3 ", 4, Mode.SIMPLE, 3.0, 3.0),
)

# ensemble texts which are not accepted
invalid_ensembles = (
        "regular",
        "d=point:3",
        "d=point:3;k=point:3;q=2",
        "point:3;point:3",
)

# environment, expected document
overrides = (
        ({}, {"experiment": {"n": 30}}),
        ({"FFRANK__EXPERIMENT__TRIALS": "5"}, {"experiment": {"n": 30, "trials": 5}}),
        ({"FFRANK__EXPERIMENT__N": "60"}, {"experiment": {"n": 60}}),
        ({"FFRANK__EXPERIMENT__TOLERANCE": "0.5"}, {"experiment": {"n": 30, "tolerance": 0.5}}),
        ({"FFRANK__ENSEMBLE__PRESET": "mixed-3-15"},
         {"experiment": {"n": 30}, "ensemble": {"preset": "mixed-3-15"}}),
        ({"FFRANK__ENSEMBLE__PRESET": '"regular-3-3"'},
         {"experiment": {"n": 30}, "ensemble": {"preset": "regular-3-3"}}),
        ({"FFRANK__EXPERIMENT__CHECKS": '["rank"]'}, {"experiment": {"n": 30, "checks": ["rank"]}}),
        ({"FFRANK__EXPERIMENT": "1", "FFRANK_THREADS": "2", "HOME": "/"},
         {"experiment": {"n": 30}}),
)

# documents rejected by the schema
invalid_documents = (
        {},
        {"ensemble": {"preset": "regular-3-3"}},
        {"ensemble": {"preset": "regular-3-3"}, "experiment": {"n": 30, "trials": 0}},
        {"ensemble": {"preset": "regular-3-3"}, "experiment": {"n": 0, "trials": 1}},
        {"ensemble": {"preset": "unknown"}, "experiment": {"n": 30, "trials": 1}},
        {"ensemble": {"d": "point:3"}, "experiment": {"n": 30, "trials": 1}},
        {"ensemble": {"preset": "regular-3-3", "q": 1}, "experiment": {"n": 30, "trials": 1}},
        {"ensemble": {"preset": "regular-3-3"}, "experiment": {"n": 30, "trials": 1, "x": 1}},
        {"ensemble": {"preset": "regular-3-3"},
         "experiment": {"n": 30, "trials": 1, "checks": ["rank", "rank"]}},
        {"ensemble": {"preset": "regular-3-3"},
         "experiment": {"n": 30, "trials": 1, "checks": ["speed"]}},
        {"ensemble": {"preset": "regular-3-3", "mode": "dense"},
         "experiment": {"n": 30, "trials": 1}},
)

# requested workers, environment, expected number of workers
workers = (
        (4, {}, 4),
        (8, {"FFRANK_THREADS": "2"}, 2),
        (1, {"FFRANK_THREADS": "16"}, 1),
        (4, {"FFRANK_THREADS": "0"}, 1),
        (3, {"FFRANK_THREADS": ""}, 3),
)


@pytest.mark.parametrize("text, q, mode, d, k", ensembles)
def test_parse_ensemble(text, q, mode, d, k):
    """Check presets and d/k descriptions."""
    ens = parse_ensemble(text, q)
    assert ens.field.q == q
    assert ens.mode is mode
    assert ens.d == pytest.approx(d, abs=1e-12)
    assert ens.k == pytest.approx(k, abs=1e-12)


def test_parse_ensemble_mode_and_size():
    """Check that an explicit mode overrides the preset default."""
    ens = parse_ensemble("regular-3-3", mode="multigraph", n=9)
    assert ens.mode is Mode.MULTIGRAPH
    assert ens.n == 9
    assert ens.kdist == point(3)


@pytest.mark.parametrize("text", invalid_ensembles)
def test_parse_ensemble_invalid(text):
    """Check that malformed ensemble descriptions are refused."""
    with pytest.raises(ConfigError):
        parse_ensemble(text)


def test_parse_ensemble_invalid_parts():
    """Check errors raised for invalid mode, law and field order."""
    with pytest.raises(ConfigError):
        parse_ensemble("regular-3-3", mode="dense")
    with pytest.raises(DomainError):
        parse_ensemble("d=point:3;k=point:2")
    with pytest.raises(DomainError):
        parse_ensemble("d=binomial:3;k=point:3")


@pytest.mark.parametrize("environ, expected", overrides)
def test_apply_env_overrides(environ, expected):
    """Check environment overrides of a configuration document."""
    assert apply_env_overrides({"experiment": {"n": 30}}, environ) == expected


def test_apply_env_overrides_on_value():
    """Check that an override can not replace a value by a section."""
    with pytest.raises(ConfigError):
        apply_env_overrides({"output": "x"}, {"FFRANK__OUTPUT__CSV": "a.csv"})


@pytest.mark.parametrize("document", invalid_documents)
def test_validate_document_invalid(document):
    """Check that the schema refuses invalid documents."""
    with pytest.raises(ConfigError):
        validate_document(document)


def test_config_from_document_defaults():
    """Check default values of optional settings."""
    cfg = config_from_document({"ensemble": {"preset": "regular-3-3"},
                                "experiment": {"n": 30, "trials": 2}})
    assert cfg.n == cfg.ensemble.n == 30
    assert cfg.trials == 2
    assert cfg.seed == 0
    assert cfg.tolerance == DEFAULT_TOLERANCE
    assert cfg.checks == CHECKS
    assert cfg.workers is None
    assert cfg.csv_path is None and cfg.json_path is None


def test_config_from_document_indivisible():
    """Check that n must be divisible by the gcd of the check degrees."""
    with pytest.raises(ConfigError, match="invalid ensemble"):
        config_from_document({"ensemble": {"preset": "regular-3-3"},
                              "experiment": {"n": 31, "trials": 2}})


def test_load_config_toml(tmp_path):
    """Check reading a TOML configuration."""
    path = tmp_path / "experiment.toml"
    path.write_text(
        "[ensemble]\n"
        'd = "tpoisson:ell=1,mean=2.5"\n'
        'k = "point:3"\n'
        "q = 3\n"
        'chi = "one"\n'
        "\n"
        "[experiment]\n"
        "n = 300\n"
        "trials = 4\n"
        "seed = 7\n"
        'checks = ["rank", "bound"]\n'
        "workers = 2\n"
        "\n"
        "[output]\n"
        f'csv = "{tmp_path / "trials.csv"}"\n'
        f'json = "{tmp_path / "summary.json"}"\n')
    cfg = load_config(path, environ={})
    assert cfg.ensemble.field.q == 3
    assert cfg.ensemble.chi.value == 1
    assert cfg.ensemble.d == pytest.approx(2.5, abs=1e-9)
    assert (cfg.n, cfg.trials, cfg.seed, cfg.workers) == (300, 4, 7, 2)
    assert cfg.checks == ("rank", "bound")
    assert cfg.csv_path == tmp_path / "trials.csv"
    assert cfg.json_path == tmp_path / "summary.json"


def test_load_config_json_with_overrides(tmp_path):
    """Check reading a JSON configuration with environment overrides."""
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"ensemble": {"preset": "mixed-3-15"},
                                "experiment": {"n": 99, "trials": 1}}))
    cfg = load_config(path, environ={"FFRANK__EXPERIMENT__TRIALS": "3",
                                     "FFRANK__ENSEMBLE__Q": "4"})
    assert cfg.trials == 3
    assert cfg.ensemble.field.q == 4
    assert cfg.source["experiment"]["trials"] == 3


def test_load_config_invalid_override(tmp_path):
    """Check that overridden values are validated too."""
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"ensemble": {"preset": "mixed-3-15"},
                                "experiment": {"n": 99, "trials": 1}}))
    with pytest.raises(ConfigError):
        load_config(path, environ={"FFRANK__EXPERIMENT__TRIALS": "0"})


def test_load_config_unreadable(tmp_path):
    """Check errors for missing and malformed files."""
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml", environ={})
    path = tmp_path / "broken.toml"
    path.write_text("[ensemble\n")
    with pytest.raises(ConfigError):
        load_config(path, environ={})
    path = tmp_path / "broken.json"
    path.write_text("{")
    with pytest.raises(ConfigError):
        load_config(path, environ={})


def test_load_config_missing_output_directory(tmp_path):
    """Check that output paths must be writable."""
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"ensemble": {"preset": "mixed-3-15"},
                                "experiment": {"n": 99, "trials": 1},
                                "output": {"csv": str(tmp_path / "nowhere" / "t.csv")}}))
    with pytest.raises(ConfigError, match="not writable"):
        load_config(path, environ={})


@pytest.mark.parametrize("requested, environ, expected", workers)
def test_worker_limit(requested, environ, expected):
    """Check the worker cap."""
    assert worker_limit(requested, environ) == expected


def test_worker_limit_defaults():
    """Check the default number of workers."""
    assert worker_limit(None, {}) == (os.cpu_count() or 1)


def test_worker_limit_invalid():
    """Check that the cap must be an integer."""
    with pytest.raises(ConfigError):
        worker_limit(2, {"FFRANK_THREADS": "many"})
