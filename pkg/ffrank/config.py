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

"""Experiment configuration, ensemble presets and environment overrides.

Configuration files are TOML or JSON documents with three sections:

[ensemble]    preset or d and k, plus q, chi and mode
[experiment]  n, trials, seed, tolerance, checks and workers
[output]      csv and json paths

Any value can be overridden by an environment variable named
FFRANK__<SECTION>__<KEY>, its value is read as a TOML literal and taken as
a plain string when it is not one.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import jsonschema
import toml

from ffrank.analytic import EnsembleSpec, Mode, make_ensemble, parse_chi
from ffrank.degrees import parse_distribution
from ffrank.errors import ConfigError, FFRankError

logger = logging.getLogger(__name__)

EXPERIMENT_SCHEMA = Path(__file__).parent / "schemas" / "experiment.json"

ENV_PREFIX = "FFRANK__"

THREADS_VARIABLE = "FFRANK_THREADS"

CHECKS = ("rank", "core", "bound", "kernel-on-core")

DEFAULT_TOLERANCE = 0.02

# name -> (variable degree law, check degree law, default mode)
PRESETS = {
    "regular-3-3": ("point:3", "point:3", Mode.SIMPLE),
    "mixed-3-15": ("explicit:3=0.8,15=0.2", "explicit:3=0.8,15=0.2", Mode.MULTIGRAPH),
    "spiked-3-200": (f"explicit:3={190 / 197!r},200={7 / 197!r}", "point:10", Mode.MULTIGRAPH),
}


def parse_ensemble(text: str, q: int = 2, chi: str = "uniform",
                   mode: Optional[Union[Mode, str]] = None, n: int = 0) -> EnsembleSpec:
    """Build an ensemble from a preset name or from 'd=<law>;k=<law>'."""
    text = text.strip()
    if text in PRESETS:
        d_text, k_text, default_mode = PRESETS[text]
    else:
        parts = {}
        for item in text.split(";"):
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"ensemble '{text}' is neither a preset nor d=<law>;k=<law>")
            parts[key.strip()] = value.strip()
        if set(parts) != {"d", "k"}:
            raise ConfigError(f"ensemble '{text}' must give exactly d and k")
        d_text, k_text, default_mode = parts["d"], parts["k"], Mode.SIMPLE
    try:
        return make_ensemble(parse_distribution(d_text), parse_distribution(k_text), q,
                             parse_chi(chi), n, Mode(mode) if mode else default_mode)
    except ValueError as e:
        if isinstance(e, FFRankError):
            raise
        raise ConfigError(f"invalid mode '{mode}', expected one of "
                          f"{', '.join(m.value for m in Mode)}") from e


@dataclass(frozen=True)
class ExperimentConfig:

    """Everything needed to run and record one experiment."""

    ensemble: EnsembleSpec
    n: int
    trials: int
    seed: int = 0
    tolerance: float = DEFAULT_TOLERANCE
    checks: Tuple[str, ...] = CHECKS
    workers: Optional[int] = None
    csv_path: Optional[Path] = None
    json_path: Optional[Path] = None
    source: Dict[str, object] = field(default_factory=dict, compare=False, repr=False)


def _literal(value: str) -> object:
    """Read an environment value as a TOML literal, fall back to the raw string."""
    try:
        return toml.loads(f"value = {value}")["value"]
    except ValueError:
        return value


def apply_env_overrides(document: Dict[str, object],
                        environ: Mapping[str, str]) -> Dict[str, object]:
    """Overlay FFRANK__<SECTION>__<KEY> variables over a configuration document."""
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        section, sep, key = name[len(ENV_PREFIX):].lower().partition("__")
        if not sep or not key:
            logger.warning("ignoring malformed override %s", name)
            continue
        target = document.setdefault(section, {})
        if not isinstance(target, dict):
            raise ConfigError(f"override {name} targets a value, not a section")
        target[key] = _literal(value)
        logger.debug("configuration override %s.%s = %r", section, key, target[key])
    return document


def validate_document(document: Dict[str, object]) -> None:
    """Check a configuration document against the JSON schema."""
    with open(EXPERIMENT_SCHEMA, encoding="utf-8") as fin:
        schema = json.load(fin)
    try:
        jsonschema.validate(instance=document, schema=schema)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "document"
        raise ConfigError(f"configuration error at {where}: {e.message}") from e


def _read_document(path: Path) -> Dict[str, object]:
    try:
        with open(path, encoding="utf-8") as fin:
            if path.suffix == ".json":
                return json.load(fin)
            return toml.load(fin)
    except OSError as e:
        raise ConfigError(f"unable to read configuration {path}: {e}") from e
    except (toml.TomlDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"unable to parse configuration {path}: {e}") from e


def _writable(path: Optional[str]) -> Optional[Path]:
    if path is None:
        return None
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    if not directory.is_dir() or not os.access(directory, os.W_OK):
        raise ConfigError(f"output directory {directory} does not exist or is not writable")
    return path


def config_from_document(document: Dict[str, object]) -> ExperimentConfig:
    """Validate a configuration document and build the experiment configuration."""
    validate_document(document)
    ens_section = document["ensemble"]
    exp_section = document["experiment"]
    out_section = document.get("output", {})
    n = exp_section["n"]
    text = ens_section.get("preset") or f"d={ens_section['d']};k={ens_section['k']}"
    try:
        ensemble = parse_ensemble(text, ens_section.get("q", 2),
                                  ens_section.get("chi", "uniform"), ens_section.get("mode"), n)
    except FFRankError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid ensemble: {e}") from e
    return ExperimentConfig(
        ensemble=ensemble,
        n=n,
        trials=exp_section["trials"],
        seed=exp_section.get("seed", 0),
        tolerance=exp_section.get("tolerance", DEFAULT_TOLERANCE),
        checks=tuple(exp_section.get("checks", CHECKS)),
        workers=exp_section.get("workers"),
        csv_path=_writable(out_section.get("csv")),
        json_path=_writable(out_section.get("json")),
        source=document,
    )


def load_config(path: Union[str, Path],
                environ: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Read, override and validate an experiment configuration file."""
    path = Path(path)
    document = _read_document(path)
    document = apply_env_overrides(document, os.environ if environ is None else environ)
    config = config_from_document(document)
    logger.info("loaded configuration %s: %s, n = %d, %d trials",
                path, config.ensemble.describe(), config.n, config.trials)
    return config


def worker_limit(requested: Optional[int] = None,
                 environ: Optional[Mapping[str, str]] = None) -> int:
    """Number of worker processes, capped by FFRANK_THREADS."""
    environ = os.environ if environ is None else environ
    workers = requested or os.cpu_count() or 1
    cap = environ.get(THREADS_VARIABLE)
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError as e:
            raise ConfigError(f"{THREADS_VARIABLE} must be an integer, got '{cap}'") from e
    return workers
