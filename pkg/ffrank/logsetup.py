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

"""Logging bootstrap from a YAML dictConfig document."""

import logging
import logging.config
import os
from pathlib import Path
from typing import Mapping, Optional, Union

import yaml

from ffrank.errors import ConfigError

DEFAULT_LOGGING_CONFIG = Path(__file__).parent / "logging.yaml"

LOG_CONFIG_VARIABLE = "FFRANK_LOG_CONFIG"


def setup_logging(path: Optional[Union[str, Path]] = None, verbose: bool = False,
                  environ: Optional[Mapping[str, str]] = None) -> Path:
    """Configure logging and return the configuration file that was used."""
    environ = os.environ if environ is None else environ
    path = Path(path or environ.get(LOG_CONFIG_VARIABLE) or DEFAULT_LOGGING_CONFIG)
    try:
        with open(path, encoding="utf-8") as fin:
            document = yaml.safe_load(fin)
        logging.config.dictConfig(document)
    except (OSError, yaml.YAMLError, ValueError, TypeError) as e:
        raise ConfigError(f"unable to configure logging from {path}: {e}") from e
    if verbose:
        logging.getLogger("ffrank").setLevel(logging.DEBUG)
    return path
