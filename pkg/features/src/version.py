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

"""Parsing of the version line printed by `ffrank --version`."""

from typing import List

import semver

VERSION_PREFIX = "ffrank version "


def check(output: List[str]) -> semver.Version:
    """Find the version line in program output and check it is a semantic version."""
    lines = [line for line in output if line.startswith(VERSION_PREFIX)]
    assert lines, f"no version line in {output}"
    version = lines[0][len(VERSION_PREFIX):]
    try:
        return semver.Version.parse(version)
    except ValueError as e:
        raise AssertionError(f"'{version}' is not a semantic version") from e
