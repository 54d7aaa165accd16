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

"""Assertions shared by step implementations, with readable failure messages."""

import math
from typing import Any, Set


def assert_sets_equality(what: str, expected: Set[Any], actual: Set[Any]) -> None:
    """Compare two sets, reporting their symmetric difference on mismatch."""
    assert expected == actual, f"{what} differ: {sorted(map(str, expected ^ actual))}"


def assert_close(what: str, expected: float, actual: float, tolerance: float) -> None:
    """Compare two numbers with an absolute tolerance."""
    assert tolerance >= 0, "Tolerance can not be negative"
    assert not math.isnan(actual), f"{what} is not a number"
    assert abs(expected - actual) <= tolerance, \
        f"{what} is {actual}, expected {expected} within {tolerance}"
