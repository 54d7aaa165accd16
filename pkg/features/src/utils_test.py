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

"""Unit tests for functions defined in utils.py source file."""

import pytest
from utils import (
    load_schema,
    retrieve_set_from_table,
    select_value,
    substitute_workdir,
    validate_json,
)


class Context:

    """Mock for real context class from Behave."""

    def __init__(self, items=()):
        """Initialize attributes to be the same as in Behave.Context."""
        self.table = [{"name": item} for item in items]
        self.workdir = "/tmp/ffrank-xyz"


inputs_and_outputs = (
        # input                               expected output
        ([],                                  set()),
        (["rank"],                            {"rank"}),
        (["rank", "core", "bound"],           {"rank", "core", "bound"}),
        (["rank", "rank", "core"],            {"rank", "core"}),
)


@pytest.mark.parametrize("items, expected", inputs_and_outputs)
def test_retrieve_set_from_table(items, expected):
    """Check the behaviour of function to retrieve set of values from context table."""
    assert retrieve_set_from_table(Context(items), "name") == expected


def test_substitute_workdir():
    """Check the replacement of the working directory placeholder."""
    context = Context()
    assert substitute_workdir(context, "--dump {workdir}/i.json") == \
        "--dump /tmp/ffrank-xyz/i.json"
    assert substitute_workdir(context, "verify") == "verify"


document = {"ensemble": {"field": {"q": 4}}, "checks": [{"passed": True}, {"passed": False}]}

selections = (
        ("ensemble.field.q",  4),
        ("ensemble.field",    {"q": 4}),
        ("checks.1.passed",   False),
)


@pytest.mark.parametrize("selector, expected", selections)
def test_select_value(selector, expected):
    """Check selection of values from JSON documents."""
    assert select_value(document, selector) == expected


@pytest.mark.parametrize("selector", ("rank", "ensemble.q", "checks.2", "checks.x"))
def test_select_value_missing(selector):
    """Check selection of values missing in JSON documents."""
    with pytest.raises(AssertionError):
        select_value(document, selector)


def test_validate_json():
    """Check validation against a schema."""
    schema = {"type": "object", "required": ["rank"], "properties": {"rank": {"type": "integer"}}}
    validate_json({"rank": 3}, schema)
    with pytest.raises(AssertionError):
        validate_json({"rank": "3"}, schema)
    with pytest.raises(AssertionError):
        validate_json({"rank": 3}, {"type": "no-such-type"})


@pytest.mark.parametrize("name", ("ffrank_summary_schema.json", "ffrank_verify_schema.json"))
def test_load_schema(name):
    """Check that the stored schemas are schemas."""
    assert load_schema(name)["$schema"].startswith("http://json-schema.org/")
