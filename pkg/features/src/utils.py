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

"""Unsorted utility functions to be used from other sources and test step definitions."""

import json
import os
from typing import Any, Set

import jsonschema
from behave.runner import Context

# placeholder replaced by the scenario's working directory in arguments and documents
WORKDIR_PLACEHOLDER = "{workdir}"

# directory with JSON schemas of ffrank outputs
SCHEMA_DIRECTORY = os.path.join(os.path.dirname(__file__), "..", "..", "test_data")


def substitute_workdir(context: Context, text: str) -> str:
    """Replace the working directory placeholder in text taken from a scenario."""
    return text.replace(WORKDIR_PLACEHOLDER, context.workdir)


def select_value(document: Any, selector: str) -> Any:
    """Select value from a JSON document by dot separated keys and list indexes."""
    value = document
    for part in selector.split("."):
        if isinstance(value, list):
            assert part.isdigit() and int(part) < len(value), \
                f"index '{part}' is not found in JSON array"
            value = value[int(part)]
        else:
            assert isinstance(value, dict) and part in value, \
                f"attribute '{part}' is not found in JSON output"
            value = value[part]
    return value


def retrieve_set_from_table(context: Context, column: str) -> Set[str]:
    """Retrieve set of values from table specified in scenario or scenario outline."""
    return set(item[column] for item in context.table)


def load_schema(name: str) -> Any:
    """Read JSON schema stored in test data directory."""
    with open(os.path.join(SCHEMA_DIRECTORY, name)) as fin:
        return json.load(fin)


def validate_json(message, schema):
    """Check the JSON message with the given schema."""
    try:
        jsonschema.validate(
            instance=message,
            schema=schema,
        )

    except jsonschema.ValidationError as e:
        assert False, "The message doesn't fit the expected schema:" + str(e)

    except jsonschema.SchemaError as e:
        assert False, "The provided schema is faulty:" + str(e)
