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

"""Implementation of common test steps that handles file contents."""

import json
import os

from behave import then
from src.csv_checks import check_column_values, check_header, check_table_content
from src.utils import load_schema, validate_json


def workdir_path(context, filename):
    """Path of a file in the scenario's working directory."""
    return os.path.join(context.workdir, filename)


@then("the file {filename} should exist in the working directory")
def check_file_exists(context, filename):
    """Check that the process created the file."""
    assert os.path.isfile(workdir_path(context, filename)), f"File {filename} was not created"


@then("the CSV file {filename} should have the following header")
def check_csv_header(context, filename):
    """Check the first row of a CSV file against the text in the scenario."""
    expected = context.text.strip().split(",")
    with open(workdir_path(context, filename), "r", newline="") as fin:
        check_header(fin, filename, expected)


@then("the CSV file {filename} should contain the following values in column {column}")
def check_csv_column(context, filename, column):
    """Check that values listed in the scenario table appear in a column."""
    with open(workdir_path(context, filename), "r", newline="") as fin:
        check_table_content(context, fin, filename, column)


@then("the CSV file {filename} should have {rows:d} rows with {value} in column {column}")
def check_csv_constant_column(context, filename, rows, value, column):
    """Check the number of rows and a column taking a single value."""
    with open(workdir_path(context, filename), "r", newline="") as fin:
        count = check_column_values(fin, filename, column, [value])
    assert count == rows, f"CSV file {filename} has {count} rows, expected {rows}"


@then("the JSON file {filename} should fit the schema {name}")
def check_json_file_schema(context, filename, name):
    """Validate a JSON file written by the process."""
    with open(workdir_path(context, filename), "r") as fin:
        validate_json(json.load(fin), load_schema(name))
