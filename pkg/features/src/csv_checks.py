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

"""CSV-related code."""

import csv
from typing import List

from behave.runner import Context


def check_header(buff, filename: str, expected: List[str]) -> None:
    """Check that the first row of a CSV file contains exactly the expected columns."""
    assert buff is not None, "buff object needs to be set"
    header = next(csv.reader(buff), None)
    assert header is not None, f"CSV file {filename} is empty"
    assert header == expected, f"Header of {filename} is {header}, expected {expected}"


def check_table_content(context: Context, buff, filename: str, column: str) -> None:
    """Check that every record specified in test context appears in the given column."""
    # input checks
    assert buff is not None, "buff object needs to be set"

    values = [row[column] for row in csv.DictReader(buff)]

    # iterate over all records that needs to be found in CSV
    for row in context.table:
        record = row[context.table.headings[0]]
        assert record in values, f"Record {record} not found in column {column} of {filename}"


def check_column_values(buff, filename: str, column: str, allowed: List[str]) -> int:
    """Check that a column takes only allowed values, return the number of rows."""
    assert buff is not None, "buff object needs to be set"
    rows = 0
    for row in csv.DictReader(buff):
        assert column in row, f"Column {column} not found in CSV file {filename}"
        assert row[column] in allowed, \
            f"Unexpected value {row[column]} in column {column} of {filename}"
        rows += 1
    return rows
