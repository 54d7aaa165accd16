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

"""Common steps for CLI related operations.

Will raise a ValueError in case the program is not among:
- ffrank
"""

from behave import then
from src.version import check

# subcommands listed by the help message
FFRANK_SUBCOMMANDS = ("phi", "rho", "rate", "report", "core", "sample", "rank", "curve",
                      "verify", "experiment", "bethe", "transition")


def check_help_from_ffrank(context):
    """Check if help is displayed by ffrank."""
    stdout = context.stdout.decode("utf-8")

    # preliminary checks
    assert stdout is not None, "stdout object should exist"
    assert stdout.startswith("usage: ffrank"), f"Unexpected help message:\n{stdout}"

    # every subcommand needs to be mentioned
    for subcommand in FFRANK_SUBCOMMANDS:
        assert subcommand in stdout, f"Subcommand {subcommand} not found in help:\n{stdout}"


def check_version_from_ffrank(context):
    """Check if version info is displayed by ffrank."""
    # preliminary checks
    assert context.output is not None
    assert isinstance(context.output, list), "wrong type of output"

    check(context.output)


def check_authors_info_from_ffrank(context):
    """Check if information about authors is displayed by ffrank."""
    # preliminary checks
    assert context.output is not None
    assert isinstance(context.output, list), "wrong type of output"

    # check the output
    assert "ffrank authors" in context.output, f"Caught output: {context.output}"


@then("I should see help messages displayed by {program} on standard output")
def check_help_message(context, program):
    """Check if help is displayed by the program."""
    if program == "ffrank":
        check_help_from_ffrank(context)
    else:
        raise ValueError(f"Unknown program '{program}'.")


@then("I should see version info displayed by {program} on standard output")
def check_version_info(context, program):
    """Check if version info is displayed by the program."""
    if program == "ffrank":
        check_version_from_ffrank(context)
    else:
        raise ValueError(f"Unknown program '{program}'.")


@then("I should see info about authors displayed by {program} on standard output")
def check_authors_info(context, program):
    """Check if information about authors is displayed by the program."""
    if program == "ffrank":
        check_authors_info_from_ffrank(context)
    else:
        raise ValueError(f"Unknown program '{program}'.")
