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

"""Implementation of test steps that run ffrank and check its output."""

import json
import os
import shlex
import subprocess

from behave import given, then, when
from environment import command_environment
from src.asserts import assert_close, assert_sets_equality
from src.process_output import filepath_from_context, json_from_output, process_generated_output
from src.utils import (
    load_schema,
    retrieve_set_from_table,
    select_value,
    substitute_workdir,
    validate_json,
)


def run_ffrank(context, arguments, overrides=None):
    """Start ffrank with given arguments and wait for it to finish."""
    cli = context.ffrank_command + arguments
    out = subprocess.Popen(cli, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                           cwd=context.workdir, env=command_environment(context, overrides))

    # check if subprocess has been started and its output caught
    assert out is not None

    context.add_cleanup(out.terminate)

    stdout_file = stderr_file = None
    if context.config.userdata.getbool("dump_errors"):
        stdout_file = filepath_from_context(context, "ffrank_", "_stdout")
        stderr_file = filepath_from_context(context, "ffrank_", "_stderr")
    process_generated_output(context, out, None, stdout_file, stderr_file)


@given("the environment variable {name} is set to {value}")
def set_environment_variable(context, name, value):
    """Remember environment variable passed to the next ffrank run."""
    if not hasattr(context, "overrides"):
        context.overrides = {}
    context.overrides[name] = value


@given("the experiment configuration file {filename} contains")
def write_experiment_configuration(context, filename):
    """Write configuration taken from the scenario into the working directory."""
    with open(os.path.join(context.workdir, filename), "w") as fout:
        fout.write(substitute_workdir(context, context.text))


@when("I run ffrank with the {flag} command line flag")
def run_ffrank_with_flag(context, flag):
    """Start ffrank with given command-line flag."""
    run_ffrank(context, [flag])


@when("I run ffrank with the following arguments: {arguments}")
def run_ffrank_with_arguments(context, arguments):
    """Start ffrank with given command-line arguments."""
    arguments = shlex.split(substitute_workdir(context, arguments))
    run_ffrank(context, arguments, getattr(context, "overrides", None))


@then("I should see the JSON output with the following attributes")
def check_json_attributes(context):
    """Check that JSON output contains all attributes listed in the table."""
    document = json_from_output(context)
    assert isinstance(document, dict), f"Output is not a JSON object: {document}"
    expected = retrieve_set_from_table(context, "attribute")
    missing = expected - set(document)
    assert_sets_equality("missing attributes", set(), missing)


@then("the JSON attribute {selector} should be {expected:g} within {tolerance:g}")
def check_json_number(context, selector, expected, tolerance):
    """Check numeric attribute of JSON output."""
    value = select_value(json_from_output(context), selector)
    assert_close(selector, expected, value, tolerance)


@then("the JSON attribute {selector} should be greater than {bound:g}")
def check_json_number_above(context, selector, bound):
    """Check lower bound of numeric attribute of JSON output."""
    value = select_value(json_from_output(context), selector)
    assert value > bound, f"{selector} is {value}, expected more than {bound}"


@then("the JSON attribute {selector} should be less than {bound:g}")
def check_json_number_below(context, selector, bound):
    """Check upper bound of numeric attribute of JSON output."""
    value = select_value(json_from_output(context), selector)
    assert value < bound, f"{selector} is {value}, expected less than {bound}"


@then('the JSON attribute {selector} should be equal to "{expected}"')
def check_json_value(context, selector, expected):
    """Check attribute of JSON output compared as JSON text."""
    value = select_value(json_from_output(context), selector)
    actual = value if isinstance(value, str) else json.dumps(value)
    assert actual == expected, f"{selector} is {actual}, expected {expected}"


@then("the JSON attribute {selector} should not be smaller than the attribute {other}")
def check_json_order(context, selector, other):
    """Compare two numeric attributes of JSON output."""
    document = json_from_output(context)
    value = select_value(document, selector)
    limit = select_value(document, other)
    assert value >= limit, f"{selector} = {value} is smaller than {other} = {limit}"


@then("the JSON output should fit the schema {name}")
def check_json_schema(context, name):
    """Validate JSON output against a schema stored in test data."""
    validate_json(json_from_output(context), load_schema(name))


@then("every reported check should pass")
def check_all_checks_passed(context):
    """Check the assertion report printed by the verify subcommand."""
    failed = [c["name"] for c in json_from_output(context) if not c["passed"]]
    assert not failed, f"Failed checks: {failed}"

