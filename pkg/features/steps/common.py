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

"""Steps shared by all ffrank scenarios: environment, exit codes and messages."""

from shutil import which

from behave import given, then, when


@given("no environment overrides are set")
def clear_overrides(context):
    """Start the scenario without extra environment variables."""
    context.overrides = {}


@when("I look up the executable {program}")
def look_up_executable(context, program):
    """Search PATH for the installed console script."""
    context.program = program
    context.program_path = which(program)


@then("the executable should be on PATH")
def executable_is_on_path(context):
    """Check the result of the PATH lookup."""
    assert context.program_path is not None, f"'{context.program}' is not installed on PATH"


@then("ffrank should exit with code {exit_code:d}")
def check_exit_code(context, exit_code):
    """Compare the exit code, showing both streams on mismatch."""
    assert context.return_code == exit_code, \
        f"ffrank exited with {context.return_code} instead of {exit_code}\n" \
        f"stdout:\n{context.output}\nstderr:\n{context.log}"


@then('the standard output should contain "{message}"')
def check_stdout_contains(context, message):
    """Look for the message in the lines printed to standard output."""
    check_message_in_lines(context.output, message)


@then('the log should mention "{message}"')
def check_log_mentions(context, message):
    """Look for the message in the log written to standard error."""
    check_message_in_lines(context.log, message)


def check_message_in_lines(lines, message):
    """Fail unless some line contains the message."""
    assert isinstance(lines, list), f"expected a list of lines, got {type(lines).__name__}"
    assert any(message in line for line in lines), f"'{message}' not found in {lines}"
