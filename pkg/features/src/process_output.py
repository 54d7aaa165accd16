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

"""Capture of the streams written by a finished ffrank process."""

import json

from behave.runner import Context


def filepath_from_context(context: Context, prefix: str = "", suffix: str = "", max_len=200) -> str:
    """Name a log file after the running feature and scenario, cropped to max_len."""
    feature_name = context.feature.name.replace("/", "-").replace(" ", "_")
    scenario_name = context.scenario.name.replace("/", "-").replace(" ", "_")
    filepath = f"{prefix}{feature_name}_{scenario_name}{suffix}.log"
    return filepath[:max_len]


def process_generated_output(context: Context, out, return_codes=None,
                             stdout_file=None, stderr_file=None):
    """Process output generated by finished process.

    Standard output and standard error are kept apart, ffrank prints its
    results to the former and log messages to the latter.
    """
    assert out is not None

    stdout, stderr = out.communicate()

    assert stdout is not None, "Standard output was not captured"
    assert stderr is not None, "Standard error was not captured"

    # dumps kept for failed scenarios
    if stdout_file is not None:
        with open(stdout_file, "w") as f:
            f.write(stdout.decode("utf-8"))
    if stderr_file is not None:
        with open(stderr_file, "w") as f:
            f.write(stderr.decode("utf-8"))

    if return_codes is not None:
        assert out.returncode in return_codes, \
            f"Return code is {out.returncode}, log:\n{stderr.decode('utf-8')}"

    # update testing context
    context.output = stdout.decode("utf-8").split("\n")
    context.log = stderr.decode("utf-8").split("\n")
    context.stdout = stdout
    context.stderr = stderr
    context.return_code = out.returncode


def json_from_output(context: Context):
    """Parse standard output of the finished process as one JSON document."""
    assert context.stdout is not None, "process has not been started"
    text = context.stdout.decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise AssertionError(f"Output is not a JSON document: {e}\n{text}") from e
