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

"""Code to be called before and after certain events during testing.

Currently three events have been registered:
1. before_all
2. before_scenario
3. after_scenario
"""

import os
import shlex
import shutil
import tempfile

# command used to start ffrank, overridable to test an installed console script
DEFAULT_COMMAND = "python3 -m ffrank"

# worker processes used by experiments started from scenarios
DEFAULT_THREADS = "2"

# scenarios with this tag run only when FFRANK_SLOW is set
SLOW_TAG = "slow"


def before_all(context):
    """Run before and after the whole shooting match."""
    context.ffrank_command = shlex.split(os.getenv("FFRANK_COMMAND", DEFAULT_COMMAND))
    context.threads = os.getenv("FFRANK_THREADS", DEFAULT_THREADS)
    context.run_slow = os.getenv("FFRANK_SLOW", "") not in ("", "0")


def before_scenario(context, scenario):
    """Run before each scenario is run."""
    if "skip" in scenario.effective_tags:
        scenario.skip("Marked with @skip")
        return
    if SLOW_TAG in scenario.effective_tags and not context.run_slow:
        scenario.skip("Marked with @slow, set FFRANK_SLOW=1 to run it")
        return
    context.workdir = tempfile.mkdtemp(prefix="ffrank-")


def after_scenario(context, scenario):
    """Run after each scenario is run."""
    workdir = getattr(context, "workdir", None)
    if workdir is not None:
        shutil.rmtree(workdir, ignore_errors=True)
        context.workdir = None


def command_environment(context, overrides=None):
    """Environment for a ffrank subprocess started from a scenario."""
    environment = dict(os.environ)
    environment["FFRANK_THREADS"] = context.threads
    # the package is imported from the repository when it is not installed
    repository = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    environment["PYTHONPATH"] = os.pathsep.join(
        p for p in (repository, environment.get("PYTHONPATH")) if p)
    environment.update(overrides or {})
    return environment
