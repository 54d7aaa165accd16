#!/usr/bin/env python3

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

"""Generate the Markdown page listing ffrank scenarios."""

# Usage
# python3 tools/gen_scenario_list.py > docs/scenarios_list.md

import os
import sys

# lines that open a scenario
PREFIXES = ("Scenario: ", "Scenario Outline: ")

# relative to the repository root
FEATURE_DIRECTORY = "features"

# subdirectories with feature files, the order keeps the generated list stable
SUBDIRECTORIES = ("ffrank",)


def scenario_names(path):
    """Yield names of scenarios and scenario outlines in one feature file."""
    with open(path, "r") as fin:
        for line in fin:
            line = line.strip()
            for prefix in PREFIXES:
                if line.startswith(prefix):
                    yield line[len(prefix):]


def generate(out=sys.stdout, root=FEATURE_DIRECTORY):
    """Write the Markdown page listing all scenarios."""
    # page header
    print("---", file=out)
    print("layout: page", file=out)
    print("nav_order: 3", file=out)
    print("---", file=out)
    print(file=out)
    print("# List of scenarios", file=out)
    print(file=out)

    for subdirectory in SUBDIRECTORIES:
        directory = os.path.join(root, subdirectory)
        # files are sorted so the resulting list is the same across runs
        for filename in sorted(os.listdir(directory)):
            if not filename.endswith(".feature"):
                continue
            print(f"## `{subdirectory}/{filename}`\n", file=out)
            for name in scenario_names(os.path.join(directory, filename)):
                print(f"* {name}", file=out)
            print(file=out)


if __name__ == "__main__":
    generate()
