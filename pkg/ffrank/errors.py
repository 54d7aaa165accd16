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

"""Exceptions raised by ffrank.

Every error that can be caused by user input derives from FFRankError, so the
command line front end can map them onto exit codes in one place.
"""


class FFRankError(Exception):

    """Base class for all errors raised by ffrank."""


class NotAPrimePower(FFRankError, ValueError):

    """Field order is not a prime power in the supported range."""


class DivisionByZero(FFRankError, ZeroDivisionError):

    """Division by (or inversion of) the zero field element."""


class DomainError(FFRankError, ValueError):

    """Argument outside of the domain of a function."""


class Infeasible(FFRankError, ValueError):

    """Requested parameters can not be realized by any distribution."""


class NonConvergence(FFRankError, ArithmeticError):

    """Fixed point iteration did not converge within the iteration budget."""


class DivisibilityError(FFRankError, ValueError):

    """Number of variables is not divisible by gcd of check degree support."""


class IntegralityError(FFRankError, ValueError):

    """Degree counts of the exact-degree ensemble are not integers."""


class RejectionBudgetExhausted(FFRankError, RuntimeError):

    """Rejection sampling gave up after too many attempts."""


class SizeLimit(FFRankError, ValueError):

    """Input is too large for an exhaustive or dense algorithm."""


class ConfigError(FFRankError, ValueError):

    """Experiment configuration is invalid."""
