import math
from typing import Any, Dict, Optional


class QueryLabError(Exception):
    """Base class for every error raised by querylab"""


# -------------------------
# Usage errors (exit status 2)
# -------------------------

class FunctionSpecError(QueryLabError, ValueError):
    """Unknown function name, malformed function text or a size rule violation"""


class NoiseSpecError(QueryLabError, ValueError):
    """Malformed noise spec or a noise probability above its cap"""


class PromiseViolation(QueryLabError, ValueError):
    """An adversary input lies outside the function's promise domain"""


class ConfigurationError(QueryLabError, ValueError):
    """Missing seed for a stochastic suite or an invalid flag combination"""


class PremiseError(QueryLabError, ValueError):
    """A caller-supplied object does not satisfy an operation's premise"""


# -------------------------
# Assertion errors (exit status 1)
# -------------------------

class VerificationError(QueryLabError):
    """An exact check failed; carries the check id and the failing witness"""

    def __init__(self, check_id: str, message: str, witness: Optional[Dict[str, Any]] = None):
        super().__init__(f"[{check_id}] {message}")
        self.check_id = check_id
        self.witness = witness or {}


class CertificateError(VerificationError):
    """No certificate was found although every premise verified"""


class SolverError(QueryLabError):
    """Iteration cap breach or an LP outcome that finiteness rules out"""


class WalkRegimeError(QueryLabError, ValueError):
    """The walk parameter lies outside the closed form's case

    Attributes:
        value: math.inf for a divergent hitting time, 1 for a certain hit
    """

    def __init__(self, message: str, value: float = math.inf):
        super().__init__(message)
        self.value = value
