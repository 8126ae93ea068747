"""
Exception hierarchy for soltrans
"""
from pathlib import Path
from typing import Optional, Union


class Sol3Error(Exception):
    """Base class for every error raised by soltrans"""


class ZeroKillingFieldError(Sol3Error, ValueError):
    """A Killing field with all coefficients zero was given where a direction is required"""


class IntegrationError(Sol3Error):
    """The profile integrator could not produce a trajectory"""


class TailTooShortError(Sol3Error, ValueError):
    """Not enough samples beyond the last critical point to fit an end model"""


class MeshError(Sol3Error, ValueError):
    """Invalid input for surface mesh construction"""


class StencilError(Sol3Error, ValueError):
    """An immersion could not be evaluated on a finite-difference stencil"""


class ExportError(Sol3Error, OSError):
    """Writing or reading an artifact failed"""

    def __init__(self, message: str, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        super().__init__(f"{message} [{path}]" if path is not None else message)


class UsageError(Sol3Error):
    """Command-line usage error; carries the offending token when known"""

    def __init__(self, message: str, token: Optional[str] = None):
        self.token = token
        super().__init__(f"{message}: {token!r}" if token is not None else message)
