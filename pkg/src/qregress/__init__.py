"""Classical simulator for block-encoding linear algebra and QSVT-based regression."""

from .errors import AdmissibilityError, PrecisionError, PreconditionError

__all__ = ["AdmissibilityError", "PrecisionError", "PreconditionError"]
__version__ = "0.1.0"
