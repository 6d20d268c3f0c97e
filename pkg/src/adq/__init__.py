"""Robust analog-to-digital quantization: beta and golden-ratio encoders with
imperfect components, recovery of the encoding base from bits, quiet
Sigma-Delta schemes, and cross validation for compressed sensing."""
from .errors import (ConfigError, DegeneratePairError, DivergenceError, DomainError, RangeError,
                     SingularStepError, WindowError)

__version__ = "0.1.0"
