"""tauberlab: numerical laboratory for Tauberian convolution operators.

Counting functions, their Laplace transforms on Re(s) > 1, truncated
convolution operators on L^2 of a symmetric interval, and experiment
drivers that probe both directions of the ratio-limit / compact-split
equivalence at desk scale.
"""

from .errors import (
    ConfigError,
    ContractError,
    DomainError,
    PrecisionError,
    ResourceError,
    TableExhaustedError,
    TauberlabError,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "TauberlabError",
    "DomainError",
    "ContractError",
    "ConfigError",
    "ResourceError",
    "PrecisionError",
    "TableExhaustedError",
]
