"""Isomonodromic tau functions, quantization conditions and operator spectra."""

from .errors import (
    ChartError,
    ConvergenceError,
    DomainError,
    PoleError,
    SearchWindowError,
    TauspecError,
    VerificationError,
)
from .kiev import MonodromyPoint
from .nekrasov import OmegaParams
from .partitions import Partition
from .series import TruncatedSeries

__version__ = "0.1.0"

__all__ = [
    "ChartError",
    "ConvergenceError",
    "DomainError",
    "MonodromyPoint",
    "OmegaParams",
    "Partition",
    "PoleError",
    "SearchWindowError",
    "TauspecError",
    "TruncatedSeries",
    "VerificationError",
]
