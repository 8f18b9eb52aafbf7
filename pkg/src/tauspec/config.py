"""Process-wide numerical configuration."""

from __future__ import annotations

import os

PRECISION_ENV = "TAUSPEC_PRECISION"
EXTENDED_DPS = 32


def precision() -> str:
    """Floating backend name, ``double`` (default) or ``extended``."""
    value = os.environ.get(PRECISION_ENV, "double").strip().lower()
    if value not in ("double", "extended"):
        raise ValueError(f"{PRECISION_ENV} must be 'double' or 'extended', got {value!r}")
    return value


def extended() -> bool:
    return precision() == "extended"
