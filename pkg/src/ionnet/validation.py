"""Scalar input checks shared by the calculators."""
from __future__ import annotations

import math


def check_finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def check_probability(name, value, *, open_low=False):
    value = check_finite(name, value)
    if value < 0.0 or value > 1.0 or (open_low and value == 0.0):
        lo = "(0" if open_low else "[0"
        raise ValueError(f"{name} must lie in {lo}, 1], got {value}")
    return value


def check_positive(name, value):
    value = float(value)
    if not value > 0.0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def check_nonnegative(name, value):
    value = check_finite(name, value)
    if value < 0.0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value
