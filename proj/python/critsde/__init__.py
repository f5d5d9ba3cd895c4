"""Python facade over the critsde C++ core."""

try:
    from ._critsde import (
        constants,
        example_drift_norm,
        simulate_terminal,
        ks_distance,
        lr_norm,
        zvonkin_roundtrip_error,
        philox_uniform_pair,
    )
except ImportError:  # build-tree layout: extension sits on PYTHONPATH
    from _critsde import (
        constants,
        example_drift_norm,
        simulate_terminal,
        ks_distance,
        lr_norm,
        zvonkin_roundtrip_error,
        philox_uniform_pair,
    )

__all__ = [
    "constants",
    "example_drift_norm",
    "simulate_terminal",
    "ks_distance",
    "lr_norm",
    "zvonkin_roundtrip_error",
    "philox_uniform_pair",
]
