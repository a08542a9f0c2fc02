"""Numerical laboratory for the two quantizations of the damped harmonic oscillator.

The time-dependent Bateman-Caldirola-Kanai (BCK) Hamiltonian and the
time-independent first-order Hamiltonian are both implemented, together with
the dilation map that relates them and checks of their closed-form identities.
"""

from dampedq.core import (
    CheckReport,
    DomainError,
    GridError,
    OscillatorParams,
    SpatialGrid,
    TruncationError,
    WaveFunction,
    auto_grid,
    inner_product,
    make_params,
    norm2,
)

__all__ = [
    "CheckReport",
    "DomainError",
    "GridError",
    "OscillatorParams",
    "SpatialGrid",
    "TruncationError",
    "WaveFunction",
    "auto_grid",
    "inner_product",
    "make_params",
    "norm2",
]

__version__ = "0.1.0"
