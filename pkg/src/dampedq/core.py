"""Parameters, position grids, wavefunction containers and quadrature.

Units are fixed to hbar = m = 1 throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np


class DomainError(ValueError):
    """Physical parameters outside the underdamped regime."""


class GridError(ValueError):
    """Grid mismatch, or a grid too small for the requested operation."""


class TruncationError(RuntimeError):
    """A Fock-space truncation is too small for the requested accuracy."""


@dataclass(frozen=True)
class OscillatorParams:
    """Angular frequency ``omega`` and friction coefficient ``alpha``.

    ``omega_tilde = sqrt(omega**2 - alpha**2)`` is derived on construction.
    Use :func:`make_params` to get validation.
    """

    omega: float
    alpha: float
    omega_tilde: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(
            self, "omega_tilde", math.sqrt((self.omega - self.alpha) * (self.omega + self.alpha))
        )

    def energy(self, n: int) -> float:
        """Level ``n`` of the first-order Hamiltonian, ``omega_tilde * (n + 1/2)``."""
        return self.omega_tilde * (n + 0.5)

    def as_dict(self) -> dict[str, float]:
        return {"omega": self.omega, "alpha": self.alpha, "omega_tilde": self.omega_tilde}


def make_params(omega: float, alpha: float) -> OscillatorParams:
    """Validated constructor; only the underdamped regime 0 <= alpha < omega is accepted."""
    omega = float(omega)
    alpha = float(alpha)
    if not (math.isfinite(omega) and math.isfinite(alpha)):
        raise DomainError(f"non-finite parameters omega={omega}, alpha={alpha}")
    if omega <= 0.0:
        raise DomainError(f"omega must be positive, got {omega}")
    if alpha < 0.0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    if alpha >= omega:
        raise DomainError(
            f"alpha={alpha} >= omega={omega}: critical/overdamped regime is not supported"
        )
    return OscillatorParams(omega, alpha)


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on [-half_width, half_width] with an odd number of points."""

    half_width: float
    n_points: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "n_points", int(self.n_points))
        if not self.half_width > 0.0:
            raise GridError(f"half_width must be positive, got {self.half_width}")
        if self.n_points < 16 or self.n_points % 2 == 0:
            raise GridError(f"n_points must be odd and >= 17, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @cached_property
    def points(self) -> np.ndarray:
        q = np.linspace(-self.half_width, self.half_width, self.n_points)
        q[self.n_points // 2] = 0.0
        q.setflags(write=False)
        return q

    @cached_property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights."""
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        w.setflags(write=False)
        return w

    def refined(self) -> "SpatialGrid":
        """Same interval with half the spacing (2N - 1 points)."""
        return SpatialGrid(self.half_width, 2 * self.n_points - 1)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex samples on a :class:`SpatialGrid`, labelled by the time they belong to."""

    grid: SpatialGrid
    samples: np.ndarray
    time_label: float = 0.0

    def __post_init__(self) -> None:
        s = np.array(self.samples, dtype=complex)
        if s.shape != (self.grid.n_points,):
            raise GridError(f"expected {self.grid.n_points} samples, got shape {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "time_label", float(self.time_label))

    @property
    def q(self) -> np.ndarray:
        return self.grid.points

    def with_samples(self, samples: np.ndarray, time_label: float | None = None) -> "WaveFunction":
        t = self.time_label if time_label is None else time_label
        return WaveFunction(self.grid, samples, t)

    def __add__(self, other: "WaveFunction") -> "WaveFunction":
        _check_compatible(self, other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: "WaveFunction") -> "WaveFunction":
        _check_compatible(self, other)
        return self.with_samples(self.samples - other.samples)

    def __mul__(self, c: complex) -> "WaveFunction":
        return self.with_samples(self.samples * c)

    __rmul__ = __mul__

    def max_abs_diff(self, other: "WaveFunction") -> float:
        _check_compatible(self, other)
        return float(np.max(np.abs(self.samples - other.samples)))


def _check_compatible(a: WaveFunction, b: WaveFunction) -> None:
    if a.grid != b.grid:
        raise GridError(f"grid mismatch: {a.grid} vs {b.grid}")
    if a.time_label != b.time_label:
        raise GridError(f"time label mismatch: {a.time_label} vs {b.time_label}")


def integrate(grid: SpatialGrid, values: np.ndarray) -> complex:
    """Composite trapezoid rule over the whole grid."""
    return complex(np.dot(grid.weights, values))


def inner_product(a: WaveFunction, b: WaveFunction) -> complex:
    """Trapezoid approximation of the integral of conj(a) * b."""
    _check_compatible(a, b)
    return integrate(a.grid, np.conj(a.samples) * b.samples)


def norm2(psi: WaveFunction) -> float:
    return float(np.dot(psi.grid.weights, np.abs(psi.samples) ** 2))


def turning_point(params: OscillatorParams, n: int) -> float:
    """Classical turning point of level ``n`` of the omega_tilde oscillator."""
    return math.sqrt((2 * n + 1) / params.omega_tilde)


def auto_grid(
    params: OscillatorParams,
    n_max: int,
    t_max: float = 0.0,
    *,
    min_points: int = 257,
) -> SpatialGrid:
    """Grid that holds level ``n_max`` (plain, chirped or dilated) for all |t| <= t_max.

    The half width is the larger of 1.5 turning points and the turning point
    plus eight oscillator lengths, scaled by exp(alpha*t_max). The spacing
    keeps the momentum content of the chirped state (scale omega/sqrt(omega_tilde))
    below the Nyquist limit and gives at least 8 points per local wavelength.
    """
    if n_max < 0 or t_max < 0:
        raise ValueError("n_max and t_max must be non-negative")
    wt = params.omega_tilde
    stretch = math.exp(params.alpha * t_max)
    tp = turning_point(params, n_max)
    half_width = max(1.5 * tp, tp + 8.0 / math.sqrt(wt)) * stretch

    root = math.sqrt(2 * n_max + 1)
    k_band = stretch * params.omega / math.sqrt(wt) * (root + 9.0)
    k_osc = stretch * root * math.sqrt(wt)
    spacing = min(math.pi / k_band, 2.0 * math.pi / (8.0 * k_osc))
    n_points = max(int(math.ceil(2.0 * half_width / spacing)) + 1, min_points)
    if n_points % 2 == 0:
        n_points += 1
    return SpatialGrid(half_width, n_points)


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one numerical check; ``passed`` iff |measured - target| <= tolerance."""

    check_name: str
    measured: float
    target: float
    tolerance: float
    passed: bool
    metadata: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def evaluate(
        cls, name: str, measured: float, target: float, tolerance: float, **metadata: object
    ) -> "CheckReport":
        measured = float(measured)
        ok = bool(math.isfinite(measured) and abs(measured - target) <= tolerance)
        meta = {k: _meta_str(v) for k, v in sorted(metadata.items())}
        return cls(name, measured, float(target), float(tolerance), ok, meta)

    @classmethod
    def at_least(cls, name: str, value: float, bound: float, **metadata: object) -> "CheckReport":
        """One-sided check ``value >= bound``, encoded as a zero-target shortfall."""
        return cls.evaluate(
            name, max(0.0, bound - value), 0.0, 0.0, value=value, lower_bound=bound, **metadata
        )

    @classmethod
    def within(
        cls, name: str, value: float, lo: float, hi: float, **metadata: object
    ) -> "CheckReport":
        """Two-sided band check ``lo <= value <= hi``."""
        return cls.evaluate(
            name, value, 0.5 * (lo + hi), 0.5 * (hi - lo), band=f"[{lo!r}, {hi!r}]", **metadata
        )

    @classmethod
    def failed(cls, name: str, error: BaseException) -> "CheckReport":
        return cls(name, math.nan, 0.0, 0.0, False, {"error": f"{type(error).__name__}: {error}"})

    def as_dict(self) -> dict[str, object]:
        return {
            "check_name": self.check_name,
            "measured": self.measured,
            "target": self.target,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "metadata": dict(self.metadata),
        }


def _meta_str(value: object) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)
