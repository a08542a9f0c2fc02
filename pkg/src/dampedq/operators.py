"""Operators of both theories in two representations.

Fock side: truncated matrices in the number basis of the omega_tilde
oscillator, with a = (omega_tilde q + i p) / sqrt(2 omega_tilde). Quadratic
operators are assembled in a larger space and cropped, so every returned
matrix is the exact compression P X P of the infinite operator.

Grid side: the same operators acting on sampled wavefunctions, with spectral
(FFT) or 8th-order central finite-difference derivatives, plus the S-phase and
the dilation (D psi)(q) = exp(alpha t / 2) psi(q exp(alpha t)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, NamedTuple

import numpy as np
import scipy.linalg

from dampedq.core import (
    CheckReport,
    GridError,
    OscillatorParams,
    SpatialGrid,
    WaveFunction,
    inner_product,
    norm2,
)

Direction = Literal["forward", "inverse"]
DerivativeMethod = Literal["spectral", "fd8"]


@dataclass(frozen=True, eq=False)
class FockMatrix:
    """Truncated operator in the omega_tilde number basis."""

    entries: np.ndarray
    params: OscillatorParams
    label: str

    def __post_init__(self) -> None:
        e = np.array(self.entries, dtype=complex)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError(f"FockMatrix must be square, got {e.shape}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def H(self) -> "FockMatrix":
        return FockMatrix(self.entries.conj().T, self.params, f"({self.label})^dagger")

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def block(self, guard: int) -> np.ndarray:
        """Leading (dim - guard) block, the part unaffected by truncation."""
        m = self.dim - guard
        return self.entries[:m, :m]

    def expectation(self, coeffs: np.ndarray) -> complex:
        c = np.asarray(coeffs, dtype=complex)
        return complex(np.vdot(c, self.entries @ c))

    def __matmul__(self, other):
        if isinstance(other, FockMatrix):
            return FockMatrix(
                self.entries @ other.entries, self.params, f"{self.label} {other.label}"
            )
        return self.entries @ np.asarray(other)

    def __add__(self, other: "FockMatrix") -> "FockMatrix":
        return FockMatrix(self.entries + other.entries, self.params, f"{self.label} + {other.label}")

    def __sub__(self, other: "FockMatrix") -> "FockMatrix":
        return FockMatrix(self.entries - other.entries, self.params, f"{self.label} - {other.label}")

    def scaled(self, c: complex, label: str | None = None) -> "FockMatrix":
        return FockMatrix(c * self.entries, self.params, label or f"{c!r} {self.label}")


def commutator(a: FockMatrix, b: FockMatrix) -> np.ndarray:
    return a.entries @ b.entries - b.entries @ a.entries


# ---------------------------------------------------------------- ladder algebra


def _lower(m: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, m, dtype=float)), 1).astype(complex)


def quadratic_compressions(m: int, params: OscillatorParams) -> dict[str, np.ndarray]:
    """Exact compressions of q^2, p^2 and qp+pq."""
    a = _lower(m + 2)
    ad = a.conj().T
    wt = params.omega_tilde
    q = (a + ad) / math.sqrt(2.0 * wt)
    p = 1j * math.sqrt(wt / 2.0) * (ad - a)
    crop = slice(0, m)
    return {
        "q2": (q @ q)[crop, crop],
        "p2": (p @ p)[crop, crop],
        # q p + p q == i (a^dagger^2 - a^2)
        "A": (1j * (ad @ ad - a @ a))[crop, crop],
    }


def annihilation_matrix(m: int, params: OscillatorParams) -> FockMatrix:
    return FockMatrix(_lower(m), params, "a")


def creation_matrix(m: int, params: OscillatorParams) -> FockMatrix:
    return FockMatrix(_lower(m).T, params, "a^dagger")


def position_matrix(m: int, params: OscillatorParams) -> FockMatrix:
    if m < 2:
        raise ValueError("truncation must be at least 2")
    a = _lower(m)
    return FockMatrix((a + a.T) / math.sqrt(2.0 * params.omega_tilde), params, "q")


def momentum_matrix(m: int, params: OscillatorParams) -> FockMatrix:
    if m < 2:
        raise ValueError("truncation must be at least 2")
    a = _lower(m)
    return FockMatrix(1j * math.sqrt(params.omega_tilde / 2.0) * (a.T - a), params, "p")


def position_squared_matrix(m: int, params: OscillatorParams) -> FockMatrix:
    return FockMatrix(quadratic_compressions(m, params)["q2"], params, "q^2")


def momentum_squared_matrix(m: int, params: OscillatorParams) -> FockMatrix:
    return FockMatrix(quadratic_compressions(m, params)["p2"], params, "p^2")


def symmetrized_product(m: int, params: OscillatorParams) -> FockMatrix:
    """A = qp + pq = i(a^dagger^2 - a^2): only the n -> n +/- 2 bands are non-zero."""
    _require_dim(m, 4)
    return FockMatrix(quadratic_compressions(m, params)["A"], params, "qp+pq")


def hamiltonian_first_order(m: int, params: OscillatorParams) -> FockMatrix:
    """Weyl-ordered (p^2 + alpha (qp+pq) + omega^2 q^2) / 2."""
    _require_dim(m, 4)
    ops = quadratic_compressions(m, params)
    h = 0.5 * (ops["p2"] + params.alpha * ops["A"] + params.omega**2 * ops["q2"])
    return FockMatrix(h, params, "H")


def hamiltonian_oscillator(m: int, params: OscillatorParams) -> FockMatrix:
    """(p^2 + omega_tilde^2 q^2) / 2, diagonal in this basis."""
    n = np.arange(m)
    return FockMatrix(np.diag(params.omega_tilde * (n + 0.5)), params, "H_omega_tilde")


def hamiltonian_bck(t: float, m: int, params: OscillatorParams) -> FockMatrix:
    """(e^{-2 alpha t} p^2 + omega^2 e^{2 alpha t} q^2) / 2."""
    _require_dim(m, 4)
    ops = quadratic_compressions(m, params)
    g = math.exp(2.0 * params.alpha * t)
    h = 0.5 * (ops["p2"] / g + params.omega**2 * g * ops["q2"])
    return FockMatrix(h, params, f"H_BCK(t={t!r})")


class EnergyObservables(NamedTuple):
    lagrangian: FockMatrix  # conserved energy of the first-order theory, equal to H
    conserved_bck: FockMatrix  # H_BCK + (alpha/2) A
    mechanical_first_order: FockMatrix  # e^{-2 alpha t} (H - (alpha/2) A)
    mechanical_bck: FockMatrix  # e^{-2 alpha t} H_BCK


def energy_observables(t: float, m: int, params: OscillatorParams) -> EnergyObservables:
    _require_dim(m, 4)
    h = hamiltonian_first_order(m, params)
    hb = hamiltonian_bck(t, m, params)
    a = symmetrized_product(m, params)
    half_alpha = 0.5 * params.alpha
    decay = math.exp(-2.0 * params.alpha * t)
    return EnergyObservables(
        lagrangian=FockMatrix(h.entries, params, "E_L"),
        conserved_bck=FockMatrix(hb.entries + half_alpha * a.entries, params, "E_conserved"),
        mechanical_first_order=FockMatrix(
            decay * (h.entries - half_alpha * a.entries), params, "E_M"
        ),
        mechanical_bck=FockMatrix(decay * hb.entries, params, "E_mech"),
    )


def heisenberg_coefficients(t: float, params: OscillatorParams) -> tuple[float, float, float, float]:
    """(cq, cp, dq, dp) with x(t) = cq q + cp p and y(t) = dq q + dp p in the Heisenberg picture."""
    wt, al = params.omega_tilde, params.alpha
    decay = math.exp(-al * t)
    c, s = math.cos(wt * t), math.sin(wt * t)
    return (
        decay * (c + al / wt * s),
        decay * s / wt,
        -decay * params.omega**2 / wt * s,
        decay * (c - al / wt * s),
    )


def heisenberg_position(t: float, m: int, params: OscillatorParams) -> FockMatrix:
    cq, cp, _, _ = heisenberg_coefficients(t, params)
    q, p = position_matrix(m, params), momentum_matrix(m, params)
    return FockMatrix(cq * q.entries + cp * p.entries, params, f"x_check(t={t!r})")


def heisenberg_velocity(t: float, m: int, params: OscillatorParams) -> FockMatrix:
    _, _, dq, dp = heisenberg_coefficients(t, params)
    q, p = position_matrix(m, params), momentum_matrix(m, params)
    return FockMatrix(dq * q.entries + dp * p.entries, params, f"y_check(t={t!r})")


def heisenberg_commutator_check(
    t: float, m: int, params: OscillatorParams, *, tolerance: float = 1e-10, guard: int = 4
) -> CheckReport:
    """Max deviation of [x_check, y_check] from i e^{-2 alpha t} on the guarded block."""
    _require_dim(m, 8)
    x = heisenberg_position(t, m, params)
    y = heisenberg_velocity(t, m, params)
    comm = commutator(x, y)[: m - guard, : m - guard]
    target = 1j * math.exp(-2.0 * params.alpha * t) * np.eye(m - guard)
    return CheckReport.evaluate(
        f"heisenberg_commutator[t={t!r}]",
        float(np.max(np.abs(comm - target))),
        0.0,
        tolerance,
        guard_band=guard,
        truncation=m,
        target_scale=math.exp(-2.0 * params.alpha * t),
    )


def s_transform_matrix(m: int, params: OscillatorParams, *, guard: int | None = None) -> FockMatrix:
    """exp(-i alpha q^2 / 2) exponentiated in a padded space and cropped to m levels."""
    guard = max(64, m) if guard is None else guard
    q2 = quadratic_compressions(m + guard, params)["q2"]
    s = scipy.linalg.expm(-0.5j * params.alpha * q2)[:m, :m]
    return FockMatrix(s, params, "S")


def _require_dim(m: int, lowest: int) -> None:
    if m < lowest:
        raise ValueError(f"truncation must be at least {lowest}, got {m}")


# ---------------------------------------------------------------- grid side


def apply_s_transform(
    psi: WaveFunction, params: OscillatorParams, direction: Direction = "forward"
) -> WaveFunction:
    """Multiply by exp(-i alpha q^2/2) (forward) or its conjugate (inverse)."""
    sign = _sign(direction)
    return psi.with_samples(psi.samples * np.exp(-0.5j * sign * params.alpha * psi.q**2))


def sinc_interpolate(grid: SpatialGrid, samples: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Whittaker-Shannon interpolation of grid samples at arbitrary points."""
    kernel = np.sinc((np.asarray(targets)[:, None] - grid.points[None, :]) / grid.spacing)
    return kernel @ samples


@lru_cache(maxsize=32)
def _dilation_kernel(grid: SpatialGrid, scale: float) -> np.ndarray:
    targets = grid.points * scale
    kernel = np.sinc((targets[:, None] - grid.points[None, :]) / grid.spacing)
    kernel.setflags(write=False)
    return kernel


def apply_dilation(
    psi: WaveFunction,
    t: float,
    params: OscillatorParams,
    direction: Direction = "forward",
    *,
    edge_tolerance: float = 1e-10,
) -> WaveFunction:
    """(D psi)(q) = e^{alpha t/2} psi(q e^{alpha t}) by band-limited interpolation.

    Target points that fall outside the source grid are only allowed when the
    source has decayed at the grid edges (relative to its peak); otherwise
    :class:`GridError` is raised and the caller must widen the grid.
    """
    s = _sign(direction) * params.alpha * t
    if s == 0.0:
        return psi
    scale = math.exp(s)
    if scale > 1.0:
        peak = float(np.max(np.abs(psi.samples)))
        edge = float(np.max(np.abs(np.r_[psi.samples[:4], psi.samples[-4:]])))
        if peak > 0.0 and edge > edge_tolerance * peak:
            raise GridError(
                f"dilation by {scale:.6g} samples outside the grid where the state has not "
                f"decayed (edge/peak = {edge / peak:.3g}); widen the grid"
            )
    kernel = _dilation_kernel(psi.grid, scale)
    return psi.with_samples(math.sqrt(scale) * (kernel @ psi.samples))


_FD8_FIRST = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
_FD8_SECOND = np.array(
    [-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560]
)


def fd8_derivative(values: np.ndarray, spacing: float, order: int = 1) -> np.ndarray:
    """8th-order central differences; the four points at each end are NaN."""
    stencil = {1: _FD8_FIRST, 2: _FD8_SECOND}[order]
    values = np.asarray(values)
    out = np.full(values.shape, np.nan, dtype=np.result_type(values, float))
    # np.convolve flips the kernel
    out[4:-4] = np.convolve(values, stencil[::-1], mode="valid") / spacing**order
    return out


def spectral_derivative(values: np.ndarray, spacing: float, order: int = 1) -> np.ndarray:
    """FFT derivative; assumes the function has decayed at both grid ends."""
    k = 2.0 * np.pi * np.fft.fftfreq(len(values), d=spacing)
    return np.fft.ifft((1j * k) ** order * np.fft.fft(values))


def grid_derivative(
    psi: WaveFunction, order: int = 1, method: DerivativeMethod = "spectral"
) -> np.ndarray:
    if method == "spectral":
        return spectral_derivative(psi.samples, psi.grid.spacing, order)
    if method == "fd8":
        return np.nan_to_num(fd8_derivative(psi.samples, psi.grid.spacing, order), nan=0.0)
    raise ValueError(f"unknown derivative method {method!r}")


def apply_momentum(psi: WaveFunction, method: DerivativeMethod = "spectral") -> WaveFunction:
    return psi.with_samples(-1j * grid_derivative(psi, 1, method))


def apply_momentum_squared(psi: WaveFunction, method: DerivativeMethod = "spectral") -> WaveFunction:
    return psi.with_samples(-grid_derivative(psi, 2, method))


def apply_symmetrized_product_grid(
    psi: WaveFunction, method: DerivativeMethod = "spectral"
) -> WaveFunction:
    """(qp + pq) psi = -i (2 q psi' + psi)."""
    return psi.with_samples(-1j * (2.0 * psi.q * grid_derivative(psi, 1, method) + psi.samples))


def apply_hamiltonian_first_order_grid(
    psi: WaveFunction, params: OscillatorParams, method: DerivativeMethod = "spectral"
) -> WaveFunction:
    p2 = -grid_derivative(psi, 2, method)
    a = -1j * (2.0 * psi.q * grid_derivative(psi, 1, method) + psi.samples)
    return psi.with_samples(0.5 * (p2 + params.alpha * a + params.omega**2 * psi.q**2 * psi.samples))


def apply_hamiltonian_bck_grid(
    psi: WaveFunction, t: float, params: OscillatorParams, method: DerivativeMethod = "spectral"
) -> WaveFunction:
    g = math.exp(2.0 * params.alpha * t)
    p2 = -grid_derivative(psi, 2, method)
    return psi.with_samples(0.5 * (p2 / g + params.omega**2 * g * psi.q**2 * psi.samples))


ENERGY_NAMES = ("lagrangian", "conserved_bck", "mechanical_first_order", "mechanical_bck")


def apply_energy_grid(
    name: str,
    psi: WaveFunction,
    t: float,
    params: OscillatorParams,
    method: DerivativeMethod = "spectral",
) -> WaveFunction:
    """Grid action of one of :data:`ENERGY_NAMES` at time ``t``."""
    decay = math.exp(-2.0 * params.alpha * t)
    if name == "lagrangian":
        return apply_hamiltonian_first_order_grid(psi, params, method)
    if name == "conserved_bck":
        hb = apply_hamiltonian_bck_grid(psi, t, params, method)
        a = apply_symmetrized_product_grid(psi, method)
        return hb + 0.5 * params.alpha * a
    if name == "mechanical_first_order":
        p2 = -grid_derivative(psi, 2, method)
        return psi.with_samples(0.5 * decay * (p2 + params.omega**2 * psi.q**2 * psi.samples))
    if name == "mechanical_bck":
        return apply_hamiltonian_bck_grid(psi, t, params, method) * decay
    raise ValueError(f"unknown energy observable {name!r}; expected one of {ENERGY_NAMES}")


def expectation(psi: WaveFunction, applied: WaveFunction) -> complex:
    """<psi|O psi> / <psi|psi> given ``applied = O psi``."""
    return inner_product(psi, applied) / norm2(psi)


def _sign(direction: str) -> int:
    if direction == "forward":
        return 1
    if direction == "inverse":
        return -1
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
