"""Named states of both theories.

Position-space states are sampled on a :class:`SpatialGrid`. Coherent and
squeezed states live in the omega_tilde number basis as :class:`FockVector`
and are synthesized on a grid on demand.

A FockVector carries a ``frame``:

* ``"lab"``: coefficients of the physical first-order state itself;
* ``"oscillator"``: coefficients of S^{-1} psi, where S = exp(-i alpha q^2/2)
  conjugates the first-order Hamiltonian into the plain omega_tilde
  oscillator. Coherent and squeezed states are built in this frame, and the
  physical state is S applied to them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
import scipy.stats

from dampedq.core import (
    GridError,
    OscillatorParams,
    SpatialGrid,
    TruncationError,
    WaveFunction,
    auto_grid,
    norm2,
)
from dampedq.hermite import hermite_functions
from dampedq.operators import apply_s_transform, s_transform_matrix

Frame = Literal["lab", "oscillator"]

COHERENT_TAIL_TOLERANCE = 1e-12
SQUEEZED_NORM_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class FockVector:
    coeffs: np.ndarray
    params: OscillatorParams
    frame: Frame = "oscillator"

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        if self.frame not in ("lab", "oscillator"):
            raise ValueError(f"unknown frame {self.frame!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def norm2(self) -> float:
        return float(np.vdot(self.coeffs, self.coeffs).real)

    def tail_weight(self, levels: int) -> float:
        """Probability in the top ``levels`` number states."""
        return float(np.sum(np.abs(self.coeffs[-levels:]) ** 2))

    def with_coeffs(self, coeffs: np.ndarray, frame: Frame | None = None) -> "FockVector":
        return FockVector(coeffs, self.params, self.frame if frame is None else frame)


@dataclass(frozen=True)
class CoherentSpec:
    """Coherent label ``z`` and real squeeze parameter ``xi`` (0 for plain coherent states)."""

    z: complex
    xi: float = 0.0


# ---------------------------------------------------------------- grid states


@lru_cache(maxsize=64)
def _stationary_table(n_max: int, params: OscillatorParams, grid: SpatialGrid) -> np.ndarray:
    wt = params.omega_tilde
    table = wt**0.25 * hermite_functions(n_max, math.sqrt(wt) * grid.points)
    table.setflags(write=False)
    return table


def stationary_states(n_max: int, params: OscillatorParams, grid: SpatialGrid) -> np.ndarray:
    """Rows are psi_n^{omega_tilde} sampled on the grid, n = 0..n_max."""
    return _stationary_table(n_max, params, grid)


def stationary_state(n: int, params: OscillatorParams, grid: SpatialGrid) -> WaveFunction:
    """omega_tilde^{1/4} h_n(sqrt(omega_tilde) q)."""
    _check_level(n)
    return WaveFunction(grid, stationary_states(n, params, grid)[n])


def first_order_eigenstate(
    n: int, params: OscillatorParams, grid: SpatialGrid, t: float = 0.0
) -> WaveFunction:
    """S psi_n^{omega_tilde}; with ``t`` the stationary phase exp(-i E_n t) is included."""
    _check_level(n)
    psi = apply_s_transform(stationary_state(n, params, grid), params, "forward")
    if t == 0.0:
        return psi
    return psi.with_samples(psi.samples * np.exp(-1j * params.energy(n) * t), time_label=t)


def pseudostationary_state(
    n: int, t: float, params: OscillatorParams, grid: SpatialGrid
) -> WaveFunction:
    """BCK solution with phase -i E_n t + alpha t/2 - (omega_tilde + i alpha) q^2 e^{2 alpha t}/2."""
    _check_level(n)
    wt, al = params.omega_tilde, params.alpha
    stretch = math.exp(al * t)
    q = grid.points
    u = math.sqrt(wt) * q * stretch
    h = hermite_functions(n, u)[n]
    phase = np.exp(-1j * params.energy(n) * t - 0.5j * al * (q * stretch) ** 2)
    return WaveFunction(grid, wt**0.25 * math.sqrt(stretch) * h * phase, time_label=t)


def _check_level(n: int) -> None:
    if n < 0:
        raise ValueError(f"quantum number must be non-negative, got {n}")


# ---------------------------------------------------------------- Fock states


def coherent_state(spec: CoherentSpec, params: OscillatorParams, trunc: int | None = None) -> FockVector:
    """|z> = exp(-|z|^2/2) sum z^n / sqrt(n!) |n>, in the oscillator frame."""
    if spec.xi != 0.0:
        raise ValueError("coherent_state takes xi = 0; use squeezed_state for xi != 0")
    mu = abs(spec.z) ** 2
    if trunc is None:
        trunc = 16
        while scipy.stats.poisson.sf(trunc - 1, mu) >= 0.1 * COHERENT_TAIL_TOLERANCE:
            trunc += 8
    tail = float(scipy.stats.poisson.sf(trunc - 1, mu)) if mu > 0 else 0.0
    if tail >= COHERENT_TAIL_TOLERANCE:
        raise TruncationError(f"Poisson tail {tail:.3g} beyond {trunc} levels for |z|^2={mu}")
    c = np.empty(trunc, dtype=complex)
    c[0] = math.exp(-0.5 * mu)
    for n in range(1, trunc):
        c[n] = c[n - 1] * spec.z / math.sqrt(n)
    return FockVector(c, params, "oscillator")


def _sparse_lower(m: int) -> scipy.sparse.csr_matrix:
    return scipy.sparse.diags(np.sqrt(np.arange(1, m, dtype=float)), 1, format="csr", dtype=complex)


def squeezed_state(
    spec: CoherentSpec, t: float, params: OscillatorParams, trunc: int | None = None
) -> FockVector:
    """exp(z b^dagger - conj(z) b) |0_b>, in the oscillator frame.

    b(t) = cosh(xi) e^{i wt t} a + sinh(xi) e^{-i wt t} a^dagger. Its vacuum
    |0_b> is the squeezed vacuum exp((conj(zeta) a^2 - zeta a^dagger^2)/2)|0>
    with zeta = xi e^{-2 i wt t}. Both exponentials act in a padded space; the
    result is cropped to ``trunc`` levels and rejected if probability leaks
    past it. ``trunc=None`` picks the smallest adequate size.
    """
    if abs(spec.xi) > 2.0:
        raise ValueError(f"|xi| <= 2 required, got {spec.xi}")
    if trunc is not None:
        return _squeezed(spec, t, params, trunc)
    m = 48
    while True:
        try:
            return _squeezed(spec, t, params, m)
        except TruncationError:
            if m >= 1536:
                raise
            m *= 2


def _squeezed(spec: CoherentSpec, t: float, params: OscillatorParams, m: int) -> FockVector:
    work = m + max(16, m // 2)
    a = _sparse_lower(work)
    ad = a.T.tocsr()
    phase = np.exp(1j * params.omega_tilde * t)
    ch, sh = math.cosh(spec.xi), math.sinh(spec.xi)
    vacuum = np.zeros(work, dtype=complex)
    vacuum[0] = 1.0
    if spec.xi != 0.0:
        zeta = spec.xi * np.conj(phase) ** 2
        gen = 0.5 * (np.conj(zeta) * (a @ a) - zeta * (ad @ ad))
        vacuum = scipy.sparse.linalg.expm_multiply(gen.tocsc(), vacuum)
    b = ch * phase * a + sh * np.conj(phase) * ad
    bd = b.conj().T
    gen = spec.z * bd - np.conj(spec.z) * b
    state = scipy.sparse.linalg.expm_multiply(gen.tocsc(), vacuum)
    kept = state[:m]
    defect = abs(1.0 - float(np.vdot(kept, kept).real))
    if defect > SQUEEZED_NORM_TOLERANCE or np.sum(np.abs(kept[-8:]) ** 2) > SQUEEZED_NORM_TOLERANCE:
        raise TruncationError(f"norm defect {defect:.3g} with {m} levels (z={spec.z}, xi={spec.xi})")
    return FockVector(kept, params, "oscillator")


# ---------------------------------------------------------------- representation changes


def synthesize(vec: FockVector, grid: SpatialGrid, t: float = 0.0) -> WaveFunction:
    """Physical wavefunction of ``vec`` on ``grid`` (the S-phase is applied for the oscillator frame)."""
    table = stationary_states(vec.dim - 1, vec.params, grid)
    psi = WaveFunction(grid, vec.coeffs @ table, time_label=t)
    if vec.frame == "oscillator":
        psi = apply_s_transform(psi, vec.params, "forward")
    return psi


def project(
    psi: WaveFunction,
    params: OscillatorParams,
    m: int,
    frame: Frame = "oscillator",
    *,
    tolerance: float = 1e-10,
) -> FockVector:
    """Quadrature projection of a grid state onto the first ``m`` number states.

    Raises :class:`TruncationError` when the captured probability differs from
    the grid norm by more than ``tolerance`` (relative).
    """
    src = apply_s_transform(psi, params, "inverse") if frame == "oscillator" else psi
    table = stationary_states(m - 1, params, psi.grid)
    coeffs = table @ (psi.grid.weights * src.samples)
    total = norm2(psi)
    captured = float(np.sum(np.abs(coeffs) ** 2))
    if total > 0.0 and abs(total - captured) > tolerance * total:
        raise TruncationError(
            f"{m} levels capture {captured:.15g} of norm {total:.15g}; raise the truncation"
        )
    return FockVector(coeffs, params, frame)


def to_frame(
    vec: FockVector, frame: Frame, *, dim: int | None = None, tolerance: float = 1e-10
) -> FockVector:
    """Change frame with the S matrix (exact compression of exp(-i alpha q^2/2)).

    The chirp spreads a state over more levels, so the input is zero-padded to
    ``dim`` levels first (default: twice the input plus 64).
    """
    if frame == vec.frame:
        return vec
    dim = 2 * vec.dim + 64 if dim is None else dim
    padded = np.zeros(dim, dtype=complex)
    padded[: vec.dim] = vec.coeffs[:dim]
    s = s_transform_matrix(dim, vec.params).entries
    coeffs = s @ padded if frame == "lab" else s.conj().T @ padded
    out = vec.with_coeffs(coeffs, frame)
    if abs(out.norm2() - vec.norm2()) > tolerance * max(vec.norm2(), 1.0):
        raise TruncationError(f"frame change lost norm with {dim} levels")
    return out


def grid_for_fock(vec: FockVector, t: float = 0.0) -> SpatialGrid:
    """An auto grid able to hold every level present in ``vec``."""
    occupied = np.nonzero(np.abs(vec.coeffs) > 1e-14)[0]
    if occupied.size == 0:
        raise GridError("empty Fock vector")
    return auto_grid(vec.params, int(occupied[-1]), t)
