"""Classical trajectories, quantum evolution in both theories, and semiclassical closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from dampedq.core import (
    CheckReport,
    OscillatorParams,
    TruncationError,
    WaveFunction,
)
from dampedq.operators import (
    quadratic_compressions,
    apply_dilation,
    hamiltonian_first_order,
    momentum_matrix,
    position_matrix,
)
from dampedq.states import FockVector, project, synthesize


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float
    t: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.t)):
            raise ValueError(f"non-finite phase point {self}")


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float

    @property
    def uncertainty_product(self) -> float:
        return math.sqrt(self.var_x * self.var_y)

    def as_dict(self) -> dict[str, float]:
        return {
            "t": self.t,
            "mean_x": self.mean_x,
            "mean_y": self.mean_y,
            "var_x": self.var_x,
            "var_y": self.var_y,
            "uncertainty_product": self.uncertainty_product,
        }


# ---------------------------------------------------------------- classical


def classical_closed_form(p0: PhasePoint, t: float, params: OscillatorParams) -> PhasePoint:
    """Exact solution of x' = y, y' = -omega^2 x - 2 alpha y from ``p0`` to time ``t``."""
    wt, al = params.omega_tilde, params.alpha
    tau = t - p0.t
    decay = math.exp(-al * tau)
    c, s = math.cos(wt * tau), math.sin(wt * tau)
    x = decay * (p0.x * c + (p0.y + al * p0.x) / wt * s)
    y = decay * (p0.y * c - (params.omega**2 * p0.x + al * p0.y) / wt * s)
    return PhasePoint(x, y, t)


def _rhs(x: float, y: float, w2: float, two_alpha: float) -> tuple[float, float]:
    return y, -w2 * x - two_alpha * y


def rk4_trajectory(
    p0: PhasePoint, t_end: float, dt: float, params: OscillatorParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fixed-step RK4 from p0.t to t_end; the step is shrunk so the last sample lands on t_end."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    span = t_end - p0.t
    steps = max(1, int(math.ceil(abs(span) / dt - 1e-9)))
    h = span / steps
    w2, two_alpha = params.omega**2, 2.0 * params.alpha
    xs = np.empty(steps + 1)
    ys = np.empty(steps + 1)
    x, y = p0.x, p0.y
    xs[0], ys[0] = x, y
    for i in range(1, steps + 1):
        k1x, k1y = _rhs(x, y, w2, two_alpha)
        k2x, k2y = _rhs(x + 0.5 * h * k1x, y + 0.5 * h * k1y, w2, two_alpha)
        k3x, k3y = _rhs(x + 0.5 * h * k2x, y + 0.5 * h * k2y, w2, two_alpha)
        k4x, k4y = _rhs(x + h * k3x, y + h * k3y, w2, two_alpha)
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        xs[i], ys[i] = x, y
    times = p0.t + h * np.arange(steps + 1)
    return times, xs, ys


def classical_rk4(p0: PhasePoint, t: float, dt: float, params: OscillatorParams) -> PhasePoint:
    _, xs, ys = rk4_trajectory(p0, t, dt, params)
    return PhasePoint(float(xs[-1]), float(ys[-1]), t)


def multiplier_residual(
    times: np.ndarray, xs: np.ndarray, params: OscillatorParams
) -> tuple[np.ndarray, np.ndarray]:
    """e^{2 alpha t} (x'' + 2 alpha x' + omega^2 x) from 4th-order differences of x.

    Returns (interior times, residual); two samples are dropped at each end.
    """
    h = times[1] - times[0]
    x = np.asarray(xs)
    d1 = (x[:-4] - 8 * x[1:-3] + 8 * x[3:-1] - x[4:]) / (12 * h)
    d2 = (-x[:-4] + 16 * x[1:-3] - 30 * x[2:-2] + 16 * x[3:-1] - x[4:]) / (12 * h * h)
    t_in = times[2:-2]
    res = np.exp(2 * params.alpha * t_in) * (d2 + 2 * params.alpha * d1 + params.omega**2 * x[2:-2])
    return t_in, res


def mechanical_energy(xs: np.ndarray, ys: np.ndarray, params: OscillatorParams) -> np.ndarray:
    return 0.5 * (np.asarray(ys) ** 2 + params.omega**2 * np.asarray(xs) ** 2)


# ---------------------------------------------------------------- quantum evolution


@lru_cache(maxsize=16)
def _eigensystem(m: int, params: OscillatorParams) -> tuple[np.ndarray, np.ndarray]:
    # lru_cache insertion is idempotent, so concurrent first calls are harmless
    evals, evecs = np.linalg.eigh(hamiltonian_first_order(m, params).entries)
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return evals, evecs


def evolve_first_order(
    state: FockVector, t: float, params: OscillatorParams | None = None, *, tolerance: float = 1e-8
) -> FockVector:
    """Apply exp(-i H t) for the first-order Hamiltonian.

    In the oscillator frame this is the diagonal phase exp(-i E_n t); in the
    lab frame the truncated H is diagonalized once per (dimension, params).
    Probability reaching the top eighth of the levels raises TruncationError.
    """
    params = state.params if params is None else params
    if t == 0.0:
        return state
    m = state.dim
    if state.frame == "oscillator":
        phases = np.exp(-1j * params.omega_tilde * (np.arange(m) + 0.5) * t)
        out = state.with_coeffs(phases * state.coeffs)
    else:
        evals, evecs = _eigensystem(m, params)
        out = state.with_coeffs(evecs @ (np.exp(-1j * evals * t) * (evecs.conj().T @ state.coeffs)))
    guard = max(4, m // 8)
    leak = out.tail_weight(guard)
    if leak > tolerance * max(state.norm2(), 1e-300):
        raise TruncationError(f"evolution leaked {leak:.3g} into the top {guard} of {m} levels")
    return out


def evolve_bck(psi: WaveFunction, t: float, params: OscillatorParams, *, trunc: int = 96) -> WaveFunction:
    """BCK propagation U(t) = D exp(-i H t) of a state given at t = 0.

    The grid state is projected onto the oscillator-frame number basis,
    evolved with :func:`evolve_first_order`, synthesized back on the same grid
    and dilated.
    """
    if t == 0.0:
        return psi
    vec = project(psi, params, trunc, "oscillator")
    evolved = synthesize(evolve_first_order(vec, t, params), psi.grid, t)
    return apply_dilation(evolved, t, params, "forward")


# ---------------------------------------------------------------- semiclassical closed forms


def coherent_means(z: complex, t: float, params: OscillatorParams) -> TrajectorySample:
    """Means and variances of x = e^{-alpha t} q and y = e^{-alpha t} p in S|z> at time t."""
    wt, al = params.omega_tilde, params.alpha
    decay = math.exp(-al * t)
    rot = z * np.exp(-1j * wt * t)
    mean_x = decay * 2.0 * rot.real / math.sqrt(2.0 * wt)
    mean_y = (1j * math.sqrt(wt / 2.0) * decay * (np.conj(rot) - rot)).real - al * mean_x
    var_x = decay**2 / (2.0 * wt)
    var_y = decay**2 * params.omega**2 / (2.0 * wt)
    return TrajectorySample(t, float(mean_x), float(mean_y), var_x, var_y)


def uncertainty_product(t: float, params: OscillatorParams) -> float:
    """Delta x Delta y = e^{-2 alpha t} omega / (2 omega_tilde) for coherent states."""
    return 0.5 * (params.omega / params.omega_tilde) * math.exp(-2.0 * params.alpha * t)


def critical_time(params: OscillatorParams) -> float | None:
    """Time at which the coherent-state uncertainty product reaches 1/2; None when alpha = 0."""
    if params.alpha == 0.0:
        return None
    return math.log(params.omega / params.omega_tilde) / (2.0 * params.alpha)


def squeezed_means(z: complex, xi: float, t: float, params: OscillatorParams) -> tuple[float, float]:
    """Closed-form <x>, <y> in the squeezed coherent state |z, xi> at time t."""
    wt, al = params.omega_tilde, params.alpha
    decay = math.exp(-al * t)
    em, ep = np.exp(-1j * wt * t), np.exp(1j * wt * t)
    zb = np.conj(z)
    ch, sh = math.cosh(xi), math.sinh(xi)
    mean_x = decay / math.sqrt(2.0 * wt) * ((em * z + ep * zb) * ch - (ep * z + em * zb) * sh)
    mean_y = (
        1j * math.sqrt(wt / 2.0) * decay * ((ep * zb - em * z) * ch - (ep * z - em * zb) * sh)
        - al * mean_x
    )
    return float(mean_x.real), float(mean_y.real)


def squeezed_variance_x(xi: float, t: float, params: OscillatorParams) -> float:
    """(Delta x)^2 = e^{-2 alpha t}/(2 wt) [(cosh xi + sinh xi)^2 - 4 cosh xi sinh xi cos^2(wt t)]."""
    wt = params.omega_tilde
    ch, sh = math.cosh(xi), math.sinh(xi)
    bracket = (ch + sh) ** 2 - 4.0 * ch * sh * math.cos(wt * t) ** 2
    return math.exp(-2.0 * params.alpha * t) / (2.0 * wt) * bracket


def fock_sample(state: FockVector, t: float) -> TrajectorySample:
    """Moments of x = e^{-alpha t} q and y = e^{-alpha t} p in the physical state.

    ``state`` must already be the state at time ``t``. In the oscillator frame
    the physical momentum becomes S^{-1} p S = p - alpha q.
    """
    params = state.params
    m = state.dim
    c = state.coeffs / math.sqrt(state.norm2())
    al = params.alpha
    q = position_matrix(m, params).entries
    p = momentum_matrix(m, params).entries
    ops = quadratic_compressions(m, params)
    if state.frame == "oscillator":
        p = p - al * q
        p2 = ops["p2"] - al * ops["A"] + al * al * ops["q2"]
    else:
        p2 = ops["p2"]
    mq = np.vdot(c, q @ c).real
    mp = np.vdot(c, p @ c).real
    vq = np.vdot(c, ops["q2"] @ c).real - mq * mq
    vp = np.vdot(c, p2 @ c).real - mp * mp
    decay = math.exp(-al * t)
    return TrajectorySample(t, decay * mq, decay * mp, decay**2 * vq, decay**2 * vp)


def trajectory_radius(z: complex, t: float, params: OscillatorParams) -> float:
    """sqrt(<x>^2 + <y>^2) from the coherent-state means."""
    s = coherent_means(z, t, params)
    return math.hypot(s.mean_x, s.mean_y)


def radius_derived(z: complex, t: float, params: OscillatorParams) -> float:
    """Radius written out from the means: with phi = wt t - arg z,
    sqrt(2/wt) e^{-alpha t} |z| sqrt((1 + alpha^2) cos^2 phi + wt^2 sin^2 phi + alpha wt sin 2 phi).
    """
    wt, al = params.omega_tilde, params.alpha
    r, theta = abs(z), float(np.angle(z))
    phi = wt * t - theta
    inner = (1 + al * al) * math.cos(phi) ** 2 + wt * wt * math.sin(phi) ** 2 + al * wt * math.sin(2 * phi)
    return math.sqrt(2.0 / wt) * math.exp(-al * t) * r * math.sqrt(inner)


def radius_as_printed(z: complex, t: float, params: OscillatorParams) -> float:
    """Radius formula in the form it is usually quoted, kept only to measure its deviation."""
    wt, al = params.omega_tilde, params.alpha
    r, theta = abs(z), float(np.angle(z))
    phi = wt * t - theta
    inner = 1 + al * al * math.cos(phi) + al * math.sin(2 * phi)
    return math.sqrt(2.0 / wt) * math.exp(-al * t) * r * math.sqrt(max(inner, 0.0))


def radius_check(z: complex, t: float, params: OscillatorParams, tolerance: float = 1e-12) -> CheckReport:
    """Means route vs the derived formula; the quoted formula's deviation is metadata only."""
    rho = trajectory_radius(z, t, params)
    return CheckReport.evaluate(
        f"trajectory_radius[z={z!r},t={t!r}]",
        abs(radius_derived(z, t, params) - rho),
        0.0,
        tolerance,
        radius=rho,
        quoted_formula_deviation=abs(radius_as_printed(z, t, params) - rho),
    )
