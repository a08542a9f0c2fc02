"""Orthonormal Hermite functions and large-n asymptotic pseudostationary forms.

h_n(u) = (2**n n! sqrt(pi))**(-1/2) exp(-u**2/2) H_n(u) is evaluated with the
three-term recurrence on the normalized functions themselves,

    h_{k+1} = u sqrt(2/(k+1)) h_k - sqrt(k/(k+1)) h_{k-1},

which keeps every intermediate of order one. The Gaussian seed is carried as a
separate log-scale so that large |u| (where exp(-u**2/2) underflows) stays exact.
"""

from __future__ import annotations

import math

import numpy as np

from dampedq.core import OscillatorParams

_RESCALE_EVERY = 16
_RESCALE_ABOVE = 1e120


def _recurrence(n_max: int, u: np.ndarray):
    """Yield (scaled value, log scale) for orders 0..n_max."""
    log_scale = -0.5 * u * u
    prev = np.zeros_like(u)
    cur = np.full_like(u, math.pi ** -0.25)
    yield cur, log_scale
    for k in range(n_max):
        nxt = u * math.sqrt(2.0 / (k + 1)) * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
        if k % _RESCALE_EVERY == 0:
            big = np.abs(cur) > _RESCALE_ABOVE
            if np.any(big):
                factor = np.where(big, np.abs(cur), 1.0)
                cur = cur / factor
                prev = prev / factor
                log_scale = log_scale + np.log(factor)
        yield cur, log_scale


def hermite_functions(n_max: int, u) -> np.ndarray:
    """All orders 0..n_max at the points ``u``; shape ``(n_max + 1,) + shape(u)``."""
    if n_max < 0:
        raise ValueError(f"order must be non-negative, got {n_max}")
    u = np.asarray(u, dtype=float)
    out = np.empty((n_max + 1,) + u.shape)
    for k, (h, log_scale) in enumerate(_recurrence(n_max, u)):
        out[k] = h * np.exp(log_scale)
    return out


def hermite_function(n: int, u):
    """Orthonormal Hermite function h_n(u); scalar in, scalar out."""
    if n < 0:
        raise ValueError(f"order must be non-negative, got {n}")
    for h, log_scale in _recurrence(n, np.asarray(u, dtype=float)):
        pass
    value = h * np.exp(log_scale)
    return float(value) if np.ndim(value) == 0 else value


def log_double_factorial_ratio(m: int) -> float:
    """log((2m-1)!!/(2m)!!), i.e. log(C(2m, m) / 4**m)."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return math.lgamma(2 * m + 1) - 2.0 * math.lgamma(m + 1) - m * math.log(4.0)


def asymptotic_pseudostationary(n: int, q, t: float, params: OscillatorParams):
    """Large-n plane-wave form of the pseudostationary state of order ``n``.

    With m = n // 2 the amplitude is (omega_tilde/pi)^(1/4) (-1)^m
    sqrt((2m-1)!!/(2m)!!), the phase is exp(-i alpha q^2 e^{2 alpha t} / 2), and
    the carrier is cos(sqrt((4m+1) omega_tilde) e^{alpha t} q) for even n or
    sin(sqrt((4m+3) omega_tilde) e^{alpha t} q) for odd n. Not normalizable.
    """
    if n < 1:
        raise ValueError(f"asymptotic form needs n >= 1, got {n}")
    q_arr = np.asarray(q, dtype=float)
    m = n // 2
    wt = params.omega_tilde
    stretch = math.exp(params.alpha * t)
    amplitude = (wt / math.pi) ** 0.25 * (-1) ** m * math.exp(0.5 * log_double_factorial_ratio(m))
    chirp = np.exp(-0.5j * params.alpha * q_arr**2 * stretch**2)
    if n % 2 == 0:
        carrier = np.cos(math.sqrt((4 * m + 1) * wt) * stretch * q_arr)
    else:
        carrier = np.sin(math.sqrt((4 * m + 3) * wt) * stretch * q_arr)
    value = amplitude * chirp * carrier
    return complex(value) if np.ndim(value) == 0 else value
