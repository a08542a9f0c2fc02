"""Checks that the dilation D maps the first-order theory onto the BCK theory.

Covers states, norms and observables, plus the large-n anomaly of the BCK
Hamiltonian and the boundary-term diagnostic for the domain of qp + pq.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from dampedq.core import (
    CheckReport,
    GridError,
    OscillatorParams,
    SpatialGrid,
    WaveFunction,
    auto_grid,
    make_params,
    norm2,
)
from dampedq.dynamics import evolve_first_order
from dampedq.hermite import asymptotic_pseudostationary, hermite_function
from dampedq.operators import (
    apply_dilation,
    apply_energy_grid,
    apply_hamiltonian_bck_grid,
    expectation,
    fd8_derivative,
    heisenberg_commutator_check,
)
from dampedq.states import (
    CoherentSpec,
    coherent_state,
    first_order_eigenstate,
    pseudostationary_state,
    synthesize,
)

STATE_MAP_TOL = 1e-7
NORM_MAP_TOL = 1e-9
OBSERVABLE_MAP_TOL = 1e-7
BCK_ENERGY_TOL = 1e-6
COMMUTATOR_TOL = 1e-10
BOUNDARY_PANEL_TOL = 1e-12
BOUNDARY_ASYMPTOTIC_FLOOR = 0.01
ASYMPTOTIC_BAND = (0.4, 1.0)
ASYMPTOTIC_CONTROL_FLOOR = 0.9
RESIDUAL_WINDOW = 1.0

DEFAULT_TIMES = (0.0, 0.25, 0.5, 1.0)
DEFAULT_PANEL_Z = (1.0 + 0.0j, 0.5 + 0.5j)


@dataclass(frozen=True)
class EquivalenceSuite:
    params: OscillatorParams
    n_levels: tuple[int, ...]
    times: tuple[float, ...]
    grid: SpatialGrid
    trunc: int = 128
    panel_z: tuple[complex, ...] = DEFAULT_PANEL_Z
    reports: tuple[CheckReport, ...] = field(default=(), compare=False)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.reports)


def default_suite(
    params: OscillatorParams | None = None,
    n_levels: Sequence[int] = range(11),
    times: Sequence[float] = DEFAULT_TIMES,
    trunc: int = 128,
    grid: SpatialGrid | None = None,
) -> EquivalenceSuite:
    params = make_params(1.0, 0.6) if params is None else params
    n_levels = tuple(int(n) for n in n_levels)
    times = tuple(float(t) for t in times)
    if grid is None:
        n_max = max(n_levels + (10,))
        grid = auto_grid(params, n_max, max(times + (0.0,)))
    return EquivalenceSuite(params, n_levels, times, grid, trunc)


# ---------------------------------------------------------------- state and norm maps


def check_state_map(n: int, t: float, suite: EquivalenceSuite) -> CheckReport:
    """D applied to the evolved first-order eigenstate vs the closed-form pseudostationary state."""
    p, g = suite.params, suite.grid
    mapped = apply_dilation(first_order_eigenstate(n, p, g, t), t, p, "forward")
    exact = pseudostationary_state(n, t, p, g)
    return CheckReport.evaluate(
        f"state_map[n={n},t={t!r}]",
        mapped.max_abs_diff(exact),
        0.0,
        STATE_MAP_TOL,
        grid_points=g.n_points,
        grid_half_width=g.half_width,
    )


def check_norm_map(psi: WaveFunction, t: float, params: OscillatorParams, name: str | None = None) -> CheckReport:
    """|norm^2(D psi) - norm^2(psi)|."""
    mapped = apply_dilation(psi, t, params, "forward")
    before, after = norm2(psi), norm2(mapped)
    return CheckReport.evaluate(
        name or f"norm_map[t={t!r}]", abs(after - before), 0.0, NORM_MAP_TOL, norm2_before=before
    )


# ---------------------------------------------------------------- observables


def state_panel(t: float, suite: EquivalenceSuite) -> list[tuple[str, WaveFunction]]:
    """First-order states at time t: eigenstates from n_levels (up to 9) and coherent states."""
    p, g = suite.params, suite.grid
    panel = [(f"psi_{n}", first_order_eigenstate(n, p, g, t)) for n in suite.n_levels if n <= 9]
    for z in suite.panel_z:
        vec = evolve_first_order(coherent_state(CoherentSpec(z), p), t, p)
        panel.append((f"coherent_{z!r}", synthesize(vec, g, t)))
    return panel


_PAIRS = {
    "mechanical": ("mechanical_bck", "mechanical_first_order"),
    "conserved": ("conserved_bck", "lagrangian"),
}


def _expect(name: str, psi: WaveFunction, t: float, params: OscillatorParams) -> float:
    return expectation(psi, apply_energy_grid(name, psi, t, params)).real


def check_observable_map(t: float, suite: EquivalenceSuite) -> CheckReport:
    """max |<D phi|O_BCK|D phi> - <phi|O|phi>| over the panel, for both energy pairs."""
    p = suite.params
    worst = {key: 0.0 for key in _PAIRS}
    panel = state_panel(t, suite)
    for _, phi in panel:
        mapped = apply_dilation(phi, t, p, "forward")
        for key, (bck_name, fo_name) in _PAIRS.items():
            diff = abs(_expect(bck_name, mapped, t, p) - _expect(fo_name, phi, t, p))
            worst[key] = max(worst[key], diff)
    return CheckReport.evaluate(
        f"observable_map[t={t!r}]",
        max(worst.values()),
        0.0,
        OBSERVABLE_MAP_TOL,
        mechanical_pair=worst["mechanical"],
        conserved_pair=worst["conserved"],
        panel_size=len(panel),
    )


def check_energy_values(t: float, suite: EquivalenceSuite) -> CheckReport:
    """Mapped eigenstates reproduce e^{-2 alpha t} (omega^2/wt)(n+1/2) and wt (n+1/2)."""
    p = suite.params
    ratio = p.omega**2 / p.omega_tilde
    decay = math.exp(-2.0 * p.alpha * t)
    worst_mech = worst_cons = 0.0
    for n in suite.n_levels:
        if n > 9:
            continue
        mapped = apply_dilation(first_order_eigenstate(n, p, suite.grid, t), t, p, "forward")
        worst_mech = max(worst_mech, abs(_expect("mechanical_bck", mapped, t, p) - decay * ratio * (n + 0.5)))
        worst_cons = max(worst_cons, abs(_expect("conserved_bck", mapped, t, p) - p.energy(n)))
    return CheckReport.evaluate(
        f"energy_values[t={t!r}]",
        max(worst_mech, worst_cons),
        0.0,
        OBSERVABLE_MAP_TOL,
        mechanical=worst_mech,
        conserved=worst_cons,
    )


def check_bck_energy(n: int, t: float, suite: EquivalenceSuite) -> CheckReport:
    """<psi_n^BCK(t)|H_BCK(t)|psi_n^BCK(t)> = (omega^2/omega_tilde)(n + 1/2) at every t."""
    p = suite.params
    psi = pseudostationary_state(n, t, p, suite.grid)
    value = expectation(psi, apply_hamiltonian_bck_grid(psi, t, p)).real
    return CheckReport.evaluate(
        f"bck_mean_energy[n={n},t={t!r}]", value, p.omega**2 / p.omega_tilde * (n + 0.5), BCK_ENERGY_TOL
    )


# ---------------------------------------------------------------- large-n anomaly


def window_grid(n: int, params: OscillatorParams, t: float = 0.0) -> np.ndarray:
    """Points covering the residual window with margin for the FD8 stencil, >= 60 per wavelength."""
    k = math.sqrt((2 * n + 3) * params.omega_tilde) * math.exp(params.alpha * t)
    h = min(2e-3, 2.0 * math.pi / (60.0 * k))
    half = RESIDUAL_WINDOW + 8 * h
    count = 2 * int(math.ceil(half / h)) + 1
    return np.linspace(-half, half, count)


def windowed_residual(
    n: int, params: OscillatorParams, *, shift: bool = True, exact: bool = False, t: float = 0.0
) -> float:
    """||(H_BCK(t) - E_n - i alpha/2 [if shift]) psi||_W / ||psi||_W on W = [-1, 1].

    ``psi`` is the asymptotic form, or the exact pseudostationary state when
    ``exact``. H_BCK is applied with 8th-order finite differences.
    """
    q = window_grid(n, params, t)
    h = q[1] - q[0]
    if exact:
        stretch = math.exp(params.alpha * t)
        wt = params.omega_tilde
        psi = (
            wt**0.25
            * math.sqrt(stretch)
            * hermite_function(n, math.sqrt(wt) * q * stretch)
            * np.exp(-1j * params.energy(n) * t - 0.5j * params.alpha * (q * stretch) ** 2)
        )
    else:
        psi = asymptotic_pseudostationary(n, q, t, params)
    g = math.exp(2.0 * params.alpha * t)
    h_psi = 0.5 * (-fd8_derivative(psi, h, 2) / g + params.omega**2 * g * q**2 * psi)
    eigen = params.energy(n) + (0.5j * params.alpha if shift else 0.0)
    resid = h_psi - eigen * psi
    inside = np.abs(q) <= RESIDUAL_WINDOW + 1e-12
    num = np.trapezoid(np.abs(resid[inside]) ** 2, q[inside])
    den = np.trapezoid(np.abs(psi[inside]) ** 2, q[inside])
    return math.sqrt(num / den)


def asymptotic_eigen_residual(n: int, suite: EquivalenceSuite, *, shift: bool = True) -> CheckReport:
    """Ratio of windowed residuals at 4n and n.

    With the i alpha/2 shift the ratio must fall in ASYMPTOTIC_BAND; the control
    without the shift must not decay (ratio >= ASYMPTOTIC_CONTROL_FLOOR).
    """
    if n < 32:
        raise ValueError(f"n={n} is too small for the asymptotic regime (need n >= 32)")
    p = suite.params
    r_n = windowed_residual(n, p, shift=shift)
    r_4n = windowed_residual(4 * n, p, shift=shift)
    ratio = r_4n / r_n
    name = f"asymptotic_residual_ratio[n={n},shift={'on' if shift else 'off'}]"
    meta = dict(residual_n=r_n, residual_4n=r_4n, window=f"[-{RESIDUAL_WINDOW}, {RESIDUAL_WINDOW}]")
    if shift:
        return CheckReport.within(name, ratio, *ASYMPTOTIC_BAND, **meta)
    return CheckReport.at_least(name, ratio, ASYMPTOTIC_CONTROL_FLOOR, **meta)


def asymptotic_convergence(n: int, params: OscillatorParams, t: float = 0.0) -> float:
    """max over the window of |exact pseudostationary - asymptotic form| at time t."""
    q = np.linspace(-RESIDUAL_WINDOW, RESIDUAL_WINDOW, 2001)
    wt = params.omega_tilde
    stretch = math.exp(params.alpha * t)
    exact = (
        wt**0.25
        * math.sqrt(stretch)
        * hermite_function(n, math.sqrt(wt) * q * stretch)
        * np.exp(-1j * params.energy(n) * t - 0.5j * params.alpha * (q * stretch) ** 2)
    )
    return float(np.max(np.abs(exact - asymptotic_pseudostationary(n, q, t, params))))


# ---------------------------------------------------------------- domain of qp + pq


def _value_at(psi: WaveFunction, x: float) -> complex:
    g = psi.grid
    pos = (x + g.half_width) / g.spacing
    if not -1e-9 <= pos <= g.n_points - 1 + 1e-9:
        raise GridError(f"point {x} lies outside the grid [-{g.half_width}, {g.half_width}]")
    nearest = int(round(pos))
    if abs(pos - nearest) < 1e-9:
        return complex(psi.samples[nearest])
    lo = min(max(int(math.floor(pos)) - 3, 0), g.n_points - 8)
    return _barycentric(g.points[lo : lo + 8], psi.samples[lo : lo + 8], x)


def _barycentric(nodes: np.ndarray, values: np.ndarray, x: float) -> complex:
    # fsum keeps the result independent of memory layout, so reports stay bit-identical across runs
    nodes = [float(v) for v in nodes]
    terms = []
    for j, xj in enumerate(nodes):
        w = 1.0 / math.prod(xj - xk for k, xk in enumerate(nodes) if k != j)
        terms.append(w / (x - xj))
    den = math.fsum(terms)
    re = math.fsum(c * complex(v).real for c, v in zip(terms, values))
    im = math.fsum(c * complex(v).imag for c, v in zip(terms, values))
    return complex(re, im) / den


def boundary_term_diagnostic(phi: WaveFunction, psi: WaveFunction, q_max: float) -> complex:
    """-2i Q (conj(phi(Q)) psi(Q) + conj(phi(-Q)) psi(-Q)).

    This is <phi, A psi> - <A phi, psi> for A = qp + pq with the integral cut at +/-Q.
    """
    total = 0j
    for x in (q_max, -q_max):
        total += np.conj(_value_at(phi, x)) * _value_at(psi, x)
    return -2j * q_max * total


def check_domain_panel(suite: EquivalenceSuite) -> CheckReport:
    """Decaying panel states have a vanishing boundary term at Q = 10/sqrt(omega_tilde)."""
    q_max = 10.0 / math.sqrt(suite.params.omega_tilde)
    panel = state_panel(0.0, suite)
    worst = max(abs(boundary_term_diagnostic(a, b, q_max)) for _, a in panel for _, b in panel)
    return CheckReport.evaluate(
        "boundary_term[panel]", worst, 0.0, BOUNDARY_PANEL_TOL, q_max=q_max, panel_size=len(panel)
    )


def asymptotic_grid(q_max: float = 20.0, spacing: float = 0.005) -> SpatialGrid:
    n_points = 2 * int(round(q_max / spacing)) + 1
    return SpatialGrid(q_max, n_points)


def check_domain_asymptotic(params: OscillatorParams, n: int = 100, q_values: Sequence[float] = (5.0, 10.0, 20.0)) -> CheckReport:
    """The asymptotic state keeps a finite boundary term as Q grows: not in the domain of A."""
    grid = asymptotic_grid(max(q_values))
    psi = WaveFunction(grid, asymptotic_pseudostationary(n, grid.points, 0.0, params))
    values = [abs(boundary_term_diagnostic(psi, psi, q)) for q in q_values]
    return CheckReport.at_least(
        f"boundary_term[asymptotic,n={n}]",
        min(values),
        BOUNDARY_ASYMPTOTIC_FLOOR,
        **{f"abs_at_Q={q!r}": v for q, v in zip(q_values, values)},
    )


# ---------------------------------------------------------------- suite runner


def suite_checks(suite: EquivalenceSuite, *, include_asymptotics: bool = False) -> list[tuple[str, Callable[[], CheckReport]]]:
    """(name, thunk) for every check in deterministic order."""
    if not suite.n_levels:
        return []
    p = suite.params
    items: list[tuple[str, Callable[[], CheckReport]]] = []
    for t in suite.times:
        for n in suite.n_levels:
            items.append((f"state_map[n={n},t={t!r}]", lambda n=n, t=t: check_state_map(n, t, suite)))
            items.append(
                (
                    f"norm_map[n={n},t={t!r}]",
                    lambda n=n, t=t: check_norm_map(
                        first_order_eigenstate(n, p, suite.grid, t), t, p, f"norm_map[n={n},t={t!r}]"
                    ),
                )
            )
            items.append((f"bck_mean_energy[n={n},t={t!r}]", lambda n=n, t=t: check_bck_energy(n, t, suite)))
        items.append((f"observable_map[t={t!r}]", lambda t=t: check_observable_map(t, suite)))
        items.append((f"energy_values[t={t!r}]", lambda t=t: check_energy_values(t, suite)))
        items.append(
            (
                f"heisenberg_commutator[t={t!r}]",
                lambda t=t: heisenberg_commutator_check(t, suite.trunc, p, tolerance=COMMUTATOR_TOL),
            )
        )
    items.append(("boundary_term[panel]", lambda: check_domain_panel(suite)))
    items.append(("boundary_term[asymptotic]", lambda: check_domain_asymptotic(p)))
    if include_asymptotics:
        items.extend(asymptotic_checks(suite))
    return items


def asymptotic_checks(suite: EquivalenceSuite, n: int = 64) -> list[tuple[str, Callable[[], CheckReport]]]:
    return [
        (f"asymptotic_residual_ratio[n={n},shift={tag}]", lambda s=s: asymptotic_eigen_residual(n, suite, shift=s))
        for tag, s in (("on", True), ("off", False))
    ]


def _run_one(item: tuple[str, Callable[[], CheckReport]]) -> CheckReport:
    name, thunk = item
    try:
        return thunk()
    except Exception as exc:  # recorded, never aborts the suite
        return CheckReport.failed(name, exc)


def run_checks(items: Sequence[tuple[str, Callable[[], CheckReport]]], jobs: int = 1) -> tuple[CheckReport, ...]:
    if jobs <= 1:
        return tuple(_run_one(item) for item in items)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        # map preserves submission order, so output order does not depend on scheduling
        return tuple(pool.map(_run_one, items))


def run_suite(suite: EquivalenceSuite, *, jobs: int = 1, include_asymptotics: bool = False) -> EquivalenceSuite:
    items = suite_checks(suite, include_asymptotics=include_asymptotics)
    return replace(suite, reports=run_checks(items, jobs))
