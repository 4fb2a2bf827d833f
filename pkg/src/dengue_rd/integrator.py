"""Time stepping for the delayed reaction-diffusion system.

One step advances the newest history entry by first-order splitting: an
explicit Euler substep for the reaction, with the delayed nonlocal
infection terms read exactly off the history grid, followed by the exact
spectral heat flow over dt for each component,

    u1: d_m diffusion,  reaction  I1 - mu_m u1
    u2: d_h diffusion,  reaction  H - beta_h u1 u2 - mu_h u2
    u3: d_h diffusion,  reaction  I3 - rho_h u3

where I1 = beta_m (A - u1) [Gamma(d_m tau_a) u3(t - tau_a)] and
I3 = beta_h exp(-mu_h tau_b) [Gamma(d_h tau_b) (u1 u2)(t - tau_b)]; the
delayed product u1 u2 is formed pointwise on the grid before the kernel
is applied.  Spatially constant equilibria are fixed points of the step
to roundoff because constants are exact fixed points of the heat flow.

The explicit reaction substep keeps states in the invariant box when

    dt <= 0.2 / max(mu_m, mu_h + beta_h M1, rho_h, beta_m M3),

the net loss coefficient of each component at the box ceiling; the
configuration loader rejects larger steps.  A spatially homogeneous
reduction of the step doubles as an oracle: on constant data the split
step coincides with an explicit Euler step of the underlying delay
differential system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Domain,
    History,
    ModelParams,
    StateTriple,
    bound_vector,
    lag_steps,
    sup_distance,
    validate_initial_history,
)
from .equilibria import EquilibriumSet, compute_equilibria
from .lyapunov import LyapunovBreakdown, eval_V, prepare_kernels
from .spectral import heat_apply

__all__ = [
    "SimConfig",
    "SimulationError",
    "Trajectory",
    "dde_oracle_step",
    "infection_term_u1",
    "infection_term_u3",
    "run",
    "run_homogeneous",
    "stability_dt_bound",
    "step",
]


class SimulationError(RuntimeError):
    """A run left the admissible region or produced non-finite values."""


def stability_dt_bound(params: ModelParams) -> float:
    """Largest admissible Euler step, 0.2 over the stiffest loss rate."""
    m = bound_vector(params)
    stiffest = max(
        params.mu_m,
        params.mu_h + params.beta_h * m[0],
        params.rho_h,
        params.beta_m * m[2],
    )
    return 0.2 / stiffest


def infection_term_u1(
    u1_now: np.ndarray, u3_lagged: np.ndarray, params: ModelParams, domain: Domain
) -> np.ndarray:
    """New mosquito infections beta_m (A - u1) [Gamma(d_m tau_a) u3(t - tau_a)].

    u3_lagged is the infectious-human field one extrinsic delay ago; the
    kernel average accounts for mosquito movement during incubation.
    """
    smoothed = heat_apply(u3_lagged, params.d_m, params.tau_a, domain)
    return params.beta_m * (params.A - u1_now) * smoothed


def infection_term_u3(
    u1_lagged: np.ndarray, u2_lagged: np.ndarray, params: ModelParams, domain: Domain
) -> np.ndarray:
    """New human cases surviving incubation, from the delayed force of infection.

    The product u1 u2 is taken pointwise at time t - tau_b before the
    kernel average, then scaled by beta_h exp(-mu_h tau_b).
    """
    smoothed = heat_apply(u1_lagged * u2_lagged, params.d_h, params.tau_b, domain)
    return params.beta_h * params.survival_b * smoothed


def step(history: History, params: ModelParams, domain: Domain, dt: float) -> StateTriple:
    """Advances the history by one split step and returns the new state."""
    if abs(dt - history.dt) > 1e-15 * max(dt, history.dt):
        raise ValueError(f"dt={dt!r} disagrees with the history step {history.dt!r}")
    k_a = lag_steps(params.tau_a, history.dt)
    k_b = lag_steps(params.tau_b, history.dt)
    cur = history.lookup_arrays(0)
    u1, u2, u3 = cur[0], cur[1], cur[2]
    u3_lag = history.lookup_arrays(k_a)[2]
    lag_b = history.lookup_arrays(k_b)

    r1 = infection_term_u1(u1, u3_lag, params, domain) - params.mu_m * u1
    r2 = params.H - params.beta_h * u1 * u2 - params.mu_h * u2
    r3 = infection_term_u3(lag_b[0], lag_b[1], params, domain) - params.rho_h * u3

    new = StateTriple(
        heat_apply(u1 + dt * r1, params.d_m, dt, domain),
        heat_apply(u2 + dt * r2, params.d_h, dt, domain),
        heat_apply(u3 + dt * r3, params.d_h, dt, domain),
    )
    history.append(new)
    return new


@dataclass(frozen=True)
class SimConfig:
    """Everything one run needs besides the initial history.

    strict_box None defers to certify: certification runs stop on a box
    violation, exploratory runs record it and continue.  The perturbation
    fields control the seeded initial history built for CLI runs: a
    smooth low-mode relative perturbation of the predicted attractor,
    either constant in time or modulated in the time argument.
    """

    params: ModelParams
    domain: Domain
    dt: float
    t_end: float
    snapshot_every: int = 0
    certify: bool = False
    strict_box: bool | None = None
    history_mode: str = "constant"
    perturb_amplitude: float = 0.2
    perturb_modes: int = 3

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive and finite, got {self.dt!r}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0.0):
            raise ValueError(f"t_end must be nonnegative, got {self.t_end!r}")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be nonnegative")
        if self.history_mode not in ("constant", "modulated"):
            raise ValueError(f"unknown history_mode {self.history_mode!r}")
        if not (0.0 <= self.perturb_amplitude < 1.0):
            raise ValueError("perturb_amplitude must lie in [0, 1)")
        if self.perturb_modes < 1:
            raise ValueError("perturb_modes must be at least 1")

    @property
    def box_strict(self) -> bool:
        return self.certify if self.strict_box is None else self.strict_box


@dataclass
class Trajectory:
    """Per-step record of one run.

    Distances are sup-norm over components and grid; dist_endemic is NaN
    when no endemic state exists.  V, dVdt_fd and dissipation are NaN
    unless the run certified; dVdt_fd[k] is the backward difference
    (V[k] - V[k-1]) / dt.  snapshots holds (time, state) pairs at the
    configured stride plus the first and last step.
    """

    times: np.ndarray
    dist_endemic: np.ndarray
    dist_dfe: np.ndarray
    comp_min: np.ndarray
    comp_max: np.ndarray
    V: np.ndarray
    dVdt_fd: np.ndarray
    dissipation: np.ndarray
    lyapunov: list[LyapunovBreakdown]
    snapshots: list[tuple[float, StateTriple]]
    bounds_ok: bool
    final_state: StateTriple
    equilibria: EquilibriumSet
    config: SimConfig


def run(config: SimConfig, initial: History) -> Trajectory:
    """Integrates from the initial history to t_end, recording every step.

    Certifying runs additionally evaluate the Lyapunov functional and the
    dissipation identity at every step, with the W integrals checked
    through both evaluation paths; they require R0 > 1 and a strictly
    positive initial history.

    Raises:
        ValueError: on inconsistent history or inadmissible certification
            setup.
        SimulationError: on non-finite values, or on a box violation in
            strict mode.
    """
    params, domain, dt = config.params, config.domain, config.dt
    if initial.n != domain.n:
        raise ValueError(
            f"history grid size {initial.n} does not match domain n {domain.n}"
        )
    if abs(initial.dt - dt) > 1e-15 * max(initial.dt, dt):
        raise ValueError(f"history dt {initial.dt!r} does not match config dt {dt!r}")
    k_a = lag_steps(params.tau_a, dt)
    k_b = lag_steps(params.tau_b, dt)
    if initial.n_lags < max(k_a, k_b):
        raise ValueError(
            f"history spans {initial.n_lags} lags, need {max(k_a, k_b)}"
        )
    eqs = compute_equilibria(params)
    bound = bound_vector(params)

    kernels = None
    if config.certify:
        if eqs.endemic is None:
            raise ValueError("certification requires R0 > 1")
        report = validate_initial_history(initial, params, strict_positive=True)
        if not report.ok:
            raise ValueError(
                "certification requires a strictly positive admissible history: "
                + "; ".join(report.violations[:5])
            )
        kernels = prepare_kernels(params, domain, dt, two_path=True)

    n_steps = int(math.floor(config.t_end / dt * (1.0 + 1e-12) + 1e-12))
    size = n_steps + 1
    times = np.arange(size) * dt
    dist_endemic = np.full(size, np.nan)
    dist_dfe = np.full(size, np.nan)
    comp_min = np.full((size, 3), np.nan)
    comp_max = np.full((size, 3), np.nan)
    v_arr = np.full(size, np.nan)
    d_arr = np.full(size, np.nan)
    breakdowns: list[LyapunovBreakdown] = []
    snapshots: list[tuple[float, StateTriple]] = []
    bounds_ok = True

    def record(k: int, state: StateTriple) -> None:
        nonlocal bounds_ok
        arr = state.as_array()
        comp_min[k] = arr.min(axis=1)
        comp_max[k] = arr.max(axis=1)
        if eqs.endemic is not None:
            dist_endemic[k] = sup_distance(state, eqs.endemic)
        dist_dfe[k] = sup_distance(state, eqs.dfe)
        if not state.is_finite():
            raise SimulationError(
                f"non-finite state at step {k}, t={times[k]:.6g}"
            )
        if not state.in_box(bound):
            if config.box_strict:
                raise SimulationError(
                    f"state left the invariant box at step {k}, t={times[k]:.6g}"
                )
            bounds_ok = False
        if config.certify:
            bd = eval_V(
                initial, params, eqs.endemic, domain, kernels=kernels, two_path=True
            )
            v_arr[k] = bd.V
            d_arr[k] = bd.dissipation
            breakdowns.append(bd)
        if k == 0 or k == n_steps or (
            config.snapshot_every and k % config.snapshot_every == 0
        ):
            snapshots.append((float(times[k]), state))

    record(0, initial.latest)
    for k in range(1, size):
        state = step(initial, params, domain, dt)
        record(k, state)

    dvdt = np.full(size, np.nan)
    if config.certify and size > 1:
        dvdt[1:] = np.diff(v_arr) / dt

    return Trajectory(
        times=times,
        dist_endemic=dist_endemic,
        dist_dfe=dist_dfe,
        comp_min=comp_min,
        comp_max=comp_max,
        V=v_arr,
        dVdt_fd=dvdt,
        dissipation=d_arr,
        lyapunov=breakdowns,
        snapshots=snapshots,
        bounds_ok=bounds_ok,
        final_state=initial.latest,
        equilibria=eqs,
        config=config,
    )


def dde_oracle_step(
    y: np.ndarray,
    u3_lag_a: float,
    u1_lag_b: float,
    u2_lag_b: float,
    params: ModelParams,
    dt: float,
) -> np.ndarray:
    """One explicit Euler step of the spatially homogeneous reduction.

    For spatially constant data the diffusion substep is the identity, so
    the full split step reduces to exactly this update.  Kept free of the
    spectral machinery so it can serve as an independent oracle.
    """
    y1, y2, y3 = (float(v) for v in y)
    f1 = params.beta_m * (params.A - y1) * u3_lag_a - params.mu_m * y1
    f2 = params.H - params.beta_h * y1 * y2 - params.mu_h * y2
    f3 = (
        params.beta_h * params.survival_b * u1_lag_b * u2_lag_b
        - params.rho_h * y3
    )
    return np.array([y1 + dt * f1, y2 + dt * f2, y3 + dt * f3])


def run_homogeneous(
    params: ModelParams, initial: np.ndarray, dt: float, t_end: float
) -> np.ndarray:
    """Integrates the homogeneous reduction from a constant initial history.

    Returns the full trace, shape (n_steps + 1, 3), with row k the state
    at time k dt.
    """
    k_a = lag_steps(params.tau_a, dt)
    k_b = lag_steps(params.tau_b, dt)
    n_lags = max(k_a, k_b)
    n_steps = int(math.floor(t_end / dt * (1.0 + 1e-12) + 1e-12))
    trace = np.empty((n_steps + 1, 3))
    window = [np.asarray(initial, dtype=float)] * (n_lags + 1)
    trace[0] = window[-1]
    for k in range(1, n_steps + 1):
        y = window[-1]
        lag_a = window[-1 - k_a]
        lag_b = window[-1 - k_b]
        y_new = dde_oracle_step(y, lag_a[2], lag_b[0], lag_b[1], params, dt)
        window.append(y_new)
        if len(window) > n_lags + 1:
            window.pop(0)
        trace[k] = y_new
    return trace
