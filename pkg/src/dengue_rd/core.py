"""Model parameters, spatial domain, state containers and delay history.

The model tracks three densities on an interval habitat: infectious
mosquitoes u1, susceptible humans u2 and infectious humans u3.  Incubation
is modelled by two fixed delays, tau_a (extrinsic, in the mosquito) and
tau_b (intrinsic, in the human), during which the carrier diffuses, so the
delayed terms enter through heat-kernel averages rather than point values.

This module holds everything the numerics share: validated parameter and
domain records, the invariant box that bounds all admissible states, the
grid state triple, and the ring buffer of past states that feeds the
delayed terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

__all__ = [
    "BOX_SLACK",
    "Domain",
    "History",
    "HistoryValidation",
    "ModelParams",
    "StateTriple",
    "bound_vector",
    "lag_steps",
    "sup_distance",
    "validate_initial_history",
]

# Relative slack allowed above the invariant box ceiling (roundoff margin).
BOX_SLACK = 1e-9

# Divisibility tolerance for dt against the delays, relative.
DT_DIVISIBILITY_RTOL = 1e-12

# Certification demands history bounded away from zero by this fraction of
# the box ceiling, so the logarithmic terms of the Lyapunov functional are
# defined from the first step.
STRICT_POSITIVITY_FLOOR = 1e-10


@dataclass(frozen=True)
class ModelParams:
    """Biological parameters of the dengue transmission model.

    Rates are per unit time, densities per unit habitat length.  The
    composite transmission rates are beta_m = b * p (human to mosquito)
    and beta_h = b * q (mosquito to human); rho_h = mu_h + gamma_h is the
    total exit rate from the infectious human class.

    Attributes:
        d_m: Mosquito diffusivity.
        d_h: Human diffusivity.
        A: Mosquito carrying capacity (ceiling of u1).
        H: Constant human recruitment rate.
        b: Mosquito biting rate.
        p: Probability a bite on an infectious human infects the mosquito.
        q: Probability a bite by an infectious mosquito infects the human.
        mu_m: Mosquito mortality rate.
        mu_h: Human mortality rate.
        gamma_h: Human recovery rate.
        tau_a: Extrinsic incubation delay (mosquito side).
        tau_b: Intrinsic incubation delay (human side).
    """

    d_m: float
    d_h: float
    A: float
    H: float
    b: float
    p: float
    q: float
    mu_m: float
    mu_h: float
    gamma_h: float
    tau_a: float
    tau_b: float

    def __post_init__(self) -> None:
        for name in ("d_m", "d_h", "A", "H", "b", "mu_m", "mu_h"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        for name in ("p", "q"):
            value = getattr(self, name)
            if not (0.0 < value <= 1.0):
                raise ValueError(f"{name} must lie in (0, 1], got {value!r}")
        # gamma_h = 0 (no recovery) is admissible: rho_h = mu_h stays positive.
        for name in ("gamma_h", "tau_a", "tau_b"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name} must be nonnegative and finite, got {value!r}")

    @property
    def beta_m(self) -> float:
        """Human-to-mosquito transmission rate b * p."""
        return self.b * self.p

    @property
    def beta_h(self) -> float:
        """Mosquito-to-human transmission rate b * q."""
        return self.b * self.q

    @property
    def rho_h(self) -> float:
        """Exit rate from the infectious human class, mu_h + gamma_h."""
        return self.mu_h + self.gamma_h

    @property
    def survival_b(self) -> float:
        """Probability exp(-mu_h * tau_b) of surviving intrinsic incubation."""
        return math.exp(-self.mu_h * self.tau_b)


def bound_vector(params: ModelParams) -> np.ndarray:
    """Componentwise ceiling M of the invariant box [0, M1]x[0, M2]x[0, M3].

    M1 = A, M2 = H / mu_h, and
    M3 = A * H * beta_h * exp(-mu_h * tau_b) / (mu_h * rho_h),
    the steady infectious-human level sustained by saturated inputs.
    Admissible states live in the box and the dynamics keep them there.
    """
    m1 = params.A
    m2 = params.H / params.mu_h
    m3 = params.A * params.H * params.beta_h * params.survival_b / (
        params.mu_h * params.rho_h
    )
    return np.array([m1, m2, m3])


@dataclass(frozen=True)
class Domain:
    """Interval habitat [0, L] sampled on a closed uniform grid.

    The grid x_j = j * L / (n - 1) includes both endpoints; spatial
    integrals use trapezoid weights on it and the cosine transform pair is
    built to be exactly consistent with those weights.  N is the number of
    retained cosine modes (N <= n, default all of them).

    Attributes:
        L: Habitat length, positive.
        n: Number of grid points, at least 8.
        N: Number of retained cosine modes, 1 <= N <= n.
    """

    L: float
    n: int
    N: int | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.L) and self.L > 0.0):
            raise ValueError(f"L must be positive and finite, got {self.L!r}")
        if self.n < 8:
            raise ValueError(f"n must be at least 8, got {self.n}")
        if self.N is None:
            object.__setattr__(self, "N", self.n)
        if not (1 <= self.N <= self.n):
            raise ValueError(f"N must satisfy 1 <= N <= n, got N={self.N}, n={self.n}")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.n)

    @property
    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights w with sum(w * f) the trapezoid rule on [0, L]."""
        h = self.L / (self.n - 1)
        w = np.full(self.n, h)
        w[0] = w[-1] = 0.5 * h
        return w


@dataclass(frozen=True)
class StateTriple:
    """One snapshot (u1, u2, u3) of the three densities on the grid."""

    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray

    def __post_init__(self) -> None:
        if not (self.u1.shape == self.u2.shape == self.u3.shape) or self.u1.ndim != 1:
            raise ValueError("u1, u2, u3 must be 1-d arrays of equal length")

    @classmethod
    def constant(cls, values: tuple[float, float, float] | np.ndarray, n: int) -> StateTriple:
        """Spatially constant state with the given component values."""
        v = np.asarray(values, dtype=float)
        return cls(np.full(n, v[0]), np.full(n, v[1]), np.full(n, v[2]))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> StateTriple:
        return cls(arr[0].copy(), arr[1].copy(), arr[2].copy())

    def as_array(self) -> np.ndarray:
        return np.stack([self.u1, self.u2, self.u3])

    @property
    def n(self) -> int:
        return self.u1.shape[0]

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.u1, self.u2, self.u3

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.u1).all()
            and np.isfinite(self.u2).all()
            and np.isfinite(self.u3).all()
        )

    def in_box(self, bound: np.ndarray, slack: float = BOX_SLACK) -> bool:
        """Whether every component lies in [0, M_i * (1 + slack)]."""
        for i, u in enumerate(self.components()):
            if u.min() < 0.0 or u.max() > bound[i] * (1.0 + slack):
                return False
        return True


def sup_distance(state: StateTriple, point: np.ndarray) -> float:
    """Sup-norm distance max_i sup_x |u_i(x) - point_i| to a constant state."""
    return max(
        float(np.abs(u - point[i]).max()) for i, u in enumerate(state.components())
    )


def lag_steps(tau: float, dt: float, rtol: float = DT_DIVISIBILITY_RTOL) -> int:
    """Number of whole steps in the delay tau, requiring dt to divide it.

    Delayed values are read straight out of the ring buffer, never
    interpolated, so tau must be an integer multiple of dt up to relative
    tolerance rtol.  On failure the error names the nearest admissible dt.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if tau == 0.0:
        return 0
    k = round(tau / dt)
    if k < 1 or abs(k * dt - tau) > rtol * max(tau, dt):
        suggestion = tau / max(1, round(tau / dt))
        raise ValueError(
            f"dt={dt!r} does not divide the delay tau={tau!r}; "
            f"nearest admissible dt is {suggestion!r}"
        )
    return k


class History:
    """Ring buffer of the most recent states, spanning the longest delay.

    Holds n_lags + 1 snapshots at times t_now, t_now - dt, ...,
    t_now - n_lags * dt, where n_lags * dt >= max(tau_a, tau_b).  Lag
    lookups are exact grid reads; appending advances time by dt and drops
    the oldest snapshot.  A simulation owns its history exclusively.
    """

    def __init__(self, window: list[StateTriple], dt: float, t_now: float = 0.0):
        """Builds the buffer from a full window ordered oldest to newest."""
        if dt <= 0.0:
            raise ValueError(f"dt must be positive, got {dt!r}")
        if not window:
            raise ValueError("history window must contain at least one state")
        n = window[0].n
        if any(s.n != n for s in window):
            raise ValueError("all history states must share the same grid size")
        self._dt = float(dt)
        self._t_now = float(t_now)
        self._buf = np.stack([s.as_array() for s in window])
        self._head = len(window) - 1  # index of the newest snapshot

    @classmethod
    def constant(
        cls, state: StateTriple, n_lags: int, dt: float, t_now: float = 0.0
    ) -> History:
        """Window holding the same state at every lag (time-constant history)."""
        return cls([state] * (n_lags + 1), dt, t_now)

    @classmethod
    def from_function(
        cls,
        phi: Callable[[float], StateTriple],
        n_lags: int,
        dt: float,
        t_now: float = 0.0,
    ) -> History:
        """Window sampled from phi(s) at s = -n_lags*dt, ..., -dt, 0."""
        window = [phi(-(n_lags - j) * dt) for j in range(n_lags + 1)]
        return cls(window, dt, t_now)

    @property
    def dt(self) -> float:
        return self._dt

    @property
    def t_now(self) -> float:
        return self._t_now

    @property
    def n_lags(self) -> int:
        return self._buf.shape[0] - 1

    @property
    def n(self) -> int:
        return self._buf.shape[2]

    @property
    def latest(self) -> StateTriple:
        return self.lookup(0)

    def lookup(self, k: int) -> StateTriple:
        """State recorded k steps ago, i.e. at time t_now - k * dt."""
        if not (0 <= k <= self.n_lags):
            raise ValueError(f"lag {k} outside stored window 0..{self.n_lags}")
        idx = (self._head - k) % self._buf.shape[0]
        return StateTriple.from_array(self._buf[idx])

    def lookup_arrays(self, k: int) -> np.ndarray:
        """Raw (3, n) view of the state k steps ago; callers must not write."""
        if not (0 <= k <= self.n_lags):
            raise ValueError(f"lag {k} outside stored window 0..{self.n_lags}")
        return self._buf[(self._head - k) % self._buf.shape[0]]

    def append(self, state: StateTriple) -> None:
        """Pushes the state at time t_now + dt, evicting the oldest entry."""
        self._head = (self._head + 1) % self._buf.shape[0]
        self._buf[self._head] = state.as_array()
        self._t_now += self._dt

    def entries(self) -> Iterator[tuple[int, StateTriple]]:
        """Yields (lag, state) pairs from lag 0 back to the oldest."""
        for k in range(self.n_lags + 1):
            yield k, self.lookup(k)


@dataclass(frozen=True)
class HistoryValidation:
    """Outcome of admissibility checks on an initial history.

    ok is True when no violation was found.  degenerate flags the special
    start with no infection at time zero (u1 and u3 both identically
    zero), from which the disease can never take off; it is reported
    separately because such data is admissible but cannot converge to the
    endemic state.
    """

    ok: bool
    degenerate: bool
    violations: list[str] = field(default_factory=list)


def validate_initial_history(
    history: History,
    params: ModelParams,
    *,
    strict_positive: bool = False,
) -> HistoryValidation:
    """Checks an initial history against the invariant box.

    Every stored snapshot must be finite and lie in [0, M_i * (1 + slack)]
    componentwise.  With strict_positive set (required for certification,
    whose functional takes logarithms of the state) every component must
    also stay above STRICT_POSITIVITY_FLOOR * M_i.  Returns a report and
    never raises.
    """
    bound = bound_vector(params)
    floor = STRICT_POSITIVITY_FLOOR * bound
    violations: list[str] = []
    for k, state in history.entries():
        for i, u in enumerate(state.components()):
            label = f"u{i + 1} at lag {k}"
            if not np.isfinite(u).all():
                violations.append(f"{label}: non-finite values")
                continue
            if u.min() < 0.0:
                violations.append(f"{label}: negative value {u.min():.6g}")
            ceiling = bound[i] * (1.0 + BOX_SLACK)
            if u.max() > ceiling:
                violations.append(
                    f"{label}: value {u.max():.6g} above box ceiling {ceiling:.6g}"
                )
            if strict_positive and u.min() < floor[i]:
                violations.append(
                    f"{label}: value {u.min():.6g} below strict positivity "
                    f"floor {floor[i]:.6g}"
                )
    latest = history.latest
    degenerate = bool(
        np.all(latest.u1 == 0.0) and np.all(latest.u3 == 0.0)
    )
    return HistoryValidation(ok=not violations, degenerate=degenerate, violations=violations)
