"""Neumann heat semigroup on [0, L] in a trapezoid-consistent cosine basis.

The operators here discretise the no-flux heat flow that transports the
delayed infection terms.  Eigenfunctions of the Laplacian with Neumann
conditions on [0, L] are cos(k pi x / L) with eigenvalues
lam_k = (k pi / L)^2, so the semigroup acts diagonally in the cosine
basis: mode k is multiplied by exp(-d t lam_k).  The kernel of the
semigroup is

    Gamma(d t, x, y) = 1/L + (2/L) sum_{k>=1} exp(-d t lam_k)
                       cos(k pi x / L) cos(k pi y / L),

symmetric in (x, y), with unit mass in each argument.

Discretisation uses the closed uniform grid x_j = j L / (n - 1) and
trapezoid quadrature.  The forward transform uses the discrete cosine
orthogonality on that grid, which matches the continuous normalisation
2/L for every mode except the top one (k = n - 1, when all modes are
retained), where the grid sees cos^2 with weight 1/L instead of 2/L.
With that single weight adjusted, the transform pair inverts exactly,
constants are exact fixed points of the semigroup, mode 0 equals the
trapezoid mean (mass conservation becomes an identity), and the
assembled kernel matrix reproduces heat_apply to roundoff at every t.

Truncation caveat: the spectrally truncated kernel is not pointwise
positive for very small times.  Applying the semigroup to a nonnegative
field can undershoot zero by about 1e-9 of its sup for rough data;
kernel_matrix additionally refuses times below min_resolvable_time,
where the truncated series cannot represent the near-delta kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import Domain

__all__ = [
    "gradient_energy",
    "heat_apply",
    "kernel_matrix",
    "min_resolvable_time",
    "to_grid",
    "to_modal",
]

# Below d * t = KERNEL_TIME_FLOOR_FACTOR * (L / pi)^2 the truncated series
# is too close to a delta for the retained modes to resolve.
KERNEL_TIME_FLOOR_FACTOR = 1e-3


@dataclass(frozen=True)
class _Operators:
    """Precomputed grid and transform matrices for one domain."""

    x: np.ndarray        # grid points, (n,)
    w: np.ndarray        # trapezoid weights, (n,)
    lam: np.ndarray      # Laplacian eigenvalues (k pi / L)^2, (N,)
    cos: np.ndarray      # cos(k pi x_j / L), (n, N)
    fwd: np.ndarray      # forward transform matrix, (N, n)
    dcos: np.ndarray     # d/dx of the basis columns, (n, N)
    weight: np.ndarray   # per-mode series weights c_k / L, (N,)


@lru_cache(maxsize=32)
def _operators(domain: Domain) -> _Operators:
    n, N, L = domain.n, domain.N, domain.L
    m = n - 1
    x = domain.grid
    w = domain.trapezoid_weights
    k = np.arange(N)
    freq = k * math.pi / L
    lam = freq**2
    cos = np.cos(np.outer(x, freq))
    # Discrete orthogonality weight: 2 everywhere except mode 0 and, when
    # all n modes are retained, the top mode, where the closed grid sums
    # cos^2 to the full mass rather than half of it.
    c = np.full(N, 2.0)
    c[0] = 1.0
    if N == n:
        c[-1] = 1.0
    eps = np.full(n, 1.0)
    eps[0] = eps[-1] = 0.5
    fwd = (c / m)[:, None] * (cos.T * eps[None, :])
    dcos = -np.sin(np.outer(x, freq)) * freq[None, :]
    return _Operators(x=x, w=w, lam=lam, cos=cos, fwd=fwd, dcos=dcos, weight=c / L)


def _check_field(f: np.ndarray, domain: Domain) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (domain.n,):
        raise ValueError(f"field has shape {f.shape}, expected ({domain.n},)")
    return f


def to_modal(f: np.ndarray, domain: Domain) -> np.ndarray:
    """Cosine coefficients a_k of a grid field, k = 0 .. N - 1.

    Coefficient 0 is exactly the trapezoid spatial mean of f.  For fields
    resolved by the retained modes, to_grid inverts this transform to
    roundoff.
    """
    ops = _operators(domain)
    return ops.fwd @ _check_field(f, domain)


def to_grid(a: np.ndarray, domain: Domain) -> np.ndarray:
    """Evaluates sum_k a_k cos(k pi x / L) on the grid."""
    a = np.asarray(a, dtype=float)
    ops = _operators(domain)
    if a.shape != (domain.N,):
        raise ValueError(f"modal vector has shape {a.shape}, expected ({domain.N},)")
    return ops.cos @ a


def heat_apply(f: np.ndarray, d: float, t: float, domain: Domain) -> np.ndarray:
    """Applies the Neumann heat semigroup exp(d t Laplacian) to f.

    Diagonal in the cosine basis: mode k picks up exp(-d t lam_k), so the
    semigroup property in time is exact and constants are fixed points for
    every t.  t = 0 returns f unchanged.

    Args:
        f: Grid field of length n.
        d: Diffusivity, positive.
        t: Elapsed time, nonnegative.

    Returns:
        The diffused grid field.
    """
    f = _check_field(f, domain)
    if not (math.isfinite(d) and d > 0.0):
        raise ValueError(f"diffusivity must be positive and finite, got {d!r}")
    if not (math.isfinite(t) and t >= 0.0):
        raise ValueError(f"time must be nonnegative and finite, got {t!r}")
    if t == 0.0:
        return f.copy()
    ops = _operators(domain)
    a = ops.fwd @ f
    a *= np.exp(-d * t * ops.lam)
    return ops.cos @ a


def min_resolvable_time(d: float, domain: Domain) -> float:
    """Smallest kernel time the truncated series resolves, for diffusivity d."""
    return KERNEL_TIME_FLOOR_FACTOR * (domain.L / math.pi) ** 2 / d


def kernel_matrix(d: float, t: float, domain: Domain) -> np.ndarray:
    """Heat kernel Gamma(d t, x_i, y_j) with y-quadrature weights folded in.

    Row i approximates the integral operator: (K f)_i ~ integral of
    Gamma(d t, x_i, y) f(y) dy.  By construction K f equals
    heat_apply(f, d, t) to roundoff, every row sums to one exactly (unit
    mass), and K(t1) K(t2) = K(t1 + t2).  Dividing out the weights leaves
    a symmetric matrix.

    Raises:
        ValueError: if t is below min_resolvable_time(d, domain), where
            the truncated series cannot represent the kernel pointwise.
    """
    if not (math.isfinite(d) and d > 0.0):
        raise ValueError(f"diffusivity must be positive and finite, got {d!r}")
    floor = min_resolvable_time(d, domain)
    if not (math.isfinite(t) and t >= floor):
        raise ValueError(
            f"kernel time t={t!r} below the minimal resolvable time {floor!r} "
            f"for d={d!r}; increase t or the mode count"
        )
    ops = _operators(domain)
    decay = ops.weight * np.exp(-d * t * ops.lam)
    gamma = (ops.cos * decay[None, :]) @ ops.cos.T
    return gamma * ops.w[None, :]


def gradient_energy(f: np.ndarray, domain: Domain) -> float:
    """Trapezoid value of the relative Fisher-type integral of |grad f|^2 / f^2.

    Differentiates the cosine interpolant of f, so for fields resolved by
    the retained modes the derivative is exact and the trapezoid rule on
    the smooth even extension converges spectrally.

    Raises:
        ValueError: if f is not strictly positive everywhere.
    """
    f = _check_field(f, domain)
    if f.min() <= 0.0:
        raise ValueError(
            f"gradient_energy requires a strictly positive field, min is {f.min():.6g}"
        )
    ops = _operators(domain)
    df = ops.dcos @ (ops.fwd @ f)
    ratio = df / f
    return float(ops.w @ (ratio * ratio))
