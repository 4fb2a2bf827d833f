import numpy as np
import pytest

from dengue_rd import Domain, ModelParams


# Worked parameter point: R0 = sqrt(2) exactly, endemic (1/2, 4/3, 1/3),
# box ceiling (2, 2, 2), sitting on the boundary of the stronger regime.
WORKED = dict(
    d_m=1.0,
    d_h=1.0,
    A=2.0,
    H=2.0,
    b=1.0,
    p=1.0,
    q=1.0,
    mu_m=1.0,
    mu_h=1.0,
    gamma_h=1.0,
    tau_a=0.5,
    tau_b=0.0,
)


@pytest.fixture
def worked_params() -> ModelParams:
    return ModelParams(**WORKED)


@pytest.fixture
def delayed_params() -> ModelParams:
    # Same point with the intrinsic delay switched on, so both kernel
    # paths and both W integrals are exercised.  R0^2 = 2 e^{-1/4} > 1.
    return ModelParams(**{**WORKED, "tau_b": 0.25})


@pytest.fixture
def domain() -> Domain:
    return Domain(L=1.0, n=48, N=48)


def config_doc(**overrides) -> dict:
    """Flat JSON-style configuration document for the worked point."""
    doc = dict(WORKED)
    doc.update({"L": 1.0, "n": 48, "dt": 0.05, "t_end": 2.0})
    doc.update(overrides)
    return doc


def random_smooth_field(domain: Domain, rng: np.random.Generator, offset: float = 0.0) -> np.ndarray:
    """Random field resolved well inside the retained modes."""
    x = domain.grid
    f = np.full(domain.n, offset)
    for k in range(domain.N // 3):
        f += rng.standard_normal() * np.exp(-0.5 * k) * np.cos(k * np.pi * x / domain.L)
    return f
