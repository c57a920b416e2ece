"""Latent autoregressive chain X_i = f(X_{i-1}) + xi_i observed as Z_i = X_i + eps_i."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError
from .noise import GAUSSIAN, LAPLACE, ErrorModel, InnovationModel

LINEAR = "linear"
CAUCHY = "cauchy"

UNIFORM_UNIT = "uniform_unit"
FIXED_VALUE = "fixed_value"

DIVERGENCE_BOUND = 1e12

# stationary variances used to turn a noise ratio into sigma_eps
VAR_CASE_A = 1.0 / 12.0
VAR_CASE_B = 1.0 / 8.0
VAR_CAUCHY = 0.1


@dataclass(frozen=True)
class RegressionModel:
    """Parametric regression function.

    ``linear`` has ``params=(a, b)`` and evaluates ``a*x + b``; ``cauchy`` has
    ``params=(theta,)`` and evaluates ``theta / (1 + x**2)``.
    """

    kind: str
    params: tuple

    def __post_init__(self):
        n_expected = {LINEAR: 2, CAUCHY: 1}.get(self.kind)
        if n_expected is None:
            raise ValueError(f"unknown regression kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != n_expected:
            raise ValueError(f"{self.kind} regression takes {n_expected} parameter(s)")

    @classmethod
    def linear(cls, a, b):
        return cls(LINEAR, (a, b))

    @classmethod
    def cauchy(cls, theta):
        return cls(CAUCHY, (theta,))

    @property
    def dim(self):
        return len(self.params)

    def __call__(self, x):
        if self.kind == LINEAR:
            a, b = self.params
            return a * x + b
        (theta,) = self.params
        return theta / (1.0 + x * x)

    def with_params(self, params):
        return RegressionModel(self.kind, tuple(params))

    def to_dict(self):
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], tuple(d["params"]))


@dataclass(frozen=True)
class Scenario:
    regression: RegressionModel
    innovation: InnovationModel
    error: ErrorModel
    init: str = UNIFORM_UNIT
    init_value: float = 0.0
    burn_in: int = 0
    n: int = 1000

    def __post_init__(self):
        if self.init not in (UNIFORM_UNIT, FIXED_VALUE):
            raise ValueError(f"unknown init policy {self.init!r}")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.n < 2:
            raise ValueError("n must be >= 2")

    def to_dict(self):
        return {
            "regression": self.regression.to_dict(),
            "innovation": self.innovation.to_dict(),
            "error": self.error.to_dict(),
            "init": {"kind": self.init, "value": self.init_value},
            "burn_in": self.burn_in,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, d):
        init = d.get("init", {"kind": UNIFORM_UNIT})
        if isinstance(init, str):
            init = {"kind": init}
        return cls(
            regression=RegressionModel.from_dict(d["regression"]),
            innovation=InnovationModel.from_dict(d["innovation"]),
            error=ErrorModel.from_dict(d["error"]),
            init=init["kind"],
            init_value=float(init.get("value", 0.0)),
            burn_in=int(d.get("burn_in", 0)),
            n=int(d["n"]),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass
class TrajectoryPair:
    """Latent states ``x`` and observations ``z``, both of length n + 1."""

    x: np.ndarray
    z: np.ndarray
    innovations: np.ndarray = field(repr=False, default=None)

    @property
    def n(self):
        return len(self.z) - 1


def simulate(s: Scenario, rng: np.random.Generator) -> TrajectoryPair:
    """Run ``burn_in`` discarded steps, then emit X_0..X_n and Z_0..Z_n.

    Draw order is fixed (initial state, all innovations, all errors) so a
    seeded generator fully determines the trajectory.
    """
    if s.init == UNIFORM_UNIT:
        state = float(rng.random())
    else:
        state = float(s.init_value)
    total = s.burn_in + s.n
    xi = s.innovation.sample(rng, total)
    eps = s.error.sample(rng, s.n + 1)

    f = s.regression
    x = np.empty(s.n + 1)
    xi_list = xi.tolist()
    for i in range(s.burn_in):
        state = f(state) + xi_list[i]
        if abs(state) > DIVERGENCE_BOUND:
            raise DivergenceError(f"|x| exceeded {DIVERGENCE_BOUND:g} during burn-in step {i}")
    x[0] = state
    for i in range(1, s.n + 1):
        state = f(state) + xi_list[s.burn_in + i - 1]
        if abs(state) > DIVERGENCE_BOUND:
            raise DivergenceError(f"|x| exceeded {DIVERGENCE_BOUND:g} at index {i}")
        x[i] = state
    return TrajectoryPair(x=x, z=x + eps, innovations=xi[s.burn_in:])


def _sigma_from_ratio(s2n, var_x):
    if not (s2n > 0 and math.isfinite(s2n)):
        raise ValueError("s2n must be positive and finite")
    return math.sqrt(s2n * var_x)


def preset_case_a(n, s2n, error_kind=LAPLACE) -> Scenario:
    """a=1/2, b=1/4 with +/-1/4 innovations; U[0,1] is exactly stationary."""
    return Scenario(
        regression=RegressionModel.linear(0.5, 0.25),
        innovation=InnovationModel.two_point(0.25),
        error=ErrorModel(error_kind, _sigma_from_ratio(s2n, VAR_CASE_A)),
        init=UNIFORM_UNIT,
        burn_in=0,
        n=n,
    )


def preset_case_b(n, s2n, error_kind=LAPLACE) -> Scenario:
    """a=b=1/3 with +/-1/3 innovations; the stationary law lives on the Cantor set."""
    return Scenario(
        regression=RegressionModel.linear(1.0 / 3.0, 1.0 / 3.0),
        innovation=InnovationModel.two_point(1.0 / 3.0),
        error=ErrorModel(error_kind, _sigma_from_ratio(s2n, VAR_CASE_B)),
        init=UNIFORM_UNIT,
        burn_in=1000,
        n=n,
    )


def preset_cauchy(n, s2n, error_kind=LAPLACE) -> Scenario:
    """theta/(1+x^2) with theta=1.5 and N(0, 0.01) innovations."""
    return Scenario(
        regression=RegressionModel.cauchy(1.5),
        innovation=InnovationModel.gaussian(0.1),
        error=ErrorModel(error_kind, _sigma_from_ratio(s2n, VAR_CAUCHY)),
        init=UNIFORM_UNIT,
        burn_in=1000,
        n=n,
    )


PRESETS = {
    "case-a": preset_case_a,
    "case-b": preset_case_b,
    "cauchy": preset_cauchy,
}


def make_preset(name, n, s2n, error_kind=LAPLACE) -> Scenario:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    if error_kind not in (LAPLACE, GAUSSIAN):
        raise ValueError(f"unknown error kind {error_kind!r}")
    return factory(n, s2n, error_kind)
