"""Measurement-error and innovation laws.

Both supported error laws are symmetric, so their characteristic functions
are real, even and strictly positive; they are returned as real arrays.
Every sampler takes an explicit :class:`numpy.random.Generator`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

LAPLACE = "laplace"
GAUSSIAN = "gaussian"
TWO_POINT = "two_point"


@dataclass(frozen=True)
class ErrorModel:
    """Known law of the additive observation error.

    Parameters
    ----------
    kind : {"laplace", "gaussian"}
    sigma_eps : float
        Standard deviation of the error, strictly positive.
    """

    kind: str
    sigma_eps: float

    def __post_init__(self):
        if self.kind not in (LAPLACE, GAUSSIAN):
            raise ValueError(f"unknown error kind {self.kind!r}")
        if not (self.sigma_eps > 0 and math.isfinite(self.sigma_eps)):
            raise ValueError("sigma_eps must be positive and finite")

    def density(self, x):
        return error_density(self, x)

    def cf(self, t):
        return error_cf(self, t)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.sigma_eps
        if self.kind == GAUSSIAN:
            return special.ndtr(x / s)
        b = s / math.sqrt(2.0)
        half = 0.5 * np.exp(-np.abs(x) / b)
        return np.where(x < 0, half, 1.0 - half)

    def sample(self, rng, n):
        return sample_error(self, rng, n)

    def to_dict(self):
        return {"kind": self.kind, "sigma_eps": self.sigma_eps}

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d["kind"], sigma_eps=float(d["sigma_eps"]))


def error_density(m: ErrorModel, x):
    """Density of the error law at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    s = m.sigma_eps
    if m.kind == LAPLACE:
        out = np.exp(-math.sqrt(2.0) * np.abs(x) / s) / (s * math.sqrt(2.0))
    else:
        out = np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
    return out if out.ndim else float(out)


def error_cf(m: ErrorModel, t):
    """Characteristic function of the error law; real, even, in (0, 1]."""
    t = np.asarray(t, dtype=float)
    s2 = m.sigma_eps ** 2
    if m.kind == LAPLACE:
        out = 1.0 / (1.0 + 0.5 * s2 * t * t)
    else:
        out = np.exp(-0.5 * s2 * t * t)
    return out if out.ndim else float(out)


def inverse_error_cf(m: ErrorModel, t):
    """``1 / f_eps^*(-t)`` computed without forming the (possibly tiny) cf.

    Gaussian values overflow to ``inf`` far in the tail; callers that need
    finite samples check for that.
    """
    t = np.asarray(t, dtype=float)
    s2 = m.sigma_eps ** 2
    if m.kind == LAPLACE:
        return 1.0 + 0.5 * s2 * t * t
    with np.errstate(over="ignore"):
        return np.exp(0.5 * s2 * t * t)


def sample_error(m: ErrorModel, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. errors.

    Laplace draws use the inverse CDF of the double exponential, so one
    uniform is consumed per draw.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    s = m.sigma_eps
    if m.kind == GAUSSIAN:
        return s * rng.standard_normal(n)
    b = s / math.sqrt(2.0)
    u = rng.random(n) - 0.5
    # u in [-0.5, 0.5); 1 - 2|u| > 0 so the log is finite
    return -b * np.sign(u) * np.log1p(-2.0 * np.abs(u))


@dataclass(frozen=True)
class InnovationModel:
    """Law of the chain's innovations.

    ``kind="two_point"`` takes values +/- ``scale`` with probability 1/2;
    ``kind="gaussian"`` is centred normal with standard deviation ``scale``.
    """

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in (TWO_POINT, GAUSSIAN):
            raise ValueError(f"unknown innovation kind {self.kind!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError("innovation scale must be positive and finite")

    @classmethod
    def two_point(cls, c):
        return cls(TWO_POINT, float(c))

    @classmethod
    def gaussian(cls, sigma_xi):
        return cls(GAUSSIAN, float(sigma_xi))

    @property
    def variance(self):
        return self.scale ** 2

    def sample(self, rng, n):
        return sample_innovation(self, rng, n)

    def to_dict(self):
        return {"kind": self.kind, "scale": self.scale}

    @classmethod
    def from_dict(cls, d):
        return cls(kind=d["kind"], scale=float(d["scale"]))


def sample_innovation(m: InnovationModel, rng: np.random.Generator, n: int) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be non-negative")
    if m.kind == TWO_POINT:
        signs = rng.integers(0, 2, size=n) * 2 - 1
        return m.scale * signs.astype(float)
    return m.scale * rng.standard_normal(n)


def split_rng(seed, index) -> np.random.Generator:
    """Independent generator for replication ``index`` of master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.default_rng(ss)
