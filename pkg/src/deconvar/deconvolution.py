r"""Deconvolution integrals

.. math::

    I_\varphi(Z) = \frac{1}{2\pi}\,\mathrm{Re}\int \varphi^*(t)\,
                   \frac{e^{-itZ}}{f_\varepsilon^*(-t)}\,dt,

an unbiased proxy for :math:`\varphi(X)` computed from :math:`Z = X + \varepsilon`.

Numerical inversion uses the trapezoidal rule on a uniform grid over
``[-t_max, t_max]``. A handful of abscissae are summed directly; larger
batches go through one zero-padded FFT onto a regular Z-grid (cached per
transform/error/plan) followed by cubic-spline interpolation.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NumericError, UnsupportedCombinationError
from .noise import GAUSSIAN, LAPLACE, ErrorModel, inverse_error_cf
from .weights import (
    BASE_N,
    F_CAUCHY,
    F_CAUCHY_SQ,
    P0,
    P1,
    P2,
    ProductTransform,
    WeightSpec,
    default_t_max,
)

CLOSED = "closed"
NUMERIC = "numeric"

DIRECT_MAX = 256
_CHUNK = 512
_Z_CAP = 64.0
_FFT_CACHE_SIZE = 24


@dataclass(frozen=True)
class InversionPlan:
    """Grid and truncation settings for numerical inversion.

    Parameters
    ----------
    t_max : float or None
        Truncation half-width. ``None`` picks the weight's default
        (exact support 4 for ``SC``, a Gaussian tail bound for ``N``).
    points : int
        Number of trapezoid intervals; a power of two, at least 256.
    mode : {"closed", "numeric"}
        ``closed`` uses exact formulas where they exist and falls back to
        the grid otherwise; ``numeric`` always uses the grid.
    z_resolution : float
        Spacing of the FFT Z-grid times ``t_max``; smaller is finer.
    """

    t_max: float | None = None
    points: int = 4096
    mode: str = CLOSED
    z_resolution: float = 0.02

    def __post_init__(self):
        if self.points < 256 or self.points & (self.points - 1):
            raise ValueError("points must be a power of two >= 256")
        if self.t_max is not None and not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ValueError("t_max must be positive and finite")
        if self.mode not in (CLOSED, NUMERIC):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.z_resolution > 0:
            raise ValueError("z_resolution must be positive")

    def to_dict(self):
        return {"t_max": self.t_max, "points": self.points, "mode": self.mode,
                "z_resolution": self.z_resolution}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class KernelSpec:
    """Spectral cut-off ``K^*(t / cutoff)``.

    ``K^*(u) = 1`` for ``|u| <= 1 - taper``, falls to 0 along a raised
    cosine on ``1 - taper < |u| <= 1`` and vanishes beyond. ``taper=0``
    is the indicator kernel; ``cutoff=inf`` switches truncation off.
    """

    cutoff: float = math.inf
    taper: float = 0.0

    def __post_init__(self):
        if not self.cutoff > 0 or math.isnan(self.cutoff):
            raise ValueError("kernel cutoff must be > 0 (or inf)")
        if not 0.0 <= self.taper < 1.0:
            raise ValueError("taper must lie in [0, 1)")

    @property
    def inert(self):
        return math.isinf(self.cutoff)

    def fourier(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        flat = 1.0 - self.taper
        out = np.where(u <= flat, 1.0, 0.0)
        if self.taper > 0:
            ramp = (u > flat) & (u <= 1.0)
            out = np.where(ramp, 0.5 * (1.0 + np.cos(math.pi * (u - flat) / self.taper)), out)
        return out

    def to_dict(self):
        return {"cutoff": None if self.inert else self.cutoff, "taper": self.taper}

    @classmethod
    def from_dict(cls, d):
        c = d.get("cutoff")
        return cls(math.inf if c is None else float(c), float(d.get("taper", 0.0)))


# ---------------------------------------------------------------- closed forms

def deconv_closed(w: WeightSpec, err: ErrorModel, g: str, z):
    """Exact integrals for the ``N``-based weights with Laplace or Gaussian errors.

    The formulas assume the weight width equals the error scale.
    """
    if w.base != BASE_N:
        raise UnsupportedCombinationError(f"no closed form for weight {w.name}; use deconv_numeric")
    if not math.isclose(w.sigma_eps, err.sigma_eps, rel_tol=1e-12):
        raise UnsupportedCombinationError("closed forms need the N width to match sigma_eps; use deconv_numeric")
    if (w.cauchy_factor, g) not in {(False, P0), (False, P1), (False, P2), (True, F_CAUCHY), (True, F_CAUCHY_SQ)}:
        raise UnsupportedCombinationError(f"no closed form for product {g!r} with weight {w.name}")
    z = np.asarray(z, dtype=float)
    s = err.sigma_eps ** 2
    z2 = z * z
    if err.kind == LAPLACE:
        e = np.exp(-z2 / (4.0 * s))
        i0 = (1.25 - z2 / (8.0 * s)) * e
        if g in (P0, F_CAUCHY_SQ):
            out = i0
        elif g == P1:
            out = (1.75 * z - z * z2 / (8.0 * s)) * e
        else:
            i2 = (-s + 2.25 * z2 - z2 * z2 / (8.0 * s)) * e
            out = i2 if g == P2 else i0 + i2
    elif err.kind == GAUSSIAN:
        e = math.sqrt(2.0) * np.exp(-z2 / (2.0 * s))
        if g in (P0, F_CAUCHY_SQ):
            out = e
        elif g == P1:
            out = 2.0 * z * e
        elif g == P2:
            out = (4.0 * z2 - 2.0 * s) * e
        else:
            out = (1.0 - 2.0 * s + 4.0 * z2) * e
    else:  # pragma: no cover - ErrorModel validates kinds
        raise UnsupportedCombinationError(err.kind)
    return out if out.ndim else float(out)


def has_closed_form(w: WeightSpec, err: ErrorModel) -> bool:
    return w.base == BASE_N and math.isclose(w.sigma_eps, err.sigma_eps, rel_tol=1e-12)


def laplace_shortcut(phi, phi_dd, err: ErrorModel, z):
    """``phi(Z) - sigma^2/2 * phi''(Z)``: exact for Laplace errors.

    Follows from ``1 / f_eps^*(-t) = 1 + sigma^2 t^2 / 2``.
    """
    if err.kind != LAPLACE:
        raise UnsupportedCombinationError("the shortcut only holds for Laplace errors")
    z = np.asarray(z, dtype=float)
    out = np.asarray(phi(z), dtype=float) - 0.5 * err.sigma_eps ** 2 * np.asarray(phi_dd(z), dtype=float)
    return out if out.ndim else float(out)


# ------------------------------------------------------------- numeric engine

def resolve_t_max(phi_star, err, plan: InversionPlan) -> float:
    if plan.t_max is not None:
        return float(plan.t_max)
    if isinstance(phi_star, ProductTransform):
        return default_t_max(phi_star.weight, err)
    support = getattr(phi_star, "support", math.inf)
    if math.isfinite(support):
        return float(support)
    raise ValueError("plan.t_max is required for transforms without a known support")


def _integrand(phi_star, err, t_max, points, kernel):
    t = np.linspace(-t_max, t_max, points + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.asarray(phi_star(t), dtype=complex) * inverse_error_cf(err, t)
    if kernel is not None and kernel.taper > 0:
        vals = vals * kernel.fourier(t / kernel.cutoff)
    if not np.all(np.isfinite(vals)):
        raise NumericError("non-finite integrand sample; t_max is too large for this error law")
    h = 2.0 * t_max / points
    c = np.full(points + 1, h)
    c[0] = c[-1] = 0.5 * h
    return t, c * vals


def _direct(t, a, z, debug=False):
    out = np.empty(z.shape)
    ar, ai = a.real, a.imag
    for lo in range(0, z.size, _CHUNK):
        zz = z[lo:lo + _CHUNK]
        ph = np.outer(zz, t)
        cos, sin = np.cos(ph), np.sin(ph)
        # Re[a e^{-i t Z}] = Re a cos(tZ) + Im a sin(tZ)
        out[lo:lo + _CHUNK] = cos @ ar + sin @ ai
        if debug:
            imag = cos @ ai - sin @ ar
            scale = np.sum(np.abs(a)) + 1e-300
            if np.max(np.abs(imag), initial=0.0) > 1e-8 * max(scale, 1.0):
                raise NumericError("imaginary residue above 1e-8: integrand is not Hermitian")
    return out / (2.0 * math.pi)


_fft_cache: OrderedDict = OrderedDict()


def clear_cache():
    _fft_cache.clear()


def _fft_table(phi_star, err, t_max, points, kernel, z_resolution):
    key = None
    try:
        key = (phi_star, err, t_max, points, kernel, z_resolution)
        hash(key)
    except TypeError:
        key = None
    if key is not None and key in _fft_cache:
        _fft_cache.move_to_end(key)
        return _fft_cache[key]

    t, a = _integrand(phi_star, err, t_max, points, kernel)
    h = 2.0 * t_max / points
    dz_target = z_resolution / t_max
    m = 1 << max(int(math.ceil(math.log2(max(2 * (points + 1), 2.0 * math.pi / (h * dz_target))))), 1)
    dz = 2.0 * math.pi / (m * h)
    spec = np.fft.fft(a, m)
    z_lim = min(0.9 * math.pi / h, _Z_CAP)
    k_lim = int(z_lim / dz)
    idx = np.arange(-k_lim, k_lim + 1)
    zg = idx * dz
    # sum_k a_k e^{-i t_k Z_m} = e^{i t_max Z_m} * FFT(a)[m]
    vals = (np.exp(1j * t_max * zg) * spec[idx % m]).real / (2.0 * math.pi)
    table = (zg, vals, t, a)
    if key is not None:
        _fft_cache[key] = table
        if len(_fft_cache) > _FFT_CACHE_SIZE:
            _fft_cache.popitem(last=False)
    return table


def _evaluate(phi_star, err, z, t_max, points, kernel, z_resolution, method, debug):
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    if method == "auto":
        method = "direct" if flat.size <= DIRECT_MAX or debug else "fft"
    if method == "direct":
        t, a = _integrand(phi_star, err, t_max, points, kernel)
        out = _direct(t, a, flat, debug)
    elif method == "fft":
        zg, vals, t, a = _fft_table(phi_star, err, t_max, points, kernel, z_resolution)
        out = np.empty(flat.shape)
        inside = np.abs(flat) <= zg[-1] - 2 * (zg[1] - zg[0])
        if np.any(inside):
            zi = flat[inside]
            lo = max(np.searchsorted(zg, zi.min()) - 4, 0)
            hi = min(np.searchsorted(zg, zi.max()) + 4, zg.size)
            out[inside] = CubicSpline(zg[lo:hi], vals[lo:hi])(zi)
        if not np.all(inside):
            out[~inside] = _direct(t, a, flat[~inside])
    else:
        raise ValueError(f"unknown method {method!r}")
    out = out.reshape(z.shape)
    return out if out.ndim else float(out)


def deconv_numeric(phi_star, err: ErrorModel, z, plan: InversionPlan = InversionPlan(), method="auto", debug=False):
    """Trapezoidal inversion of ``phi_star(t) / f_eps^*(-t)`` at ``z``.

    ``phi_star`` maps a real array to complex values. Passing a hashable
    callable such as :class:`~deconvar.weights.ProductTransform` lets the FFT
    table be reused across calls. ``method`` is ``"direct"``, ``"fft"`` or
    ``"auto"`` (direct for at most 256 abscissae).
    """
    t_max = resolve_t_max(phi_star, err, plan)
    return _evaluate(phi_star, err, z, t_max, plan.points, None, plan.z_resolution, method, debug)


def kernel_deconv(phi_star, err: ErrorModel, z, kernel: KernelSpec, plan: InversionPlan = InversionPlan(),
                  method="auto"):
    """As :func:`deconv_numeric` with the integrand multiplied by ``K^*(t / cutoff)``.

    The grid is cut at ``min(t_max, cutoff)``, which is exact because the
    kernel vanishes beyond its cutoff. An infinite cutoff reproduces
    :func:`deconv_numeric` exactly.
    """
    t_max = resolve_t_max(phi_star, err, plan)
    if kernel.inert:
        return _evaluate(phi_star, err, z, t_max, plan.points, None, plan.z_resolution, method, False)
    t_eff = min(t_max, kernel.cutoff)
    return _evaluate(phi_star, err, z, t_eff, plan.points, kernel, plan.z_resolution, method, False)


def deconv_integral(w: WeightSpec, g: str, err: ErrorModel, z, plan: InversionPlan = InversionPlan(),
                    kernel: KernelSpec | None = None, method="auto"):
    """``I_{g w}(Z)`` by closed form when the plan allows it, else numerically."""
    inert = kernel is None or kernel.inert
    if inert and plan.mode == CLOSED and has_closed_form(w, err):
        return deconv_closed(w, err, g, z)
    phi = ProductTransform(w, g)
    if inert:
        return deconv_numeric(phi, err, z, plan, method=method)
    return kernel_deconv(phi, err, z, kernel, plan, method=method)


def deconv_integrals(z, w: WeightSpec, err: ErrorModel, products, plan: InversionPlan = InversionPlan(),
                     kernel: KernelSpec | None = None):
    """Evaluate several products on the same abscissae; returns a dict."""
    return {g: deconv_integral(w, g, err, z, plan, kernel) for g in products}


def plan_for(plan: InversionPlan, **changes) -> InversionPlan:
    return replace(plan, **changes)
