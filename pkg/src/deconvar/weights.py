r"""Weight functions and the Fourier transforms of their polynomial products.

Fourier convention: :math:`\varphi^*(t) = \int e^{itx}\varphi(x)\,dx`, so
multiplying by :math:`x^j` maps to :math:`(-i\,d/dt)^j` on the transform side.

Two bases are available:

``N``
    Gaussian bump :math:`\exp(-x^2/(4\sigma^2))` tied to an error scale.
``SC``
    Fourth power of a sinc, :math:`(2\sin x/x)^4/(2\pi)`, whose transform is a
    piecewise cubic supported on ``[-4, 4]``.

With ``cauchy_factor=True`` the base is multiplied by :math:`(1+x^2)^2`
(``N_c`` / ``SC_c``). Products against the Cauchy shape :math:`f(x)=1/(1+x^2)`
are reduced algebraically before transforming:
``(1+x^2)^2 f = 1 + x^2`` and ``(1+x^2)^2 f^2 = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedCombinationError
from .noise import GAUSSIAN, ErrorModel, inverse_error_cf

BASE_N = "N"
BASE_SC = "SC"

# product selectors
P0, P1, P2 = "p0", "p1", "p2"
F_CAUCHY = "f_cauchy"
F_CAUCHY_SQ = "f_cauchy_sq"

SC_SUPPORT = 4.0
SC_MASS = 16.0 / 3.0

# product -> list of (coefficient, monomial degree) on the base weight
_REDUCTIONS = {
    (False, P0): ((1.0, 0),),
    (False, P1): ((1.0, 1),),
    (False, P2): ((1.0, 2),),
    (True, F_CAUCHY): ((1.0, 0), (1.0, 2)),
    (True, F_CAUCHY_SQ): ((1.0, 0),),
}


@dataclass(frozen=True)
class WeightSpec:
    """A weight function ``N``, ``SC``, ``N_c`` or ``SC_c``.

    ``sigma_eps`` sets the width of ``N`` and is ignored by ``SC``.
    """

    base: str
    cauchy_factor: bool = False
    sigma_eps: float = 1.0

    def __post_init__(self):
        if self.base not in (BASE_N, BASE_SC):
            raise UnsupportedCombinationError(f"unsupported weight base {self.base!r}")
        if not (self.sigma_eps > 0 and math.isfinite(self.sigma_eps)):
            raise ValueError("sigma_eps must be positive and finite")

    @property
    def name(self):
        return self.base + ("_c" if self.cauchy_factor else "")

    @property
    def support(self):
        """Half-width of the support of the transform (inf for ``N``)."""
        return SC_SUPPORT if self.base == BASE_SC else math.inf

    def __call__(self, x):
        return weight_eval(self, x)

    def to_dict(self):
        return {"base": self.base, "cauchy_factor": self.cauchy_factor, "sigma_eps": self.sigma_eps}

    @classmethod
    def from_dict(cls, d):
        return cls(d["base"], bool(d.get("cauchy_factor", False)), float(d.get("sigma_eps", 1.0)))

    @classmethod
    def from_name(cls, name, sigma_eps=1.0):
        """Parse ``"n"``, ``"sc"``, ``"n_c"`` or ``"sc_c"`` (case-insensitive)."""
        key = name.strip().lower()
        table = {"n": (BASE_N, False), "sc": (BASE_SC, False), "n_c": (BASE_N, True), "sc_c": (BASE_SC, True)}
        if key not in table:
            raise UnsupportedCombinationError(f"unknown weight {name!r}")
        base, cf = table[key]
        return cls(base, cf, sigma_eps)


def _sc_base(x):
    x = np.asarray(x, dtype=float)
    # np.sinc(u) = sin(pi u)/(pi u), with the limit 1 at u = 0
    return (2.0 * np.sinc(x / math.pi)) ** 4 / (2.0 * math.pi)


def weight_eval(w: WeightSpec, x):
    """Pointwise value of the weight; ``SC(0)`` is its limit ``16/(2 pi)``."""
    x = np.asarray(x, dtype=float)
    if w.base == BASE_N:
        out = np.exp(-x * x / (4.0 * w.sigma_eps ** 2))
    else:
        out = _sc_base(x)
    if w.cauchy_factor:
        out = out * (1.0 + x * x) ** 2
    return out if out.ndim else float(out)


def product_eval(w: WeightSpec, g: str, x):
    """``g(x) * w(x)`` for a supported product selector."""
    x = np.asarray(x, dtype=float)
    base = weight_eval(WeightSpec(w.base, False, w.sigma_eps), x)
    total = np.zeros_like(x)
    for coef, deg in _reduction(w, g):
        total = total + coef * x ** deg * base
    return total


# ---------------------------------------------------------------- SC transform

def _sc_poly(u, deriv):
    """Derivative ``deriv`` of the cubic pieces as a function of u = |t|."""
    inner = u <= 2.0
    outer = (u > 2.0) & (u <= SC_SUPPORT)
    if deriv == 0:
        a = u ** 3 / 2.0 - 2.0 * u ** 2 + 16.0 / 3.0
        # -u^3/6 + 2u^2 - 8u + 32/3, factored so it vanishes exactly at u = 4
        b = -((u - 4.0) ** 3) / 6.0
    elif deriv == 1:
        a = 1.5 * u ** 2 - 4.0 * u
        b = -0.5 * (u - 4.0) ** 2
    elif deriv == 2:
        a = 3.0 * u - 4.0
        b = -u + 4.0
    elif deriv == 3:
        a = np.full_like(u, 3.0)
        b = np.full_like(u, -1.0)
    else:
        raise ValueError("deriv must be 0..3")
    return np.where(inner, a, np.where(outer, b, 0.0))


def sc_fourier(t, deriv=0):
    """Transform of ``SC`` (or its ``deriv``-th derivative) at ``t``.

    The transform is even, so odd derivatives pick up ``sign(t)``.
    """
    t = np.asarray(t, dtype=float)
    out = _sc_poly(np.abs(t), deriv)
    if deriv % 2:
        out = np.sign(t) * out
    return out if out.ndim else float(out)


# ----------------------------------------------------------------- N transform

def _n_fourier_monomial(t, sigma, deg):
    """Transform of ``x**deg * exp(-x^2/(4 sigma^2))``."""
    s = sigma * sigma
    base = math.sqrt(2.0 * math.pi) * math.sqrt(2.0 * s) * np.exp(-s * t * t)
    if deg == 0:
        return base.astype(complex)
    if deg == 1:
        return 1j * (2.0 * s * t) * base
    if deg == 2:
        return (-(4.0 * s * s * t * t - 2.0 * s) * base).astype(complex)
    if deg == 4:
        return (s * s * (16.0 * s * s * t ** 4 - 48.0 * s * t * t + 12.0) * base).astype(complex)
    raise ValueError(f"no N transform for degree {deg}")


def _sc_fourier_monomial(t, deg):
    # (x^j SC)^* = (-i d/dt)^j SC^*
    t = np.asarray(t, dtype=float)
    if deg == 0:
        return _sc_poly(np.abs(t), 0).astype(complex)
    if deg == 1:
        return -1j * np.sign(t) * _sc_poly(np.abs(t), 1)
    if deg == 2:
        return (-_sc_poly(np.abs(t), 2)).astype(complex)
    raise ValueError(f"no SC transform for degree {deg}")


def _reduction(w: WeightSpec, g: str):
    try:
        return _REDUCTIONS[(w.cauchy_factor, g)]
    except KeyError:
        raise UnsupportedCombinationError(f"product {g!r} is not available for weight {w.name}") from None


def weighted_product_fourier(w: WeightSpec, g: str, t):
    """Transform of ``g * w`` at ``t`` (complex array or scalar)."""
    t = np.asarray(t, dtype=float)
    total = np.zeros(t.shape, dtype=complex)
    for coef, deg in _reduction(w, g):
        if w.base == BASE_N:
            total = total + coef * _n_fourier_monomial(t, w.sigma_eps, deg)
        else:
            total = total + coef * _sc_fourier_monomial(t, deg)
    return total if total.ndim else complex(total)


def product_parity(w: WeightSpec, g: str) -> int:
    """0 if ``g*w`` is even (real transform), 1 if odd (imaginary transform)."""
    degs = {deg % 2 for _, deg in _reduction(w, g)}
    return degs.pop()


@dataclass(frozen=True)
class ProductTransform:
    """Hashable callable ``t -> (g w)^*(t)``, usable as a cache key."""

    weight: WeightSpec
    product: str

    def __post_init__(self):
        _reduction(self.weight, self.product)

    @property
    def support(self):
        return self.weight.support

    def __call__(self, t):
        return weighted_product_fourier(self.weight, self.product, t)


# ----------------------------------------------------------- C11 diagnostic

def default_t_max(w: WeightSpec, err: ErrorModel, tau=1e-12) -> float:
    """Truncation for inverting ``(g w)^* / f_eps^*``.

    Exact support for ``SC``. For ``N`` the integrand decays like
    ``exp(-r t^2)`` with ``r = sigma_w^2 - sigma_eps^2/2`` (Gaussian error) and
    the cut is placed where that envelope reaches ``tau``; with
    ``sigma_w = sigma_eps`` this is ``sqrt(2 ln(1/tau)) / sigma_eps``.
    """
    if w.base == BASE_SC:
        return SC_SUPPORT
    sw2 = w.sigma_eps ** 2
    rate = sw2 - 0.5 * err.sigma_eps ** 2 if err.kind == GAUSSIAN else 0.5 * sw2
    if rate <= 0:
        rate = 0.5 * sw2
    return math.sqrt(math.log(1.0 / tau) / rate)


@dataclass
class ConditionTerm:
    label: str
    value: float
    converged: bool
    applicable: bool = True
    history: tuple = ()


@dataclass
class ConditionReport:
    weight: str
    error: str
    regression: str
    terms: list

    @property
    def converged(self):
        return all(t.converged for t in self.terms if t.applicable)

    def to_dict(self):
        return {
            "weight": self.weight,
            "error": self.error,
            "regression": self.regression,
            "converged": self.converged,
            "terms": [
                {"label": t.label, "value": t.value, "converged": t.converged,
                 "applicable": t.applicable, "history": list(t.history)}
                for t in self.terms
            ],
        }


def _abs_ratio_integral(phi, err, t_max, points):
    t = np.linspace(-t_max, t_max, points + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.abs(phi(t)) * inverse_error_cf(err, t)
    return float(np.trapezoid(vals, t))


def condition_c11_report(w: WeightSpec, err: ErrorModel, reg, points=4096, levels=3, rtol=1e-6) -> ConditionReport:
    """Integrability diagnostic for ``w^*/f^*``, ``(f w)^*/f^*`` and ``(f^2 w)^*/f^*``.

    Each integral is computed on ``[-T, T]`` and recomputed ``levels - 1``
    times with ``T`` doubled and the grid step halved; a term converges when the last
    doubling moves it by less than ``rtol`` (relative) and stays finite.
    For ``SC_c`` the bare weight is not integrable and its transform does not
    exist as a function; the estimator never uses it, so that term is
    reported as not applicable.
    """
    from .process import CAUCHY, LINEAR  # local: process does not depend on weights

    comp = lambda g: ProductTransform(WeightSpec(w.base, w.cauchy_factor, w.sigma_eps), g)  # noqa: E731
    terms = {}
    if reg.kind == LINEAR and not w.cauchy_factor:
        a, b = reg.params
        p0, p1, p2 = comp(P0), comp(P1), comp(P2)
        terms["w"] = p0
        terms["f_w"] = lambda t: a * p1(t) + b * p0(t)
        terms["f2_w"] = lambda t: a * a * p2(t) + 2 * a * b * p1(t) + b * b * p0(t)
    elif reg.kind == CAUCHY and w.cauchy_factor:
        (theta,) = reg.params
        pf, pf2 = comp(F_CAUCHY), comp(F_CAUCHY_SQ)
        if w.base == BASE_N:
            s = w.sigma_eps
            terms["w"] = lambda t: (_n_fourier_monomial(t, s, 0) + 2 * _n_fourier_monomial(t, s, 2)
                                    + _n_fourier_monomial(t, s, 4))
        else:
            terms["w"] = None
        terms["f_w"] = lambda t: theta * pf(t)
        terms["f2_w"] = lambda t: theta * theta * pf2(t)
    else:
        raise UnsupportedCombinationError(f"weight {w.name} is not paired with a {reg.kind} regression")

    t0 = default_t_max(w, err)
    out = []
    for label, phi in terms.items():
        if phi is None:
            out.append(ConditionTerm(label, math.inf, False, applicable=False))
            continue
        hist = [_abs_ratio_integral(phi, err, t0 * 2 ** k, points * 4 ** k) for k in range(levels)]
        last, prev = hist[-1], hist[-2]
        ok = math.isfinite(last) and math.isfinite(prev) and abs(last - prev) <= rtol * max(abs(last), 1e-300)
        out.append(ConditionTerm(label, last, ok, history=tuple(hist)))
    return ConditionReport(w.name, f"{err.kind}(sigma={err.sigma_eps:g})", reg.kind, out)
