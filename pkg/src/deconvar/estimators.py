"""Parameter estimators for the noisy autoregression.

Both supported families are linear in the parameter, so the deconvolution
contrast is a quadratic form

    S_n(theta) = (c0 - 2 theta . u + theta' V theta) / n

whose coefficients are sums of deconvolution integrals over the lagged
observations. They are computed once per series (:func:`contrast_stats`)
and reused for every theta the optimiser visits.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.signal import lfilter

from .deconvolution import InversionPlan, KernelSpec, deconv_integrals
from .errors import DegenerateDesignError, UnsupportedCombinationError
from .noise import ErrorModel
from .process import CAUCHY, LINEAR
from .weights import F_CAUCHY, F_CAUCHY_SQ, P0, P1, P2, WeightSpec

DECONV_N = "DeconvN"
DECONV_SC = "DeconvSC"
ORACLE = "Oracle"
NAIVE = "Naive"
ARMA = "Arma"
DECONV_GENERAL = "DeconvGeneral"
TAGS = (DECONV_N, DECONV_SC, ORACLE, NAIVE, ARMA, DECONV_GENERAL)

DEGENERACY_TOL = 1e-10

COORDINATES = {LINEAR: ("a", "b"), CAUCHY: ("theta",)}


@dataclass
class EstimateRecord:
    tag: str
    theta_hat: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta_hat = np.atleast_1d(np.asarray(self.theta_hat, dtype=float))

    def to_dict(self):
        return {"tag": self.tag, "theta_hat": [float(v) for v in self.theta_hat],
                "diagnostics": _jsonable(self.diagnostics)}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(d["tag"], np.asarray(d["theta_hat"], dtype=float), dict(d.get("diagnostics", {})))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


@dataclass(frozen=True)
class ThetaBox:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must be non-empty and of equal length")
        if not all(math.isfinite(a) and math.isfinite(b) and a <= b for a, b in zip(lo, hi)):
            raise ValueError("box bounds must be finite with lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return len(self.lower)

    def clip(self, theta):
        return np.clip(np.asarray(theta, dtype=float), self.lower, self.upper)

    def on_boundary(self, theta, rtol=1e-9):
        theta = np.asarray(theta, dtype=float)
        width = np.maximum(np.subtract(self.upper, self.lower), 1e-300)
        return bool(np.any((theta - self.lower <= rtol * width) | (np.subtract(self.upper, theta) <= rtol * width)))

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper)}


def default_box(family):
    if family == LINEAR:
        return ThetaBox((-0.99, -5.0), (0.99, 5.0))
    if family == CAUCHY:
        return ThetaBox((-10.0,), (10.0,))
    raise ValueError(f"unknown family {family!r}")


# ------------------------------------------------------------------ contrast

@dataclass
class ContrastStats:
    """Sufficient statistics of the quadratic contrast.

    ``c0`` is the theta-free term; it is ``None`` for the Cauchy family,
    where it would need the transform of the bare weight (not integrable
    for ``SC_c``) and does not affect the minimiser.
    """

    family: str
    n: int
    u: np.ndarray
    V: np.ndarray
    c0: float | None = None

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        c0 = 0.0 if self.c0 is None else self.c0
        return float((c0 - 2.0 * theta @ self.u + theta @ self.V @ theta) / self.n)

    def gradient(self, theta):
        theta = np.asarray(theta, dtype=float)
        return 2.0 * (self.V @ theta - self.u) / self.n


def _check_pairing(family, w: WeightSpec):
    if family == LINEAR and w.cauchy_factor:
        raise UnsupportedCombinationError("linear family uses N or SC weights, not N_c/SC_c")
    if family == CAUCHY and not w.cauchy_factor:
        raise UnsupportedCombinationError("Cauchy family uses N_c or SC_c weights")
    if family not in (LINEAR, CAUCHY):
        raise ValueError(f"unknown family {family!r}")


def _check_series(z):
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < 2:
        raise ValueError("series must be one-dimensional with at least 2 values")
    if not np.all(np.isfinite(z)):
        raise ValueError("series contains non-finite values")
    if np.ptp(z) == 0:
        raise DegenerateDesignError("constant series: the regression is not identifiable")
    return z


def contrast_stats(z, w: WeightSpec, err: ErrorModel, plan: InversionPlan = InversionPlan(), family=LINEAR,
                   kernel: KernelSpec | None = None) -> ContrastStats:
    """Deconvolution integrals of the lagged series folded into a quadratic form."""
    _check_pairing(family, w)
    z = _check_series(z)
    prev, nxt = z[:-1], z[1:]
    n = nxt.size
    if family == LINEAR:
        I = deconv_integrals(prev, w, err, (P0, P1, P2), plan, kernel)
        i0, i1, i2 = I[P0], I[P1], I[P2]
        s0, s1, s2 = i0.sum(), i1.sum(), i2.sum()
        u = np.array([nxt @ i1, nxt @ i0])
        V = np.array([[s2, s1], [s1, s0]])
        c0 = float((nxt * nxt) @ i0)
        return ContrastStats(LINEAR, n, u, V, c0)
    I = deconv_integrals(prev, w, err, (F_CAUCHY, F_CAUCHY_SQ), plan, kernel)
    u = np.array([nxt @ I[F_CAUCHY]])
    V = np.array([[I[F_CAUCHY_SQ].sum()]])
    return ContrastStats(CAUCHY, n, u, V, None)


def contrast(theta, z, w, err, plan: InversionPlan = InversionPlan(), family=LINEAR, kernel=None) -> float:
    """Empirical contrast ``S_n(theta)``; see :class:`ContrastStats` for the Cauchy convention."""
    return contrast_stats(z, w, err, plan, family, kernel)(theta)


def _solve_closed(stats: ContrastStats):
    V, u = stats.V, stats.u
    if stats.family == LINEAR:
        s2, s1, s0 = V[0, 0], V[0, 1], V[1, 1]
        den = s2 * s0 - s1 * s1
        scale = abs(s2 * s0) + s1 * s1
        if not math.isfinite(den) or abs(den) <= DEGENERACY_TOL * scale or s0 == 0:
            raise DegenerateDesignError(f"near-singular normal equations (den={den:.3g})")
        a = (u[0] * s0 - u[1] * s1) / den
        b = u[1] / s0 - a * s1 / s0
        return np.array([a, b])
    d = V[0, 0]
    if not math.isfinite(d) or abs(d) <= DEGENERACY_TOL * max(abs(u[0]), 1.0) * 1e-3:
        raise DegenerateDesignError("sum of I_{wf^2} is numerically zero")
    return np.array([u[0] / d])


def _closed_record(tag, stats):
    theta = _solve_closed(stats)
    return EstimateRecord(tag, theta, {
        "method": "closed",
        "iterations": 0,
        "contrast": stats(theta),
        "gradient_norm": float(np.linalg.norm(stats.gradient(theta))),
    })


def _weight_tag(w):
    return DECONV_N if w.base == "N" else DECONV_SC


def estimate_linear_closed(z, w: WeightSpec, err: ErrorModel, plan: InversionPlan = InversionPlan()) -> EstimateRecord:
    """Closed-form minimiser ``(a_hat, b_hat)`` of the linear-family contrast."""
    return _closed_record(_weight_tag(w), contrast_stats(z, w, err, plan, LINEAR))


def estimate_cauchy_closed(z, w: WeightSpec, err: ErrorModel, plan: InversionPlan = InversionPlan()) -> EstimateRecord:
    """``sum Z_k I_wf(Z_{k-1}) / sum I_wf2(Z_{k-1})``."""
    return _closed_record(_weight_tag(w), contrast_stats(z, w, err, plan, CAUCHY))


def estimate_closed(z, w, err, plan: InversionPlan = InversionPlan(), family=LINEAR):
    return _closed_record(_weight_tag(w), contrast_stats(z, w, err, plan, family))


# -------------------------------------------------------------------- argmin

def minimize_in_box(fun, box: ThetaBox, grid_points=21, max_iter=500, ftol=1e-10):
    """Grid scan then bounded Nelder-Mead refinement.

    Grid ties go to the lexicographically smallest point, which is the
    first one ``itertools.product`` visits.
    """
    axes = [np.linspace(lo, hi, grid_points) for lo, hi in zip(box.lower, box.upper)]
    best, best_val = None, math.inf
    for pt in itertools.product(*axes):
        val = fun(np.asarray(pt))
        if val < best_val:
            best, best_val = np.asarray(pt), val
    steps = np.array([(hi - lo) / max(grid_points - 1, 1) for lo, hi in zip(box.lower, box.upper)])
    steps = np.where(steps > 0, steps, 1e-3)
    if box.dim == 1:
        lo = max(box.lower[0], best[0] - steps[0])
        hi = min(box.upper[0], best[0] + steps[0])
        if hi > lo:
            res = minimize_scalar(lambda x: fun(np.array([x])), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12, "maxiter": max_iter})
            x, nit, ok = np.array([res.x]), int(res.nfev), bool(res.success)
        else:
            x, nit, ok = best, 0, True
    else:
        simplex = [best] + [np.clip(best + np.eye(box.dim)[k] * 0.5 * steps[k] * (1 if best[k] < box.upper[k] else -1),
                                    box.lower, box.upper) for k in range(box.dim)]
        res = minimize(fun, best, method="Nelder-Mead", bounds=list(zip(box.lower, box.upper)),
                       options={"initial_simplex": np.array(simplex), "xatol": 1e-12, "fatol": ftol,
                                "maxiter": max_iter, "maxfev": 4 * max_iter})
        x, nit, ok = res.x, int(res.nit), bool(res.success)
    x = box.clip(x)
    if fun(x) > best_val:
        x = best
    return x, {"iterations": nit, "converged": ok, "grid_best": [float(v) for v in best]}


def estimate_argmin(z, box: ThetaBox | None, w: WeightSpec, err: ErrorModel, plan: InversionPlan = InversionPlan(),
                    family=LINEAR, grid_points=21, max_iter=500, stats: ContrastStats | None = None,
                    tag=None) -> EstimateRecord:
    """Numerical argmin of the contrast over ``box``."""
    if stats is None:
        stats = contrast_stats(z, w, err, plan, family)
    box = box or default_box(stats.family)
    if box.dim != stats.u.size:
        raise ValueError("box dimension does not match the regression family")
    theta, diag = minimize_in_box(stats, box, grid_points, max_iter)
    diag.update({
        "method": "argmin",
        "contrast": stats(theta),
        "gradient_norm": float(np.linalg.norm(stats.gradient(theta))),
        "on_boundary": box.on_boundary(theta),
    })
    return EstimateRecord(tag or _weight_tag(w), theta, diag)


def estimate_general(z, box: ThetaBox | None, w: WeightSpec, err: ErrorModel, kernel: KernelSpec,
                     plan: InversionPlan = InversionPlan(), family=LINEAR, grid_points=21,
                     max_iter=500) -> EstimateRecord:
    """Argmin of the kernel-truncated contrast."""
    stats = contrast_stats(z, w, err, plan, family, kernel)
    rec = estimate_argmin(z, box, w, err, plan, family, grid_points, max_iter, stats=stats, tag=DECONV_GENERAL)
    rec.diagnostics["kernel"] = kernel.to_dict()
    return rec


# ----------------------------------------------------------------- baselines

def _cauchy_shape(x):
    return 1.0 / (1.0 + x * x)


def _least_squares(series, family, tag):
    s = _check_series(series)
    prev, nxt = s[:-1], s[1:]
    n = nxt.size
    if family == LINEAR:
        sx, sy = prev.sum(), nxt.sum()
        den = n * (prev @ prev) - sx * sx
        if abs(den) <= DEGENERACY_TOL * n * (prev @ prev):
            raise DegenerateDesignError("regressor has (numerically) zero variance")
        a = (n * (nxt @ prev) - sy * sx) / den
        b = sy / n - a * sx / n
        theta = np.array([a, b])
        resid = nxt - a * prev - b
    elif family == CAUCHY:
        f = _cauchy_shape(prev)
        d = f @ f
        if d == 0:
            raise DegenerateDesignError("regressor is identically zero")
        theta = np.array([(nxt @ f) / d])
        resid = nxt - theta[0] * f
    else:
        raise ValueError(f"unknown family {family!r}")
    return EstimateRecord(tag, theta, {"method": "ols", "rss": float(resid @ resid)})


def estimate_naive(z, family=LINEAR) -> EstimateRecord:
    """Least squares with the noisy observations in place of the latent states."""
    return _least_squares(z, family, NAIVE)


def estimate_oracle(x, family=LINEAR) -> EstimateRecord:
    """Least squares on the latent series (infeasible benchmark)."""
    return _least_squares(x, family, ORACLE)


def _autocov(y, lag):
    y = y - y.mean()
    return float(y[lag:] @ y[:y.size - lag]) / y.size


def arma_start(z):
    """Moment-based starting values ``(a0, beta0)`` for the ARMA(1,1) fit.

    ``a0 = gamma_Z(2) / gamma_Z(1)``; ``beta0`` is the invertible root of
    ``beta / (1 + beta^2) = -rho_Y(1)`` with ``Y_i = Z_i - a0 Z_{i-1}``.
    """
    g1, g2 = _autocov(z, 1), _autocov(z, 2)
    a0 = g2 / g1 if abs(g1) > 1e-12 else 0.0
    a0 = float(np.clip(a0, -0.95, 0.95))
    y = z[1:] - a0 * z[:-1]
    g0y = _autocov(y, 0)
    r1 = _autocov(y, 1) / g0y if g0y > 0 else 0.0
    rho = float(np.clip(-r1, -0.49, 0.49))
    beta0 = 0.0 if abs(rho) < 1e-12 else (1.0 - math.sqrt(1.0 - 4.0 * rho * rho)) / (2.0 * rho)
    return a0, beta0


def _css_profile(z, a, beta):
    """Conditional sum of squares with b profiled out; returns (css, b)."""
    y = z[1:] - a * z[:-1]
    filt = lfilter([1.0], [1.0, -beta], np.vstack([y, np.ones_like(y)]), axis=1)
    e0, g = filt
    b = (e0 @ g) / (g @ g)
    eta = e0 - b * g
    return float(eta @ eta), float(b)


def estimate_arma(z, bound=0.999, max_iter=2000) -> EstimateRecord:
    """ARMA(1,1) fit ``Z_i - a Z_{i-1} = b + eta_i - beta eta_{i-1}`` by CSS.

    Residuals start from ``eta_0 = 0``; the intercept is concentrated out in
    closed form and ``(a, beta)`` are searched in ``(-bound, bound)^2``.
    Optimiser trouble is flagged in the diagnostics, never raised.
    """
    z = _check_series(z)
    if z.size < 20:
        raise ValueError("ARMA fit needs at least 20 observations")
    a0, beta0 = arma_start(z)
    fun = lambda p: _css_profile(z, p[0], p[1])[0]  # noqa: E731
    res = minimize(fun, np.array([a0, beta0]), method="Nelder-Mead",
                   bounds=[(-bound, bound), (-bound, bound)],
                   options={"xatol": 1e-10, "fatol": 1e-12 * max(fun([a0, beta0]), 1.0), "maxiter": max_iter})
    a, beta = (float(v) for v in res.x)
    css, b = _css_profile(z, a, beta)
    at_edge = max(abs(a), abs(beta)) >= bound - 1e-6
    return EstimateRecord(ARMA, np.array([a, b]), {
        "method": "css",
        "beta": beta,
        "css": css,
        "iterations": int(res.nit),
        "converged": bool(res.success) and not at_edge,
        "start": [a0, beta0],
        "weak_identification": abs(a - beta) < 0.05,
    })
