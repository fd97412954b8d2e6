"""Maximum-likelihood fitting by coordinate-wise gradient ascent.

The logistic-difference family (AL) carries the full analytic derivative
set: three first partials and all six second partials in tanh/coth/sech/csch
form, evaluated exp-shifted.  The sigmoid-product family (BL) uses the
flat-regime approximate gradients; the elliptical cosh-ratio family (CL)
uses its matrix gradient blocks.  The fitter updates one parameter at a
time with step 1/|second partial| and backtracks until the log-likelihood
does not decrease, so every accepted step is an ascent step.

Weighted variants (per-point weights ``w``) serve as the M-step of the
mixture machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special as sp

from . import univariate as uv
from .data_io import Dataset
from .multivariate import MultivariateSpec, make_mv
from .quadrature import QuadratureSettings, integrate
from .specfun import coth, csch2, log_sinh, sech2, softplus

__all__ = [
    "FitSettings",
    "FitReport",
    "AlHessian",
    "BlGradient",
    "loglik_al",
    "grad_al",
    "hess_al",
    "loglik_bl",
    "grad_bl_flat",
    "loglik_cl",
    "grad_cl",
    "fit",
    "init_al_from_data",
    "init_al_from_normal_fit",
    "init_cl_from_data",
    "normal_mle_loglik",
]

_BL_NORM_SETTINGS = QuadratureSettings(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=4000)


@dataclass(frozen=True)
class FitSettings:
    """Iteration budget and step-control constants."""

    max_iters: int = 500
    grad_tol: float = 1e-8
    eta0: float = 1.0
    backtrack_factor: float = 0.5
    max_backtracks: int = 30

    def __post_init__(self) -> None:
        if self.max_iters < 1 or self.grad_tol <= 0 or self.eta0 <= 0:
            raise ValueError("max_iters, grad_tol, eta0 must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")


@dataclass
class FitReport:
    """Optimization trace; the trace never decreases beyond 1e-9 slack."""

    converged: bool
    iterations: int
    loglik_trace: list[float]
    final_params: dict
    grad_norm: float
    aic: float
    bic: float
    free_params: int
    free_params_unconstrained: int | None = None


class AlHessian(NamedTuple):
    daa: float
    dbb: float
    dss: float
    dab: float
    das: float
    dbs: float


class BlGradient(NamedTuple):
    da: float
    db: float
    ds: float
    dt: float
    flat_regime: bool


def _data_1d(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.x
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a non-empty 1-d sample")
    return arr


def _weights(x: np.ndarray, w) -> np.ndarray:
    if w is None:
        return np.ones_like(x)
    w = np.asarray(w, dtype=float)
    if w.shape != x.shape:
        raise ValueError("weights must match the sample shape")
    return w


# ---------------------------------------------------------------------------
# AL: log-likelihood and analytic derivatives
# ---------------------------------------------------------------------------

def loglik_al(data, a: float, b: float, s: float, weights=None) -> float:
    """Weighted log-likelihood of the logistic-difference density."""
    x = _data_1d(data)
    w = _weights(x, weights)
    n = float(w.sum())
    g = (b - a) / (2.0 * s)
    za = (x - a) / (2.0 * s)
    zb = (x - b) / (2.0 * s)
    const = float(log_sinh(g)) - math.log(2.0 * (b - a))
    # ln cosh, exp-shifted
    lca = np.abs(za) + np.log1p(np.exp(-2.0 * np.abs(za))) - math.log(2.0)
    lcb = np.abs(zb) + np.log1p(np.exp(-2.0 * np.abs(zb))) - math.log(2.0)
    return n * const - float(np.dot(w, lca + lcb))


def grad_al(data, a: float, b: float, s: float, weights=None) -> tuple[float, float, float]:
    """First partials of the AL log-likelihood with respect to (a, b, s)."""
    x = _data_1d(data)
    w = _weights(x, weights)
    n = float(w.sum())
    g = (b - a) / (2.0 * s)
    cg = float(coth(g))
    za = (x - a) / (2.0 * s)
    zb = (x - b) / (2.0 * s)
    ta = np.tanh(za)
    tb = np.tanh(zb)
    da = n / (b - a) - n * cg / (2.0 * s) + float(np.dot(w, ta)) / (2.0 * s)
    db = -n / (b - a) + n * cg / (2.0 * s) + float(np.dot(w, tb)) / (2.0 * s)
    ds = (-n * g * cg + float(np.dot(w, za * ta + zb * tb))) / s
    return da, db, ds


def hess_al(data, a: float, b: float, s: float, weights=None) -> AlHessian:
    """All six second partials of the AL log-likelihood."""
    x = _data_1d(data)
    w = _weights(x, weights)
    n = float(w.sum())
    g = (b - a) / (2.0 * s)
    cg = float(coth(g))
    c2g = float(csch2(g))
    za = (x - a) / (2.0 * s)
    zb = (x - b) / (2.0 * s)
    ta = np.tanh(za)
    tb = np.tanh(zb)
    s2a = sech2(za)
    s2b = sech2(zb)
    inv_ba2 = 1.0 / (b - a) ** 2
    quarter = 1.0 / (4.0 * s ** 2)
    daa = n * inv_ba2 - n * quarter * c2g - quarter * float(np.dot(w, s2a))
    dbb = n * inv_ba2 - n * quarter * c2g - quarter * float(np.dot(w, s2b))
    # d/ds of the first partial doubles the odd tanh/coth terms.
    dss = (n * (2.0 * g * cg - g * g * c2g)
           - float(np.dot(w, 2.0 * za * ta + za * za * s2a))
           - float(np.dot(w, 2.0 * zb * tb + zb * zb * s2b))) / s ** 2
    dab = -n * inv_ba2 + n * quarter * c2g
    half = 1.0 / (2.0 * s ** 2)
    das = n * half * (cg - g * c2g) - half * float(np.dot(w, ta + za * s2a))
    dbs = -n * half * (cg - g * c2g) - half * float(np.dot(w, tb + zb * s2b))
    return AlHessian(daa, dbb, dss, dab, das, dbs)


# ---------------------------------------------------------------------------
# BL: exact log-likelihood (quadrature normalizer) and flat-regime gradients
# ---------------------------------------------------------------------------

def _bl_log_norm(a: float, b: float, s: float, t: float) -> float:
    def integrand(x: np.ndarray) -> np.ndarray:
        return sp.expit((x - a) / s) * sp.expit((b - x) / t)

    val = integrate(integrand, -math.inf, math.inf, _BL_NORM_SETTINGS,
                    points=(a, 0.5 * (a + b), b)).value
    return -math.log(val)


def loglik_bl(data, a: float, b: float, s: float, t: float, weights=None,
              normalizer: str = "exact") -> float:
    """BL log-likelihood; ``normalizer='flat'`` uses the 1/(b-a) shortcut."""
    x = _data_1d(data)
    w = _weights(x, weights)
    n = float(w.sum())
    if normalizer == "exact":
        log_c = _bl_log_norm(a, b, s, t)
    elif normalizer == "flat":
        log_c = -math.log(b - a)
    else:
        raise ValueError(f"normalizer must be 'exact' or 'flat', got {normalizer!r}")
    terms = -softplus((a - x) / s) - softplus((x - b) / t)
    return n * log_c + float(np.dot(w, terms))


def grad_bl_flat(data, a: float, b: float, s: float, t: float,
                 weights=None) -> BlGradient:
    """Flat-regime approximate partials of the BL log-likelihood.

    ``flat_regime`` is False when the closed-form flatness bound exceeds
    0.05, i.e. when these approximations are unreliable.
    """
    from .flatness import family_flat_bound

    x = _data_1d(data)
    w = _weights(x, weights)
    n = float(w.sum())
    fa = sp.expit((x - a) / s)        # F_L(x; a, s)
    fb = sp.expit((x - b) / t)        # F_L(x; b, t)
    da = n / (b - a) - float(np.dot(w, 1.0 - fa)) / s
    db = -n / (b - a) + float(np.dot(w, fb)) / t
    ds = float(np.dot(w, (a - x) * (1.0 - fa))) / s ** 2
    dt = float(np.dot(w, (x - b) * fb)) / t ** 2
    bound = family_flat_bound(uv.make("BL", {"a": a, "b": b, "s": s, "t": t}))
    return BlGradient(da, db, ds, dt, bool(bound < 0.05))


def _bl_curvatures(x, w, a, b, s, t) -> tuple[float, float, float, float]:
    """Second-derivative magnitudes of the flat-regime BL objective, used
    only for step sizing."""
    n = float(w.sum())
    fa = sp.expit((x - a) / s)
    fb = sp.expit((x - b) / t)
    va = fa * (1.0 - fa)
    vb = fb * (1.0 - fb)
    daa = n / (b - a) ** 2 - float(np.dot(w, va)) / s ** 2
    dbb = n / (b - a) ** 2 - float(np.dot(w, vb)) / t ** 2
    g_s = float(np.dot(w, (a - x) * (1.0 - fa))) / s ** 2
    g_t = float(np.dot(w, (x - b) * fb)) / t ** 2
    dss = -2.0 * g_s / s - float(np.dot(w, (x - a) ** 2 * va)) / s ** 4
    dtt = -2.0 * g_t / t - float(np.dot(w, (x - b) ** 2 * vb)) / t ** 4
    return daa, dbb, dss, dtt


# ---------------------------------------------------------------------------
# CL: log-likelihood and gradient blocks
# ---------------------------------------------------------------------------

def _cl_parts(rows: np.ndarray, m: np.ndarray, lam: np.ndarray):
    d = rows - m
    rho2 = np.einsum("ij,jk,ik->i", d, lam, d)
    rho2 = np.maximum(rho2, 0.0)
    return d, np.sqrt(rho2)


def _loglik_cl_raw(rows, m, lam, big_r, t) -> float:
    n_dim = rows.shape[1]
    count = rows.shape[0]
    d, rho = _cl_parts(rows, m, lam)
    a = big_r * t
    rho_n_t = rho ** n_dim * t
    from .specfun import log_cosh_sum

    const = (math.lgamma(n_dim / 2.0 + 1.0) - (n_dim / 2.0) * math.log(math.pi)
             + float(log_sinh(a)) - math.log(big_r)
             + 0.5 * float(np.linalg.slogdet(lam)[1]))
    return count * const - float(np.sum(log_cosh_sum(rho_n_t, np.full_like(rho, a))))


def loglik_cl(data, spec: MultivariateSpec) -> float:
    """Log-likelihood of a CL spec on rows of points."""
    rows = data.rows if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    lam = np.linalg.inv(spec.sigma)
    return _loglik_cl_raw(rows, spec.m, lam, spec.r ** spec.n, spec.t)


def _grad_cl_raw(rows, m, lam, big_r, t):
    """Gradient blocks for (m, Lambda = Sigma^-1, R = r^n, t)."""
    n_dim = rows.shape[1]
    count = rows.shape[0]
    d, rho = _cl_parts(rows, m, lam)
    a = big_r * t
    u = rho ** n_dim * t
    # sinh(u) / (cosh(u) + cosh(a)), exp-shifted through the identity
    # sinh u / (cosh u + cosh a) = sigma(u - a) - sigma(-u - a) for a = R t.
    ratio_u = sp.expit(u - a) - sp.expit(-u - a)
    ratio_a = sp.expit(a - u) - sp.expit(-a - u)       # sinh(a)/(cosh+cosh)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho_pow = np.where(rho > 0.0, rho ** (n_dim - 2.0), 0.0)
    coeff = ratio_u * n_dim * rho_pow * t
    sigma = np.linalg.inv(lam)
    grad_m = (lam @ (d * coeff[:, None]).sum(axis=0))
    grad_lam = 0.5 * count * sigma - 0.5 * np.einsum("i,ij,ik->jk", coeff, d, d)
    grad_big_r = count * t * float(coth(a)) - count / big_r - t * float(np.sum(ratio_a))
    grad_t = (count * big_r * float(coth(a))
              - float(np.sum(rho ** n_dim * ratio_u + big_r * ratio_a)))
    return grad_m, grad_lam, grad_big_r, grad_t


def grad_cl(data, spec: MultivariateSpec):
    """Gradient blocks of the CL log-likelihood for {m, Sigma^-1, r^n, t}."""
    rows = data.rows if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    lam = np.linalg.inv(spec.sigma)
    return _grad_cl_raw(rows, spec.m, lam, spec.r ** spec.n, spec.t)


def normal_mle_loglik(data) -> float:
    """Log-likelihood of the best-fit normal (MLE variance), the baseline
    any flat-topped fit should beat on near-uniform data."""
    x = _data_1d(data)
    var = float(np.var(x))
    n = x.size
    return -0.5 * n * (math.log(2.0 * math.pi * var) + 1.0)


# ---------------------------------------------------------------------------
# Initializers
# ---------------------------------------------------------------------------

def init_al_from_data(data) -> uv.UnivariateSpec:
    """Near-uniform starting point: s at four times its floor, boundaries
    one s inside the sample range."""
    x = _data_1d(data)
    span = float(x.max() - x.min())
    if span == 0.0:
        raise ValueError("degenerate data: all points equal")
    s = span / x.size
    s = max(s, span / (4.0 * x.size))
    return uv.make("AL", {"a": float(x.min()) + s, "b": float(x.max()) - s, "s": s})


def init_al_from_normal_fit(data) -> uv.UnivariateSpec:
    """AL surrogate of the sample's best-fit normal, clipped into the
    admissible box."""
    x = _data_1d(data)
    mu = float(np.mean(x))
    sd = float(np.std(x))
    if sd == 0.0:
        raise ValueError("degenerate data: all points equal")
    raw = uv.approx_al_from_normal(mu, sd)
    lo, hi = float(x.min()), float(x.max())
    span = hi - lo
    s_min = span / (4.0 * x.size)
    eps = 1e-9 * span
    a = min(max(raw.a, lo + eps), hi - 2.0 * eps)
    b = max(min(raw.b, hi - eps), a + eps)
    s = min(max(raw.s, s_min), max(sd, s_min * 1.0000001))
    return uv.make("AL", {"a": a, "b": b, "s": s})


def init_cl_from_data(data) -> MultivariateSpec:
    """Moment-based CL start: sample mean and covariance, the median
    elliptical radius, and a mid-steep shoulder."""
    rows = data.rows if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    m = rows.mean(axis=0)
    sigma = np.cov(rows.T, bias=True)
    sigma = np.atleast_2d(sigma)
    n_dim = rows.shape[1]
    sigma += 1e-8 * float(np.trace(sigma)) / n_dim * np.eye(n_dim)
    spec = make_mv("CL", m, r=1.0, t=1.0, sigma=sigma)
    from .multivariate import mahalanobis

    rho = mahalanobis(rows, spec)
    r = float(np.median(rho)) or 1.0
    t = 4.0 / r ** n_dim
    return make_mv("CL", m, r=r, t=t, sigma=sigma)


# ---------------------------------------------------------------------------
# The coordinate-ascent fitter
# ---------------------------------------------------------------------------

def _step_size(grad: float, curvature: float, scale: float, eta0: float) -> float:
    if abs(curvature) < 1e-12:
        return 0.1 * scale / max(abs(grad), 1e-300)
    return eta0 / abs(curvature)


@dataclass
class _Bounds1D:
    lo: float
    hi: float
    s_min: float
    s_max: float


def _bounds_from_data(x: np.ndarray) -> _Bounds1D:
    lo, hi = float(x.min()), float(x.max())
    span = hi - lo
    if span == 0.0:
        raise ValueError("degenerate data: all points equal")
    sd = float(np.std(x))
    return _Bounds1D(lo=lo, hi=hi, s_min=span / (4.0 * x.size), s_max=max(sd, 2.0 * span / (4.0 * x.size)))


def _clip(value: float, lo: float, hi: float) -> float:
    return min(max(value, lo), hi)


def _fit_al(x: np.ndarray, init: uv.UnivariateSpec, settings: FitSettings,
            weights=None) -> tuple[uv.UnivariateSpec, FitReport]:
    w = _weights(x, weights)
    bounds = _bounds_from_data(x)
    eps = 1e-9 * (bounds.hi - bounds.lo)
    a, b, s = init.a, init.b, init.s
    if not (bounds.lo < a < b < bounds.hi):
        raise ValueError(
            f"init violates min(x) < a < b < max(x): a={a}, b={b}, "
            f"range=({bounds.lo}, {bounds.hi})")
    if not s >= bounds.s_min:
        raise ValueError(f"init violates s >= {bounds.s_min}: s={s}")

    ll = loglik_al(x, a, b, s, w)
    trace = [ll]
    converged = False
    n_eff = float(w.sum())
    grad_norm = math.inf
    iters = 0
    for iters in range(1, settings.max_iters + 1):
        any_accept = False
        for name in ("a", "b", "s"):
            da, db, ds = grad_al(x, a, b, s, w)
            h = hess_al(x, a, b, s, w)
            if name == "a":
                g, curv, scale = da, h.daa, b - a
            elif name == "b":
                g, curv, scale = db, h.dbb, b - a
            else:
                g, curv, scale = ds, h.dss, s
            step = _step_size(g, curv, scale, settings.eta0) * g
            for _ in range(settings.max_backtracks):
                if name == "a":
                    cand = (_clip(a + step, bounds.lo + eps, b - eps), b, s)
                elif name == "b":
                    cand = (a, _clip(b + step, a + eps, bounds.hi - eps), s)
                else:
                    cand = (a, b, _clip(s + step, bounds.s_min, bounds.s_max))
                if cand == (a, b, s):
                    break  # clip or underflow: no movement possible
                ll_new = loglik_al(x, *cand, w)
                if ll_new >= ll:
                    a, b, s = cand
                    ll = ll_new
                    any_accept = True
                    break
                step *= settings.backtrack_factor
        trace.append(ll)
        da, db, ds = grad_al(x, a, b, s, w)
        grad_norm = max(abs(da), abs(db), abs(ds)) / n_eff
        if grad_norm < settings.grad_tol:
            converged = True
            break
        if not any_accept:
            break
    spec = uv.make("AL", {"a": a, "b": b, "s": s})
    k = 3
    n = x.size
    report = FitReport(converged=converged, iterations=iters, loglik_trace=trace,
                       final_params=spec.params(), grad_norm=grad_norm,
                       aic=2.0 * k - 2.0 * ll, bic=k * math.log(n) - 2.0 * ll,
                       free_params=k)
    return spec, report


def _fit_bl(x: np.ndarray, init: uv.UnivariateSpec, settings: FitSettings,
            weights=None) -> tuple[uv.UnivariateSpec, FitReport]:
    w = _weights(x, weights)
    bounds = _bounds_from_data(x)
    eps = 1e-9 * (bounds.hi - bounds.lo)
    a, b, s, t = init.a, init.b, init.s, init.t
    if not (bounds.lo < a < b < bounds.hi):
        raise ValueError(
            f"init violates min(x) < a < b < max(x): a={a}, b={b}, "
            f"range=({bounds.lo}, {bounds.hi})")

    ll = loglik_bl(x, a, b, s, t, w)
    trace = [ll]
    converged = False
    n_eff = float(w.sum())
    grad_norm = math.inf
    iters = 0
    for iters in range(1, settings.max_iters + 1):
        any_accept = False
        for name in ("a", "b", "s", "t"):
            g4 = grad_bl_flat(x, a, b, s, t, w)
            daa, dbb, dss, dtt = _bl_curvatures(x, w, a, b, s, t)
            g, curv, scale = {
                "a": (g4.da, daa, b - a),
                "b": (g4.db, dbb, b - a),
                "s": (g4.ds, dss, s),
                "t": (g4.dt, dtt, t),
            }[name]
            step = _step_size(g, curv, scale, settings.eta0) * g
            for _ in range(settings.max_backtracks):
                if name == "a":
                    cand = (_clip(a + step, bounds.lo + eps, b - eps), b, s, t)
                elif name == "b":
                    cand = (a, _clip(b + step, a + eps, bounds.hi - eps), s, t)
                elif name == "s":
                    cand = (a, b, _clip(s + step, bounds.s_min, bounds.s_max), t)
                else:
                    cand = (a, b, s, _clip(t + step, bounds.s_min, bounds.s_max))
                if cand == (a, b, s, t):
                    break  # clip or underflow: no movement possible
                ll_new = loglik_bl(x, *cand, w)
                if ll_new >= ll:
                    a, b, s, t = cand
                    ll = ll_new
                    any_accept = True
                    break
                step *= settings.backtrack_factor
        trace.append(ll)
        g4 = grad_bl_flat(x, a, b, s, t, w)
        grad_norm = max(abs(g4.da), abs(g4.db), abs(g4.ds), abs(g4.dt)) / n_eff
        if grad_norm < settings.grad_tol:
            converged = True
            break
        if not any_accept:
            break
    spec = uv.make("BL", {"a": a, "b": b, "s": s, "t": t})
    k = 4
    n = x.size
    report = FitReport(converged=converged, iterations=iters, loglik_trace=trace,
                       final_params=spec.params(), grad_norm=grad_norm,
                       aic=2.0 * k - 2.0 * ll, bic=k * math.log(n) - 2.0 * ll,
                       free_params=k)
    return spec, report


def _project_pd(mat: np.ndarray, floor: float = 1e-10) -> np.ndarray:
    sym = 0.5 * (mat + mat.T)
    vals, vecs = np.linalg.eigh(sym)
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T


def _directional_curvature(fun_grad, theta: np.ndarray, grad: np.ndarray) -> float:
    norm = float(np.linalg.norm(grad))
    if norm == 0.0:
        return 0.0
    unit = grad / norm
    h = 1e-6 * max(1.0, float(np.linalg.norm(theta)))
    g2 = fun_grad(theta + h * unit)
    return float(np.dot(g2 - grad, unit) / h)


def _fit_cl(rows: np.ndarray, init: MultivariateSpec,
            settings: FitSettings) -> tuple[MultivariateSpec, FitReport]:
    count, n_dim = rows.shape
    m = init.m.copy()
    lam = np.linalg.inv(init.sigma)
    big_r = init.r ** n_dim
    t = init.t

    def ll_of(mv, lamv, rv, tv):
        return _loglik_cl_raw(rows, mv, lamv, rv, tv)

    ll = ll_of(m, lam, big_r, t)
    trace = [ll]
    converged = False
    grad_norm = math.inf
    iters = 0
    for iters in range(1, settings.max_iters + 1):
        any_accept = False

        # 1. location
        gm = _grad_cl_raw(rows, m, lam, big_r, t)[0]
        curv = _directional_curvature(
            lambda th: _grad_cl_raw(rows, th, lam, big_r, t)[0], m, gm)
        eta = settings.eta0 / max(abs(curv), 1e-12)
        step = eta * gm
        for _ in range(settings.max_backtracks):
            ll_new = ll_of(m + step, lam, big_r, t)
            if ll_new >= ll:
                m = m + step
                ll = ll_new
                any_accept = True
                break
            step *= settings.backtrack_factor

        # 2. inverse scale matrix, symmetric step with PD projection
        glam = _grad_cl_raw(rows, m, lam, big_r, t)[1]
        gnorm = float(np.linalg.norm(glam))
        if gnorm > 0:
            unit = glam / gnorm
            h = 1e-6 * max(1.0, float(np.linalg.norm(lam)))
            g2 = _grad_cl_raw(rows, m, lam + h * unit, big_r, t)[1]
            curv = float(np.tensordot(g2 - glam, unit) / h)
            eta = settings.eta0 / max(abs(curv), 1e-12)
            step_mat = eta * glam
            for _ in range(settings.max_backtracks):
                lam_new = _project_pd(lam + step_mat)
                ll_new = ll_of(m, lam_new, big_r, t)
                if ll_new >= ll:
                    lam = lam_new
                    ll = ll_new
                    any_accept = True
                    break
                step_mat *= settings.backtrack_factor

        # 3. dispersion R = r^n and 4. slope t, both positive scalars
        for idx, name in ((2, "R"), (3, "t")):
            g = _grad_cl_raw(rows, m, lam, big_r, t)[idx]
            cur = big_r if name == "R" else t

            def g_of(v, idx=idx, name=name):
                if name == "R":
                    return _grad_cl_raw(rows, m, lam, float(v), t)[idx]
                return _grad_cl_raw(rows, m, lam, big_r, float(v))[idx]

            h = 1e-6 * max(1.0, abs(cur))
            curv = (g_of(cur + h) - g) / h
            step = _step_size(g, curv, cur, settings.eta0) * g
            for _ in range(settings.max_backtracks):
                cand = max(cur + step, 1e-12 * max(1.0, cur))
                ll_new = ll_of(m, lam, cand, t) if name == "R" else ll_of(m, lam, big_r, cand)
                if ll_new >= ll:
                    if name == "R":
                        big_r = cand
                    else:
                        t = cand
                    ll = ll_new
                    any_accept = True
                    break
                step *= settings.backtrack_factor

        trace.append(ll)
        gm, glam, gr, gt = _grad_cl_raw(rows, m, lam, big_r, t)
        grad_norm = max(float(np.max(np.abs(gm))), float(np.max(np.abs(glam))),
                        abs(gr), abs(gt)) / count
        if grad_norm < settings.grad_tol:
            converged = True
            break
        if not any_accept:
            break

    sigma = np.linalg.inv(lam)
    spec = make_mv("CL", m, r=big_r ** (1.0 / n_dim), t=t, sigma=sigma)
    k_constrained = (n_dim + 1) * (n_dim + 2) // 2
    k_full = k_constrained + 1
    report = FitReport(
        converged=converged, iterations=iters, loglik_trace=trace,
        final_params={"m": m.tolist(), "Sigma": sigma.tolist(),
                      "r": spec.r, "t": t},
        grad_norm=grad_norm,
        aic=2.0 * k_constrained - 2.0 * ll,
        bic=k_constrained * math.log(count) - 2.0 * ll,
        free_params=k_constrained,
        free_params_unconstrained=k_full,
    )
    return spec, report


def fit(data, init, settings: FitSettings | None = None):
    """Fit AL, BL (univariate specs) or CL (multivariate spec) by monotone
    coordinate ascent starting from ``init``.

    Returns ``(spec, FitReport)``.  Bound constraints
    min(x) < a < b < max(x) and s >= range/(4N) hold at every iterate.
    """
    settings = settings or FitSettings()
    if isinstance(init, uv.UnivariateSpec):
        x = _data_1d(data)
        w = data.weights if isinstance(data, Dataset) else None
        if init.family == "AL":
            return _fit_al(x, init, settings, w)
        if init.family == "BL":
            return _fit_bl(x, init, settings, w)
        raise ValueError(f"fit supports AL and BL univariate families, got {init.family}")
    if isinstance(init, MultivariateSpec):
        if init.family != "CL":
            raise ValueError(f"fit supports the CL multivariate family, got {init.family}")
        rows = data.rows if isinstance(data, Dataset) else np.asarray(data, dtype=float)
        if rows.ndim != 2 or rows.shape[0] < 2:
            raise ValueError("CL fit needs at least two points")
        if float(np.max(np.var(rows, axis=0))) == 0.0:
            raise ValueError("degenerate data: all points equal")
        return _fit_cl(rows, init, settings)
    raise TypeError(f"unsupported init type: {type(init).__name__}")
