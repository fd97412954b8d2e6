"""Univariate distribution families ranging from bell-shaped to rectangular.

Twelve families share one tagged spec type:

====== ============================== ===========================
tag    parameters                     shape
====== ============================== ===========================
U      a, b                           rectangle on [a, b]
GN     mu, s, beta                    generalized normal
AN     a, b, s                        normal CDF difference
AL     a, b, s                        logistic CDF difference
ALS    a, b, s, lam                   skewed logistic difference
BL     a, b, s, t                     logistic sigmoid product
BD     a, b, s, t                     Laplace sigmoid product
CC     m, s, beta                     generalized Cauchy
CF     m, r, s, beta                  Fermi-function family
CE     a, b, s                        Ferreri (CF at beta = 2)
CH     m, r, s, beta                  cosh-ratio family
DE     m, s                           flattened peak, x^-2 tails
====== ============================== ===========================

Construction validates parameters and caches the normalizing constant; all
evaluation functions are pure, vectorized over ``x``, and exp-shifted where
tails would overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy import optimize, special as sp

from . import specfun
from .quadrature import QuadratureSettings, integrate

__all__ = [
    "FAMILIES",
    "ConvergenceError",
    "UnivariateSpec",
    "MomentReport",
    "make",
    "pdf",
    "log_pdf",
    "cdf",
    "quantile",
    "sample",
    "central_moment",
    "kurtosis",
    "mode",
    "moment_integrand",
    "support",
    "bl_flat_normalizer",
    "approx_al_from_normal",
    "approx_al_from_an",
    "approx_bd_from_bl",
    "to_json_dict",
    "from_json_dict",
    "AL_OF_NORMAL_R",
    "AL_OF_NORMAL_S",
    "AN_TO_AL_SCALE",
]


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its budget."""


_PARAM_FIELDS: dict[str, tuple[str, ...]] = {
    "U": ("a", "b"),
    "GN": ("mu", "s", "beta"),
    "AN": ("a", "b", "s"),
    "AL": ("a", "b", "s"),
    "ALS": ("a", "b", "s", "lam"),
    "BL": ("a", "b", "s", "t"),
    "BD": ("a", "b", "s", "t"),
    "CC": ("m", "s", "beta"),
    "CF": ("m", "r", "s", "beta"),
    "CE": ("a", "b", "s"),
    "CH": ("m", "r", "s", "beta"),
    "DE": ("m", "s"),
}
FAMILIES = tuple(_PARAM_FIELDS)

_SYMMETRIC = frozenset({"U", "GN", "AN", "AL", "CC", "CF", "CE", "CH", "DE"})
_AB_FAMILIES = frozenset({"U", "AN", "AL", "ALS", "BL", "BD", "CE"})

# Approximation constants: the AL surrogate of a standard normal and the
# logistic scale matching the normal CDF within 0.01 everywhere.
AL_OF_NORMAL_R = math.sqrt(math.log(4.0)) - 0.2
AL_OF_NORMAL_S = AL_OF_NORMAL_R / math.pi + 0.166
AN_TO_AL_SCALE = 0.5877

_NORM_SETTINGS = QuadratureSettings(abs_tol=1e-14, rel_tol=1e-12, max_subdivisions=4000)


@dataclass(frozen=True)
class UnivariateSpec:
    """Validated parameter set of one family, plus cached derived values.

    Unused parameter slots stay ``None``.  ``m`` and ``r`` are the midpoint
    and half-width for families parameterized by boundaries; ``c`` is the
    normalizing prefactor used by the pdf.
    """

    family: str
    a: float | None = None
    b: float | None = None
    s: float | None = None
    t: float | None = None
    mu: float | None = None
    beta: float | None = None
    m: float | None = None
    r: float | None = None
    lam: float | None = None
    c: float | None = None

    def params(self) -> dict[str, float]:
        """The family's declared parameters, in declaration order."""
        return {name: getattr(self, name) for name in _PARAM_FIELDS[self.family]}


@dataclass(frozen=True)
class MomentReport:
    """Central moment of even order; ``flag`` marks divergent cases."""

    order: int
    value: float | None
    flag: str | None
    method: str


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


def make(family: str, params: Mapping[str, float]) -> UnivariateSpec:
    """Validate ``params`` for ``family`` and build a spec.

    Rejects unknown or missing keys and any violated invariant by name.
    Normalizing constants are computed here: closed forms where available,
    quadrature for BL.
    """
    if family not in _PARAM_FIELDS:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    fields = _PARAM_FIELDS[family]
    unknown = set(params) - set(fields)
    if unknown:
        raise ValueError(f"unknown parameter(s) for {family}: {sorted(unknown)}")
    missing = set(fields) - set(params)
    if missing:
        raise ValueError(f"missing parameter(s) for {family}: {sorted(missing)}")
    vals = {k: float(params[k]) for k in fields}
    for k, v in vals.items():
        _require(math.isfinite(v), f"{family}: parameter {k} must be finite, got {v}")

    if "a" in vals:
        _require(vals["a"] < vals["b"], f"{family}: requires a < b, got a={vals['a']}, b={vals['b']}")
    for scale_name in ("s", "t", "r"):
        if scale_name in vals:
            _require(vals[scale_name] > 0, f"{family}: requires {scale_name} > 0, got {vals[scale_name]}")
    if "beta" in vals:
        _require(vals["beta"] > 0, f"{family}: requires beta > 0, got {vals['beta']}")
    if family == "CC":
        _require(vals["beta"] > 1, f"CC: requires beta > 1 for integrability, got beta={vals['beta']}")
    if family == "ALS":
        _require(-1.0 < vals["lam"] < 1.0, f"ALS: requires lam in (-1, 1), got {vals['lam']}")

    spec = UnivariateSpec(family=family, **vals)
    if "a" in vals:
        spec = replace(spec, m=0.5 * (vals["a"] + vals["b"]), r=0.5 * (vals["b"] - vals["a"]))
    spec = replace(spec, c=_normalizer(spec))
    _require(spec.c > 0, f"{family}: computed normalizing constant is not positive")
    return spec


# ---------------------------------------------------------------------------
# Normalizing constants
# ---------------------------------------------------------------------------

def _fd_h(spec: UnivariateSpec) -> float:
    return (spec.r / spec.s) ** spec.beta


def _bd_exp_term(a: float, b: float, s: float, t: float) -> float:
    """The exponential correction in the BD normalizer, stable across s = t.

    Equals [g(s) - g(t)] / (2 (s^2 - t^2)) with g(tau) = tau^3 e^{(a-b)/tau};
    the removable singularity at s = t is bridged by a second-order Taylor
    step around the midpoint scale.
    """
    d = a - b  # negative
    def g(tau: float) -> float:
        return tau ** 3 * math.exp(d / tau)

    if abs(s - t) / s < 1e-4:
        mid = 0.5 * (s + t)
        e = math.exp(d / mid)
        g1 = e * (3.0 * mid ** 2 - d * mid)
        g3 = e * (6.0 - 6.0 * d / mid + 3.0 * (d / mid) ** 2 - (d / mid) ** 3)
        return (g1 + (s - t) ** 2 * g3 / 24.0) / (2.0 * (s + t))
    return (g(s) - g(t)) / (2.0 * (s ** 2 - t ** 2))


def _normalizer(spec: UnivariateSpec) -> float:
    f = spec.family
    if f == "U":
        return 1.0 / (spec.b - spec.a)
    if f == "GN":
        return spec.beta / (2.0 * spec.s * math.gamma(1.0 / spec.beta))
    if f == "AN":
        return 1.0 / (2.0 * (spec.b - spec.a))
    if f == "AL":
        return 1.0 / (2.0 * spec.r)
    if f == "ALS":
        return 1.0 / (spec.b - spec.a)
    if f == "BL":
        a, b, s, t = spec.a, spec.b, spec.s, spec.t

        def integrand(x: np.ndarray) -> np.ndarray:
            return sp.expit((x - a) / s) * sp.expit((b - x) / t)

        res = integrate(integrand, -math.inf, math.inf, _NORM_SETTINGS,
                        points=(a, 0.5 * (a + b), b))
        return 1.0 / res.value
    if f == "BD":
        term = _bd_exp_term(spec.a, spec.b, spec.s, spec.t)
        denom = (spec.b - spec.a) + term
        if not denom > 0 or not math.isfinite(denom):
            raise ValueError("BD: normalizer evaluation failed near s = t")
        return 1.0 / denom
    if f == "CC":
        b0 = math.pi / math.sin(math.pi / spec.beta)
        return spec.beta / (2.0 * spec.s * b0)
    if f == "CF":
        j = 1.0 / spec.beta - 1.0
        fd = specfun.fermi_dirac_complete(j, _fd_h(spec))
        return spec.beta / (2.0 * spec.s * math.gamma(1.0 / spec.beta) * fd)
    if f == "CE":
        h = (spec.r / spec.s) ** 2
        fd = specfun.fermi_dirac_complete(-0.5, h)
        return 1.0 / (math.sqrt(math.pi) * spec.s * fd)
    if f == "CH":
        j = 1.0 / spec.beta - 1.0
        h = _fd_h(spec)
        diff = specfun.fermi_dirac_complete(j, h) - specfun.fermi_dirac_complete(j, -h)
        return spec.beta / (2.0 * spec.s * math.gamma(1.0 / spec.beta) * diff)
    if f == "DE":
        return 1.0 / (2.0 * math.sqrt(math.pi) * spec.s)
    raise AssertionError(f)


def bl_flat_normalizer(a: float, b: float) -> float:
    """Fast-path BL normalizer 1/(b-a), valid only in the flat regime.

    This is never substituted implicitly; ``make`` always integrates.
    """
    _require(a < b, f"requires a < b, got a={a}, b={b}")
    return 1.0 / (b - a)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _center(spec: UnivariateSpec) -> float:
    return spec.mu if spec.family == "GN" else spec.m


def support(spec: UnivariateSpec) -> tuple[float, float]:
    if spec.family == "U":
        return (spec.a, spec.b)
    return (-math.inf, math.inf)


def _scale(spec: UnivariateSpec) -> float:
    """A characteristic length used for step sizes and brackets."""
    if spec.family == "U":
        return spec.b - spec.a
    s = spec.s
    if spec.t is not None:
        s = min(s, spec.t)
    if spec.r is not None:
        s = min(max(s, 1e-300), max(spec.r, s))
    return s


def _as_float_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _restore(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


def _f_ls(z: np.ndarray, lam: float) -> np.ndarray:
    """Skewed logistic CDF in the reduced variable z = (x - u) / (2 s)."""
    return 0.5 * (1.0 + np.tanh(z + lam * (np.sqrt(z * z + 1.0) - 1.0)))


# ---------------------------------------------------------------------------
# pdf / log_pdf
# ---------------------------------------------------------------------------

def log_pdf(spec: UnivariateSpec, x):
    """Natural log of the density; -inf outside the support of U."""
    arr, scalar = _as_float_array(x)
    out = _LOG_PDF[spec.family](spec, arr)
    return _restore(out, scalar)


def pdf(spec: UnivariateSpec, x):
    """Density at ``x`` (scalar or array); never negative, tails underflow to 0."""
    arr, scalar = _as_float_array(x)
    f = spec.family
    if f == "U":
        out = np.where((arr >= spec.a) & (arr <= spec.b), spec.c, 0.0)
    elif f == "AN":
        z1 = (arr - spec.a) / (math.sqrt(2.0) * spec.s)
        z2 = (arr - spec.b) / (math.sqrt(2.0) * spec.s)
        out = spec.c * (sp.erf(z1) - sp.erf(z2))
    elif f == "ALS":
        z1 = (arr - spec.a) / (2.0 * spec.s)
        z2 = (arr - spec.b) / (2.0 * spec.s)
        out = spec.c * (_f_ls(z1, spec.lam) - _f_ls(z2, spec.lam))
        out = np.maximum(out, 0.0)
    else:
        out = np.exp(_LOG_PDF[f](spec, arr))
    return _restore(out, scalar)


def _log_pdf_u(spec, x):
    return np.where((x >= spec.a) & (x <= spec.b), math.log(spec.c), -math.inf)


def _log_pdf_gn(spec, x):
    z = np.abs(x - spec.mu) / spec.s
    with np.errstate(over="ignore"):
        zb = z ** spec.beta
    return math.log(spec.c) - zb


def _log_pdf_an(spec, x):
    with np.errstate(divide="ignore"):
        return np.log(pdf(spec, x))


def _log_pdf_al(spec, x):
    rho = spec.r / spec.s
    w = (x - spec.m) / spec.s
    return (math.log(spec.c) + specfun.log_sinh(rho)
            - specfun.log_cosh_sum(w, np.full_like(np.asarray(w, dtype=float), rho)))


def _log_pdf_als(spec, x):
    with np.errstate(divide="ignore"):
        return np.log(pdf(spec, x))


def _log_pdf_bl(spec, x):
    return (math.log(spec.c)
            - specfun.softplus((spec.a - x) / spec.s)
            - specfun.softplus((x - spec.b) / spec.t))


def _log_fd_cdf(z: np.ndarray) -> np.ndarray:
    """log of the Laplace sigmoid F_D(z) = e^z/2 (z<0), 1 - e^-z/2 (z>=0)."""
    z = np.asarray(z, dtype=float)
    neg = z < 0
    return np.where(neg, np.where(neg, z, 0.0) - math.log(2.0),
                    np.log1p(-0.5 * np.exp(-np.maximum(z, 0.0))))


def _log_pdf_bd(spec, x):
    x = np.asarray(x, dtype=float)
    return (math.log(spec.c)
            + _log_fd_cdf((x - spec.a) / spec.s)
            + _log_fd_cdf((spec.b - x) / spec.t))


def _log_pdf_cc(spec, x):
    z = np.abs(x - spec.m) / spec.s
    with np.errstate(divide="ignore"):
        lz = np.log(z)
    return math.log(spec.c) - specfun.softplus(spec.beta * lz)


def _log_pdf_cf(spec, x):
    with np.errstate(over="ignore"):
        w = (np.abs(x - spec.m) ** spec.beta - spec.r ** spec.beta) / spec.s ** spec.beta
    return math.log(spec.c) - specfun.softplus(w)


def _log_pdf_ce(spec, x):
    w = (x - spec.a) * (x - spec.b) / spec.s ** 2
    return math.log(spec.c) - specfun.softplus(w)


def _log_pdf_ch(spec, x):
    h = _fd_h(spec)
    with np.errstate(over="ignore"):
        w = (np.abs(x - spec.m) / spec.s) ** spec.beta
    return (math.log(spec.c) + specfun.log_sinh(h)
            - specfun.log_cosh_sum(w, np.full_like(np.asarray(w, dtype=float), h)))


def _log_pdf_de(spec, x):
    u = np.asarray(x, dtype=float) - spec.m
    with np.errstate(divide="ignore"):
        w = (spec.s / u) ** 2
    # 1 - e^-w evaluated stably; w = inf at the center gives exactly 1.
    val = -np.expm1(-w)
    with np.errstate(divide="ignore"):
        return math.log(spec.c) + np.log(val)


_LOG_PDF = {
    "U": _log_pdf_u, "GN": _log_pdf_gn, "AN": _log_pdf_an, "AL": _log_pdf_al,
    "ALS": _log_pdf_als, "BL": _log_pdf_bl, "BD": _log_pdf_bd, "CC": _log_pdf_cc,
    "CF": _log_pdf_cf, "CE": _log_pdf_ce, "CH": _log_pdf_ch, "DE": _log_pdf_de,
}


# ---------------------------------------------------------------------------
# Mode
# ---------------------------------------------------------------------------

@lru_cache(maxsize=512)
def _mode_cached(spec: UnivariateSpec) -> float:
    if spec.family in _SYMMETRIC or spec.family == "U":
        return _center(spec)
    if spec.family == "ALS" and spec.lam == 0.0:
        return spec.m
    # Asymmetric families: bracketed maximization of log_pdf.
    lo = spec.a - 20.0 * (spec.s + (spec.t or spec.s))
    hi = spec.b + 20.0 * (spec.s + (spec.t or spec.s))
    res = optimize.minimize_scalar(
        lambda x: -log_pdf(spec, x), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-10},
    )
    if not res.success:
        raise ConvergenceError(f"mode search failed for {spec.family}")
    return float(res.x)


def mode(spec: UnivariateSpec) -> float:
    """Location of the density maximum (midpoint for symmetric families)."""
    return _mode_cached(spec)


# ---------------------------------------------------------------------------
# CDF
# ---------------------------------------------------------------------------

def cdf(spec: UnivariateSpec, x):
    """Distribution function; closed form where available, otherwise an
    adaptive integral anchored at the mode."""
    arr, scalar = _as_float_array(x)
    f = spec.family
    if f == "U":
        out = np.clip((arr - spec.a) / (spec.b - spec.a), 0.0, 1.0)
    elif f == "GN":
        z = np.abs(arr - spec.mu) / spec.s
        with np.errstate(over="ignore"):
            out = 0.5 + 0.5 * np.sign(arr - spec.mu) * sp.gammainc(1.0 / spec.beta, z ** spec.beta)
    elif f == "AN":
        out = _cdf_an(spec, arr)
    elif f == "AL":
        out = _cdf_al_like(arr, spec.m, spec.r, spec.s)
    elif f == "CC":
        y = np.abs(arr - spec.m) / spec.s
        with np.errstate(over="ignore"):
            yb = y ** spec.beta
        w = np.where(np.isinf(yb), 1.0, yb / (1.0 + yb))
        out = 0.5 + 0.5 * np.sign(arr - spec.m) * sp.betainc(1.0 / spec.beta, 1.0 - 1.0 / spec.beta, w)
    elif f == "CF":
        out = _cdf_cf(spec, arr)
    elif f == "CH":
        if spec.beta == 1.0:
            out = _cdf_al_like(arr, spec.m, spec.r, spec.s)
        else:
            out = _cdf_ch(spec, arr)
    elif f == "DE":
        out = _cdf_de(spec, arr)
    else:  # BL, BD, ALS, CE: integrate the density outward from the mode
        out = _cdf_quadrature(spec, arr)
    out = np.clip(out, 0.0, 1.0)
    return _restore(out, scalar)


def _cdf_al_like(x, m, r, s):
    return (s / (2.0 * r)) * (specfun.softplus((x - m + r) / s)
                              - specfun.softplus((x - m - r) / s))


def _cdf_an(spec, x):
    s = spec.s
    za = (x - spec.a) / s
    zb = (x - spec.b) / s
    sq = math.sqrt(2.0 / math.pi)
    term = (za * sp.erf(za / math.sqrt(2.0)) + sq * np.exp(-0.5 * za * za)
            - zb * sp.erf(zb / math.sqrt(2.0)) - sq * np.exp(-0.5 * zb * zb))
    return 0.5 + (s / (2.0 * (spec.b - spec.a))) * term


def _cdf_cf(spec, x):
    if spec.beta == 1.0:
        num = specfun.softplus((spec.r - np.abs(x - spec.m)) / spec.s)
        den = specfun.softplus(spec.r / spec.s)
        return 0.5 * (1.0 + np.sign(x - spec.m) * (1.0 - num / den))
    j = 1.0 / spec.beta - 1.0
    h = _fd_h(spec)
    den = specfun.fermi_dirac_complete(j, h)
    v = (np.abs(np.atleast_1d(x) - spec.m) / spec.s) ** spec.beta
    num = np.array([specfun.fermi_dirac_incomplete(j, h, vi) for vi in v])
    out = 0.5 * (1.0 + np.sign(np.atleast_1d(x) - spec.m) * (1.0 - num / den))
    return out.reshape(np.shape(x))


def _cdf_ch(spec, x):
    j = 1.0 / spec.beta - 1.0
    h = _fd_h(spec)
    den = (specfun.fermi_dirac_complete(j, h)
           - specfun.fermi_dirac_complete(j, -h))
    v = (np.abs(np.atleast_1d(x) - spec.m) / spec.s) ** spec.beta
    num = np.array([
        specfun.fermi_dirac_incomplete(j, h, vi) - specfun.fermi_dirac_incomplete(j, -h, vi)
        for vi in v
    ])
    out = 0.5 * (1.0 + np.sign(np.atleast_1d(x) - spec.m) * (1.0 - num / den))
    return out.reshape(np.shape(x))


def _cdf_de(spec, x):
    u = np.atleast_1d(np.asarray(x, dtype=float)) - spec.m
    out = np.full(u.shape, 0.5)
    nz = u != 0.0
    un = u[nz]
    w = (spec.s / un) ** 2
    out[nz] = 0.5 * (1.0 + (un / (math.sqrt(math.pi) * spec.s)) * (-np.expm1(-w))
                     + np.sign(un) - sp.erf(spec.s / un))
    return out.reshape(np.shape(x))


@lru_cache(maxsize=512)
def _cdf_at_mode(spec: UnivariateSpec) -> tuple[float, float]:
    xm = mode(spec)
    res = integrate(lambda x: pdf(spec, x), -math.inf, xm, _NORM_SETTINGS,
                    points=(spec.a, xm - _scale(spec)) if spec.a is not None else (xm - _scale(spec),))
    return xm, res.value


def _cdf_quadrature(spec, arr):
    """Anchored incremental integration: sort the targets and accumulate."""
    xm, p_m = _cdf_at_mode(spec)
    flat = np.atleast_1d(arr).ravel()
    order = np.argsort(flat)
    out = np.empty_like(flat)
    # Walk upward from the mode, then downward, reusing the previous point.
    above = [i for i in order if flat[i] >= xm]
    below = [i for i in reversed(order) if flat[i] < xm]
    acc = p_m
    prev = xm
    for i in above:
        acc += integrate(lambda x: pdf(spec, x), prev, flat[i], _NORM_SETTINGS).value
        prev = flat[i]
        out[i] = acc
    acc = p_m
    prev = xm
    for i in below:
        acc -= integrate(lambda x: pdf(spec, x), flat[i], prev, _NORM_SETTINGS).value
        prev = flat[i]
        out[i] = acc
    return out.reshape(np.shape(arr))


# ---------------------------------------------------------------------------
# Quantile
# ---------------------------------------------------------------------------

def quantile(spec: UnivariateSpec, v):
    """Inverse CDF for v in (0, 1); closed form for U and AL (and the
    reductions that share their CDFs), bracketed root-solving otherwise."""
    arr, scalar = _as_float_array(v)
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("quantile requires 0 < v < 1")
    f = spec.family
    if f == "U":
        out = spec.a + arr * (spec.b - spec.a)
    elif f == "AL":
        out = _quantile_al_like(arr, spec.m, spec.r, spec.s)
    elif f == "CH" and spec.beta == 1.0:
        out = _quantile_al_like(arr, spec.m, spec.r, spec.s)
    elif f == "GN":
        w = sp.gammaincinv(1.0 / spec.beta, np.abs(2.0 * arr - 1.0))
        out = spec.mu + np.sign(arr - 0.5) * spec.s * w ** (1.0 / spec.beta)
    elif f == "CC":
        w = sp.betaincinv(1.0 / spec.beta, 1.0 - 1.0 / spec.beta, np.abs(2.0 * arr - 1.0))
        y = (w / (1.0 - w)) ** (1.0 / spec.beta)
        out = spec.m + np.sign(arr - 0.5) * spec.s * y
    elif f == "CF" and spec.beta == 1.0:
        out = _quantile_cf1(spec, arr)
    else:
        out = _quantile_numeric(spec, arr)
    return _restore(out, scalar)


def _quantile_al_like(v, m, r, s):
    """Stable closed-form AL quantile via expm1/log1p."""
    a = m - r
    rho = 2.0 * r / s
    return a + s * (rho * v + np.log1p(-np.exp(-rho * v))
                    - np.log1p(-np.exp(-rho * (1.0 - v))))


def _quantile_cf1(spec, v):
    ell = float(specfun.softplus(spec.r / spec.s))
    p = np.abs(v - 0.5) * 2.0  # tail mass parameter in (0, 1)
    w = ell * (1.0 - p)
    u = spec.r - spec.s * specfun.log_expm1(w)
    return spec.m + np.sign(v - 0.5) * np.where(p == 0.0, 0.0, u)


def _incremental_cdf(spec):
    """CDF evaluator that integrates the density from the nearest previously
    computed anchor, making dense quantile solves cheap."""
    import bisect

    xm, p_m = _cdf_at_mode(spec)
    xs = [xm]
    ps = [p_m]

    def evaluate(x: float) -> float:
        i = bisect.bisect_left(xs, x)
        if i < len(xs) and xs[i] == x:
            return ps[i]
        neighbors = [j for j in (i - 1, i) if 0 <= j < len(xs)]
        j = min(neighbors, key=lambda k: abs(xs[k] - x))
        val = ps[j] + integrate(lambda y: pdf(spec, y), xs[j], x, _NORM_SETTINGS).value
        val = min(max(val, 0.0), 1.0)
        xs.insert(i, x)
        ps.insert(i, val)
        return val

    return evaluate


def _quantile_numeric(spec, v):
    flat = np.atleast_1d(v).ravel()
    order = np.argsort(flat)
    out = np.empty_like(flat)
    scale = max(_scale(spec), 1e-12)
    lo_hint, hi_hint = support(spec)
    cdf_local = _incremental_cdf(spec)
    prev_x = None
    for i in order:
        target = flat[i]

        def g(x: float) -> float:
            return cdf_local(float(x)) - target

        lo = prev_x if prev_x is not None else mode(spec) - scale
        hi = mode(spec) + scale
        step = scale
        for _ in range(200):
            if g(lo) <= 0.0:
                break
            lo -= step
            step *= 2.0
            if lo < lo_hint:
                lo = lo_hint + 1e-300
                break
        else:
            raise ConvergenceError("quantile bracketing failed (lower)")
        step = scale
        for _ in range(200):
            if g(hi) >= 0.0:
                break
            hi += step
            step *= 2.0
            if hi > hi_hint:
                hi = hi_hint
                break
        else:
            raise ConvergenceError("quantile bracketing failed (upper)")
        try:
            root = optimize.brentq(g, lo, hi, xtol=1e-13 * scale + 1e-300,
                                   rtol=4.0 * np.finfo(float).eps, maxiter=200)
        except (ValueError, RuntimeError) as exc:
            raise ConvergenceError(f"quantile root solve failed: {exc}") from exc
        out[i] = root
        prev_x = root
    return out.reshape(np.shape(v))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample(spec: UnivariateSpec, n: int, seed: int):
    """Inverse-transform sample of size ``n``; deterministic per seed (PCG64)."""
    from .data_io import Dataset

    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    xs = quantile(spec, u)
    prov = f"sample:{spec.family}{spec.params()};seed={seed}"
    return Dataset(rows=np.asarray(xs, dtype=float).reshape(-1, 1), provenance=prov)


# ---------------------------------------------------------------------------
# Moments and kurtosis
# ---------------------------------------------------------------------------

def moment_integrand(spec: UnivariateSpec, center: float, k: int):
    """(x - center)^k p(x) evaluated in log space, so the power never
    overflows before the density underflows."""

    def f(x: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            log_gap = np.log(np.abs(np.asarray(x, dtype=float) - center))
        with np.errstate(invalid="ignore"):
            out = np.exp(k * log_gap + log_pdf(spec, x))
        return np.where(np.isnan(out), 0.0, out)

    return f


def _moment_quadrature(spec: UnivariateSpec, k: int) -> float:
    lo, hi = support(spec)
    hints = [mode(spec)]
    if spec.a is not None:
        hints += [spec.a, spec.b]
    if spec.family in _SYMMETRIC:
        mean = _center(spec)
    else:
        mean = integrate(lambda x: x * pdf(spec, x), lo, hi, _NORM_SETTINGS,
                         points=tuple(hints)).value
    if k == 0:
        return 1.0
    return integrate(moment_integrand(spec, mean, k), lo, hi,
                     _NORM_SETTINGS, points=tuple(hints)).value


def _al_moment(r: float, s: float, k: int) -> float:
    rho = r / s
    return (s ** (k + 1) / r) * math.factorial(k) * (
        -specfun.polylog_neg(k + 1, rho) + specfun.polylog_neg(k + 1, -rho)
    )


def _normal_even_moment(k: int) -> float:
    # (k-1)!! for even k
    out = 1.0
    for i in range(k - 1, 0, -2):
        out *= i
    return out


def _an_moment(r: float, s: float, k: int) -> float:
    total = 0.0
    for i in range(0, k + 1, 2):
        total += math.comb(k, i) * s ** (k - i) * _normal_even_moment(k - i) * r ** i / (i + 1)
    return total


def _cf_moment(spec: UnivariateSpec, k: int) -> float:
    j0 = 1.0 / spec.beta - 1.0
    jk = (k + 1.0) / spec.beta - 1.0
    h = _fd_h(spec)
    num = math.gamma((k + 1.0) / spec.beta) * specfun.fermi_dirac_complete(jk, h)
    den = math.gamma(1.0 / spec.beta) * specfun.fermi_dirac_complete(j0, h)
    return spec.s ** k * num / den


def _ch_moment(spec: UnivariateSpec, k: int) -> float:
    j0 = 1.0 / spec.beta - 1.0
    jk = (k + 1.0) / spec.beta - 1.0
    h = _fd_h(spec)
    num = math.gamma((k + 1.0) / spec.beta) * (
        specfun.fermi_dirac_complete(jk, h) - specfun.fermi_dirac_complete(jk, -h))
    den = math.gamma(1.0 / spec.beta) * (
        specfun.fermi_dirac_complete(j0, h) - specfun.fermi_dirac_complete(j0, -h))
    return spec.s ** k * num / den


def central_moment(spec: UnivariateSpec, k: int) -> MomentReport:
    """Central moment of even order ``k``; divergent moments are flagged
    rather than integrated."""
    if k < 0 or k % 2 != 0:
        raise ValueError(f"central_moment requires even k >= 0, got {k}")
    if k == 0:
        return MomentReport(0, 1.0, None, "closed_form")
    f = spec.family
    if f == "DE":
        return MomentReport(k, None, "infinite", "closed_form")
    if f == "CC":
        if k >= spec.beta - 1.0:
            return MomentReport(k, None, "infinite", "closed_form")
        val = spec.s ** k * math.sin(math.pi / spec.beta) / math.sin(math.pi * (k + 1) / spec.beta)
        return MomentReport(k, val, None, "closed_form")
    if f == "U":
        return MomentReport(k, spec.r ** k / (k + 1.0), None, "closed_form")
    if f == "GN":
        val = spec.s ** k * math.gamma((k + 1.0) / spec.beta) / math.gamma(1.0 / spec.beta)
        return MomentReport(k, val, None, "closed_form")
    if f == "AL":
        return MomentReport(k, _al_moment(spec.r, spec.s, k), None, "closed_form")
    if f == "AN":
        return MomentReport(k, _an_moment(spec.r, spec.s, k), None, "closed_form")
    if f == "CF":
        return MomentReport(k, _cf_moment(spec, k), None, "closed_form")
    if f == "CE":
        proxy = replace(spec, family="CF", beta=2.0)
        return MomentReport(k, _cf_moment(proxy, k), None, "closed_form")
    if f == "CH":
        return MomentReport(k, _ch_moment(spec, k), None, "closed_form")
    return MomentReport(k, _moment_quadrature(spec, k), None, "quadrature")


def kurtosis(spec: UnivariateSpec) -> float:
    """mu_4 / mu_2^2; inf when only the fourth moment diverges, nan when the
    second does too."""
    f = spec.family
    if f == "GN":
        b = spec.beta
        return (9.0 * math.gamma(5.0 / b + 1.0) * math.gamma(1.0 / b + 1.0)
                / (5.0 * math.gamma(3.0 / b + 1.0) ** 2))
    if f == "AL":
        return 1.8 + 12.0 / (5.0 * (1.0 + (spec.r / (math.pi * spec.s)) ** 2))
    if f == "U":
        return 1.8
    if f == "DE":
        return math.nan
    if f == "CC":
        if spec.beta <= 3.0:
            return math.nan
        if spec.beta <= 5.0:
            return math.inf
    m2 = central_moment(spec, 2)
    m4 = central_moment(spec, 4)
    if m2.flag is not None:
        return math.nan
    if m4.flag is not None:
        return math.inf
    return m4.value / m2.value ** 2


# ---------------------------------------------------------------------------
# Approximation bridges
# ---------------------------------------------------------------------------

def approx_al_from_normal(mu: float, sigma: float) -> UnivariateSpec:
    """AL surrogate of N(mu, sigma^2); sup-norm pdf error below 0.0043/sigma."""
    _require(sigma > 0, f"sigma must be positive, got {sigma}")
    return make("AL", {
        "a": mu - sigma * AL_OF_NORMAL_R,
        "b": mu + sigma * AL_OF_NORMAL_R,
        "s": sigma * AL_OF_NORMAL_S,
    })


def approx_al_from_an(a: float, b: float, s: float) -> UnivariateSpec:
    """AL surrogate of AN(a, b, s) via the logistic-for-normal CDF match."""
    return make("AL", {"a": a, "b": b, "s": AN_TO_AL_SCALE * s})


def approx_bd_from_bl(a: float, b: float, s: float, t: float) -> UnivariateSpec:
    """BD surrogate of BL(a, b, s, t): Laplace scales s ln4, t ln4."""
    ln4 = math.log(4.0)
    return make("BD", {"a": a, "b": b, "s": s * ln4, "t": t * ln4})


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def to_json_dict(spec: UnivariateSpec) -> dict:
    return {"family": spec.family, "params": spec.params()}


def from_json_dict(obj: Mapping) -> UnivariateSpec:
    if set(obj) != {"family", "params"}:
        raise ValueError("expected keys {'family', 'params'}")
    return make(obj["family"], obj["params"])
