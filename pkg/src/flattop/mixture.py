"""Mixture models: a Gaussian EM baseline and the flat-topped mixture (FTM)
fitted by generalized EM.

The migration pipeline is: fit a GMM, replace every Gaussian component with
its logistic-difference surrogate, then run generalized EM where each
M-step performs one monotone coordinate pass per component (weights are
updated in closed form).  Components whose fitted surrogate is flat-topped
can optionally be upgraded to the asymmetric sigmoid-product family and
optimization continues the same way.

Supported component layouts: univariate Gaussian / AL / BL, and for 2-d
data full- or diagonal-covariance Gaussians and axis-aligned AL products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp

from . import mle, univariate as uv
from .data_io import Dataset
from .mle import FitReport, FitSettings

__all__ = [
    "MixtureSettings",
    "MixtureModel",
    "EStepResult",
    "SweepRow",
    "gmm_fit",
    "ftm_from_gmm",
    "e_step",
    "m_step",
    "ftm_fit",
    "score",
    "sweep",
    "mixture_to_json_dict",
]


@dataclass(frozen=True)
class MixtureSettings:
    """Budgets shared by the EM and GEM loops.

    Convergence is declared after ``stall_cycles`` consecutive cycles with
    relative log-likelihood change below ``rel_tol``.
    """

    max_cycles: int = 300
    rel_tol: float = 1e-8
    stall_cycles: int = 3
    n_init: int = 4
    cov_floor: float = 1e-8
    bl_upgrade: bool = False
    bl_flat_threshold: float = 0.05
    component_pass: FitSettings = field(default_factory=FitSettings)


@dataclass
class MixtureModel:
    """K weighted components of one homogeneous kind.

    ``kind`` is one of ``gaussian`` (components ``(mean, cov)`` with scalar
    variance in 1-d) or ``flat`` (univariate specs in 1-d, per-axis spec
    tuples in 2-d).  ``factorized`` marks axis-aligned 2-d products.
    """

    kind: str
    dim: int
    weights: np.ndarray
    components: list
    cov_type: str | None = None  # gaussian 2-d only: "full" or "diag"
    factorized: bool = False

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty vector")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be a probability vector")
        if len(self.components) != w.size:
            raise ValueError("one component per weight required")
        self.weights = w

    @property
    def k(self) -> int:
        return self.weights.size

    @property
    def free_param_count(self) -> int:
        per = 0
        for comp in self.components:
            if self.kind == "gaussian":
                if self.dim == 1:
                    per += 2
                elif self.cov_type == "full":
                    per += self.dim + self.dim * (self.dim + 1) // 2
                else:
                    per += 2 * self.dim
            else:
                specs = comp if isinstance(comp, tuple) else (comp,)
                per += sum(len(s.params()) for s in specs)
        return per + (self.k - 1)


@dataclass
class EStepResult:
    resp: np.ndarray
    q: float
    loglik: float
    flagged: np.ndarray


@dataclass(frozen=True)
class SweepRow:
    k: int
    iterations: int
    loglik_per_point: float
    aic: float
    bic: float
    error: str | None = None


def _rows_of(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.rows
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


# ---------------------------------------------------------------------------
# Component log densities
# ---------------------------------------------------------------------------

def _gauss_logpdf_1d(x: np.ndarray, mean: float, var: float) -> np.ndarray:
    return -0.5 * (math.log(2.0 * math.pi * var) + (x - mean) ** 2 / var)


def _gauss_logpdf_nd(rows: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = rows - mean
    chol = np.linalg.cholesky(cov)
    z = np.linalg.solve(chol, d.T)
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    n = rows.shape[1]
    return -0.5 * (n * math.log(2.0 * math.pi) + log_det + np.sum(z * z, axis=0))


def _component_logpdf(model: MixtureModel, comp, rows: np.ndarray) -> np.ndarray:
    if model.kind == "gaussian":
        if model.dim == 1:
            return _gauss_logpdf_1d(rows[:, 0], comp[0], comp[1])
        return _gauss_logpdf_nd(rows, comp[0], comp[1])
    if model.dim == 1:
        return uv.log_pdf(comp, rows[:, 0])
    total = np.zeros(rows.shape[0])
    for axis, spec in enumerate(comp):
        total = total + uv.log_pdf(spec, rows[:, axis])
    return total


def _log_matrix(model: MixtureModel, rows: np.ndarray) -> np.ndarray:
    out = np.empty((rows.shape[0], model.k))
    for k, comp in enumerate(model.components):
        out[:, k] = _component_logpdf(model, comp, rows)
    return out


# ---------------------------------------------------------------------------
# E-step
# ---------------------------------------------------------------------------

def e_step(model: MixtureModel, data) -> EStepResult:
    """Responsibilities, the expected complete-data objective Q, and the
    observed log-likelihood.

    Points where every component underflows receive uniform responsibilities
    and are reported in ``flagged``.
    """
    rows = _rows_of(data)
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)
    log_joint = _log_matrix(model, rows) + log_w
    row_tot = sp.logsumexp(log_joint, axis=1)
    flagged = np.where(~np.isfinite(row_tot))[0]
    resp = np.exp(log_joint - row_tot[:, None])
    if flagged.size:
        resp[flagged] = 1.0 / model.k
    loglik = float(np.sum(row_tot[np.isfinite(row_tot)]))
    finite = np.isfinite(log_joint)
    q = float(np.sum(resp[finite] * log_joint[finite]))
    return EStepResult(resp=resp, q=q, loglik=loglik, flagged=flagged)


# ---------------------------------------------------------------------------
# Gaussian EM
# ---------------------------------------------------------------------------

def _kmeanspp_centers(rows: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = rows.shape[0]
    centers = [rows[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(
            [np.sum((rows - c) ** 2, axis=1) for c in centers], axis=0)
        total = d2.sum()
        if total == 0.0:
            centers.append(rows[rng.integers(n)])
            continue
        centers.append(rows[rng.choice(n, p=d2 / total)])
    return np.array(centers)


def _floor_cov(cov: np.ndarray, floor: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T


def _gmm_m_step(rows, resp, cov_type, floor):
    n, dim = rows.shape
    nk = resp.sum(axis=0)
    weights = nk / n
    comps = []
    for k in range(resp.shape[1]):
        if nk[k] <= 0:
            raise _EmptyComponent(k)
        mean = resp[:, k] @ rows / nk[k]
        d = rows - mean
        if dim == 1:
            var = float(resp[:, k] @ (d[:, 0] ** 2) / nk[k])
            comps.append((float(mean[0]), max(var, floor)))
        else:
            cov = (resp[:, k][:, None] * d).T @ d / nk[k]
            if cov_type == "diag":
                cov = np.diag(np.maximum(np.diag(cov), floor))
            else:
                cov = _floor_cov(cov, floor)
            comps.append((mean, cov))
    return weights, comps


class _EmptyComponent(Exception):
    def __init__(self, index: int) -> None:
        self.index = index


def gmm_fit(
    data,
    k: int,
    seed: int,
    settings: MixtureSettings | None = None,
    covariance_type: str = "full",
) -> tuple[MixtureModel, FitReport]:
    """Standard EM for a Gaussian mixture with k-means++-style seeding.

    Runs ``n_init`` seedings and keeps the best final log-likelihood.  An
    empty component is reseeded once, then raises.
    """
    settings = settings or MixtureSettings()
    rows = _rows_of(data)
    n, dim = rows.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if n <= k:
        raise ValueError(f"need more points than components: N={n}, K={k}")
    if covariance_type not in ("full", "diag"):
        raise ValueError("covariance_type must be 'full' or 'diag'")
    floor = settings.cov_floor * float(np.max(np.var(rows, axis=0)))
    floor = max(floor, 1e-300)
    rng = np.random.default_rng(seed)

    best: tuple[MixtureModel, FitReport] | None = None
    for _ in range(max(1, settings.n_init)):
        model, report = _gmm_single(rows, k, rng, settings, covariance_type, floor)
        if best is None or report.loglik_trace[-1] > best[1].loglik_trace[-1]:
            best = (model, report)
    model, report = best
    k_free = model.free_param_count
    ll = report.loglik_trace[-1]
    report.aic = 2.0 * k_free - 2.0 * ll
    report.bic = k_free * math.log(n) - 2.0 * ll
    report.free_params = k_free
    return model, report


def _gmm_single(rows, k, rng, settings, covariance_type, floor):
    n, dim = rows.shape
    centers = _kmeanspp_centers(rows, k, rng)
    if dim == 1:
        base_var = max(float(np.var(rows)), floor)
        comps = [(float(c[0]), base_var) for c in centers]
    else:
        base_cov = _floor_cov(np.cov(rows.T, bias=True), floor)
        if covariance_type == "diag":
            base_cov = np.diag(np.diag(base_cov))
        comps = [(c.copy(), base_cov.copy()) for c in centers]
    model = MixtureModel(kind="gaussian", dim=dim,
                         weights=np.full(k, 1.0 / k), components=comps,
                         cov_type=covariance_type if dim > 1 else None)

    trace: list[float] = []
    reseeded = False
    stall = 0
    cycles = 0
    for cycles in range(1, settings.max_cycles + 1):
        es = e_step(model, rows)
        trace.append(es.loglik)
        try:
            weights, comps = _gmm_m_step(rows, es.resp, covariance_type, floor)
        except _EmptyComponent as empty:
            if reseeded:
                raise RuntimeError(
                    f"component {empty.index} collapsed twice; aborting") from None
            reseeded = True
            es.resp[:, empty.index] = 1.0 / n
            es.resp /= es.resp.sum(axis=1, keepdims=True)
            weights, comps = _gmm_m_step(rows, es.resp, covariance_type, floor)
        model = MixtureModel(kind="gaussian", dim=dim, weights=weights,
                             components=comps,
                             cov_type=covariance_type if dim > 1 else None)
        if len(trace) >= 2:
            denom = max(abs(trace[-2]), 1.0)
            if (trace[-1] - trace[-2]) / denom < settings.rel_tol:
                stall += 1
                if stall >= settings.stall_cycles:
                    break
            else:
                stall = 0
    final = e_step(model, rows)
    trace.append(final.loglik)
    report = FitReport(converged=stall >= settings.stall_cycles, iterations=cycles,
                       loglik_trace=trace, final_params={}, grad_norm=math.nan,
                       aic=math.nan, bic=math.nan, free_params=0)
    return model, report


# ---------------------------------------------------------------------------
# GMM -> FTM conversion
# ---------------------------------------------------------------------------

def ftm_from_gmm(gmm: MixtureModel) -> MixtureModel:
    """Replace every Gaussian component by its logistic-difference surrogate
    (per axis in 2-d); weights carry over unchanged."""
    if gmm.kind != "gaussian":
        raise ValueError("ftm_from_gmm expects a Gaussian mixture")
    comps = []
    for comp in gmm.components:
        if gmm.dim == 1:
            mean, var = comp
            comps.append(uv.approx_al_from_normal(mean, math.sqrt(var)))
        else:
            mean, cov = comp
            off = cov - np.diag(np.diag(cov))
            if np.max(np.abs(off)) > 1e-12 * max(float(np.max(np.diag(cov))), 1e-300):
                raise ValueError(
                    "2-d conversion needs axis-aligned (diagonal) covariances; "
                    "fit the GMM with covariance_type='diag'")
            comps.append(tuple(
                uv.approx_al_from_normal(float(mean[i]), math.sqrt(float(cov[i, i])))
                for i in range(gmm.dim)))
    return MixtureModel(kind="flat", dim=gmm.dim, weights=gmm.weights.copy(),
                        components=comps, factorized=gmm.dim > 1)


# ---------------------------------------------------------------------------
# Generalized EM for the flat-topped mixture
# ---------------------------------------------------------------------------

def _weighted_pass_al(x, w, spec, settings: FitSettings) -> uv.UnivariateSpec:
    """One monotone coordinate pass (a, b, s) on the weighted AL objective."""
    bounds = mle._bounds_from_data(x)
    eps = 1e-9 * (bounds.hi - bounds.lo)
    a, b, s = spec.a, spec.b, spec.s
    ll = mle.loglik_al(x, a, b, s, w)
    for name in ("a", "b", "s"):
        da, db, ds = mle.grad_al(x, a, b, s, w)
        h = mle.hess_al(x, a, b, s, w)
        g, curv, scale = {
            "a": (da, h.daa, b - a),
            "b": (db, h.dbb, b - a),
            "s": (ds, h.dss, s),
        }[name]
        step = mle._step_size(g, curv, scale, settings.eta0) * g
        for _ in range(settings.max_backtracks):
            if name == "a":
                cand = (mle._clip(a + step, bounds.lo + eps, b - eps), b, s)
            elif name == "b":
                cand = (a, mle._clip(b + step, a + eps, bounds.hi - eps), s)
            else:
                cand = (a, b, mle._clip(s + step, bounds.s_min, bounds.s_max))
            if cand == (a, b, s):
                break
            ll_new = mle.loglik_al(x, *cand, w)
            if ll_new >= ll:
                a, b, s = cand
                ll = ll_new
                break
            step *= settings.backtrack_factor
    return uv.make("AL", {"a": a, "b": b, "s": s})


def _weighted_pass_bl(x, w, spec, settings: FitSettings) -> uv.UnivariateSpec:
    """One monotone coordinate pass (a, b, s, t) on the weighted BL objective
    with the exact normalizer."""
    bounds = mle._bounds_from_data(x)
    eps = 1e-9 * (bounds.hi - bounds.lo)
    a, b, s, t = spec.a, spec.b, spec.s, spec.t
    ll = mle.loglik_bl(x, a, b, s, t, w)
    for name in ("a", "b", "s", "t"):
        g4 = mle.grad_bl_flat(x, a, b, s, t, w)
        daa, dbb, dss, dtt = mle._bl_curvatures(x, w, a, b, s, t)
        g, curv, scale = {
            "a": (g4.da, daa, b - a),
            "b": (g4.db, dbb, b - a),
            "s": (g4.ds, dss, s),
            "t": (g4.dt, dtt, t),
        }[name]
        step = mle._step_size(g, curv, scale, settings.eta0) * g
        for _ in range(settings.max_backtracks):
            if name == "a":
                cand = (mle._clip(a + step, bounds.lo + eps, b - eps), b, s, t)
            elif name == "b":
                cand = (a, mle._clip(b + step, a + eps, bounds.hi - eps), s, t)
            elif name == "s":
                cand = (a, b, mle._clip(s + step, bounds.s_min, bounds.s_max), t)
            else:
                cand = (a, b, s, mle._clip(t + step, bounds.s_min, bounds.s_max))
            if cand == (a, b, s, t):
                break
            ll_new = mle.loglik_bl(x, *cand, w)
            if ll_new >= ll:
                a, b, s, t = cand
                ll = ll_new
                break
            step *= settings.backtrack_factor
    return uv.make("BL", {"a": a, "b": b, "s": s, "t": t})


def m_step(model: MixtureModel, data, resp: np.ndarray,
           settings: MixtureSettings | None = None) -> MixtureModel:
    """Generalized M-step: closed-form weight update plus one weighted
    coordinate pass per component, so Q never decreases."""
    settings = settings or MixtureSettings()
    rows = _rows_of(data)
    if resp.shape != (rows.shape[0], model.k):
        raise ValueError("responsibilities must be N x K")
    if model.kind != "flat":
        raise ValueError("m_step drives flat mixtures; use gmm_fit for Gaussians")
    weights = resp.mean(axis=0)
    weights = weights / weights.sum()
    comps = []
    for k, comp in enumerate(model.components):
        w = resp[:, k]
        if w.sum() < 1e-12:
            comps.append(comp)  # zero responsibility: gradients vanish
            continue
        if model.dim == 1:
            pass_fn = _weighted_pass_bl if comp.family == "BL" else _weighted_pass_al
            comps.append(pass_fn(rows[:, 0], w, comp, settings.component_pass))
        else:
            comps.append(tuple(
                _weighted_pass_al(rows[:, axis], w, spec, settings.component_pass)
                for axis, spec in enumerate(comp)))
    return MixtureModel(kind="flat", dim=model.dim, weights=weights,
                        components=comps, factorized=model.factorized)


def _upgrade_flat_components(model: MixtureModel, threshold: float) -> MixtureModel:
    """Swap in the asymmetric family for 1-d components whose surrogate is
    flat-topped by the closed-form bound."""
    from .flatness import family_flat_bound

    if model.dim != 1:
        return model
    comps = []
    changed = False
    for comp in model.components:
        if comp.family == "AL" and family_flat_bound(comp) < threshold:
            comps.append(uv.make("BL", {"a": comp.a, "b": comp.b,
                                        "s": comp.s, "t": comp.s}))
            changed = True
        else:
            comps.append(comp)
    if not changed:
        return model
    return MixtureModel(kind="flat", dim=model.dim, weights=model.weights.copy(),
                        components=comps, factorized=model.factorized)


def ftm_fit(
    data,
    init: MixtureModel,
    settings: MixtureSettings | None = None,
) -> tuple[MixtureModel, FitReport]:
    """Generalized EM from ``init``; the observed log-likelihood trace is
    nondecreasing up to 1e-9 slack.

    With ``bl_upgrade`` set, flat-topped components are switched to the
    asymmetric family once the symmetric phase stalls, and GEM continues.
    """
    settings = settings or MixtureSettings()
    rows = _rows_of(data)
    if init.kind != "flat":
        raise ValueError("ftm_fit expects a flat mixture (see ftm_from_gmm)")
    model = init
    trace: list[float] = []
    upgraded = not settings.bl_upgrade
    stall = 0
    cycles = 0
    converged = False
    for cycles in range(1, settings.max_cycles + 1):
        es = e_step(model, rows)
        trace.append(es.loglik)
        model = m_step(model, rows, es.resp, settings)
        if len(trace) >= 2:
            denom = max(abs(trace[-2]), 1.0)
            if (trace[-1] - trace[-2]) / denom < settings.rel_tol:
                stall += 1
            else:
                stall = 0
        if stall >= settings.stall_cycles:
            if not upgraded:
                upgraded = True
                stall = 0
                new_model = _upgrade_flat_components(model, settings.bl_flat_threshold)
                if new_model is model:
                    converged = True
                    break
                model = new_model
                continue
            converged = True
            break
    final = e_step(model, rows)
    trace.append(final.loglik)
    ll = trace[-1]
    n = rows.shape[0]
    k_free = model.free_param_count
    report = FitReport(converged=converged, iterations=cycles, loglik_trace=trace,
                       final_params={}, grad_norm=math.nan,
                       aic=2.0 * k_free - 2.0 * ll,
                       bic=k_free * math.log(n) - 2.0 * ll,
                       free_params=k_free)
    return model, report


def score(model: MixtureModel, data) -> tuple[float, float]:
    """(AIC, BIC) = (2k - 2l, k ln N - 2l) at the model's free parameter
    count."""
    rows = _rows_of(data)
    ll = e_step(model, rows).loglik
    k_free = model.free_param_count
    n = rows.shape[0]
    return 2.0 * k_free - 2.0 * ll, k_free * math.log(n) - 2.0 * ll


def sweep(
    data,
    family: str,
    k_range,
    seed: int,
    settings: MixtureSettings | None = None,
) -> list[SweepRow]:
    """One fit per component count; FTM rows are initialized from a
    diagonal-covariance GMM of the same K and refined by GEM.

    Per-K failures are recorded and the sweep continues.
    """
    settings = settings or MixtureSettings()
    if family not in ("GMM", "FTM"):
        raise ValueError("family must be 'GMM' or 'FTM'")
    rows = _rows_of(data)
    out: list[SweepRow] = []
    for k in k_range:
        try:
            if family == "GMM":
                model, report = gmm_fit(rows, k, seed, settings, covariance_type="full")
            else:
                base, _ = gmm_fit(rows, k, seed, settings, covariance_type="diag")
                model, report = ftm_fit(rows, ftm_from_gmm(base), settings)
            ll = report.loglik_trace[-1]
            out.append(SweepRow(k=k, iterations=report.iterations,
                                loglik_per_point=ll / rows.shape[0],
                                aic=report.aic, bic=report.bic))
        except Exception as exc:  # record and continue
            out.append(SweepRow(k=k, iterations=0, loglik_per_point=math.nan,
                                aic=math.nan, bic=math.nan, error=str(exc)))
    return out


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def mixture_to_json_dict(model: MixtureModel) -> dict:
    comps = []
    for comp in model.components:
        if model.kind == "gaussian":
            mean, cov = comp
            if model.dim == 1:
                comps.append({"mean": mean, "var": cov})
            else:
                comps.append({"mean": np.asarray(mean).tolist(),
                              "cov": np.asarray(cov).tolist()})
        elif isinstance(comp, tuple):
            comps.append([uv.to_json_dict(s) for s in comp])
        else:
            comps.append(uv.to_json_dict(comp))
    return {"K": model.k, "weights": model.weights.tolist(),
            "components": comps, "factorized": model.factorized}
