"""Constrained quasi-maximum-likelihood estimation of the jump MEM.

The feasible set (positivity, alpha2 > -alpha1*beta, the persistence
ordering 0 < phi < beta < 1) is mapped onto an unconstrained space:
logs for the positive coefficients, an ordered logistic pair for
(phi, beta), a shifted log for alpha2.  A multi-start L-BFGS-B run on
the transformed negative log likelihood (with the exact analytic
gradient) produces the estimate; standard errors come from the
sandwich H^-1 S H^-1 with a central-difference Hessian in the original
parameter space and the analytic per-bin score outer products.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit
from scipy.stats import chi2

from . import ajm
from .ajm import AjmParams, AjmState, PARAM_NAMES
from .measures import BinMeasures

__all__ = [
    "FitOptions",
    "LjungBoxRecord",
    "AjmFit",
    "active_param_names",
    "transform",
    "untransform",
    "moment_start",
    "fit",
    "robust_se",
    "ljung_box",
]


def active_param_names(restricted: bool) -> tuple[str, ...]:
    if restricted:
        return tuple(n for n in PARAM_NAMES if n != "alpha2")
    return PARAM_NAMES


def _sigmoid(x):
    return expit(x)


def _logit(p):
    return float(np.log(p) - np.log1p(-p))


def transform(params: AjmParams) -> np.ndarray:
    """Map feasible parameters to the unconstrained optimisation space."""
    params.validate()
    theta = {
        "omega": np.log(params.omega),
        "alpha1": np.log(params.alpha1),
        "beta": _logit(params.beta),
        "gamma": np.log(params.gamma),
        "delta1": params.delta1,
        "delta2": params.delta2,
        "phi": _logit(params.phi / params.beta),
        "psi": params.psi,
        "error_shape": np.log(params.error_shape),
    }
    if not params.restricted:
        theta["alpha2"] = np.log(params.alpha2 + params.alpha1 * params.beta)
    return np.array([theta[n] for n in active_param_names(params.restricted)])


def untransform(theta: np.ndarray, restricted: bool = False) -> AjmParams:
    """Inverse of :func:`transform`; always lands inside the feasible set."""
    names = active_param_names(restricted)
    v = dict(zip(names, np.asarray(theta, dtype=float)))
    alpha1 = float(np.exp(v["alpha1"]))
    beta = float(_sigmoid(v["beta"]))
    alpha2 = 0.0 if restricted else float(np.exp(v["alpha2"]) - alpha1 * beta)
    return AjmParams(
        omega=float(np.exp(v["omega"])),
        alpha1=alpha1,
        alpha2=alpha2,
        beta=beta,
        gamma=float(np.exp(v["gamma"])),
        delta1=float(v["delta1"]),
        delta2=float(v["delta2"]),
        phi=beta * float(_sigmoid(v["phi"])),
        psi=float(v["psi"]),
        error_shape=float(np.exp(v["error_shape"])),
        restricted=restricted,
    )


def _transform_jacobian(params: AjmParams, theta: np.ndarray) -> np.ndarray:
    """d(original)/d(theta), original rows ordered as PARAM_NAMES."""
    names = active_param_names(params.restricted)
    col = {n: j for j, n in enumerate(names)}
    v = dict(zip(names, theta))
    jac = np.zeros((len(PARAM_NAMES), len(names)))
    sig_f = _sigmoid(v["phi"])
    dbeta = params.beta * (1.0 - params.beta)
    jac[0, col["omega"]] = params.omega
    jac[1, col["alpha1"]] = params.alpha1
    jac[3, col["beta"]] = dbeta
    jac[4, col["gamma"]] = params.gamma
    jac[5, col["delta1"]] = 1.0
    jac[6, col["delta2"]] = 1.0
    jac[7, col["beta"]] = sig_f * dbeta
    jac[7, col["phi"]] = params.phi * (1.0 - sig_f)
    jac[8, col["psi"]] = 1.0
    jac[9, col["error_shape"]] = params.error_shape
    if not params.restricted:
        jac[2, col["alpha2"]] = params.alpha2 + params.alpha1 * params.beta
        jac[2, col["alpha1"]] = -params.beta * params.alpha1
        jac[2, col["beta"]] = -params.alpha1 * dbeta
    return jac


@dataclass
class FitOptions:
    n_starts: int = 5
    seed: int = 0
    maxiter: int = 500
    gtol: float = 1e-6
    jitter: float = 0.20
    lb_lags: tuple = (1, 5, 10)


@dataclass
class LjungBoxRecord:
    lag: int
    statistic: float
    p_value: float


@dataclass
class AjmFit:
    params: AjmParams
    se_robust: np.ndarray
    se_naive: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    state: AjmState
    diagnostics: list
    spec: str
    n_zero_excluded: int = 0
    best_start: int = 0
    warnings: list = field(default_factory=list)

    @property
    def param_names(self) -> tuple[str, ...]:
        return active_param_names(self.params.restricted)

    @property
    def persistence(self) -> float:
        return ajm.persistence(self.params, self.state.n_bins)

    def se_of(self, name: str) -> float:
        return float(self.se_robust[self.param_names.index(name)])


def moment_start(panel: BinMeasures, overnight, restricted: bool = False) -> AjmParams:
    """Rough start: textbook dynamic coefficients, level-matched omega,
    error shape from the variance of start-filtered residuals."""
    beta0, phi0 = 0.8, 0.2
    alpha10, alpha20 = 0.2, (0.0 if restricted else -0.1)
    gamma0, delta10, delta20, psi0 = 0.02, 0.01, -0.03, 0.2
    c_bar = float(panel.c.mean())
    sj_bar = float(panel.sj.mean())
    x = panel.rv.reshape(-1)
    m_bar = float(x[x > 0].mean())
    p_neg = float(panel.neg_return.mean())
    r_bar = float(np.mean(np.abs(overnight)))
    target = m_bar * (1.0 - phi0) - psi0 * sj_bar
    omega0 = (target * (1.0 - beta0) - (alpha10 + alpha20) * c_bar
              - gamma0 * p_neg * c_bar - delta10 * r_bar - delta20 * c_bar / panel.n_bins)
    omega0 = max(omega0, 1e-4 * m_bar)
    params = AjmParams(omega=omega0, alpha1=alpha10, alpha2=alpha20, beta=beta0,
                       gamma=gamma0, delta1=delta10, delta2=delta20, phi=phi0,
                       psi=psi0, error_shape=1.0, restricted=restricted)
    state = ajm.filter_state(params, panel, overnight)
    resid = state.residuals[panel.rv > 0]
    var = float(np.var(resid))
    shape0 = 1.0 / var if var > 0 else 1.0
    return replace(params, error_shape=float(np.clip(shape0, 0.1, 100.0)))


_PENALTY = 1e15


def _objective(panel: BinMeasures, overnight, restricted: bool):
    n_theta = len(active_param_names(restricted))

    def fun(theta):
        params = untransform(theta, restricted)
        value, grad = ajm.loglik_grad(params, panel, overnight)
        if not np.isfinite(value):
            return _PENALTY, np.zeros(n_theta)
        jac = _transform_jacobian(params, theta)
        return -value, -(jac.T @ grad)

    return fun


def fit(panel: BinMeasures, overnight, spec: str = "unrestricted",
        options: FitOptions | None = None) -> AjmFit:
    """Multi-start constrained QML fit.

    Starts are the moment-based point plus jittered copies (20%
    multiplicative noise in transformed space, seeded); the
    unrestricted fit adds a start with alpha2 pinned at zero so the
    nested model's optimum is always reachable.  Deterministic given
    (data, options).
    """
    if spec not in ("restricted", "unrestricted"):
        raise ValueError(f"spec must be restricted or unrestricted, got {spec!r}")
    restricted = spec == "restricted"
    options = options or FitOptions()
    x = panel.rv.reshape(-1)
    if x.size < 100:
        raise ValueError(f"need at least 100 bins to fit, have {x.size}")
    if not (x > 0).any():
        raise ValueError("panel has no positive-volatility bins")

    theta0 = transform(moment_start(panel, overnight, restricted))
    starts = [theta0]
    if not restricted:
        pinned = theta0.copy()
        a2_slot = active_param_names(False).index("alpha2")
        base = untransform(theta0, False)
        pinned[a2_slot] = np.log(base.alpha1 * base.beta)  # alpha2 = 0 start
        starts.append(pinned)
    rng = np.random.default_rng(options.seed)
    for _ in range(max(options.n_starts - 1, 0)):
        starts.append(theta0 * (1.0 + rng.uniform(-options.jitter, options.jitter,
                                                  size=theta0.shape)))

    objective = _objective(panel, overnight, restricted)
    best, best_index = None, 0
    for idx, start in enumerate(starts):
        res = minimize(objective, start, jac=True, method="L-BFGS-B",
                       options={"maxiter": options.maxiter, "gtol": options.gtol,
                                "ftol": 1e-12})
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best, best_index = res, idx
    if best is None:
        raise RuntimeError("every optimisation start failed")

    params = untransform(best.x, restricted)
    converged = bool(best.status == 0 or np.max(np.abs(best.jac)) < options.gtol)
    warnings = [] if converged else ["optimizer did not reach the gradient tolerance"]
    state = ajm.filter_state(params, panel, overnight)
    keep = panel.rv > 0
    se_rob, se_naive, se_warnings = robust_se(params, panel, overnight)
    diagnostics = ljung_box(state.residuals[keep], options.lb_lags)
    return AjmFit(params=params, se_robust=se_rob, se_naive=se_naive,
                  loglik=float(-best.fun), converged=converged,
                  iterations=int(best.nit), state=state, diagnostics=diagnostics,
                  spec=spec, n_zero_excluded=int((~keep).sum()),
                  best_start=best_index, warnings=warnings + se_warnings)


def _params_from_active(vector: np.ndarray, restricted: bool) -> AjmParams:
    values = dict(zip(active_param_names(restricted), vector))
    if restricted:
        values["alpha2"] = 0.0
    return AjmParams(restricted=restricted, **values)


def _numerical_hessian(fun, x0: np.ndarray, rel_step: float = 1e-4) -> np.ndarray:
    k = x0.size
    h = rel_step * np.maximum(1.0, np.abs(x0))
    hess = np.empty((k, k))
    f0 = fun(x0)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        hess[i, i] = (fun(x0 + ei) - 2.0 * f0 + fun(x0 - ei)) / h[i] ** 2
    for i in range(k):
        for j in range(i + 1, k):
            ei, ej = np.zeros(k), np.zeros(k)
            ei[i], ej[j] = h[i], h[j]
            val = (fun(x0 + ei + ej) - fun(x0 + ei - ej)
                   - fun(x0 - ei + ej) + fun(x0 - ei - ej)) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return hess


def robust_se(params: AjmParams, panel: BinMeasures, overnight):
    """Sandwich standard errors H^-1 S H^-1 at the given parameters.

    Returns ``(robust, naive, warnings)`` aligned with the active
    parameter names; ``naive`` is the plain inverse-Hessian version.
    A singular Hessian falls back to the pseudo-inverse with a warning
    flag instead of failing.
    """
    restricted = params.restricted
    names = active_param_names(restricted)
    x0 = np.array([getattr(params, n) for n in names])

    def total_loglik(vector):
        return ajm.loglik(_params_from_active(vector, restricted), panel, overnight)

    hess = _numerical_hessian(total_loglik, x0)
    scores = ajm.bin_scores(params, panel, overnight)
    if restricted:
        keep_cols = [PARAM_NAMES.index(n) for n in names]
        scores = scores[:, keep_cols]
    meat = scores.T @ scores

    warnings = []
    try:
        hinv = np.linalg.inv(hess)
        if not np.all(np.isfinite(hinv)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        hinv = np.linalg.pinv(hess)
        warnings.append("singular Hessian: pseudo-inverse used")
    cov_rob = hinv @ meat @ hinv
    cov_naive = -hinv
    with np.errstate(invalid="ignore"):
        se_rob = np.sqrt(np.where(np.diag(cov_rob) > 0, np.diag(cov_rob), np.nan))
        se_naive = np.sqrt(np.where(np.diag(cov_naive) > 0, np.diag(cov_naive), np.nan))
    if np.any(~np.isfinite(se_rob)):
        warnings.append("non-positive robust variance on the diagonal")
    return se_rob, se_naive, warnings


def ljung_box(residual_sample, lags=(1, 5, 10)) -> list[LjungBoxRecord]:
    """Portmanteau statistics n(n+2) sum rho_k^2/(n-k) with chi-square
    p-values, one record per requested lag."""
    x = np.asarray(residual_sample, dtype=float).reshape(-1)
    x = x[np.isfinite(x)]
    n = x.size
    if n < 50:
        raise ValueError(f"need at least 50 residuals, have {n}")
    max_lag = max(lags)
    if max_lag >= n:
        raise ValueError("lag must be smaller than the sample size")
    centred = x - x.mean()
    denom = float(centred @ centred)
    rho = np.array([float(centred[k:] @ centred[:-k]) / denom
                    for k in range(1, max_lag + 1)])
    records = []
    for lag in lags:
        ks = np.arange(1, lag + 1)
        stat = float(n * (n + 2.0) * np.sum(rho[:lag] ** 2 / (n - ks)))
        records.append(LjungBoxRecord(lag=int(lag), statistic=stat,
                                      p_value=float(chi2.sf(stat, df=lag))))
    return records
