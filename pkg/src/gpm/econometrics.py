"""Panel estimators: two-way fixed effects (within), quasi-ML spatial Durbin,
single-threshold regression, and a three-model moderation layout.

All estimators are pure functions of (panel, spec, ...) and return frozen
result objects with coefficient tables.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import NumericalError, SchemaError, ValidationError

# pivoted-QR collinearity threshold, relative to the largest diagonal of R
_RANK_TOL = 1e-10


@dataclass(frozen=True)
class RegressionSpec:
    dependent: str
    regressors: tuple
    entity_effects: bool = True
    time_effects: bool = False

    def __post_init__(self):
        object.__setattr__(self, "regressors", tuple(self.regressors))
        if self.dependent in self.regressors:
            raise SchemaError(f"dependent {self.dependent!r} is also a regressor")
        if len(set(self.regressors)) != len(self.regressors):
            raise SchemaError("duplicate regressor names")

    def validate_names(self, panel):
        for name in (self.dependent,) + self.regressors:
            panel.var_index(name)  # raises SchemaError on unknown names


@dataclass(frozen=True)
class CoefTable:
    names: tuple
    params: np.ndarray = field(repr=False)
    se: np.ndarray = field(repr=False)
    tvalues: np.ndarray = field(repr=False)
    pvalues: np.ndarray = field(repr=False)
    r2: float = float("nan")
    nobs: int = 0
    df_resid: int = 0
    ssr: float = float("nan")
    stat_label: str = "t"
    f_stat: float = float("nan")
    f_dof: tuple = ()

    def coef(self, name):
        return float(self.params[self.names.index(name)])

    def stderr(self, name):
        return float(self.se[self.names.index(name)])

    def to_dict(self):
        out = {
            "coefficients": {
                n: {
                    "estimate": float(b),
                    "se": float(s),
                    self.stat_label: float(t),
                    "p": float(p),
                }
                for n, b, s, t, p in zip(
                    self.names, self.params, self.se, self.tvalues, self.pvalues
                )
            },
            "r2": self.r2,
            "nobs": self.nobs,
            "df_resid": self.df_resid,
        }
        if np.isfinite(self.f_stat):
            out["F"] = {"value": self.f_stat, "dof": list(self.f_dof)}
        return out

    def text_table(self, title=""):
        lines = []
        if title:
            lines.append(title)
        lines.append(f"{'variable':<18}{'coef':>12}{'se':>12}{self.stat_label:>10}   sig")
        for n, b, s, t, p in zip(self.names, self.params, self.se, self.tvalues, self.pvalues):
            lines.append(f"{n:<18}{b:>12.4f}{s:>12.4f}{t:>10.2f}   {significance_stars(p)}")
        lines.append(f"r2 {self.r2:.4f}   N {self.nobs}")
        if np.isfinite(self.f_stat):
            d1, d2 = self.f_dof
            lines.append(f"F({d1},{d2}) = {self.f_stat:.3f}")
        return "\n".join(lines)


def significance_stars(p):
    """Stars at the 1% / 5% / 10% levels."""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


def thread_count():
    """Worker cap for parallel candidate scans; GPM_THREADS overrides."""
    raw = os.environ.get("GPM_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def within_transform(values, entity_idx, time_idx, entity_effects=True, time_effects=False):
    """Group-demean a vector or column matrix (balanced panel assumed).

    Two-way: x - mean_entity - mean_time + grand mean.
    """
    x = np.asarray(values, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    out = x.copy()
    if entity_effects and time_effects:
        ent_means = _group_means(x, entity_idx)
        time_means = _group_means(x, time_idx)
        out = x - ent_means[entity_idx] - time_means[time_idx] + x.mean(axis=0)
    elif entity_effects:
        out = x - _group_means(x, entity_idx)[entity_idx]
    elif time_effects:
        out = x - _group_means(x, time_idx)[time_idx]
    return out[:, 0] if squeeze else out


def _group_means(x, idx):
    n_groups = idx.max() + 1
    sums = np.zeros((n_groups, x.shape[1]))
    np.add.at(sums, idx, x)
    counts = np.bincount(idx, minlength=n_groups).astype(float)
    return sums / counts[:, None]


def _check_rank(X, names):
    """Pivoted-QR rank check; raises naming the collinear columns."""
    if X.shape[0] < X.shape[1]:
        raise NumericalError("fewer observations than regressors")
    from scipy.linalg import qr

    _, r, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0:
        return
    bad = diag <= _RANK_TOL * diag[0]
    if np.any(bad):
        cols = sorted(names[piv[j]] for j in np.flatnonzero(bad))
        raise NumericalError(f"rank-deficient design; collinear column(s): {cols}")


def _ols(y, X, names):
    _check_rank(X, names)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    return beta, resid


def _coef_table(y, X, names, df_resid, r2=None, stat_label="t"):
    beta, resid = _ols(y, X, names)
    ssr = float(resid @ resid)
    if df_resid <= 0:
        raise NumericalError("no residual degrees of freedom")
    s2 = ssr / df_resid
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(np.maximum(s2 * np.diag(xtx_inv), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(se > 0, beta / se, np.inf)
    pvals = 2.0 * stats.t.sf(np.abs(tvals), df_resid)
    tss = float(((y - y.mean()) ** 2).sum())
    r2_val = r2 if r2 is not None else (1.0 - ssr / tss if tss > 0 else float("nan"))
    return CoefTable(
        names=tuple(names),
        params=beta,
        se=se,
        tvalues=tvals,
        pvalues=pvals,
        r2=r2_val,
        nobs=len(y),
        df_resid=df_resid,
        ssr=ssr,
        stat_label=stat_label,
    )


def _absorbed_params(n, t, entity_effects, time_effects):
    # parameters soaked up by the within transformation (incl. grand mean)
    if entity_effects and time_effects:
        return n + t - 1
    if entity_effects:
        return n
    if time_effects:
        return t
    return 0


def fit_fixed_effects(panel, spec):
    """Within estimator: demean by entity (and year), OLS on demeaned data."""
    spec.validate_names(panel)
    y = panel.column(spec.dependent)
    X = panel.matrix(spec.regressors)
    ent, tim = panel.entity_index(), panel.time_index()
    yd = within_transform(y, ent, tim, spec.entity_effects, spec.time_effects)
    Xd = within_transform(X, ent, tim, spec.entity_effects, spec.time_effects)
    absorbed = _absorbed_params(
        panel.n_entities, panel.n_years, spec.entity_effects, spec.time_effects
    )
    df = panel.n_obs - len(spec.regressors) - absorbed
    if not spec.entity_effects and not spec.time_effects:
        # pooled OLS with intercept
        Xd = np.column_stack([np.ones(len(yd)), Xd])
        table = _coef_table(yd, Xd, ("const",) + spec.regressors, len(yd) - Xd.shape[1])
        return table
    tss = float((yd**2).sum())
    table = _coef_table(yd, Xd, spec.regressors, df)
    r2 = 1.0 - table.ssr / tss if tss > 0 else float("nan")
    return CoefTable(
        names=table.names,
        params=table.params,
        se=table.se,
        tvalues=table.tvalues,
        pvalues=table.pvalues,
        r2=r2,
        nobs=table.nobs,
        df_resid=table.df_resid,
        ssr=table.ssr,
        stat_label="t",
    )


# ---------------------------------------------------------------------------
# Spatial Durbin model


@dataclass(frozen=True)
class SdmFit:
    rho: float
    beta: CoefTable  # coefficients on regressors
    theta: CoefTable  # coefficients on spatially lagged regressors
    sigma2: float
    loglik: float
    rho_se: float
    rho_z: float
    r2: float
    nobs: int
    concentrated_loglik: object = field(repr=False, default=None)

    def to_dict(self):
        return {
            "rho": {"estimate": self.rho, "se": self.rho_se, "z": self.rho_z},
            "beta": self.beta.to_dict(),
            "theta": self.theta.to_dict(),
            "sigma2": self.sigma2,
            "loglik": self.loglik,
            "r2": self.r2,
            "nobs": self.nobs,
        }

    def text_table(self):
        pr = 2.0 * stats.norm.sf(abs(self.rho_z))
        lines = [self.beta.text_table("spatial Durbin model (quasi-ML)")]
        lines.append(self.theta.text_table("spatial lags (W*X)"))
        lines.append(
            f"rho {self.rho:.4f} (se {self.rho_se:.4f}, z {self.rho_z:.2f}) "
            f"{significance_stars(pr)}"
        )
        lines.append(f"sigma2 {self.sigma2:.6f}   loglik {self.loglik:.3f}   r2 {self.r2:.4f}")
        return "\n".join(lines)


def _golden_max(f, lo, hi, tol=1e-8, max_iter=200):
    """Golden-section maximizer on [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def fit_sdm(panel, spec, weights):
    """Fixed-effect spatial Durbin model by quasi-maximum likelihood.

    The log-likelihood is concentrated over the spatial-lag coefficient rho:
    at each candidate, (y - rho*Wy) is regressed on [X, WX] and the Jacobian
    term T * sum_i ln(1 - rho*lambda_i) uses the eigenvalues of W.
    """
    spec.validate_names(panel)
    if not weights.row_standardized:
        raise ValidationError("spatial Durbin model requires a row-standardized W")
    n, t = panel.n_entities, panel.n_years
    if weights.n != n:
        raise ValidationError(f"W is {weights.n}x{weights.n} but panel has {n} entities")
    W = weights.matrix
    k = len(spec.regressors)

    # (n, T) and (n, T, k) layouts so the spatial lag is a plain matmul per year
    y_nt = panel.column(spec.dependent).reshape(n, t)
    X_ntk = panel.matrix(spec.regressors).reshape(n, t, k)
    Wy_nt = W @ y_nt
    WX_ntk = np.einsum("ij,jtk->itk", W, X_ntk)

    ent, tim = panel.entity_index(), panel.time_index()

    def flat(a):
        return a.reshape(panel.n_obs, -1)

    yd = within_transform(flat(y_nt)[:, 0], ent, tim, spec.entity_effects, spec.time_effects)
    Wyd = within_transform(flat(Wy_nt)[:, 0], ent, tim, spec.entity_effects, spec.time_effects)
    Xd = within_transform(flat(X_ntk), ent, tim, spec.entity_effects, spec.time_effects)
    WXd = within_transform(flat(WX_ntk), ent, tim, spec.entity_effects, spec.time_effects)
    Z = np.column_stack([Xd, WXd])
    z_names = tuple(spec.regressors) + tuple(f"W*{r}" for r in spec.regressors)
    _check_rank(Z, z_names)

    eig = np.linalg.eigvals(W)
    if np.max(np.abs(eig.imag)) > 1e-8:
        raise NumericalError("complex eigenvalues of W beyond tolerance")
    lam = np.sort(eig.real)

    # Demeaning removes whole directions of variation, so the Jacobian term
    # must follow suit: entity demeaning drops one time period's worth of
    # information, and cross-sectional demeaning annihilates the constant
    # eigenvector of the row-standardized W (its unit eigenvalue).
    t_eff = t - 1 if spec.entity_effects else t
    if spec.time_effects:
        drop = int(np.argmin(np.abs(lam - 1.0)))
        lam_det = np.delete(lam, drop)
        n_eff = n - 1
    else:
        lam_det = lam
        n_eff = n
    N = n_eff * t_eff
    if t_eff < 1 or n_eff < 2:
        raise NumericalError("not enough variation left after the within transformation")

    # admissible rho interval from the eigenvalue bounds, clipped to (-0.999, 0.999)
    lo = -0.999 if lam[0] >= 0 else max(-0.999, 1.0 / lam[0] + 1e-6)
    hi = 0.999 if lam[-1] <= 0 else min(0.999, 1.0 / lam[-1] - 1e-6)

    zt_z_inv_zt = np.linalg.pinv(Z)

    def concentrated(rho):
        u = yd - rho * Wyd
        resid = u - Z @ (zt_z_inv_zt @ u)
        ssr = float(resid @ resid)
        if ssr <= 0:
            return -np.inf
        logdet = t_eff * float(np.log(1.0 - rho * lam_det).sum())
        return logdet - 0.5 * N * np.log(ssr / N)

    probe = np.linspace(lo, hi, 41)
    vals = np.array([concentrated(r) for r in probe])
    if not np.any(np.isfinite(vals)):
        raise NumericalError("concentrated likelihood non-finite over the entire rho grid")
    rho_hat = _golden_max(concentrated, lo, hi)

    u = yd - rho_hat * Wyd
    delta, resid = _ols(u, Z, z_names)
    ssr = float(resid @ resid)
    sigma2 = ssr / N
    if sigma2 <= 0:
        raise NumericalError("nonpositive error variance")
    loglik = (
        -0.5 * N * np.log(2.0 * np.pi * sigma2)
        + t_eff * float(np.log(1.0 - rho_hat * lam_det).sum())
        - ssr / (2.0 * sigma2)
    )

    # standard errors: numerical Hessian of the full log-likelihood at the optimum
    def full_loglik(params):
        rho, s2 = params[0], params[-1]
        if s2 <= 0 or not (lo <= rho <= hi):
            return -np.inf
        d = params[1:-1]
        e = yd - rho * Wyd - Z @ d
        return (
            -0.5 * N * np.log(2.0 * np.pi * s2)
            + t_eff * float(np.log(1.0 - rho * lam_det).sum())
            - float(e @ e) / (2.0 * s2)
        )

    theta_hat = np.concatenate([[rho_hat], delta, [sigma2]])
    H = _numerical_hessian(full_loglik, theta_hat)
    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        raise NumericalError("singular Hessian at the SDM optimum") from None
    diag = np.diag(cov)
    if np.any(diag < 0):
        diag = np.abs(diag)
    se_all = np.sqrt(diag)
    rho_se = float(se_all[0])
    se_delta = se_all[1 : 1 + 2 * k]

    z_vals = delta / np.where(se_delta > 0, se_delta, np.inf)
    p_vals = 2.0 * stats.norm.sf(np.abs(z_vals))
    fitted = rho_hat * Wyd + Z @ delta
    corr = np.corrcoef(fitted, yd)[0, 1] if np.std(fitted) > 0 else float("nan")
    r2 = float(corr**2)  # squared correlation between fitted and actual

    def table(sl, names):
        return CoefTable(
            names=names,
            params=delta[sl],
            se=se_delta[sl],
            tvalues=z_vals[sl],
            pvalues=p_vals[sl],
            r2=r2,
            nobs=N,
            df_resid=N - 2 * k - 2,
            ssr=ssr,
            stat_label="z",
        )

    return SdmFit(
        rho=float(rho_hat),
        beta=table(slice(0, k), tuple(spec.regressors)),
        theta=table(slice(k, 2 * k), tuple(f"W*{r}" for r in spec.regressors)),
        sigma2=sigma2,
        loglik=float(loglik),
        rho_se=rho_se,
        rho_z=float(rho_hat / rho_se) if rho_se > 0 else float("inf"),
        r2=r2,
        nobs=N,
        concentrated_loglik=concentrated,
    )


def _numerical_hessian(f, x0, rel_step=1e-5):
    p = len(x0)
    h = rel_step * np.maximum(np.abs(x0), 1.0)
    H = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            ei = np.zeros(p)
            ej = np.zeros(p)
            ei[i] = h[i]
            ej[j] = h[j]
            fpp = f(x0 + ei + ej)
            fpm = f(x0 + ei - ej)
            fmp = f(x0 - ei + ej)
            fmm = f(x0 - ei - ej)
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
    return H


# ---------------------------------------------------------------------------
# Threshold regression


@dataclass(frozen=True)
class ThresholdFit:
    threshold_var: str
    focal_var: str
    gamma: float
    table: CoefTable  # rows: focal(low), focal(high), controls...
    ssr_profile: tuple  # ((gamma, ssr), ...) over the candidate grid
    skipped: tuple = ()  # candidates dropped for an empty regime

    @property
    def coef_low(self):
        return self.table.coef(f"{self.focal_var}(T<=g)")

    @property
    def coef_high(self):
        return self.table.coef(f"{self.focal_var}(T>g)")

    def to_dict(self):
        return {
            "threshold_var": self.threshold_var,
            "focal_var": self.focal_var,
            "gamma": self.gamma,
            "table": self.table.to_dict(),
            "n_candidates": len(self.ssr_profile),
            "skipped_candidates": list(self.skipped),
        }

    def text_table(self):
        head = (
            f"threshold regression: {self.threshold_var} threshold on "
            f"{self.focal_var}, gamma = {self.gamma:.4f}"
        )
        return self.table.text_table(head)


def fit_threshold(panel, spec, threshold_var, focal_var, trim=0.05):
    """Single-threshold fixed-effects regression via SSR grid search.

    The focal regressor is split into I(T<=g)*focal and I(T>g)*focal at each
    distinct trimmed value g of the threshold variable; g-hat minimizes SSR
    (ties break toward the smaller g).
    """
    spec.validate_names(panel)
    if focal_var not in spec.regressors:
        raise SchemaError(f"focal variable {focal_var!r} is not among the regressors")
    tvar = panel.column(threshold_var)
    lo_q, hi_q = np.quantile(tvar, [trim, 1.0 - trim])
    candidates = np.unique(tvar[(tvar >= lo_q) & (tvar <= hi_q)])
    if candidates.size < 10:
        raise ValidationError(
            f"too few distinct values of {threshold_var!r} inside the trimmed range "
            f"({candidates.size} < 10)"
        )

    y = panel.column(spec.dependent)
    focal = panel.column(focal_var)
    controls = tuple(r for r in spec.regressors if r != focal_var)
    Xc = panel.matrix(controls) if controls else np.empty((panel.n_obs, 0))
    ent, tim = panel.entity_index(), panel.time_index()
    names = (f"{focal_var}(T<=g)", f"{focal_var}(T>g)") + controls
    absorbed = _absorbed_params(
        panel.n_entities, panel.n_years, spec.entity_effects, spec.time_effects
    )
    df = panel.n_obs - len(names) - absorbed

    yd = within_transform(y, ent, tim, spec.entity_effects, spec.time_effects)

    def ssr_at(g):
        low = tvar <= g
        if not low.any() or low.all():
            return None
        X = np.column_stack([focal * low, focal * ~low, Xc])
        Xd = within_transform(X, ent, tim, spec.entity_effects, spec.time_effects)
        beta, *_ = np.linalg.lstsq(Xd, yd, rcond=None)
        resid = yd - Xd @ beta
        return float(resid @ resid)

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ssrs = list(pool.map(ssr_at, candidates))
    else:
        ssrs = [ssr_at(g) for g in candidates]

    profile = []
    skipped = []
    for g, s in zip(candidates, ssrs):
        if s is None:
            skipped.append(float(g))
        else:
            profile.append((float(g), s))
    if not profile:
        raise NumericalError("every threshold candidate produced an empty regime")
    # deterministic reduction: min SSR, ties toward the smaller gamma
    gamma = min(profile, key=lambda gs: (gs[1], gs[0]))[0]

    low = tvar <= gamma
    X = np.column_stack([focal * low, focal * ~low, Xc])
    Xd = within_transform(X, ent, tim, spec.entity_effects, spec.time_effects)
    tss = float((yd**2).sum())
    table = _coef_table(yd, Xd, names, df)
    r2 = 1.0 - table.ssr / tss if tss > 0 else float("nan")
    table = CoefTable(
        names=table.names,
        params=table.params,
        se=table.se,
        tvalues=table.tvalues,
        pvalues=table.pvalues,
        r2=r2,
        nobs=table.nobs,
        df_resid=table.df_resid,
        ssr=table.ssr,
    )
    return ThresholdFit(
        threshold_var=threshold_var,
        focal_var=focal_var,
        gamma=float(gamma),
        table=table,
        ssr_profile=tuple(profile),
        skipped=tuple(skipped),
    )


# ---------------------------------------------------------------------------
# Moderation (three-model interaction layout)


@dataclass(frozen=True)
class ModerationFit:
    outcome_model: CoefTable  # dep ~ focal + controls
    moderator_model: CoefTable  # moderator ~ focal + controls
    interaction_model: CoefTable  # dep ~ focal + moderator + focal_c*mod_c + controls
    interaction_name: str

    def to_dict(self):
        return {
            "outcome_model": self.outcome_model.to_dict(),
            "moderator_model": self.moderator_model.to_dict(),
            "interaction_model": self.interaction_model.to_dict(),
            "interaction_term": self.interaction_name,
        }

    def text_table(self):
        return "\n\n".join(
            [
                self.outcome_model.text_table("model 1: outcome ~ focal + controls"),
                self.moderator_model.text_table("model 2: moderator ~ focal + controls"),
                self.interaction_model.text_table(
                    "model 3: outcome ~ focal + moderator + interaction + controls"
                ),
            ]
        )


def _pooled_ols_with_f(y, X_no_const, names):
    X = np.column_stack([np.ones(len(y)), X_no_const])
    full_names = ("const",) + tuple(names)
    k = X_no_const.shape[1]
    df = len(y) - k - 1
    table = _coef_table(y, X, full_names, df)
    r2 = table.r2
    f_stat = (r2 / k) / ((1.0 - r2) / df) if r2 < 1.0 else float("inf")
    return CoefTable(
        names=table.names,
        params=table.params,
        se=table.se,
        tvalues=table.tvalues,
        pvalues=table.pvalues,
        r2=r2,
        nobs=table.nobs,
        df_resid=table.df_resid,
        ssr=table.ssr,
        f_stat=float(f_stat),
        f_dof=(k, df),
    )


def fit_moderation(panel, dependent, focal, moderator, controls=()):
    """Standard three-regression moderation layout with a centered interaction."""
    controls = tuple(controls)
    for name in (dependent, focal, moderator) + controls:
        panel.var_index(name)
    y = panel.column(dependent)
    f = panel.column(focal)
    m = panel.column(moderator)
    Xc = panel.matrix(controls) if controls else np.empty((panel.n_obs, 0))
    inter = (f - f.mean()) * (m - m.mean())
    inter_name = f"{focal}x{moderator}"

    model1 = _pooled_ols_with_f(y, np.column_stack([f, Xc]), (focal,) + controls)
    model2 = _pooled_ols_with_f(m, np.column_stack([f, Xc]), (focal,) + controls)
    model3 = _pooled_ols_with_f(
        y,
        np.column_stack([f, m, inter, Xc]),
        (focal, moderator, inter_name) + controls,
    )
    return ModerationFit(
        outcome_model=model1,
        moderator_model=model2,
        interaction_model=model3,
        interaction_name=inter_name,
    )
