import numpy as np
import pytest

from gpm.econometrics import (
    RegressionSpec,
    fit_fixed_effects,
    fit_moderation,
    fit_sdm,
    fit_threshold,
    significance_stars,
    thread_count,
    within_transform,
)
from gpm.errors import NumericalError, SchemaError, ValidationError
from gpm.panel import PanelDataset
from gpm.synth import (
    synth_fe_panel,
    synth_moderation_panel,
    synth_sdm_panel,
    synth_threshold_panel,
)


def dummy_ols(panel, dep, regressors):
    """Reference estimator: OLS with explicit entity and year dummies."""
    y = panel.column(dep)
    X = panel.matrix(regressors)
    ent, tim = panel.entity_index(), panel.time_index()
    D_ent = np.eye(panel.n_entities)[ent][:, 1:]
    D_tim = np.eye(panel.n_years)[tim][:, 1:]
    Z = np.column_stack([np.ones(len(y)), X, D_ent, D_tim])
    beta, *_ = np.linalg.lstsq(Z, y, rcond=None)
    return beta[1 : 1 + len(regressors)]


def test_within_transform_removes_group_means():
    rng = np.random.default_rng(0)
    x = rng.normal(0, 1, 60)
    ent = np.repeat(np.arange(4), 15)
    tim = np.tile(np.arange(15), 4)
    xd = within_transform(x, ent, tim, True, True)
    for g in range(4):
        assert abs(xd[ent == g].mean()) < 1e-12
    for t in range(15):
        assert abs(xd[tim == t].mean()) < 1e-12


def test_fe_matches_dummy_variable_ols():
    panel = synth_fe_panel(seed=11)
    spec = RegressionSpec("y", ("x1", "x2"), entity_effects=True, time_effects=True)
    fit = fit_fixed_effects(panel, spec)
    ref = dummy_ols(panel, "y", ("x1", "x2"))
    assert np.allclose(fit.params, ref, atol=1e-12)
    assert fit.coef("x1") == pytest.approx(0.157, abs=0.02)
    assert fit.nobs == panel.n_obs
    assert 0.0 <= fit.r2 <= 1.0


def test_fe_pooled_branch_has_intercept():
    panel = synth_fe_panel(seed=2, n=3, t=10)
    spec = RegressionSpec("y", ("x1", "x2"), entity_effects=False, time_effects=False)
    fit = fit_fixed_effects(panel, spec)
    assert fit.names[0] == "const"
    assert len(fit.names) == 3


def test_fe_rejects_collinear_regressors():
    panel = synth_fe_panel(seed=3)
    data = np.concatenate([panel.data, 2.0 * panel.data[:, :, 1:2]], axis=-1)
    bigger = PanelDataset(panel.entities, panel.years, panel.variables + ("x3",), data)
    spec = RegressionSpec("y", ("x1", "x2", "x3"))
    with pytest.raises(NumericalError, match="collinear"):
        fit_fixed_effects(bigger, spec)


def test_spec_validation():
    with pytest.raises(SchemaError, match="also a regressor"):
        RegressionSpec("y", ("y", "x1"))
    with pytest.raises(SchemaError, match="duplicate"):
        RegressionSpec("y", ("x1", "x1"))
    panel = synth_fe_panel(seed=4)
    with pytest.raises(SchemaError, match="unknown variable"):
        RegressionSpec("y", ("nope",)).validate_names(panel)


def test_coef_table_serialization():
    panel = synth_fe_panel(seed=5)
    fit = fit_fixed_effects(panel, RegressionSpec("y", ("x1", "x2")))
    d = fit.to_dict()
    assert set(d["coefficients"]) == {"x1", "x2"}
    assert {"estimate", "se", "t", "p"} <= set(d["coefficients"]["x1"])
    text = fit.text_table()
    assert "x1" in text and "r2" in text


def test_significance_stars():
    assert significance_stars(0.005) == "***"
    assert significance_stars(0.03) == "**"
    assert significance_stars(0.07) == "*"
    assert significance_stars(0.2) == ""


def pooled_sdm_panel(seed, n=25, t=20, rho=0.35):
    """Spatial Durbin DGP with no fixed effects, for the pooled estimator."""
    from gpm.synth import synth_weights

    rng = np.random.default_rng(seed)
    weights = synth_weights(seed, n)
    W = weights.matrix
    X = rng.normal(0, 1, (n, t, 2))
    WX = np.einsum("ij,jtk->itk", W, X)
    rhs = X @ np.array([1.0, 0.5]) + WX @ np.array([0.1, -0.05])
    rhs += rng.normal(0, 0.01, (n, t))
    y = np.linalg.inv(np.eye(n) - rho * W) @ rhs
    data = np.concatenate([y[..., None], X], axis=-1)
    entities = tuple(f"e{i:03d}" for i in range(n))
    panel = PanelDataset(entities, tuple(range(2000, 2000 + t)), ("y", "x1", "x2"), data)
    return panel, weights


def test_sdm_recovers_rho_without_fixed_effects():
    panel, weights = pooled_sdm_panel(seed=6)
    spec = RegressionSpec("y", ("x1", "x2"), entity_effects=False, time_effects=False)
    fit = fit_sdm(panel, spec, weights)
    assert fit.rho == pytest.approx(0.35, abs=0.08)
    assert fit.beta.coef("x1") == pytest.approx(1.0, abs=0.05)
    assert fit.theta.names == ("W*x1", "W*x2")
    assert np.isfinite(fit.loglik)
    assert fit.rho_se > 0
    # the concentrated likelihood peaks at the reported rho
    cl = fit.concentrated_loglik
    assert cl(fit.rho) >= cl(fit.rho + 0.05)
    assert cl(fit.rho) >= cl(fit.rho - 0.05)


def test_sdm_two_way_effects_reduce_nobs():
    panel, weights = synth_sdm_panel(seed=7)
    spec = RegressionSpec("y", ("x1", "x2"), entity_effects=True, time_effects=True)
    fit = fit_sdm(panel, spec, weights)
    n, t = panel.n_entities, panel.n_years
    assert fit.nobs == (n - 1) * (t - 1)
    assert fit.rho == pytest.approx(0.35, abs=0.10)


def test_sdm_requires_row_standardized_weights():
    panel, weights = synth_sdm_panel(seed=8, n=5, t=6)
    from gpm.panel import SpatialWeights

    raw = SpatialWeights(
        np.ones((5, 5)) - np.eye(5), row_standardized=False
    )
    spec = RegressionSpec("y", ("x1", "x2"))
    with pytest.raises(ValidationError, match="row-standardized"):
        fit_sdm(panel, spec, raw)


def test_threshold_recovers_planted_split():
    panel = synth_threshold_panel(seed=9)
    spec = RegressionSpec("y", ("focal", "c1"), entity_effects=True)
    fit = fit_threshold(panel, spec, "thr", "focal")
    candidates = np.array([g for g, _ in fit.ssr_profile])
    # the estimate is the last candidate at or below the planted cut
    between = candidates[(candidates > fit.gamma) & (candidates <= 0.28)]
    assert between.size == 0
    assert fit.gamma <= 0.28
    assert fit.coef_low == pytest.approx(0.057, abs=0.01)
    assert fit.coef_high == pytest.approx(0.179, abs=0.01)
    assert fit.table.names[:2] == ("focal(T<=g)", "focal(T>g)")


def test_threshold_thread_count_does_not_change_result(monkeypatch):
    panel = synth_threshold_panel(seed=10)
    spec = RegressionSpec("y", ("focal", "c1"))
    monkeypatch.delenv("GPM_THREADS", raising=False)
    serial = fit_threshold(panel, spec, "thr", "focal")
    monkeypatch.setenv("GPM_THREADS", "4")
    assert thread_count() == 4
    parallel = fit_threshold(panel, spec, "thr", "focal")
    assert serial.gamma == parallel.gamma
    assert np.array_equal(serial.table.params, parallel.table.params)


def test_thread_count_defaults_to_one(monkeypatch):
    monkeypatch.delenv("GPM_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("GPM_THREADS", "junk")
    assert thread_count() == 1
    monkeypatch.setenv("GPM_THREADS", "0")
    assert thread_count() == 1


def test_threshold_rejects_sparse_grids():
    panel = synth_threshold_panel(seed=12, n=2, t=4)
    spec = RegressionSpec("y", ("focal", "c1"))
    with pytest.raises(ValidationError, match="too few distinct"):
        fit_threshold(panel, spec, "thr", "focal")


def test_threshold_focal_must_be_a_regressor():
    panel = synth_threshold_panel(seed=13)
    spec = RegressionSpec("y", ("c1",))
    with pytest.raises(SchemaError, match="not among the regressors"):
        fit_threshold(panel, spec, "thr", "focal")


def test_moderation_recovers_interaction():
    panel = synth_moderation_panel(seed=14)
    fit = fit_moderation(panel, "y", "focal", "mod", ("c1",))
    m3 = fit.interaction_model
    assert fit.interaction_name == "focalxmod"
    assert m3.coef("focalxmod") == pytest.approx(0.2, abs=0.05)
    assert m3.f_dof == (4, panel.n_obs - 5)
    assert np.isfinite(m3.f_stat) and m3.f_stat > 0
    # all three models share the pooled layout with a constant
    for table in (fit.outcome_model, fit.moderator_model, m3):
        assert table.names[0] == "const"
    text = fit.text_table()
    assert "model 1" in text and "model 3" in text
