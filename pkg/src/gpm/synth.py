"""Seeded synthetic data generators.

The original yearbook data behind the demo scenario is not shipped, so every
randomized example in the repo is generated here from an explicit seed:
identical seed, identical bytes.
"""

from __future__ import annotations

import numpy as np

from .panel import PanelDataset, SpatialWeights, build_inverse_distance_weights

DEMO_ENTITIES = ("Haikou", "Sanya", "Sansha", "Danzhou")

# Approximate prefecture-city coordinates (lat, lon); a reconstruction for the
# demo scenario, not measured values.
DEMO_COORDS = (
    (20.04, 110.34),
    (18.25, 109.51),
    (16.83, 112.33),
    (19.52, 109.58),
)

DEMO_VARIABLES = (
    "Rural",
    "DEI",
    "Age",
    "CPI",
    "Trade",
    "GDP",
    "Rate1",
    "Rate2",
    "Rate3",
    "Tr",
    "DR",
)


def demo_panel(seed=0, years=tuple(range(2003, 2023))):
    """4-entity demo panel with the standard 11 variables.

    Rural responds to DEI with a fiscal-expenditure threshold (slope 0.057
    below Tr=0.28, 0.179 above) plus controls, entity effects, and noise, so
    every estimator in the package has something to find.
    """
    rng = np.random.default_rng(seed)
    n, t = len(DEMO_ENTITIES), len(years)
    trend = np.linspace(0.0, 1.0, t)

    dei = 0.08 + 0.4 / (1.0 + np.exp(-6.0 * (trend - 0.55)))
    dei = np.clip(dei[None, :] + rng.normal(0, 0.02, (n, t)), 0.01, 0.99)
    age = 0.10 + 0.05 * trend[None, :] + rng.normal(0, 0.01, (n, t))
    cpi = 0.9 + 0.1 * rng.random((n, t))
    trade = 0.2 + 0.3 * rng.random((n, t))
    gdp = 6.0 + 2.0 * trend[None, :] + rng.normal(0, 0.2, (n, t))
    raw_rates = rng.dirichlet((4.0, 3.0, 5.0), size=(n, t))
    rate1, rate2, rate3 = raw_rates[..., 0], raw_rates[..., 1], raw_rates[..., 2]
    tr = 0.15 + 0.3 * rng.random((n, t))
    dr = np.where(np.array(years)[None, :] >= 2020, 0.5 + 0.4 * trend[None, :], 0.0)
    dr = dr + rng.normal(0, 0.01, (n, t))

    entity_fe = rng.normal(0, 0.05, (n, 1))
    low = tr <= 0.28
    rural = (
        0.2
        + np.where(low, 0.057, 0.179) * dei
        + 0.12 * trade
        + 0.02 * gdp / 10.0
        + 0.05 * rate3
        + 0.03 * dr
        + entity_fe
        + rng.normal(0, 0.01, (n, t))
    )

    data = np.stack(
        [rural, dei, age, cpi, trade, gdp, rate1, rate2, rate3, tr, dr], axis=-1
    )
    return PanelDataset(DEMO_ENTITIES, tuple(years), DEMO_VARIABLES, data)


DEMO_INDICATORS = (
    ("mobile_penetration", "+", "mobile_penetration"),
    ("base_stations_pc", "+", "base_stations_pc"),
    ("telecom_gdp_share", "+", "telecom_gdp_share"),
    ("software_employment_share", "+", "software_employment_share"),
    ("rd_gdp_share", "+", "rd_gdp_share"),
    ("digital_finance_index", "+", "digital_finance_index"),
)


def demo_indicator_panel(seed=0, years=tuple(range(2003, 2023))):
    """Raw secondary-indicator panel feeding the composite-index demo."""
    rng = np.random.default_rng(seed + 17)
    n, t = len(DEMO_ENTITIES), len(years)
    trend = np.linspace(0.0, 1.0, t)[None, :]
    cols = []
    scales = (90.0, 3.0, 4.0, 2.0, 1.5, 250.0)
    for scale in scales:
        level = rng.uniform(0.3, 0.8, (n, 1))
        growth = rng.uniform(0.5, 1.5, (n, 1))
        col = scale * (0.2 + level + growth * trend) * (1.0 + rng.normal(0, 0.05, (n, t)))
        cols.append(np.abs(col))
    data = np.stack(cols, axis=-1)
    names = tuple(name for name, _, _ in DEMO_INDICATORS)
    return PanelDataset(DEMO_ENTITIES, tuple(years), names, data)


def demo_indicator_system():
    return [
        {"name": name, "direction": direction, "variable": variable}
        for name, direction, variable in DEMO_INDICATORS
    ]


def demo_fusion_model(seed=0, n_per_class=200):
    """3-class, 2-feature Gaussian toy as a serializable model dict."""
    rng = np.random.default_rng(seed + 31)
    means = (-2.0, 0.0, 2.0)
    classes = []
    for i, mu in enumerate(means):
        samples = rng.normal(mu, 0.7, size=(n_per_class, 2))
        classes.append(
            {
                "name": f"scenario_{i + 1}",
                "utility": 1.0,
                "samples": [[round(v, 10) for v in row] for row in samples.tolist()],
            }
        )
    return {"kernel": {"kind": "gaussian", "bandwidth": 0.5}, "classes": classes}


# ---------------------------------------------------------------------------
# Estimator test-bench panels


def synth_fe_panel(seed, n=4, t=20, betas=(0.157, 0.121), sigma=0.01):
    """Balanced panel with planted within-regression slopes."""
    rng = np.random.default_rng(seed)
    k = len(betas)
    X = rng.normal(0, 1, (n, t, k))
    fe = rng.normal(0, 1, (n, 1))
    te = rng.normal(0, 1, (1, t))
    y = X @ np.asarray(betas) + fe + te + rng.normal(0, sigma, (n, t))
    data = np.concatenate([y[..., None], X], axis=-1)
    variables = ("y",) + tuple(f"x{j + 1}" for j in range(k))
    entities = tuple(f"e{i:03d}" for i in range(n))
    return PanelDataset(entities, tuple(range(2000, 2000 + t)), variables, data)


def synth_weights(seed, n):
    """Row-standardized inverse-distance weights on random coordinates."""
    rng = np.random.default_rng(seed + 7)
    coords = [(float(18 + 4 * rng.random()), float(108 + 5 * rng.random())) for _ in range(n)]
    return build_inverse_distance_weights(coords, row_standardize=True)


def synth_sdm_panel(seed, n=25, t=20, rho=0.35, betas=(1.0, 0.5), thetas=(0.1, -0.05), sigma=0.01):
    """Panel generated from the spatial Durbin process y = (I - rho W)^-1 (...)."""
    rng = np.random.default_rng(seed)
    weights = synth_weights(seed, n)
    W = weights.matrix
    k = len(betas)
    X = rng.normal(0, 1, (n, t, k))
    fe = rng.normal(0, 0.5, (n, 1))
    te = rng.normal(0, 0.5, (1, t))
    eps = rng.normal(0, sigma, (n, t))
    WX = np.einsum("ij,jtk->itk", W, X)
    rhs = X @ np.asarray(betas) + WX @ np.asarray(thetas) + fe + te + eps
    A_inv = np.linalg.inv(np.eye(n) - rho * W)
    y = A_inv @ rhs
    data = np.concatenate([y[..., None], X], axis=-1)
    variables = ("y",) + tuple(f"x{j + 1}" for j in range(k))
    entities = tuple(f"e{i:03d}" for i in range(n))
    return PanelDataset(entities, tuple(range(2000, 2000 + t)), variables, data), weights


def synth_threshold_panel(seed, n=4, t=20, gamma=0.28, slopes=(0.057, 0.179), sigma=0.01):
    """Panel with a planted threshold in the focal slope.

    Variables: y, focal, thr (threshold variable), c1 (control).
    """
    rng = np.random.default_rng(seed)
    focal = rng.normal(0.5, 0.5, (n, t))
    thr = rng.uniform(0.05, 0.55, (n, t))
    c1 = rng.normal(0, 1, (n, t))
    fe = rng.normal(0, 0.5, (n, 1))
    low = thr <= gamma
    y = np.where(low, slopes[0], slopes[1]) * focal + 0.1 * c1 + fe + rng.normal(0, sigma, (n, t))
    data = np.stack([y, focal, thr, c1], axis=-1)
    entities = tuple(f"e{i:03d}" for i in range(n))
    return PanelDataset(
        entities, tuple(range(2000, 2000 + t)), ("y", "focal", "thr", "c1"), data
    )


def synth_moderation_panel(seed, n=4, t=25, interaction=0.2, sigma=0.05):
    """Panel with a planted centered-interaction effect.

    Variables: y, focal, mod, c1.
    """
    rng = np.random.default_rng(seed)
    focal = rng.normal(0, 1, (n, t))
    mod = 0.3 * focal + rng.normal(0, 1, (n, t))
    c1 = rng.normal(0, 1, (n, t))
    inter = (focal - focal.mean()) * (mod - mod.mean())
    y = 0.5 * focal + 0.2 * mod + interaction * inter + 0.1 * c1 + rng.normal(0, sigma, (n, t))
    data = np.stack([y, focal, mod, c1], axis=-1)
    entities = tuple(f"e{i:03d}" for i in range(n))
    return PanelDataset(
        entities, tuple(range(2000, 2000 + t)), ("y", "focal", "mod", "c1"), data
    )
