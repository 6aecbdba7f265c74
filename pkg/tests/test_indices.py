import json

import numpy as np
import pytest

from gpm.errors import SchemaError, ValidationError
from gpm.indices import (
    EPS,
    Indicator,
    IndicatorSystem,
    build_index,
    composite_index,
    entropy_weights,
    normalize_minmax,
)
from gpm.synth import demo_indicator_panel, demo_indicator_system


def _system():
    return IndicatorSystem(
        tuple(
            Indicator(d["name"], "positive", d["variable"])
            for d in demo_indicator_system()
        )
    )


def test_normalize_positive_direction_exact():
    out = normalize_minmax([1.0, 2.0, 3.0], "positive")
    expected = (np.array([0.0, 0.5, 1.0]) + EPS) / (1.0 + EPS)
    assert np.allclose(out, expected, atol=0, rtol=1e-15)
    assert out.min() > 0.0
    assert out.max() == 1.0


def test_normalize_negative_direction_flips():
    pos = normalize_minmax([1.0, 2.0, 3.0], "positive")
    neg = normalize_minmax([1.0, 2.0, 3.0], "negative")
    assert np.allclose(pos, neg[::-1])


def test_normalize_rejects_degenerate_columns():
    with pytest.raises(ValidationError, match="max equals min"):
        normalize_minmax([2.0, 2.0, 2.0], "positive")
    with pytest.raises(ValidationError, match="at least 2"):
        normalize_minmax([2.0], "positive")
    with pytest.raises(SchemaError):
        normalize_minmax([1.0, 2.0], "sideways")


def test_entropy_weights_sum_to_one_and_favor_dispersion():
    rng = np.random.default_rng(3)
    x = rng.uniform(0.01, 1.0, (50, 4))
    w = entropy_weights(x)
    assert w.shape == (4,)
    assert abs(w.sum() - 1.0) <= 1e-12
    assert np.all(w >= 0)

    # a nearly-uniform column carries almost no information
    flat = np.full(50, 0.5) + rng.normal(0, 1e-6, 50)
    spread = rng.uniform(0.01, 1.0, 50)
    w2 = entropy_weights(np.column_stack([flat, spread]))
    assert w2[1] > 0.99


def test_entropy_weights_equal_columns():
    col = np.linspace(0.1, 1.0, 20)
    w = entropy_weights(np.column_stack([col, col]))
    assert np.allclose(w, [0.5, 0.5])


def test_entropy_weights_validation():
    with pytest.raises(ValidationError, match="strictly positive"):
        entropy_weights(np.array([[0.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(ValidationError, match="uniform"):
        entropy_weights(np.array([[0.5, 0.5], [0.5, 0.5]]))


def test_weighted_sum_matches_hand_computation():
    x = np.array([[0.2, 0.4], [1.0, 0.6]])
    scores = composite_index(x, np.array([0.5, 0.5]), method="weighted-sum")
    assert np.allclose(scores, [0.3, 0.8])


def test_topsis_endpoints():
    x = np.array([[0.1, 0.2], [0.5, 0.5], [1.0, 0.9]])
    scores = composite_index(x, np.array([0.4, 0.6]), method="topsis")
    assert scores[2] == 1.0  # row equal to the ideal point
    assert scores[0] == 0.0  # row equal to the anti-ideal point
    assert 0.0 < scores[1] < 1.0


def test_composite_index_validation():
    x = np.array([[0.1, 0.2], [0.3, 0.4]])
    with pytest.raises(ValidationError, match="sum to 1"):
        composite_index(x, np.array([0.7, 0.7]))
    with pytest.raises(ValidationError, match="does not match"):
        composite_index(x, np.array([1.0]))
    with pytest.raises(SchemaError):
        composite_index(x, np.array([0.5, 0.5]), method="vikor")


def test_build_index_pooled_and_per_year():
    panel = demo_indicator_panel(seed=1)
    system = _system()
    pooled = build_index(panel, system, method="topsis")
    per_year = build_index(panel, system, method="topsis", per_year=True)
    for result in (pooled, per_year):
        assert result.scores.shape == (panel.n_obs,)
        assert np.all(result.scores >= 0.0) and np.all(result.scores <= 1.0)
        assert abs(result.weights.sum() - 1.0) <= 1e-12
    # pooled normalization preserves the growth trend within an entity
    first = pooled.scores[: panel.n_years]
    assert first[-1] > first[0]
    rows = list(pooled.rows())
    assert rows[0][0] == panel.entities[0]
    assert rows[0][1] == panel.years[0]


def test_indicator_system_from_json(tmp_path):
    path = tmp_path / "system.json"
    path.write_text(json.dumps(demo_indicator_system()))
    system = IndicatorSystem.from_json(path)
    assert len(system.indicators) == 6
    assert all(ind.direction == "positive" for ind in system.indicators)

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([{"name": "a", "direction": "up", "variable": "v"}]))
    with pytest.raises(SchemaError):
        IndicatorSystem.from_json(bad)
    notalist = tmp_path / "obj.json"
    notalist.write_text("{}")
    with pytest.raises(SchemaError, match="array"):
        IndicatorSystem.from_json(notalist)


def test_indicator_system_rejects_duplicate_bindings():
    with pytest.raises(SchemaError, match="more than once"):
        IndicatorSystem(
            (Indicator("a", "positive", "v"), Indicator("b", "negative", "v"))
        )
    with pytest.raises(SchemaError, match="empty"):
        IndicatorSystem(())
