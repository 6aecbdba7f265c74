import numpy as np
import pytest

from gpm.errors import NumericalError, SchemaError, ValidationError
from gpm.game import (
    VERTICES,
    GamePayoffParams,
    StrategyState,
    classify_eigenvalues,
    default_preset,
    expected_payoffs,
    find_equilibria,
    jacobian,
    payoff_table,
    replicator_rhs,
    simulate_trajectory,
    vertex_eigenvalues,
    verify_preset,
)


def random_params(rng):
    return GamePayoffParams(
        Cg=rng.uniform(0, 3),
        alpha=rng.uniform(-3, 3),
        beta=rng.uniform(-3, 3),
        R=rng.uniform(-3, 3),
        I=rng.uniform(-3, 3),
        Cf=rng.uniform(0, 3),
        C=rng.uniform(0, 3),
        gamma=rng.uniform(-3, 3),
        O=rng.uniform(-3, 3),
        eta=rng.uniform(-3, 3),
        T=rng.uniform(-3, 3),
        Cp=rng.uniform(0, 3),
        epsilon=rng.uniform(-3, 3),
        delta=rng.uniform(-3, 3),
        Y=rng.uniform(-3, 3),
        J=rng.uniform(-3, 3),
        v=rng.uniform(-3, 3),
    )


def fd_jacobian(state, params, h=1e-6):
    base = state.as_array()
    out = np.empty((3, 3))
    from gpm.game import _rhs_unchecked

    for j in range(3):
        up = base.copy()
        dn = base.copy()
        up[j] += h
        dn[j] -= h
        out[:, j] = (_rhs_unchecked(*up, params) - _rhs_unchecked(*dn, params)) / (2 * h)
    return out


def test_payoff_table_covers_all_situations():
    table = payoff_table(default_preset())
    actions = {a for a, _ in table}
    assert len(table) == 8
    assert actions == {(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)}


def test_pure_state_payoffs_match_table():
    params = default_preset()
    lookup = {a: u for a, u in payoff_table(params)}
    for vx, vy, vz in VERTICES:
        state = StrategyState(float(vx), float(vy), float(vz))
        mixed = expected_payoffs(state, params)
        pure = lookup[(vx, vy, vz)]
        for player in range(3):
            own = (vx, vy, vz)[player]
            # the realized action's payoff and the average both match the table
            realized = mixed[player][0] if own == 1 else mixed[player][1]
            assert realized == pytest.approx(pure[player], abs=1e-12)
            assert mixed[player][2] == pytest.approx(pure[player], abs=1e-12)


def test_replicator_rhs_equals_payoff_advantage_form():
    rng = np.random.default_rng(1)
    for _ in range(25):
        params = random_params(rng)
        x, y, z = rng.random(3)
        state = StrategyState(x, y, z)
        mixed = expected_payoffs(state, params)
        expected = np.array(
            [
                x * (1 - x) * (mixed[0][0] - mixed[0][1]),
                y * (1 - y) * (mixed[1][0] - mixed[1][1]),
                z * (1 - z) * (mixed[2][0] - mixed[2][1]),
            ]
        )
        assert np.allclose(replicator_rhs(state, params), expected, atol=1e-12)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(2)
    for _ in range(10):
        params = random_params(rng)
        state = StrategyState(*rng.random(3))
        assert np.allclose(
            jacobian(state, params), fd_jacobian(state, params), atol=1e-7
        )


def test_vertex_eigenvalues_match_numeric_jacobian():
    rng = np.random.default_rng(3)
    for _ in range(10):
        params = random_params(rng)
        for report in vertex_eigenvalues(params):
            state = StrategyState(*report.point)
            numeric = np.sort(np.linalg.eigvals(jacobian(state, params)).real)
            symbolic = np.sort(np.asarray(report.eigenvalues, dtype=float))
            assert np.allclose(numeric, symbolic, atol=1e-9)


def test_classify_eigenvalues():
    assert classify_eigenvalues([-1.0, -2.0, -0.5]) == "stable"
    assert classify_eigenvalues([1.0, 2.0, 0.5]) == "unstable"
    assert classify_eigenvalues([-1.0, 2.0, 0.5]) == "saddle"
    assert classify_eigenvalues([0.0, 2.0, 0.5]) == "non-hyperbolic"
    assert classify_eigenvalues([-1.0 + 2.0j, -1.0 - 2.0j, -0.5]) == "stable"


def test_preset_satisfies_constraints_and_has_unique_attractor():
    params = default_preset()
    verify_preset(params)
    eq = find_equilibria(params)
    vertex_points = {r.point for r in eq if r.kind == "vertex"}
    assert vertex_points == {tuple(float(v) for v in p) for p in VERTICES}
    stable = eq.stable()
    assert len(stable) == 1
    assert stable[0].point == (0.0, 1.0, 1.0)
    origin = next(r for r in eq if r.point == (0.0, 0.0, 0.0))
    assert origin.classification == "unstable"


def test_preset_verification_rejects_bad_parameters():
    params = default_preset().to_dict()
    params["eta"] = -5.0  # kills the origin y-instability
    with pytest.raises(ValidationError, match="sign constraints"):
        verify_preset(GamePayoffParams.from_dict(params))


def test_find_equilibria_reports_face_points_when_present():
    rng = np.random.default_rng(7)
    found_nonvertex = False
    for _ in range(40):
        eq = find_equilibria(random_params(rng))
        assert len(eq) >= 8
        for r in eq:
            assert all(-1e-8 <= c <= 1.0 + 1e-8 for c in r.point)
        if any(r.kind != "vertex" for r in eq):
            found_nonvertex = True
    assert found_nonvertex


def test_reported_points_are_fixed_points():
    rng = np.random.default_rng(8)
    for _ in range(20):
        params = random_params(rng)
        for r in find_equilibria(params):
            state = StrategyState(*[min(1.0, max(0.0, c)) for c in r.point])
            assert np.linalg.norm(replicator_rhs(state, params)) < 1e-7


def test_params_dict_round_trip_and_validation():
    params = default_preset()
    again = GamePayoffParams.from_dict(params.to_dict())
    assert again == params
    with pytest.raises(SchemaError, match="missing"):
        GamePayoffParams.from_dict({"Cg": 1.0})
    bad = params.to_dict()
    bad["extra"] = 1.0
    with pytest.raises(SchemaError, match="unknown"):
        GamePayoffParams.from_dict(bad)
    neg = params.to_dict()
    neg["Cp"] = -1.0
    with pytest.raises(ValidationError, match=">= 0"):
        GamePayoffParams.from_dict(neg)


def test_strategy_state_bounds():
    with pytest.raises(ValidationError):
        StrategyState(-0.1, 0.5, 0.5)
    with pytest.raises(ValidationError):
        StrategyState(0.5, 1.1, 0.5)


def test_simulation_reaches_the_attractor():
    params = default_preset()
    traj = simulate_trajectory(StrategyState(0.2, 0.3, 0.4), params, t_end=100.0)
    assert np.allclose(traj.final_state(), [0.0, 1.0, 1.0], atol=1e-3)
    assert traj.t[0] == 0.0
    assert traj.t[-1] == pytest.approx(100.0)
    assert np.all(traj.states >= 0.0) and np.all(traj.states <= 1.0)


def test_vertices_are_stationary():
    params = default_preset()
    for vx, vy, vz in VERTICES:
        traj = simulate_trajectory(
            StrategyState(float(vx), float(vy), float(vz)), params, t_end=1.0
        )
        assert np.array_equal(traj.final_state(), [float(vx), float(vy), float(vz)])


def test_simulation_argument_validation():
    params = default_preset()
    with pytest.raises(ValidationError, match="dt"):
        simulate_trajectory(StrategyState(0.5, 0.5, 0.5), params, dt=0.0)
    with pytest.raises(ValidationError, match="t_end"):
        simulate_trajectory(StrategyState(0.5, 0.5, 0.5), params, t_end=-1.0)


def test_oversized_steps_raise_numerical_error():
    params = default_preset()
    with pytest.raises(NumericalError, match="reduce dt"):
        simulate_trajectory(StrategyState(0.5, 0.5, 0.5), params, t_end=50.0, dt=5.0)
