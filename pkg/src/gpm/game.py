"""Three-party evolutionary game on the unit cube.

Players are the three industry development levels (Rate1, Rate2, Rate3);
x, y, z are the probabilities that each plays its first action. The payoff
table drives replicator dynamics; equilibria are enumerated over cube
vertices, faces, edges, and interior seeds, and classified through the
Jacobian eigenvalues.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import NumericalError, SchemaError, ValidationError

STABILITY_TOL = 1e-9


@dataclass(frozen=True)
class GamePayoffParams:
    """The 17 payoff magnitudes, all in consistent utility units."""

    Cg: float  # player-1 cost of promoting player-2's digital adoption
    alpha: float  # subsidy paid to player 2
    beta: float  # return player 1 earns from player 2
    R: float  # player-1 economic loss when inactive
    I: float  # player-1 credibility loss when inactive
    Cf: float  # player-2 cost of adopting
    C: float  # extra player-1 outlay when player 2 does not adopt
    gamma: float  # player-2 loss from not innovating
    O: float  # player-2 revenue under traditional operation
    eta: float  # player-2 gain from adopting
    T: float  # feedback benefit player 2 pays player 3
    Cp: float  # player-3 cost of promoting
    epsilon: float  # benefit player 3 gets from player-2 innovation
    delta: float  # spillover benefit to player 1 when player 3 promotes
    Y: float  # player-3 loss when player 2 does not innovate
    J: float  # player-3 lost profit when not promoting
    v: float  # player-3 extra purchase cost when not promoting

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not np.isfinite(val):
                raise ValidationError(f"parameter {f.name} is not finite")
        for name in ("Cg", "Cf", "C", "Cp"):
            if getattr(self, name) < 0:
                raise ValidationError(f"cost parameter {name} must be >= 0")

    @classmethod
    def from_dict(cls, raw):
        names = {f.name for f in fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise SchemaError(f"unknown payoff parameter(s): {sorted(unknown)}")
        missing = names - set(raw)
        if missing:
            raise SchemaError(f"missing payoff parameter(s): {sorted(missing)}")
        return cls(**{k: float(v) for k, v in raw.items()})

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def default_preset():
    """Shipped simulation preset.

    The values are not taken from any dataset; they were chosen so that the
    origin repels in all three directions while (0,1,1) attracts, matching
    the qualitative vertex-stability pattern the module is built around.
    verify_preset() re-checks the sign constraints.
    """
    params = GamePayoffParams(
        Cg=1.0,
        alpha=3.0,
        beta=0.5,
        R=1.0,
        I=2.0,
        Cf=0.5,
        C=0.4,
        gamma=0.8,
        O=1.0,
        eta=2.0,
        T=0.6,
        Cp=0.8,
        epsilon=1.0,
        delta=0.5,
        Y=0.5,
        J=1.5,
        v=0.6,
    )
    verify_preset(params)
    return params


def verify_preset(p):
    """Sign constraints the shipped preset must satisfy.

    All three brackets are positive at the origin (so tiny perturbations of
    any single coordinate grow to 1), and (0,1,1) has all-negative vertex
    eigenvalues (a strict attractor exists).
    """
    checks = {
        "origin x-direction unstable": p.I - p.Cg + p.R > 0,
        "origin y-direction unstable": p.eta - p.Cf - p.O + p.gamma > 0,
        "origin z-direction unstable": p.J - p.Cp + p.v - p.Y > 0,
        "x keeps growing under z pressure": p.I - p.Cg - p.delta + p.R > 0,
        "(1,.,.) x-eigenvalue positive off the attractor": (
            p.alpha - p.beta + p.Cg - p.I - p.R > 0
        ),
        "(0,1,1) z-eigenvalue negative": p.Cp - p.epsilon - p.delta - p.T < 0,
        "(0,1,1) y-eigenvalue negative": p.Cf - p.eta + p.O + p.T - p.gamma < 0,
    }
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        raise ValidationError(f"preset violates sign constraints: {failed}")


@dataclass(frozen=True)
class StrategyState:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for name, v in (("x", self.x), ("y", self.y), ("z", self.z)):
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"probability {name}={v} outside [0, 1]")

    def as_array(self):
        return np.array([self.x, self.y, self.z])


# Payoff table: situation -> (pure actions (ax, ay, az), payoffs (u1, u2, u3)).
# ax=1 means player 1 promotes, ay=1 player 2 innovates, az=1 player 3 promotes.
def payoff_table(params):
    p = params
    return (
        ((1, 1, 1), (p.beta - p.Cg - p.alpha, p.eta + p.alpha - p.Cf - p.T, p.epsilon + p.delta + p.T - p.Cp)),
        ((1, 1, 0), (p.beta - p.Cg - p.alpha, p.eta + p.alpha - p.Cf, -p.J - p.v)),
        ((0, 1, 1), (-p.R - p.I, p.eta - p.Cf - p.T, p.epsilon + p.delta + p.T - p.Cp)),
        ((0, 1, 0), (-p.R - p.I, p.eta - p.Cf, 0.0)),
        ((1, 0, 1), (-p.Cg - p.delta, p.O - p.gamma - p.C, p.delta - p.Cp - p.Y)),
        ((1, 0, 0), (-p.Cg, p.O - p.gamma - p.C, -p.J - p.v)),
        ((0, 0, 1), (-p.R - p.I, p.O - p.gamma, -p.Cp - p.Y)),
        ((0, 0, 0), (-p.R - p.I, p.O - p.gamma, -p.J - p.v)),
    )


def _payoff_lookup(params):
    return {actions: payoffs for actions, payoffs in payoff_table(params)}


def expected_payoffs(state, params):
    """Per player: (U_action1, U_action2, U_bar), mixing the pure payoffs by
    the opponents' probabilities."""
    table = _payoff_lookup(params)
    x, y, z = state.x, state.y, state.z
    probs = {1: (x, y, z), 0: (1.0 - x, 1.0 - y, 1.0 - z)}

    def mix(player, own_action):
        total = 0.0
        others = [i for i in range(3) if i != player]
        for a in (0, 1):
            for b in (0, 1):
                actions = [0, 0, 0]
                actions[player] = own_action
                actions[others[0]] = a
                actions[others[1]] = b
                w = probs[a][others[0]] * probs[b][others[1]]
                total += w * table[tuple(actions)][player]
        return total

    out = []
    own_probs = (x, y, z)
    for player in range(3):
        u1 = mix(player, 1)
        u2 = mix(player, 0)
        ubar = own_probs[player] * u1 + (1.0 - own_probs[player]) * u2
        out.append((u1, u2, ubar))
    return tuple(out)


def _brackets(x, y, z, p):
    """Replicator growth-rate brackets: rhs_i = p_i (1 - p_i) * bracket_i."""
    bx = p.I - p.Cg + p.R - y * (p.alpha - p.beta - p.delta * z) - p.delta * z
    by = p.eta - p.Cf - p.O + p.gamma + x * (p.alpha + p.C) - p.T * z
    bz = (
        p.J - p.Cp + p.v - p.Y
        + y * (p.epsilon - p.J + p.delta + p.T - p.v + p.Y + p.J * x - p.delta * x + p.v * x)
        + p.delta * x
    )
    return bx, by, bz


def _rhs_unchecked(x, y, z, params):
    bx, by, bz = _brackets(x, y, z, params)
    return np.array([x * (1.0 - x) * bx, y * (1.0 - y) * by, z * (1.0 - z) * bz])


def replicator_rhs(state, params):
    """(dx/dt, dy/dt, dz/dt) of the replicator system."""
    return _rhs_unchecked(state.x, state.y, state.z, params)


def jacobian(state, params):
    """Analytic 3x3 Jacobian of the replicator system."""
    p = params
    x, y, z = state.x, state.y, state.z
    bx, by, bz = _brackets(x, y, z, p)
    j = np.empty((3, 3))
    j[0, 0] = (1.0 - 2.0 * x) * bx
    j[0, 1] = x * (1.0 - x) * (p.beta - p.alpha + p.delta * z)
    j[0, 2] = x * (1.0 - x) * (p.delta * y - p.delta)
    j[1, 0] = y * (1.0 - y) * (p.alpha + p.C)
    j[1, 1] = (1.0 - 2.0 * y) * by
    j[1, 2] = y * (1.0 - y) * (-p.T)
    j[2, 0] = z * (1.0 - z) * (p.delta + y * (p.J - p.delta + p.v))
    j[2, 1] = z * (1.0 - z) * (
        p.epsilon - p.J + p.delta + p.T - p.v + p.Y + x * (p.J - p.delta + p.v)
    )
    j[2, 2] = (1.0 - 2.0 * z) * bz
    return j


@dataclass(frozen=True)
class EquilibriumReport:
    point: tuple
    eigenvalues: tuple
    classification: str  # stable | unstable | saddle | non-hyperbolic
    kind: str  # vertex | face | edge | interior

    def to_dict(self):
        return {
            "point": [float(v) for v in self.point],
            "eigenvalues": [
                {"re": float(np.real(e)), "im": float(np.imag(e))} for e in self.eigenvalues
            ],
            "classification": self.classification,
            "kind": self.kind,
        }


def classify_eigenvalues(eigs, tol=STABILITY_TOL):
    re = np.real(np.asarray(eigs, dtype=complex))
    if np.any(np.abs(re) <= tol):
        return "non-hyperbolic"
    if np.all(re < -tol):
        return "stable"
    if np.all(re > tol):
        return "unstable"
    return "saddle"


VERTICES = (
    (0, 0, 0),
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (1, 1, 0),
    (1, 0, 1),
    (0, 1, 1),
    (1, 1, 1),
)


def vertex_eigenvalues(params):
    """Eigenvalue reports for the 8 pure-strategy fixed points.

    At a vertex the Jacobian is diagonal: eigenvalue_i = (1 - 2 p_i) times
    the i-th growth-rate bracket, in (x, y, z) order.
    """
    reports = []
    for vx, vy, vz in VERTICES:
        bx, by, bz = _brackets(float(vx), float(vy), float(vz), params)
        eigs = (
            (1.0 - 2.0 * vx) * bx,
            (1.0 - 2.0 * vy) * by,
            (1.0 - 2.0 * vz) * bz,
        )
        reports.append(
            EquilibriumReport(
                point=(float(vx), float(vy), float(vz)),
                eigenvalues=eigs,
                classification=classify_eigenvalues(eigs),
                kind="vertex",
            )
        )
    return reports


def _bracket_jacobian(x, y, z, p):
    """3x3 partials of the brackets themselves (used by the Newton search)."""
    jb = np.zeros((3, 3))
    jb[0, 1] = -(p.alpha - p.beta - p.delta * z)
    jb[0, 2] = p.delta * (y - 1.0)
    jb[1, 0] = p.alpha + p.C
    jb[1, 2] = -p.T
    jb[2, 0] = p.delta + y * (p.J - p.delta + p.v)
    jb[2, 1] = (
        p.epsilon - p.J + p.delta + p.T - p.v + p.Y + x * (p.J - p.delta + p.v)
    )
    return jb


def _affine_root(f):
    """Root of an affine function on [0, 1] from its endpoint values."""
    f0, f1 = f(0.0), f(1.0)
    denom = f1 - f0
    if abs(denom) < 1e-14:
        return None
    r = -f0 / denom
    return r if 1e-9 < r < 1.0 - 1e-9 else None


def _face_solutions(params):
    """Closed-form face equilibria: on each face the two free brackets each
    depend on exactly one free coordinate, so both reduce to affine roots."""
    out = []
    for c in (0.0, 1.0):
        # face z = c: bx affine in y, by affine in x
        y_star = _affine_root(lambda y: _brackets(0.0, y, c, params)[0])
        x_star = _affine_root(lambda x: _brackets(x, 0.0, c, params)[1])
        if x_star is not None and y_star is not None:
            out.append((x_star, y_star, c))
        # face y = c: bx affine in z, bz affine in x
        z_star = _affine_root(lambda z: _brackets(0.0, c, z, params)[0])
        x_star = _affine_root(lambda x: _brackets(x, c, 0.0, params)[2])
        if x_star is not None and z_star is not None:
            out.append((x_star, c, z_star))
        # face x = c: by affine in z, bz affine in y
        z_star = _affine_root(lambda z: _brackets(c, 0.0, z, params)[1])
        y_star = _affine_root(lambda y: _brackets(c, y, 0.0, params)[2])
        if y_star is not None and z_star is not None:
            out.append((c, y_star, z_star))
    return out


def _edge_solutions(params):
    """Whole-edge continua occur only when the free coordinate's bracket is
    identically zero on the edge (a measure-zero parameter coincidence);
    report the midpoint, flagged non-hyperbolic by classification."""
    out = []
    free_axes = {0: "x", 1: "y", 2: "z"}
    for axis in free_axes:
        others = [i for i in range(3) if i != axis]
        for a in (0.0, 1.0):
            for b in (0.0, 1.0):
                point = [0.0, 0.0, 0.0]
                point[others[0]] = a
                point[others[1]] = b
                point[axis] = 0.5  # bracket_axis does not depend on axis
                if abs(_brackets(*point, params)[axis]) < 1e-12:
                    out.append(tuple(point))
    return out


def _newton_interior(params, seeds_per_axis=5, max_iter=50):
    """Damped Newton on the bracket system from an interior seed grid."""
    roots = []
    failures = 0
    grid = np.linspace(0.1, 0.9, seeds_per_axis)
    for sx in grid:
        for sy in grid:
            for sz in grid:
                pt = np.array([sx, sy, sz])
                ok = False
                for _ in range(max_iter):
                    b = np.array(_brackets(*pt, params))
                    if np.linalg.norm(b) < 1e-12:
                        ok = True
                        break
                    jb = _bracket_jacobian(*pt, params)
                    try:
                        step = np.linalg.solve(jb, -b)
                    except np.linalg.LinAlgError:
                        break
                    lam = 1.0
                    norm_b = np.linalg.norm(b)
                    for _ in range(30):
                        cand = pt + lam * step
                        bn = np.linalg.norm(np.array(_brackets(*cand, params)))
                        if bn < norm_b:
                            pt = cand
                            break
                        lam *= 0.5
                    else:
                        break
                if ok and np.all(pt > 1e-9) and np.all(pt < 1.0 - 1e-9):
                    roots.append(tuple(pt))
                elif not ok:
                    failures += 1
    return roots, failures


@dataclass(frozen=True)
class EquilibriumSet:
    reports: tuple
    newton_failures: int = 0

    def __iter__(self):
        return iter(self.reports)

    def __len__(self):
        return len(self.reports)

    def stable(self):
        return [r for r in self.reports if r.classification == "stable"]


def find_equilibria(params):
    """All fixed points inside the unit cube: the 8 vertices, closed-form
    face/edge solutions, and Newton-refined interior roots, deduplicated."""
    reports = list(vertex_eigenvalues(params))
    seen = [r.point for r in reports]

    def add(point, kind):
        for q in seen:
            if max(abs(a - b) for a, b in zip(point, q)) < 1e-8:
                return
        seen.append(point)
        state = StrategyState(*point)
        eigs = tuple(np.linalg.eigvals(jacobian(state, params)))
        reports.append(
            EquilibriumReport(
                point=point,
                eigenvalues=eigs,
                classification=classify_eigenvalues(eigs),
                kind=kind,
            )
        )

    for pt in _face_solutions(params):
        add(pt, "face")
    for pt in _edge_solutions(params):
        add(pt, "edge")
    interior, failures = _newton_interior(params)
    for pt in interior:
        add(pt, "interior")
    return EquilibriumSet(reports=tuple(reports), newton_failures=failures)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)  # (n, 3)

    def final_state(self):
        return self.states[-1].copy()

    def rows(self):
        for ti, (x, y, z) in zip(self.t, self.states):
            yield float(ti), float(x), float(y), float(z)


def simulate_trajectory(initial, params, t_end=50.0, dt=0.01):
    """Fixed-step RK4 integration of the replicator system.

    Committed states may overshoot [0,1] by at most 1e-9 (clamped); larger
    overshoot raises and suggests a smaller dt.
    """
    if dt <= 0:
        raise ValidationError("dt must be positive")
    if t_end < 0:
        raise ValidationError("t_end must be nonnegative")
    state = initial.as_array()
    n_steps = int(round(t_end / dt))
    out = np.empty((n_steps + 1, 3))
    out[0] = state
    for step in range(n_steps):
        s = out[step]
        k1 = _rhs_unchecked(*s, params)
        k2 = _rhs_unchecked(*(s + 0.5 * dt * k1), params)
        k3 = _rhs_unchecked(*(s + 0.5 * dt * k2), params)
        k4 = _rhs_unchecked(*(s + dt * k3), params)
        nxt = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        over = max(float((-nxt).max()), float((nxt - 1.0).max()), 0.0)
        if over > 1e-9:
            raise NumericalError(
                f"state left the unit cube by {over:.3e} at t={dt * (step + 1):.4f}; "
                "reduce dt"
            )
        out[step + 1] = np.clip(nxt, 0.0, 1.0)
    t = np.arange(n_steps + 1) * dt
    return Trajectory(t=t, states=out)
