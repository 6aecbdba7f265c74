"""Single executable exposing all pipelines with file-based inputs/outputs.

Every subcommand is a pure function of (input files, flags, seed); outputs
are written atomically.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import os
import sys

import click
import numpy as np

from . import econometrics, fusion, game, indices, panel, report, synth
from .errors import NumericalError, SchemaError, ValidationError
from .ioutil import atomic_write_text

EXIT_OK = 0
EXIT_FILE = 3
EXIT_DATA = 4
EXIT_NUMERIC = 5

_EXIT_DOC = """\
Exit codes:
  0  success
  2  usage error (unknown subcommand or bad flags)
  3  missing or unreadable input file
  4  schema or data-validation error
  5  numerical failure
Env:
  GPM_THREADS  caps worker threads for parallel candidate scans (default 1).
"""


def _fail(code, message):
    click.echo(f"error {code}: {message}", err=True)
    sys.exit(code)


def handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except FileNotFoundError as exc:
            _fail(EXIT_FILE, f"file not found: {exc.filename or exc}")
        except IsADirectoryError as exc:
            _fail(EXIT_FILE, f"not a file: {exc.filename or exc}")
        except SchemaError as exc:
            _fail(EXIT_DATA, str(exc))
        except ValidationError as exc:
            _fail(EXIT_DATA, str(exc))
        except NumericalError as exc:
            _fail(EXIT_NUMERIC, str(exc))

    return wrapper


def _write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _parse_floats(text, expected=None, label="value list"):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise SchemaError(f"bad {label}: {text!r}") from None
    if expected is not None and len(values) != expected:
        raise SchemaError(f"{label} must have {expected} comma-separated values")
    return values


@click.group(epilog=_EXIT_DOC)
@click.version_option(package_name="gpm")
def main():
    """Composite indices, panel econometrics, decision fusion, and the
    three-party evolutionary game, from the command line."""


# ---------------------------------------------------------------------------
# index


@main.group()
def index():
    """Composite index construction."""


@index.command("build")
@click.option("--panel", "panel_path", required=True, type=click.Path(), help="Long-format panel CSV.")
@click.option("--system", "system_path", required=True, type=click.Path(), help="Indicator system JSON.")
@click.option("--method", type=click.Choice(["topsis", "weighted-sum"]), default="topsis", show_default=True)
@click.option("--per-year", is_flag=True, help="Normalize within each year instead of pooling.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output score CSV; a .weights.json sidecar is written next to it.")
@handle_errors
def index_build(panel_path, system_path, method, per_year, out_path):
    """Build a composite index from a panel and an indicator system."""
    data = panel.load_panel_csv(panel_path)
    system = indices.IndicatorSystem.from_json(system_path)
    result = indices.build_index(data, system, method=method, per_year=per_year)
    rows = [(e, y, "%.17g" % s) for e, y, s in result.rows()]
    atomic_write_text(out_path, _csv_text(["entity", "year", "score"], rows))
    sidecar = os.path.splitext(out_path)[0] + ".weights.json"
    _write_json(
        sidecar,
        {
            "method": method,
            "weights": {n: float(w) for n, w in zip(result.indicator_names, result.weights)},
        },
    )
    click.echo(f"wrote {len(rows)} scores to {out_path} (weights: {sidecar})")


# ---------------------------------------------------------------------------
# regress


def _regress_options(func):
    options = [
        click.option("--panel", "panel_path", required=True, type=click.Path()),
        click.option("--dep", required=True, help="Dependent variable name."),
        click.option("--vars", "regressors", required=True, help="Comma-separated regressors."),
        click.option("--entity-effects/--no-entity-effects", default=True, show_default=True),
        click.option("--time-effects/--no-time-effects", default=False, show_default=True),
        click.option("--from", "from_year", type=int, default=None, help="First year to keep."),
        click.option("--to", "to_year", type=int, default=None, help="Last year to keep."),
        click.option("--out", "out_path", type=click.Path(), default=None, help="Write the coefficient table as JSON."),
    ]
    for opt in reversed(options):
        func = opt(func)
    return func


def _load_regression_inputs(panel_path, dep, regressors, entity_effects, time_effects, from_year, to_year):
    data = panel.load_panel_csv(panel_path)
    if from_year is not None or to_year is not None:
        data = data.filter_years(from_year, to_year)
    spec = econometrics.RegressionSpec(
        dependent=dep,
        regressors=tuple(v.strip() for v in regressors.split(",") if v.strip()),
        entity_effects=entity_effects,
        time_effects=time_effects,
    )
    spec.validate_names(data)
    return data, spec


def _emit_fit(fit, out_path):
    click.echo(fit.text_table())
    if out_path:
        _write_json(out_path, fit.to_dict())
        click.echo(f"wrote {out_path}")


@main.group()
def regress():
    """Panel regressions."""


@regress.command("fe")
@_regress_options
@handle_errors
def regress_fe(panel_path, dep, regressors, entity_effects, time_effects, from_year, to_year, out_path):
    """Fixed-effects (within) regression."""
    data, spec = _load_regression_inputs(
        panel_path, dep, regressors, entity_effects, time_effects, from_year, to_year
    )
    _emit_fit(econometrics.fit_fixed_effects(data, spec), out_path)


def _load_weights(path, n_expected):
    """Weights input: either a coordinates CSV (entity,lat,lon) turned into
    row-standardized inverse-distance weights, or a square matrix CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is not None and [h.strip() for h in header[:3]] == ["entity", "lat", "lon"]:
        _, coords = panel.load_coordinates_csv(path)
        w = panel.build_inverse_distance_weights(coords, row_standardize=True)
    else:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader)  # header: entity,<entity names...>
            matrix = []
            for row in reader:
                if row:
                    matrix.append([float(v) for v in row[1:]])
        m = np.asarray(matrix, dtype=float)
        sums = m.sum(axis=1)
        if np.allclose(sums[sums > 0], 1.0, atol=1e-9):
            w = panel.SpatialWeights(m, row_standardized=True)
        else:
            raw = panel.SpatialWeights(m, row_standardized=False)
            sums = raw.matrix.sum(axis=1, keepdims=True)
            std = np.where(sums > 0, raw.matrix / sums, raw.matrix)
            w = panel.SpatialWeights(std, row_standardized=True)
    if w.n != n_expected:
        raise ValidationError(f"{path}: weights are {w.n}x{w.n} but the panel has {n_expected} entities")
    return w


@regress.command("sdm")
@_regress_options
@click.option("--weights", "weights_path", required=True, type=click.Path(), help="Coordinates CSV (entity,lat,lon) or a square weight-matrix CSV.")
@handle_errors
def regress_sdm(panel_path, dep, regressors, entity_effects, time_effects, from_year, to_year, out_path, weights_path):
    """Fixed-effect spatial Durbin model (quasi-ML)."""
    data, spec = _load_regression_inputs(
        panel_path, dep, regressors, entity_effects, time_effects, from_year, to_year
    )
    weights = _load_weights(weights_path, data.n_entities)
    _emit_fit(econometrics.fit_sdm(data, spec, weights), out_path)


@regress.command("threshold")
@_regress_options
@click.option("--threshold-var", required=True, help="Threshold variable name.")
@click.option("--focal", required=True, help="Regressor whose slope switches regimes.")
@click.option("--trim", type=float, default=0.05, show_default=True, help="Trimming fraction per side.")
@handle_errors
def regress_threshold(panel_path, dep, regressors, entity_effects, time_effects, from_year, to_year, out_path, threshold_var, focal, trim):
    """Single-threshold regression via SSR grid search."""
    data, spec = _load_regression_inputs(
        panel_path, dep, regressors, entity_effects, time_effects, from_year, to_year
    )
    _emit_fit(econometrics.fit_threshold(data, spec, threshold_var, focal, trim=trim), out_path)


@regress.command("moderation")
@click.option("--panel", "panel_path", required=True, type=click.Path())
@click.option("--dep", required=True)
@click.option("--focal", required=True)
@click.option("--moderator", required=True)
@click.option("--controls", default="", help="Comma-separated control variables.")
@click.option("--from", "from_year", type=int, default=None)
@click.option("--to", "to_year", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@handle_errors
def regress_moderation(panel_path, dep, focal, moderator, controls, from_year, to_year, out_path):
    """Three-model moderation layout with a centered interaction."""
    data = panel.load_panel_csv(panel_path)
    if from_year is not None or to_year is not None:
        data = data.filter_years(from_year, to_year)
    control_names = tuple(v.strip() for v in controls.split(",") if v.strip())
    fit = econometrics.fit_moderation(data, dep, focal, moderator, control_names)
    _emit_fit(fit, out_path)


# ---------------------------------------------------------------------------
# fusion


@main.group(name="fusion")
def fusion_group():
    """Parzen-window decision fusion."""


@fusion_group.command("run")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--observe", required=True, help="Comma-separated feature values.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@handle_errors
def fusion_run(model_path, observe, out_path):
    """Score an observation against every class and pick the best."""
    model = fusion.FusionModel.from_json(model_path)
    obs = _parse_floats(observe, expected=model.n_features, label="observation")
    decision = fusion.fuse_decision(model, obs)
    payload = decision.to_dict(class_names=list(model.class_names))
    text = json.dumps(payload, indent=2, sort_keys=True)
    click.echo(text)
    if out_path:
        atomic_write_text(out_path, text + "\n")


@fusion_group.command("train")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--class", "class_index", required=True, type=int, help="0-based class index.")
@click.option("--observe", required=True, help="Comma-separated feature values.")
@handle_errors
def fusion_train(model_path, class_index, observe):
    """Append an observation to one class's sample matrix (in place)."""
    model = fusion.FusionModel.from_json(model_path)
    obs = _parse_floats(observe, expected=model.n_features, label="observation")
    updated = fusion.append_observation(model, class_index, obs)
    _write_json(model_path, updated.to_json_obj())
    n = updated.samples[class_index].shape[0]
    click.echo(f"class {class_index} now holds {n} samples")


# ---------------------------------------------------------------------------
# game


@main.group(name="game")
def game_group():
    """Three-party evolutionary game."""


def _load_params(path):
    if path is None:
        return game.default_preset()
    return game.GamePayoffParams.from_json(path)


@game_group.command("equilibria")
@click.option("--params", "params_path", type=click.Path(), default=None, help="Payoff params JSON (defaults to the shipped preset).")
@click.option("--out", "out_path", type=click.Path(), default=None)
@handle_errors
def game_equilibria(params_path, out_path):
    """Enumerate and classify the fixed points of the replicator system."""
    params = _load_params(params_path)
    eq = game.find_equilibria(params)
    click.echo(f"{'point':<24}{'kind':<10}{'classification':<16}eigenvalue real parts")
    for r in eq:
        pt = "(" + ", ".join(f"{v:.3f}" for v in r.point) + ")"
        res = ", ".join(f"{np.real(e):+.4f}" for e in r.eigenvalues)
        click.echo(f"{pt:<24}{r.kind:<10}{r.classification:<16}{res}")
    if eq.newton_failures:
        click.echo(f"note: {eq.newton_failures} interior seeds did not converge (skipped)")
    if out_path:
        _write_json(out_path, {"equilibria": [r.to_dict() for r in eq]})
        click.echo(f"wrote {out_path}")


@game_group.command("simulate")
@click.option("--params", "params_path", type=click.Path(), default=None)
@click.option("--init", required=True, help="Initial state x,y,z.")
@click.option("--t-end", type=float, default=50.0, show_default=True)
@click.option("--dt", type=float, default=0.01, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(), help="Trajectory CSV (t,x,y,z).")
@click.option("--svg", "svg_path", type=click.Path(), default=None, help="Also render a deterministic SVG chart.")
@click.option("--png", "png_path", type=click.Path(), default=None, help="Also render a matplotlib PNG chart.")
@handle_errors
def game_simulate(params_path, init, t_end, dt, out_path, svg_path, png_path):
    """Integrate the replicator dynamics from an initial state."""
    params = _load_params(params_path)
    x, y, z = _parse_floats(init, expected=3, label="initial state")
    traj = game.simulate_trajectory(game.StrategyState(x, y, z), params, t_end=t_end, dt=dt)
    rows = [("%.17g" % t, "%.17g" % a, "%.17g" % b, "%.17g" % c) for t, a, b, c in traj.rows()]
    atomic_write_text(out_path, _csv_text(["t", "x", "y", "z"], rows))
    click.echo(f"wrote {len(rows)} samples to {out_path}")
    if svg_path:
        atomic_write_text(svg_path, report.emit_svg(traj))
        click.echo(f"wrote {svg_path}")
    if png_path:
        report.save_png(traj, png_path)
        click.echo(f"wrote {png_path}")
    fx, fy, fz = traj.final_state()
    click.echo(f"final state: ({fx:.4f}, {fy:.4f}, {fz:.4f})")


# ---------------------------------------------------------------------------
# demo


@main.group()
def demo():
    """Seeded demo inputs."""


@demo.command("generate")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@handle_errors
def demo_generate(out_dir, seed):
    """Write a reproducible demo dataset: panel, coordinates, indicator
    panel + system, fusion model, and game params."""
    os.makedirs(out_dir, exist_ok=True)

    data = synth.demo_panel(seed)
    rows = []
    for i, entity in enumerate(data.entities):
        for t, year in enumerate(data.years):
            rows.append([entity, year] + ["%.17g" % v for v in data.data[i, t, :]])
    atomic_write_text(
        os.path.join(out_dir, "panel.csv"),
        _csv_text(["entity", "year"] + list(data.variables), rows),
    )

    coord_rows = [
        (e, "%.17g" % lat, "%.17g" % lon)
        for e, (lat, lon) in zip(synth.DEMO_ENTITIES, synth.DEMO_COORDS)
    ]
    atomic_write_text(
        os.path.join(out_dir, "coords.csv"), _csv_text(["entity", "lat", "lon"], coord_rows)
    )

    ind = synth.demo_indicator_panel(seed)
    ind_rows = []
    for i, entity in enumerate(ind.entities):
        for t, year in enumerate(ind.years):
            ind_rows.append([entity, year] + ["%.17g" % v for v in ind.data[i, t, :]])
    atomic_write_text(
        os.path.join(out_dir, "indicator_panel.csv"),
        _csv_text(["entity", "year"] + list(ind.variables), ind_rows),
    )
    _write_json(os.path.join(out_dir, "dei_system.json"), synth.demo_indicator_system())
    _write_json(os.path.join(out_dir, "fusion_model.json"), synth.demo_fusion_model(seed))
    _write_json(os.path.join(out_dir, "game_params.json"), game.default_preset().to_dict())

    names = [
        "panel.csv",
        "coords.csv",
        "indicator_panel.csv",
        "dei_system.json",
        "fusion_model.json",
        "game_params.json",
    ]
    for name in names:
        click.echo(f"wrote {os.path.join(out_dir, name)}")


if __name__ == "__main__":
    main()
