"""Parzen-window density estimation and expected-utility decision fusion.

Each decision class stores a sample matrix (rows = past observations,
columns = features). Features are treated as independent, so the class
conditional density is a product of per-feature window estimates; the fused
decision maximizes density times the class utility.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from .errors import SchemaError, ValidationError


def _gaussian(u):
    return np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)


def _uniform(u):
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


def _epanechnikov(u):
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


_KERNELS = {
    "gaussian": (_gaussian, (-np.inf, np.inf)),
    "uniform": (_uniform, (-1.0, 1.0)),
    "epanechnikov": (_epanechnikov, (-1.0, 1.0)),
}

_verified_kinds = set()


def _verify_kernel(kind):
    """Quadrature check that the window integrates to 1 (once per kind)."""
    if kind in _verified_kinds:
        return
    func, (a, b) = _KERNELS[kind]
    total, _ = quad(lambda u: float(func(np.asarray(u))), a, b)
    if abs(total - 1.0) > 1e-6:
        raise ValidationError(f"kernel {kind!r} does not integrate to 1 (got {total})")
    _verified_kinds.add(kind)


@dataclass(frozen=True)
class KernelSpec:
    """Window function plus bandwidth; bandwidth None means per-feature
    data-driven choice (sample std * count^(-1/5))."""

    kind: str = "gaussian"
    bandwidth: object = None  # None, positive float, or per-feature array

    def __post_init__(self):
        if self.kind not in _KERNELS:
            raise SchemaError(f"unknown kernel {self.kind!r}; choose from {sorted(_KERNELS)}")
        _verify_kernel(self.kind)
        if self.bandwidth is not None:
            h = np.atleast_1d(np.asarray(self.bandwidth, dtype=float))
            if np.any(h <= 0) or not np.all(np.isfinite(h)):
                raise ValidationError("bandwidth must be positive and finite")

    @property
    def func(self):
        return _KERNELS[self.kind][0]


def default_bandwidth(samples):
    """Data-driven bandwidth: sample std times N^(-1/5); falls back to 1.0
    for degenerate columns (single sample or zero spread)."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        return 1.0
    s = float(np.std(x, ddof=1))
    h = s * n ** (-0.2)
    return h if h > 0 else 1.0


def parzen_density(samples, kernel, x, bandwidth=None):
    """Window density estimate P_N(x) = (1/N) sum_i (1/h) K((x - x_i)/h).

    x may be a scalar or an array; returns the matching shape.
    """
    s = np.asarray(samples, dtype=float).ravel()
    if s.size == 0:
        raise ValidationError("cannot estimate a density from zero samples")
    h = bandwidth
    if h is None:
        h = kernel.bandwidth if np.isscalar(kernel.bandwidth) else None
    if h is None:
        h = default_bandwidth(s)
    if h <= 0:
        raise ValidationError("bandwidth must be positive")
    xq = np.asarray(x, dtype=float)
    scalar = xq.ndim == 0
    xq = np.atleast_1d(xq)
    dens = kernel.func((xq[:, None] - s[None, :]) / h).mean(axis=1) / h
    return float(dens[0]) if scalar else dens


@dataclass(frozen=True)
class FusionModel:
    """Per-class sample matrices, utilities, and the shared kernel."""

    class_names: tuple
    samples: tuple = field(repr=False)  # one (n_i, k) array per class
    utilities: np.ndarray = field(repr=False)
    kernel: KernelSpec = KernelSpec()

    def __post_init__(self):
        if not self.class_names:
            raise SchemaError("fusion model needs at least one class")
        if len(self.samples) != len(self.class_names):
            raise SchemaError("one sample matrix per class required")
        mats = tuple(np.atleast_2d(np.asarray(m, dtype=float)) for m in self.samples)
        object.__setattr__(self, "samples", mats)
        k = mats[0].shape[1]
        for name, m in zip(self.class_names, mats):
            if m.shape[0] < 1:
                raise ValidationError(f"class {name!r} has no stored samples")
            if m.shape[1] != k:
                raise ValidationError(
                    f"class {name!r} has {m.shape[1]} features, expected {k}"
                )
        util = np.asarray(self.utilities, dtype=float)
        if util.shape != (len(self.class_names),):
            raise SchemaError("one utility per class required")
        object.__setattr__(self, "utilities", util)

    @property
    def n_classes(self):
        return len(self.class_names)

    @property
    def n_features(self):
        return self.samples[0].shape[1]

    def check_class(self, index):
        if not 0 <= index < self.n_classes:
            raise SchemaError(f"class index {index} out of range [0, {self.n_classes})")

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        try:
            kernel_raw = raw.get("kernel", {})
            kernel = KernelSpec(
                kind=kernel_raw.get("kind", "gaussian"),
                bandwidth=kernel_raw.get("bandwidth"),
            )
            classes = raw["classes"]
            names = tuple(c["name"] for c in classes)
            samples = tuple(np.asarray(c["samples"], dtype=float) for c in classes)
            utilities = np.array([c.get("utility", 1.0) for c in classes], dtype=float)
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"{path}: bad fusion model: {exc}") from None
        return cls(names, samples, utilities, kernel)

    def to_json_obj(self):
        bw = self.kernel.bandwidth
        if bw is not None and not np.isscalar(bw):
            bw = list(np.asarray(bw, dtype=float))
        return {
            "kernel": {"kind": self.kernel.kind, "bandwidth": bw},
            "classes": [
                {"name": n, "utility": float(u), "samples": m.tolist()}
                for n, u, m in zip(self.class_names, self.utilities, self.samples)
            ],
        }


def _feature_bandwidths(model, class_index):
    m = model.samples[class_index]
    bw = model.kernel.bandwidth
    if bw is None:
        return [default_bandwidth(m[:, j]) for j in range(m.shape[1])]
    h = np.atleast_1d(np.asarray(bw, dtype=float))
    if h.size == 1:
        return [float(h[0])] * m.shape[1]
    if h.size != m.shape[1]:
        raise ValidationError(
            f"bandwidth has {h.size} entries for {m.shape[1]} features"
        )
    return list(h)


def log_class_conditional_density(model, class_index, observation):
    """Sum over features of log per-feature densities (-inf if any is 0)."""
    model.check_class(class_index)
    obs = np.asarray(observation, dtype=float).ravel()
    if obs.size != model.n_features:
        raise ValidationError(
            f"observation has {obs.size} features, model expects {model.n_features}"
        )
    m = model.samples[class_index]
    hs = _feature_bandwidths(model, class_index)
    total = 0.0
    for j in range(model.n_features):
        d = parzen_density(m[:, j], model.kernel, obs[j], bandwidth=hs[j])
        if d <= 0.0:
            return -np.inf
        total += math.log(d)
    return total


def class_conditional_density(model, class_index, observation):
    """Product over features of per-feature window densities."""
    return math.exp(log_class_conditional_density(model, class_index, observation))


@dataclass(frozen=True)
class FusionDecision:
    chosen: object  # class index, or None when no class has any density
    scores: np.ndarray = field(repr=False)  # density * utility per class
    densities: np.ndarray = field(repr=False)
    no_evidence: bool = False

    def to_dict(self, class_names=None):
        out = {
            "chosen": None if self.chosen is None else int(self.chosen),
            "no_evidence": self.no_evidence,
            "scores": [float(s) for s in self.scores],
            "densities": [float(d) for d in self.densities],
        }
        if class_names is not None:
            out["class_names"] = list(class_names)
            if self.chosen is not None:
                out["chosen_name"] = class_names[self.chosen]
        return out


def fuse_decision(model, observation):
    """Loop over classes, score density * utility, return the argmax.

    Ties break toward the lowest class index. When every class conditional
    density is numerically zero the result is an explicit no-evidence
    outcome rather than an arbitrary class.
    """
    logd = np.array(
        [log_class_conditional_density(model, i, observation) for i in range(model.n_classes)]
    )
    finite = np.isfinite(logd)
    densities = np.where(finite, np.exp(np.where(finite, logd, 0.0)), 0.0)
    if not finite.any():
        return FusionDecision(
            chosen=None,
            scores=np.zeros(model.n_classes),
            densities=densities,
            no_evidence=True,
        )
    # rescale in log domain before exponentiating so huge feature counts
    # cannot underflow the comparison
    shift = logd[finite].max()
    scaled = np.where(finite, np.exp(logd - shift), 0.0) * model.utilities
    chosen = int(np.argmax(scaled))
    scores = densities * model.utilities
    return FusionDecision(chosen=chosen, scores=scores, densities=densities)


def append_observation(model, class_index, observation):
    """Return a new model with the observation appended to one class."""
    model.check_class(class_index)
    obs = np.asarray(observation, dtype=float).ravel()
    if obs.size != model.n_features:
        raise ValidationError(
            f"observation has {obs.size} features, model expects {model.n_features}"
        )
    mats = list(model.samples)
    mats[class_index] = np.vstack([mats[class_index], obs])
    return replace(model, samples=tuple(mats))
