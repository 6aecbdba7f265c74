"""Trajectory rendering: a deterministic standalone SVG line chart, plus an
optional matplotlib PNG of the same chart for quick viewing."""

from __future__ import annotations

from .errors import ValidationError

_SERIES = (("x", "#1f77b4"), ("y", "#d62728"), ("z", "#2ca02c"))

_WIDTH = 640
_HEIGHT = 420
_MARGIN_L = 56
_MARGIN_R = 16
_MARGIN_T = 24
_MARGIN_B = 44


def _fmt(v):
    # fixed decimal formatting keeps the byte output reproducible
    return f"{v:.2f}"


def emit_svg(trajectory):
    """Render a trajectory as a standalone SVG with three labeled polylines.

    Byte output is a pure function of the input trajectory.
    """
    t = trajectory.t
    states = trajectory.states
    if len(t) == 0:
        raise ValidationError("cannot render an empty trajectory")
    t0, t1 = float(t[0]), float(t[-1])
    span = t1 - t0 if t1 > t0 else 1.0
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(ti):
        return _MARGIN_L + plot_w * (ti - t0) / span

    def py(v):
        return _MARGIN_T + plot_h * (1.0 - v)  # value axis fixed to [0, 1]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{_HEIGHT - _MARGIN_B}" stroke="black"/>',
        f'<line x1="{_MARGIN_L}" y1="{_HEIGHT - _MARGIN_B}" x2="{_WIDTH - _MARGIN_R}" '
        f'y2="{_HEIGHT - _MARGIN_B}" stroke="black"/>',
    ]
    for i in range(6):
        v = i / 5.0
        yy = _fmt(py(v))
        parts.append(
            f'<line x1="{_MARGIN_L - 4}" y1="{yy}" x2="{_MARGIN_L}" y2="{yy}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{yy}" font-size="11" text-anchor="end" '
            f'dominant-baseline="middle">{v:g}</text>'
        )
        tv = t0 + span * v
        xx = _fmt(px(tv))
        parts.append(
            f'<line x1="{xx}" y1="{_HEIGHT - _MARGIN_B}" x2="{xx}" '
            f'y2="{_HEIGHT - _MARGIN_B + 4}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{xx}" y="{_HEIGHT - _MARGIN_B + 16}" font-size="11" '
            f'text-anchor="middle">{tv:g}</text>'
        )
    parts.append(
        f'<text x="{(_MARGIN_L + _WIDTH - _MARGIN_R) // 2}" y="{_HEIGHT - 8}" '
        f'font-size="12" text-anchor="middle">t</text>'
    )
    for j, (label, color) in enumerate(_SERIES):
        pts = " ".join(
            f"{_fmt(px(ti))},{_fmt(py(v))}" for ti, v in zip(t, states[:, j])
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'
        )
        lx = _MARGIN_L + 12 + 56 * j
        parts.append(
            f'<line x1="{lx}" y1="{_MARGIN_T - 10}" x2="{lx + 18}" '
            f'y2="{_MARGIN_T - 10}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 22}" y="{_MARGIN_T - 6}" font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_png(trajectory, path):
    """Matplotlib rendering of the same chart, written to path."""
    if len(trajectory.t) == 0:
        raise ValidationError("cannot render an empty trajectory")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for j, (label, color) in enumerate(_SERIES):
        ax.plot(trajectory.t, trajectory.states[:, j], label=label, color=color)
    ax.set_xlabel("t")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
