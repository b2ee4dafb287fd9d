"""Minimal deterministic SVG 1.1 scatter plots."""

from __future__ import annotations

import warnings

import numpy as np

from .linalg import as_data_matrix

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
SIZE = 500.0
RADIUS = 2
MARGIN = 0.05

HEADER = """\
<?xml version="1.0" encoding="UTF-8" standalone="no"?>
<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0f}" height="{h:.0f}" viewBox="{x0:.6f} {y0:.6f} {vw:.6f} {vh:.6f}">
<rect x="{x0:.6f}" y="{y0:.6f}" width="{vw:.6f}" height="{vh:.6f}" fill="#ffffff"/>
"""


def _fit(lo, hi):
    span = hi - lo
    if span <= 0:
        span = 1.0  # a single point or a flat axis still gets a box
    pad = MARGIN * span
    return lo - pad, span + 2 * pad


def scatter_svg(Y, labels=None) -> str:
    """Render the first two columns of ``Y`` as an SVG document string.

    Data coordinates are kept as-is and the viewBox is fit to the data with
    a 5% margin; the y axis is flipped so larger values plot higher.
    """
    Y = as_data_matrix(Y, "Y")
    if Y.shape[1] > 2:
        warnings.warn(f"scatter plot drops {Y.shape[1] - 2} trailing axis/axes", stacklevel=2)
    if Y.shape[1] == 1:
        Y = np.column_stack([Y[:, 0], np.zeros(Y.shape[0])])
    x, y = Y[:, 0] + 0.0, -Y[:, 1] + 0.0  # + 0.0 turns -0.0 into 0.0
    x0, vw = _fit(x.min(), x.max())
    y0, vh = _fit(y.min(), y.max())
    # radius in viewBox units so that circles are RADIUS pixels on screen
    scale = SIZE / max(vw, vh)
    r = RADIUS / scale
    if labels is None:
        colors = [PALETTE[0]] * Y.shape[0]
    else:
        labels = np.asarray(labels)
        if labels.shape != (Y.shape[0],):
            raise ValueError("labels must have one entry per point")
        _, codes = np.unique(labels, return_inverse=True)
        colors = [PALETTE[c % len(PALETTE)] for c in codes]
    out = [HEADER.format(w=vw * scale, h=vh * scale, x0=x0, y0=y0, vw=vw, vh=vh)]
    for xi, yi, c in zip(x, y, colors):
        out.append(f'<circle cx="{xi:.6f}" cy="{yi:.6f}" r="{r:.6f}" fill="{c}"/>\n')
    out.append("</svg>\n")
    return "".join(out)


def emit_scatter_svg(Y, labels, path) -> None:
    text = scatter_svg(Y, labels)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path}: {exc.strerror}") from exc
