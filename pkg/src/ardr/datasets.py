"""Dataset ingestion (CSV) and seeded synthetic generators."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SYNTHETIC_KINDS = (
    "swiss_roll", "plane", "plane_plus_line", "plane_pareto", "gaussian_blobs", "gaussian",
)


class CSVFormatError(ValueError):
    pass


@dataclass
class DatasetSpec:
    source: str = "synthetic"
    kind: str = "swiss_roll"
    n: int = 1000
    seed: int = 0
    params: dict = field(default_factory=dict)
    path: str | None = None
    label_column: int | None = None
    subsample: int | None = None
    standardize: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown dataset keys: {sorted(unknown)}")
        return cls(**d)


# --- synthetic generators --------------------------------------------------


def swiss_roll(n, seed=0, noise=0.0, extra_on_manifold=0, n_classes=6):
    """Points ``(t cos t, h, t sin t)`` with ``t in [1.5 pi, 4.5 pi]``, ``h in [0, 21]``.

    ``extra_on_manifold`` further points are appended at uniform ``(t, h)`` on
    the same surface (no noise). Labels bin ``t`` into ``n_classes`` bands.
    """
    rng = np.random.default_rng(seed)
    m = n + int(extra_on_manifold)
    t = 1.5 * np.pi * (1.0 + 2.0 * rng.random(m))
    h = 21.0 * rng.random(m)
    X = np.column_stack([t * np.cos(t), h, t * np.sin(t)])
    if noise > 0:
        X[:n] += noise * rng.standard_normal((n, 3))
    frac = (t - 1.5 * np.pi) / (3.0 * np.pi)
    labels = np.minimum((frac * n_classes).astype(np.int64), n_classes - 1)
    return X, labels


def plane(n, seed=0, size=1.0):
    rng = np.random.default_rng(seed)
    X = np.zeros((n, 3))
    X[:, :2] = size * rng.random((n, 2))
    return X, None


def plane_plus_line(n, seed=0, size=1.0, line_fraction=0.1):
    """A unit plane at ``z = 0`` plus an orthogonal segment of points through its center."""
    rng = np.random.default_rng(seed)
    n_line = int(round(line_fraction * n))
    X = np.zeros((n, 3))
    X[:, :2] = size * rng.random((n, 2))
    X[n - n_line :, :2] = 0.5 * size
    X[n - n_line :, 2] = size * rng.random(n_line)
    labels = np.zeros(n, dtype=np.int64)
    labels[n - n_line :] = 1
    return X, labels


def plane_pareto(n, seed=0, size=1.0, alpha=1.5, scale=0.1):
    """A unit plane with heavy-tailed Pareto(``alpha``) noise in the third coordinate."""
    rng = np.random.default_rng(seed)
    X = np.zeros((n, 3))
    X[:, :2] = size * rng.random((n, 2))
    X[:, 2] = scale * rng.pareto(alpha, n)
    return X, None


def gaussian_blobs(n, seed=0, centers=5, dim=10, spread=1.0, box=3.0):
    rng = np.random.default_rng(seed)
    C = rng.uniform(-box, box, size=(int(centers), int(dim)))
    labels = rng.integers(0, int(centers), size=n)
    X = C[labels] + spread * rng.standard_normal((n, int(dim)))
    return X, labels


def gaussian(n, seed=0, dim=10, scales=None):
    """Anisotropic Gaussian cloud; default column scales ``1 / sqrt(j + 1)``."""
    rng = np.random.default_rng(seed)
    s = np.asarray(scales, dtype=np.float64) if scales is not None else 1.0 / np.sqrt(np.arange(1, dim + 1))
    return rng.standard_normal((n, s.size)) * s, None


_GENERATORS = {
    "swiss_roll": swiss_roll,
    "plane": plane,
    "plane_plus_line": plane_plus_line,
    "plane_pareto": plane_pareto,
    "gaussian_blobs": gaussian_blobs,
    "gaussian": gaussian,
}


def generate(kind, n, seed=0, **params):
    if kind not in _GENERATORS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {SYNTHETIC_KINDS}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return _GENERATORS[kind](n, seed=seed, **params)


# --- CSV -------------------------------------------------------------------


def _is_number(tok):
    try:
        float(tok)
    except ValueError:
        return False
    return True


def _label_codes(raw):
    uniq = sorted(set(raw), key=lambda s: (0, float(s), s) if _is_number(s) else (1, 0.0, s))
    lookup = {v: i for i, v in enumerate(uniq)}
    return np.array([lookup[v] for v in raw], dtype=np.int64)


def read_csv(path, label_column=None):
    """Comma-separated numbers, optional header, no quoting.

    Returns ``(X, labels)``; string labels are mapped to integer codes in
    sorted order (numerically when every label is a number).
    """
    lines = Path(path).read_text().splitlines()
    rows, raw_labels = [], []
    width = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        toks = [t.strip() for t in line.split(",")]
        if width is None:
            width = len(toks)
            if label_column is not None and not -width <= label_column < width:
                raise CSVFormatError(f"label column {label_column} missing (rows have {width} fields)")
            data_toks = [t for c, t in enumerate(toks) if label_column is None or c != label_column % width]
            if not all(_is_number(t) for t in data_toks):
                continue  # header
        elif len(toks) != width:
            raise CSVFormatError(f"line {lineno}: expected {width} fields, got {len(toks)}")
        lab = None
        if label_column is not None:
            lab = toks[label_column % width]
            toks = [t for c, t in enumerate(toks) if c != label_column % width]
        try:
            rows.append([float(t) for t in toks])
        except ValueError:
            raise CSVFormatError(f"line {lineno}: non-numeric value") from None
        if lab is not None:
            raw_labels.append(lab)
    if not rows:
        raise CSVFormatError(f"{path}: no data rows")
    X = np.array(rows, dtype=np.float64)
    labels = _label_codes(raw_labels) if label_column is not None else None
    return X, labels


def write_csv(path, X, labels=None):
    """Write rows with 17 significant digits so floats round-trip exactly."""
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="\n") as fh:
        for i, row in enumerate(X):
            fields = [f"{v:.17g}" for v in row]
            if labels is not None:
                fields.append(str(int(labels[i])))
            fh.write(",".join(fields) + "\n")


def load_dataset(spec: DatasetSpec):
    """Materialize a dataset: load or generate, subsample, then standardize."""
    if spec.source == "csv":
        if spec.path is None:
            raise ValueError("csv dataset needs a path")
        X, labels = read_csv(spec.path, spec.label_column)
    elif spec.source == "synthetic":
        X, labels = generate(spec.kind, spec.n, spec.seed, **spec.params)
    else:
        raise ValueError(f"unknown dataset source {spec.source!r}")
    if spec.subsample is not None and spec.subsample < X.shape[0]:
        rng = np.random.default_rng(spec.seed)
        idx = np.sort(rng.choice(X.shape[0], size=spec.subsample, replace=False))
        X = X[idx]
        labels = None if labels is None else labels[idx]
    if spec.standardize:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        X = np.where(sd > 0, (X - mu) / np.where(sd > 0, sd, 1.0), 0.0)
    return X, labels
