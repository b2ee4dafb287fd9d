"""Config-driven experiment runs: dataset -> scheme -> optimizer -> files.

A config is one JSON object. Top-level keys (all optional except
``scheme``)::

    dataset        DatasetSpec fields (source, kind, n, seed, params, path,
                   label_column, subsample, standardize)
    scheme         pca | cmds | isomap | dkpca | dklle | umap_intended |
                   umap_effective | pca_oracle | cmds_oracle | lle_oracle
    d              embedding dimension (2)
    k              neighbors per point (15)
    knn_metric     euclidean_sq | l1, for the neighbor graph
    dissimilarity  euclidean_sq | l1 | geodesic, for cmds / cmds_oracle
    input_kernel   InputKernelSpec fields; dkpca defaults to rbf_fixed
                   without symmetrization, everything else to rbf_local
                   with fuzzy union
    weights        euclidean | kernel | affinity, how W is built for
                   dklle / lle_oracle (euclidean)
    reg            LLE Tikhonov factor (1e-3)
    init_path      CSV with the starting embedding when run.init = provided
    run            RunConfig fields
    probe          null | dklle: extra loss tracked along the trajectory
    metrics        knn_k (15), preservation_kmax (10),
                   eq8 ([[2, 5], [6, 10]]), eq8_inclusive (false)
    outputs        output directory ("outputs")
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .datasets import DatasetSpec, load_dataset, read_csv, write_csv
from .engine import RunConfig, descend, initial_embedding, umap_effective_optimize
from .kernels import InputKernelSpec, input_kernel_matrix
from .linalg import double_center, gram, sq_dist_matrix
from .metrics import eq8_ratio, knn_accuracy, normalize_loss_curve, preservation_profile
from .neighbors import affinity_weights, geodesic_dists, knn_graph, lle_weights, m_matrix
from .objectives import (DKLLEScheme, DKPCAScheme, PCAScheme, UMAPIntendedScheme,
                         cmds_target, pca_loss)
from .oracles import cmds_oracle, lle_oracle, pca_oracle
from .svg import emit_scatter_svg

DESCENT_SCHEMES = ("pca", "cmds", "isomap", "dkpca", "dklle", "umap_intended")
ORACLE_SCHEMES = ("pca_oracle", "cmds_oracle", "lle_oracle")
SCHEMES = DESCENT_SCHEMES + ("umap_effective",) + ORACLE_SCHEMES
WEIGHT_MODES = ("euclidean", "kernel", "affinity")
DISSIMILARITIES = ("euclidean_sq", "l1", "geodesic")

_DEFAULT_METRICS = {"knn_k": 15, "preservation_kmax": 10, "eq8": [[2, 5], [6, 10]],
                    "eq8_inclusive": False}


@dataclass
class ExperimentConfig:
    scheme: str
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    d: int = 2
    k: int = 15
    knn_metric: str = "euclidean_sq"
    dissimilarity: str = "euclidean_sq"
    input_kernel: dict | None = None
    weights: str = "euclidean"
    reg: float = 1e-3
    init_path: str | None = None
    run: RunConfig = field(default_factory=RunConfig)
    probe: str | None = None
    metrics: dict = field(default_factory=lambda: dict(_DEFAULT_METRICS))
    outputs: str = "outputs"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if self.weights not in WEIGHT_MODES:
            raise ValueError(f"unknown weights {self.weights!r}; choose from {WEIGHT_MODES}")
        if self.dissimilarity not in DISSIMILARITIES:
            raise ValueError(f"unknown dissimilarity {self.dissimilarity!r}")
        if self.probe not in (None, "dklle"):
            raise ValueError(f"unknown probe {self.probe!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        unknown = set(self.metrics) - set(_DEFAULT_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics keys: {sorted(unknown)}")
        self.metrics = {**_DEFAULT_METRICS, **self.metrics}

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = copy.deepcopy(raw)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "scheme" not in raw:
            raise ValueError("config needs a 'scheme'")
        raw["dataset"] = DatasetSpec.from_dict(raw.get("dataset", {}))
        run = raw.get("run", {})
        bad = set(run) - {f.name for f in fields(RunConfig)}
        if bad:
            raise ValueError(f"unknown run keys: {sorted(bad)}")
        raw["run"] = RunConfig(**run)
        return cls(**raw)

    def kernel_spec(self) -> InputKernelSpec:
        if self.input_kernel is not None:
            return InputKernelSpec(**self.input_kernel)
        if self.scheme == "dkpca":
            return InputKernelSpec("rbf_fixed", symmetrize="none")
        return InputKernelSpec()


def apply_override(raw: dict, assignment: str) -> dict:
    """Apply ``key=value`` (value parsed as JSON, else a bare string).

    Dotted keys reach into nested objects: ``run.seed=3``.
    """
    if "=" not in assignment:
        raise ValueError(f"override {assignment!r} is not key=value")
    key, _, text = assignment.partition("=")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    out = copy.deepcopy(raw)
    node = out
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ValueError(f"override {key!r} descends into a non-object")
    node[parts[-1]] = value
    return out


def load_config(path, overrides=()) -> ExperimentConfig:
    with open(path) as fh:
        raw = json.load(fh)
    for o in overrides:
        raw = apply_override(raw, o)
    return ExperimentConfig.from_dict(raw)


@dataclass
class ExperimentResult:
    embedding: np.ndarray
    labels: np.ndarray | None
    loss_curve: list
    metrics: dict
    probe_curve: list | None = None


class _Prepared:
    """Lazily built intermediate matrices shared by the schemes."""

    def __init__(self, cfg: ExperimentConfig, X):
        self.cfg, self.X = cfg, X
        self._g = self._kx = self._w = None

    @property
    def g(self):
        if self._g is None:
            self._g = knn_graph(self.X, self.cfg.k, self.cfg.knn_metric)
        return self._g

    @property
    def KX(self):
        if self._kx is None:
            spec = self.cfg.kernel_spec()
            self._kx = input_kernel_matrix(self.X, self.g if spec.kind == "rbf_local" else None, spec)
        return self._kx

    @property
    def W(self):
        if self._w is None:
            mode = self.cfg.weights
            if mode == "affinity":
                self._w = affinity_weights(self.KX)
            elif mode == "kernel":
                self._w = lle_weights(self.X, self.g, self.cfg.reg, kernel=self.KX)
            else:
                self._w = lle_weights(self.X, self.g, self.cfg.reg)
        return self._w

    def umap_affinity(self):
        # spectral init always uses the UMAP graph, whatever the scheme's kernel
        spec = InputKernelSpec()
        if self.cfg.kernel_spec() == spec:
            return self.KX
        return input_kernel_matrix(self.X, self.g, spec)

    def sq_dissimilarity(self):
        how = self.cfg.dissimilarity
        if how == "geodesic":
            return geodesic_dists(self.g)[1]
        D = sq_dist_matrix(self.X, how)
        return D * D if how == "l1" else D


def _scheme(cfg: ExperimentConfig, prep: _Prepared):
    name = cfg.scheme
    if name == "pca":
        return PCAScheme(double_center(gram(prep.X)), "pca")
    if name == "cmds":
        return PCAScheme(cmds_target(prep.sq_dissimilarity()), "cmds")
    if name == "isomap":
        return PCAScheme(cmds_target(geodesic_dists(prep.g)[1]), "isomap")
    if name == "dkpca":
        return DKPCAScheme(double_center(prep.KX))
    if name == "dklle":
        return DKLLEScheme(prep.W)
    if name == "umap_intended":
        return UMAPIntendedScheme(prep.KX, cfg.run.eps)
    raise AssertionError(name)


def _oracle(cfg: ExperimentConfig, prep: _Prepared):
    if cfg.scheme == "pca_oracle":
        return pca_oracle(prep.X, cfg.d)
    if cfg.scheme == "cmds_oracle":
        return cmds_oracle(prep.sq_dissimilarity(), cfg.d)
    return lle_oracle(m_matrix(prep.W), cfg.d)


def _start(cfg: ExperimentConfig, prep: _Prepared):
    provided = None
    if cfg.run.init == "provided":
        if cfg.init_path is None:
            raise ValueError("run.init = provided needs init_path")
        provided, _ = read_csv(cfg.init_path)
    affinity = prep.umap_affinity() if cfg.run.init == "laplacian_eigenmaps" else None
    Y0 = initial_embedding(cfg.run, prep.X.shape[0], cfg.d, affinity, provided)
    if Y0.shape != (prep.X.shape[0], cfg.d):
        raise ValueError(f"initial embedding has shape {Y0.shape}, expected {(prep.X.shape[0], cfg.d)}")
    return Y0


def _quality(cfg: ExperimentConfig, X, Y, labels) -> dict:
    m = cfg.metrics
    out, notes = {}, []
    n = X.shape[0]
    if labels is not None:
        kk = min(int(m["knn_k"]), n - 1)
        out["knn_k"] = kk
        if np.unique(labels).size == 1:
            notes.append("single label class: knn accuracy is trivially 1")
        out["knn_accuracy"] = knn_accuracy(Y, labels, kk)
    kmax = max([int(m["preservation_kmax"])] + [int(b) for _, b in m["eq8"]])
    kmax = min(kmax, n - 1)
    profile = preservation_profile(X, Y, kmax)
    out["preservation_by_k"] = {str(k + 1): float(b) for k, b in enumerate(profile)}
    ratios = []
    for l, mm in m["eq8"]:
        try:
            r = eq8_ratio(X, Y, int(l), int(mm), inclusive=bool(m["eq8_inclusive"]), profile=profile)
        except (ValueError, ZeroDivisionError) as exc:
            notes.append(f"eq8({l},{mm}) undefined: {exc}")
            r = None
        ratios.append([int(l), int(mm), r])
    out["eq8_ratios"] = ratios
    out["notes"] = notes
    return out


def execute(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the experiment in memory (no files written)."""
    X, labels = load_dataset(cfg.dataset)
    prep = _Prepared(cfg, X)
    metrics = {"scheme": cfg.scheme, "n": int(X.shape[0]), "d": cfg.d}
    track = cfg.probe == "dklle" or cfg.scheme in ("dklle", "umap_effective")
    extra = {"dklle": DKLLEScheme(prep.W)} if track and cfg.scheme != "dklle" else {}
    probe_curve = None
    if cfg.scheme in ORACLE_SCHEMES:
        orc = _oracle(cfg, prep)
        Y = orc.embedding
        curve = [(0, _oracle_loss(cfg, prep, Y))]
        metrics["spectrum"] = [float(v) for v in orc.spectrum]
        metrics["rank_deficient"] = orc.rank_deficient
    elif cfg.scheme == "umap_effective":
        res = umap_effective_optimize(prep.KX, prep.g, _start(cfg, prep), cfg.run,
                                      loss_probe=UMAPIntendedScheme(prep.KX, cfg.run.eps),
                                      extra_probes=extra)
        Y, curve = res.embedding, res.loss_curve
        probe_curve = res.probe_curves.get("dklle")
    else:
        res = descend(_scheme(cfg, prep), _start(cfg, prep), cfg.run, extra_probes=extra)
        Y, curve = res.embedding, res.loss_curve
        probe_curve = curve if cfg.scheme == "dklle" else res.probe_curves.get("dklle")
    if curve:
        metrics["final_loss"] = float(curve[-1][1])
        metrics["initial_loss"] = float(curve[0][1])
    if probe_curve is not None:
        metrics["dklle_final_loss"] = float(probe_curve[-1][1])
    metrics.update(_quality(cfg, X, Y, labels))
    return ExperimentResult(Y, labels, curve, metrics, probe_curve)


def _oracle_loss(cfg, prep, Y):
    if cfg.scheme == "pca_oracle":
        return pca_loss(double_center(gram(prep.X)), Y)
    if cfg.scheme == "cmds_oracle":
        return pca_loss(cmds_target(prep.sq_dissimilarity()), Y)
    return float(np.sum(m_matrix(prep.W) * (Y @ Y.T)))


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def write_outputs(res: ExperimentResult, outdir) -> None:
    os.makedirs(outdir, exist_ok=True)
    write_csv(os.path.join(outdir, "embedding.csv"), res.embedding)
    norm = normalize_loss_curve(res.loss_curve) if res.loss_curve else []
    with open(os.path.join(outdir, "loss_curve.csv"), "w", newline="\n") as fh:
        fh.write("epoch,raw,normalized\n")
        for (e, raw), (_, nv) in zip(res.loss_curve, norm):
            fh.write(f"{int(e)},{_fmt(raw)},{_fmt(nv)}\n")
    with open(os.path.join(outdir, "metrics.json"), "w", newline="\n") as fh:
        json.dump(res.metrics, fh, sort_keys=True, indent=2)
        fh.write("\n")
    emit_scatter_svg(res.embedding, res.labels, os.path.join(outdir, "scatter.svg"))


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute ``cfg`` and write embedding.csv, loss_curve.csv, metrics.json
    and scatter.svg into ``cfg.outputs``."""
    res = execute(cfg)
    write_outputs(res, cfg.outputs)
    return res


def compare(cfg_a: ExperimentConfig, cfg_b: ExperimentConfig) -> dict:
    """Paired runs scored on the same footing.

    Both runs are executed and written. DK-LLE loss curves (when both runs
    track one) are normalized against their pooled min/max so final values
    are directly comparable. ``diff`` holds absolute metric gaps and the
    signed normalized-loss gap ``a - b``.
    """
    ra, rb = run_experiment(cfg_a), run_experiment(cfg_b)
    out = {"a": _summary(ra.metrics), "b": _summary(rb.metrics)}
    diff = {}
    if "knn_accuracy" in ra.metrics and "knn_accuracy" in rb.metrics:
        diff["knn_accuracy"] = abs(ra.metrics["knn_accuracy"] - rb.metrics["knn_accuracy"])
    for (l, m, x), (_, _, y) in zip(ra.metrics["eq8_ratios"], rb.metrics["eq8_ratios"]):
        if x is not None and y is not None:
            diff[f"eq8_{l}_{m}"] = abs(x - y)
    if ra.probe_curve and rb.probe_curve:
        pooled = [v for _, v in ra.probe_curve] + [v for _, v in rb.probe_curve]
        na = normalize_loss_curve(ra.probe_curve, pooled)[-1][1]
        nb = normalize_loss_curve(rb.probe_curve, pooled)[-1][1]
        out["a"]["dklle_final_normalized"] = na
        out["b"]["dklle_final_normalized"] = nb
        diff["dklle_final_normalized"] = na - nb
    out["diff"] = diff
    return out


def _summary(m: dict) -> dict:
    keys = ("scheme", "knn_accuracy", "eq8_ratios", "final_loss", "dklle_final_loss")
    return {k: m[k] for k in keys if k in m}
