import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from ardr.cli import main
from ardr.datasets import generate, read_csv, write_csv
from ardr.experiment import ExperimentConfig, apply_override
from ardr.oracles import pca_oracle
from ardr.svg import PALETTE, emit_scatter_svg, scatter_svg

SVG_NS = "{http://www.w3.org/2000/svg}"


def circles(text):
    return ET.fromstring(text.encode()).findall(f"{SVG_NS}circle")


# --- svg --------------------------------------------------------------------------

def test_svg_single_point():
    cs = circles(scatter_svg(np.array([[1.0, 2.0]])))
    assert len(cs) == 1 and cs[0].get("r") is not None


def test_svg_ten_classes_distinct_colors():
    Y = np.random.default_rng(0).normal(size=(40, 2))
    fills = {c.get("fill") for c in circles(scatter_svg(Y, np.arange(40) % 10))}
    assert fills == set(PALETTE)


def test_svg_palette_cycles():
    fills = [c.get("fill") for c in circles(scatter_svg(np.zeros((12, 2)) + np.arange(12)[:, None], np.arange(12)))]
    assert fills[10] == fills[0] and fills[11] == fills[1]


def test_svg_deterministic_and_valid(tmp_path):
    Y = np.random.default_rng(1).normal(size=(30, 2))
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_scatter_svg(Y, None, a)
    emit_scatter_svg(Y.copy(), None, b)
    assert a.read_bytes() == b.read_bytes()
    root = ET.parse(a).getroot()
    assert root.get("version") == "1.1"
    x0, y0, w, h = map(float, root.get("viewBox").split())
    span = Y[:, 0].max() - Y[:, 0].min()
    assert x0 == pytest.approx(Y[:, 0].min() - 0.05 * span, abs=1e-6)
    assert w == pytest.approx(1.1 * span, abs=1e-6)


def test_svg_three_columns_warns():
    with pytest.warns(UserWarning, match="drops 1"):
        scatter_svg(np.random.default_rng(2).normal(size=(5, 3)))


def test_svg_unwritable(tmp_path):
    with pytest.raises(OSError):
        emit_scatter_svg(np.zeros((1, 2)), None, tmp_path / "missing" / "x.svg")


# --- config ---------------------------------------------------------------------------

def test_override_parsing():
    raw = {"scheme": "pca", "run": {"seed": 0}}
    out = apply_override(raw, "run.seed=3")
    assert out["run"]["seed"] == 3 and raw["run"]["seed"] == 0
    assert apply_override(raw, "scheme=dklle")["scheme"] == "dklle"
    with pytest.raises(ValueError):
        apply_override(raw, "noequals")


def test_config_rejects_unknowns():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"scheme": "tsne"})
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"scheme": "pca", "colour": 1})
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"scheme": "pca", "run": {"momentum": 0.9}})


# --- end to end -------------------------------------------------------------------------------

def write_cfg(tmp_path, name, **kw):
    cfg = {"dataset": {"kind": "swiss_roll", "n": 120, "seed": 1}, "k": 10,
           "outputs": str(tmp_path / name), **kw}
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(cfg))
    return p


def test_run_pca_oracle_pass_through(tmp_path):
    p = write_cfg(tmp_path, "orc", scheme="pca_oracle", dataset={"kind": "plane", "n": 50, "seed": 0})
    assert main(["run", str(p)]) == 0
    Y, _ = read_csv(tmp_path / "orc" / "embedding.csv")
    X, _ = generate("plane", 50, 0)
    assert Y.tobytes() == pca_oracle(X, 2).embedding.tobytes()
    ET.parse(tmp_path / "orc" / "scatter.svg")


def test_run_twice_byte_identical(tmp_path):
    p = write_cfg(tmp_path, "pca", scheme="pca", run={"epochs": 50, "learning_rate": 1e-6})
    assert main(["run", str(p), "--outputs", str(tmp_path / "r1")]) == 0
    assert main(["run", str(p), "--outputs", str(tmp_path / "r2")]) == 0
    for f in ("embedding.csv", "loss_curve.csv", "metrics.json", "scatter.svg"):
        assert (tmp_path / "r1" / f).read_bytes() == (tmp_path / "r2" / f).read_bytes()
    head = (tmp_path / "r1" / "loss_curve.csv").read_text().splitlines()
    assert head[0] == "epoch,raw,normalized" and len(head) == 52


@pytest.mark.parametrize("scheme,extra", [
    ("cmds", {"dissimilarity": "l1"}), ("isomap", {}), ("dkpca", {}),
    ("umap_intended", {}), ("cmds_oracle", {"dissimilarity": "geodesic"}),
    ("lle_oracle", {}), ("dklle", {"weights": "kernel"}),
])
def test_every_scheme_runs(tmp_path, scheme, extra):
    p = write_cfg(tmp_path, scheme, scheme=scheme, run={"epochs": 5}, **extra)
    assert main(["run", str(p)]) == 0
    m = json.loads((tmp_path / scheme / "metrics.json").read_text())
    assert m["scheme"] == scheme and "knn_accuracy" in m


def test_paired_configs_report_eq8(tmp_path, capsys):
    common = dict(weights="affinity", run={"epochs": 20, "learning_rate": 1.0, "init": "laplacian_eigenmaps"})
    a = write_cfg(tmp_path, "a", scheme="dklle", **common)
    b = write_cfg(tmp_path, "b", scheme="umap_effective", **common)
    assert main(["compare", str(a), str(b)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert {"eq8_2_5", "eq8_6_10", "knn_accuracy", "dklle_final_normalized"} <= set(out["diff"])
    for name in ("a", "b"):
        m = json.loads((tmp_path / name / "metrics.json").read_text())
        assert [r[:2] for r in m["eq8_ratios"]] == [[2, 5], [6, 10]]
        assert "dklle_final_loss" in m


def test_generate_and_metrics_commands(tmp_path, capsys):
    out = tmp_path / "roll.csv"
    assert main(["generate", "swiss_roll", "--n", "80", "--seed", "2", "--out", str(out)]) == 0
    X, labels = read_csv(out, label_column=-1)
    assert X.shape == (80, 3)
    ycsv = tmp_path / "y.csv"
    write_csv(ycsv, X)
    capsys.readouterr()
    assert main(["metrics", "--x", str(out), "--label-column", "-1", "--y", str(ycsv), "--k", "5"]) == 0
    # a 3-D "embedding" equal to the input is perfectly neighborhood preserving
    res = json.loads(capsys.readouterr().out)
    assert res["preservation_by_k"]["1"] == 1.0


def test_failure_is_one_line(tmp_path, capsys):
    p = write_cfg(tmp_path, "bad", scheme="pca", dataset={"source": "csv", "path": str(tmp_path / "nope.csv")})
    assert main(["run", str(p)]) == 1
    err = capsys.readouterr().err
    assert err.count("\n") == 1 and "error" in err


def test_console_script_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "ardr.cli", "generate", "plane", "--n", "3",
                        "--out", str(tmp_path / "p.csv")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
