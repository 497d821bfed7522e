import json

import numpy as np
import pytest

from fodwb import io, sh
from fodwb.cli import main

SMALL = {
    "seed": 3,
    "dataset": {"n_base_voxels": 12, "rotations_per_voxel": 3},
    "train": {"dims": [45, 16, 66], "max_epochs": 3, "patience": 2, "n_folds": 3, "val_fraction": 0.25},
    "test_fraction": 0.25,
}


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps(SMALL))
    return tmp_path


def run(workdir, *argv):
    return main([argv[0], "--config", str(workdir / "cfg.json"), *argv[1:]])


def test_full_flow(workdir):
    out = workdir / "out"
    assert run(workdir, "gen-data") == 0
    first = (out / "dataset.jsonl").read_bytes()
    assert len(first.splitlines()) == 48
    assert (out / "scheme.bvec").exists() and (out / "dataset.jsonl.meta.json").exists()
    assert run(workdir, "gen-data") == 0
    assert (out / "dataset.jsonl").read_bytes() == first

    assert run(workdir, "split") == 0
    train = io.read_samples(out / "train.jsonl")
    test = io.read_samples(out / "test.jsonl")
    assert len(train) + len(test) == 48
    assert not {s.group_id for s in train} & {s.group_id for s in test}
    assert len({s.group_id for s in test}) == 3

    assert run(workdir, "train") == 0
    model = json.loads((out / "model.json").read_text())
    assert model["dims"] == [45, 16, 66]
    assert run(workdir, "predict") == 0
    assert run(workdir, "csd") == 0
    assert run(workdir, "compare", "--truth", str(out / "test.jsonl"),
               "--a", str(out / "reports/pred_dnn.jsonl"), "--b", str(out / "reports/pred_csd.jsonl")) == 0
    report = json.loads((out / "reports/comparison.json").read_text())
    assert report["methods"] == ["dnn", "csd"] and report["n_voxels"] == 12
    assert run(workdir, "render", "--input", str(out / "reports/pred_csd.jsonl")) == 0
    assert (out / "figures/glyphs.svg").read_text().count("<path") == 12


def _truth_file(path, n=12, seed=0):
    rng = np.random.default_rng(seed)
    fods = rng.normal(size=(n, 66))
    groups = np.repeat(np.arange(n // 3), 3)
    io.write_predictions(path, groups, fods, "truth")
    return groups, fods


def test_compare_identical_is_no_difference(tmp_path):
    g, f = _truth_file(tmp_path / "t.jsonl")
    assert main(["compare", "--truth", str(tmp_path / "t.jsonl"), "--a", str(tmp_path / "t.jsonl"),
                 "--b", str(tmp_path / "t.jsonl"), "--out", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["wilcoxon"]["result"] == "no difference"


def test_compare_negated(tmp_path):
    g, f = _truth_file(tmp_path / "t.jsonl")
    neg = f.copy()
    neg[:, 1:] *= -1
    io.write_predictions(tmp_path / "a.jsonl", g, f, "good")
    io.write_predictions(tmp_path / "b.jsonl", g, neg, "flipped")
    assert main(["compare", "--truth", str(tmp_path / "t.jsonl"), "--a", str(tmp_path / "a.jsonl"),
                 "--b", str(tmp_path / "b.jsonl"), "--out", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["median_acc"]["good"] == pytest.approx(1.0, abs=1e-12)
    assert report["median_acc"]["flipped"] == pytest.approx(-1.0, abs=1e-12)
    assert report["wilcoxon"]["p_two_sided"] < 0.05
    assert report["wilcoxon"]["favors"] == "good"


def test_compare_misaligned_exit_2(tmp_path):
    g, f = _truth_file(tmp_path / "t.jsonl")
    io.write_predictions(tmp_path / "short.jsonl", g[:-1], f[:-1], "x")
    code = main(["compare", "--truth", str(tmp_path / "t.jsonl"), "--a", str(tmp_path / "t.jsonl"),
                 "--b", str(tmp_path / "short.jsonl"), "--out", str(tmp_path / "r.json")])
    assert code == 2
    assert not (tmp_path / "r.json").exists()


def test_exit_codes(tmp_path, capsys):
    assert main(["csd", "--dataset", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "p")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"nope": 1}')
    assert main(["gen-data", "--config", str(bad)]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 1
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["render", "--input", str(empty), "--out", str(tmp_path / "x.svg")]) == 2
    assert "EmptyScene" in capsys.readouterr().err


def test_render_signal_field(tmp_path):
    c = sh.delta_sh([0, 0, 1.0], 8).coeffs
    (tmp_path / "d.jsonl").write_text(json.dumps({"signal_sh": list(c)}) + "\n")
    assert main(["render", "--input", str(tmp_path / "d.jsonl"), "--field", "signal_sh",
                 "--out", str(tmp_path / "g.svg")]) == 0
    assert "<svg" in (tmp_path / "g.svg").read_text()
