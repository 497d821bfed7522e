import json

import pytest

from fodwb import config
from fodwb.errors import ConfigError


def test_defaults():
    cfg = config.load()
    assert cfg.dataset.n_base_voxels == 567 and cfg.dataset.rotations_per_voxel == 100
    assert round(cfg.test_fraction * 567) == 72
    assert cfg.train.n_folds == 5 and cfg.train.val_fraction == 0.2
    assert cfg.csd.n_constraint_dirs == 300


def test_seed_propagates(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 9, "dataset": {"n_base_voxels": 3}, "paths": {"dataset": "d.jsonl"}}))
    cfg = config.load(p)
    assert cfg.dataset.seed == 9 and cfg.train.seed == 9
    assert cfg.paths.dataset == str(tmp_path / "d.jsonl")
    cfg.set_seed(4)
    assert cfg.dataset.seed == 4


@pytest.mark.parametrize("doc", [
    {"bogus": 1},
    {"dataset": {"n_base_voxels": 0}},
    {"train": {"rms_decay": 1.5}},
    {"test_fraction": 1.0},
    {"csd": {"tau": -1}},
    [],
])
def test_invalid(tmp_path, doc):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ConfigError):
        config.load(p)
