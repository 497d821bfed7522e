"""In-memory stages of the workbench, shared by the CLI and the tests."""
import numpy as np

from . import metrics, sh
from .csd import Deconvolver, calibrate_response
from .errors import AlignmentError, DegenerateInput, EmptyInput, TooFewGroups
from .phantom import SIGNAL_ORDER, make_gradient_scheme

ACC_BINS = 30
ACC_RANGE = (-1.0, 1.0)


def split_by_group(samples, test_fraction, seed, exclude_groups=()):
    """Partition samples into (train, test) with whole groups on each side.

    ``round(test_fraction * n_groups)`` groups go to test. Groups listed in
    ``exclude_groups`` are dropped before splitting. Input order is kept
    within each output.
    """
    excluded = set(int(g) for g in exclude_groups)
    groups = np.unique([s.group_id for s in samples if s.group_id not in excluded])
    if groups.size < 2:
        raise TooFewGroups(f"need at least 2 groups to split, got {groups.size}")
    n_test = int(round(test_fraction * groups.size))
    n_test = min(max(n_test, 1), groups.size - 1)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5E1]))
    test_groups = set(groups[rng.permutation(groups.size)[:n_test]].tolist())
    train, test = [], []
    for s in samples:
        if s.group_id in excluded:
            continue
        (test if s.group_id in test_groups else train).append(s)
    return train, test


def response_for(dataset_cfg, scheme=None):
    """Response calibrated at the dataset's diffusivities and fit settings."""
    if scheme is None:
        scheme = make_gradient_scheme(dataset_cfg.n_directions, dataset_cfg.bvalue)
    return calibrate_response(
        scheme,
        dataset_cfg.axial_diffusivity,
        dataset_cfg.radial_diffusivity,
        order=SIGNAL_ORDER,
        lb_lambda=dataset_cfg.lb_lambda,
        seed=dataset_cfg.seed,
    )


def run_csd(signals, resp, params=None):
    """Deconvolve each row of ``signals``; returns (fods, n_nonconverged)."""
    solve = Deconvolver(resp, params, SIGNAL_ORDER)
    fods = np.empty((len(signals), sh.num_coeffs(SIGNAL_ORDER)))
    failed = 0
    for i, s in enumerate(np.asarray(signals, dtype=float)):
        res = solve(s)
        fods[i] = res.fod.coeffs
        failed += not res.converged
    return fods, failed


def compare(truth, pred_a, pred_b, names=("dnn", "csd"), truth_ids=None, ids_a=None, ids_b=None,
            n_bins=ACC_BINS):
    """Paired comparison report of two predictions against the truth.

    ``ids_*`` are the ``(group_id, voxel_id)`` pairs of each file when known;
    they must agree line by line.
    """
    truth = np.atleast_2d(truth)
    pred_a = np.atleast_2d(pred_a)
    pred_b = np.atleast_2d(pred_b)
    if not len(truth) == len(pred_a) == len(pred_b):
        raise AlignmentError(f"line counts differ: {len(truth)}, {len(pred_a)}, {len(pred_b)}")
    if len(truth) == 0:
        raise EmptyInput("no voxels to compare")
    for label, ids in ((names[0], ids_a), (names[1], ids_b)):
        if ids is not None and truth_ids is not None:
            bad = np.flatnonzero(np.any(np.asarray(ids) != np.asarray(truth_ids), axis=-1))
            if bad.size:
                raise AlignmentError(f"{label} predictions misaligned with truth at line {bad[0] + 1}")
    a, b = names
    pm = metrics.paired_metrics(truth, pred_a, pred_b)
    try:
        sr = metrics.wilcoxon_signed_rank(np.column_stack([pm.acc_a, pm.acc_b]))
        favors = a if sr.statistic > sr.n_effective * (sr.n_effective + 1) / 4 else b
        wilcoxon = {
            **sr.to_dict(),
            "favors": favors,
            "result": "significant" if sr.p_two_sided < 0.05 else "not significant",
        }
    except DegenerateInput:
        wilcoxon = {"result": "no difference", "statistic": None, "n_effective": 0,
                    "p_two_sided": 1.0, "method": None, "favors": None}
    except EmptyInput as exc:
        wilcoxon = {"result": f"not computed: {exc}", "statistic": None, "n_effective": None,
                    "p_two_sided": None, "method": None, "favors": None}
    return {
        "methods": [a, b],
        "n_voxels": int(len(truth)),
        "median_acc": {a: metrics.median(pm.acc_a), b: metrics.median(pm.acc_b)},
        "median_mse": {a: metrics.median(pm.mse_a), b: metrics.median(pm.mse_b)},
        "rmse": {a: metrics.rmse(pm.mse_a), b: metrics.rmse(pm.mse_b)},
        "wilcoxon": wilcoxon,
        "acc_histograms": {
            a: metrics.histogram(pm.acc_a, n_bins, ACC_RANGE).to_dict(),
            b: metrics.histogram(pm.acc_b, n_bins, ACC_RANGE).to_dict(),
        },
        "per_voxel": pm.records(names),
    }
