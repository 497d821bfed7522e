"""``fodwb`` command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data-format
error, 3 numerical failure.
"""
import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__, config as config_mod, io, mlp, phantom, pipeline, sh
from .csd import CsdParams
from .errors import ConfigError, DataFormatError, EmptyScene, WorkbenchError
from .render import GlyphScene, render_svg

log = logging.getLogger("fodwb")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(args):
    cfg = config_mod.load(args.config)
    if args.seed is not None:
        cfg.set_seed(args.seed)
    return cfg


def _meta_path(dataset_path):
    return dataset_path + ".meta.json"


def _dataset_config(cfg, dataset_path):
    """Dataset settings recorded next to ``dataset_path``, else the config's."""
    meta = _meta_path(dataset_path)
    if os.path.exists(meta):
        recorded = io.read_json(meta).get("dataset", {})
        return config_mod._section(phantom.DatasetConfig, recorded, "dataset")
    return cfg.dataset


def _scheme_for(cfg, dataset_path):
    meta = _meta_path(dataset_path)
    if os.path.exists(meta):
        m = io.read_json(meta)
        bvec, bval = m.get("bvec"), m.get("bval")
        if bvec and bval and os.path.exists(bvec) and os.path.exists(bval):
            return io.read_fsl_scheme(bvec, bval)
    return None


def cmd_gen_data(args):
    cfg = _load_config(args)
    out = args.out or cfg.paths.dataset
    scheme_prefix = args.scheme or cfg.paths.scheme
    t0 = time.perf_counter()
    scheme = phantom.make_gradient_scheme(cfg.dataset.n_directions, cfg.dataset.bvalue)
    samples = phantom.generate_dataset(cfg.dataset, scheme, n_jobs=args.jobs)
    bvec, bval = scheme_prefix + ".bvec", scheme_prefix + ".bval"
    io.write_fsl_scheme(bvec, bval, scheme)
    io.write_samples(out, samples)
    io.write_json(_meta_path(out), {
        "format_version": io.FORMAT_VERSION,
        "dataset": cfg.dataset.to_dict(),
        "bvec": os.path.abspath(bvec),
        "bval": os.path.abspath(bval),
    })
    n_groups = len({s.group_id for s in samples})
    print(f"samples {len(samples)} groups {n_groups} -> {out} ({time.perf_counter() - t0:.1f}s)")


def cmd_split(args):
    cfg = _load_config(args)
    dataset = args.dataset or cfg.paths.dataset
    train_path, test_path = cfg.paths.train, cfg.paths.test
    if args.out:
        train_path = os.path.join(args.out, "train.jsonl")
        test_path = os.path.join(args.out, "test.jsonl")
    fraction = cfg.test_fraction if args.test_fraction is None else args.test_fraction
    if not 0 < fraction < 1:
        raise ConfigError("test fraction must lie in (0, 1)")
    exclude = cfg.exclude_groups if args.exclude_groups is None else args.exclude_groups
    samples = io.read_samples(dataset)
    train, test = pipeline.split_by_group(samples, fraction, cfg.seed, exclude)
    io.write_samples(train_path, train)
    io.write_samples(test_path, test)
    meta = _meta_path(dataset)
    if os.path.exists(meta):
        recorded = io.read_json(meta)
        io.write_json(_meta_path(train_path), recorded)
        io.write_json(_meta_path(test_path), recorded)
    n_tr = len({s.group_id for s in train})
    n_te = len({s.group_id for s in test})
    print(f"train {len(train)} samples / {n_tr} groups -> {train_path}")
    print(f"test {len(test)} samples / {n_te} groups -> {test_path}")


def cmd_train(args):
    cfg = _load_config(args)
    train_path = args.train or cfg.paths.train
    out = args.out or cfg.paths.model
    samples = io.read_samples(train_path)
    x, y, g = phantom.stack(samples)
    t0 = time.perf_counter()

    def progress(fold, epoch, tr, va):
        if args.verbose:
            print(f"fold {fold} epoch {epoch:3d} train {tr:.6f} val {va:.6f}", flush=True)

    result = mlp.train(x, y, g, cfg.train, progress=progress)
    elapsed = time.perf_counter() - t0
    doc = {
        "format_version": io.FORMAT_VERSION,
        **result.model.to_dict(),
        "config": cfg.train.to_dict(),
        "seed": cfg.seed,
    }
    io.write_json(out, doc)
    report = {
        "best_fold": result.best_fold,
        "best_val_mse": result.best_val_mse,
        "train_seconds": elapsed,
        "folds": [
            {"fold": h.fold, "best_epoch": h.best_epoch, "train_mse": h.train_mse, "val_mse": h.val_mse}
            for h in result.histories
        ],
    }
    report_path = args.report or os.path.join(cfg.paths.reports, "training.json")
    io.write_json(report_path, report)
    print(f"best fold {result.best_fold} val mse {result.best_val_mse:.6g} ({elapsed:.0f}s) -> {out}")


def load_model(path):
    doc = io.read_json(path)
    try:
        return mlp.MLPModel.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: not a model document ({exc})") from exc


def cmd_predict(args):
    cfg = _load_config(args)
    model = load_model(args.model or cfg.paths.model)
    dataset = args.dataset or cfg.paths.test
    out = args.out or os.path.join(cfg.paths.reports, "pred_dnn.jsonl")
    samples = io.read_samples(dataset)
    x, _, g = phantom.stack(samples)
    if x.shape[1] != model.dims[0]:
        raise DataFormatError(f"model expects {model.dims[0]} inputs, data has {x.shape[1]}")
    io.write_predictions(out, g, mlp.predict(model, x), "dnn")
    print(f"{len(samples)} predictions -> {out}")


def cmd_csd(args):
    cfg = _load_config(args)
    dataset = args.dataset or cfg.paths.test
    out = args.out or os.path.join(cfg.paths.reports, "pred_csd.jsonl")
    samples = io.read_samples(dataset)
    x, _, g = phantom.stack(samples)
    dcfg = _dataset_config(cfg, dataset)
    resp = pipeline.response_for(dcfg, _scheme_for(cfg, dataset))
    t0 = time.perf_counter()
    fods, failed = pipeline.run_csd(x, resp, cfg.csd)
    io.write_predictions(out, g, fods, "csd")
    print(f"{len(samples)} CSD fits ({failed} non-converged, {time.perf_counter() - t0:.1f}s) -> {out}")


def cmd_compare(args):
    cfg = _load_config(args)
    tg, truth, tv, _ = io.read_fod_lines(args.truth)
    ag, a, av, am = io.read_fod_lines(args.a)
    bg, b, bv, bm = io.read_fod_lines(args.b)
    names = tuple(args.names) if args.names else (am or "a", bm or "b")
    if names[0] == names[1]:
        names = (names[0] + "_a", names[1] + "_b")
    report = pipeline.compare(
        truth, a, b, names,
        truth_ids=np.column_stack([tg, tv]) if len(tg) == len(ag) == len(bg) else None,
        ids_a=np.column_stack([ag, av]),
        ids_b=np.column_stack([bg, bv]),
    )
    out = args.out or os.path.join(cfg.paths.reports, "comparison.json")
    io.write_json(out, report)
    w = report["wilcoxon"]
    print(
        f"median ACC {names[0]} {report['median_acc'][names[0]]:.4f} | {names[1]} "
        f"{report['median_acc'][names[1]]:.4f}; RMSE {report['rmse'][names[0]]:.4f} | "
        f"{report['rmse'][names[1]]:.4f}; Wilcoxon p={w['p_two_sided']} ({w['result']}) -> {out}"
    )


def cmd_render(args):
    cfg = _load_config(args)
    path = args.input
    try:
        with open(path, encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc
    rows = rows[args.start : args.start + args.max_voxels]
    cells = []
    for i, row in enumerate(rows):
        if args.field not in row:
            raise DataFormatError(f"line {args.start + i + 1} has no {args.field!r}")
        cells.append(sh.SHCoeffs.from_array(row[args.field]))
    if not cells:
        raise EmptyScene(f"{path} holds no voxels to render")
    scene = GlyphScene(cells, min(args.cols, len(cells)), args.normalize, args.density)
    out = args.out or os.path.join(cfg.paths.figures, "glyphs.svg")
    with io.atomic_open(out) as fh:
        fh.write(render_svg(scene))
    print(f"{len(cells)} glyphs -> {out}")


def build_parser():
    p = _Parser(prog="fodwb", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fodwb {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (JSON); defaults apply when omitted")
    common.add_argument("--seed", type=int, help="override the run seed")
    common.add_argument("--out", help="output path")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("gen-data", parents=[common], help="simulate the phantom dataset")
    s.add_argument("--scheme", help="prefix for the .bvec/.bval files")
    s.add_argument("--jobs", type=int, default=1, help="worker threads (output is identical)")
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("split", parents=[common], help="group-wise train/test split (--out is a directory)")
    s.add_argument("--dataset")
    s.add_argument("--test-fraction", type=float)
    s.add_argument("--exclude-groups", type=int, nargs="*")
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("train", parents=[common], help="train the MLP with grouped k-fold early stopping")
    s.add_argument("--train")
    s.add_argument("--report", help="training report path")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="predict FODs with a trained model")
    s.add_argument("--model")
    s.add_argument("--dataset")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("csd", parents=[common], help="constrained spherical deconvolution baseline")
    s.add_argument("--dataset")
    s.set_defaults(func=cmd_csd)

    s = sub.add_parser("compare", parents=[common], help="paired ACC/MSE comparison report")
    s.add_argument("--truth", required=True)
    s.add_argument("--a", required=True, help="first predictions file (e.g. DNN)")
    s.add_argument("--b", required=True, help="second predictions file (e.g. CSD)")
    s.add_argument("--names", nargs=2)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("render", parents=[common], help="SVG glyph field")
    s.add_argument("--input", required=True, help="dataset or predictions file")
    s.add_argument("--field", default="fod_sh", choices=["fod_sh", "signal_sh"])
    s.add_argument("--start", type=int, default=0)
    s.add_argument("--max-voxels", type=int, default=64)
    s.add_argument("--cols", type=int, default=8)
    s.add_argument("--normalize", default="voxel", choices=["voxel", "global"])
    s.add_argument("--density", type=int, default=128)
    s.set_defaults(func=cmd_render)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except WorkbenchError as exc:
        print(f"fodwb {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, TypeError) as exc:
        print(f"fodwb {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fodwb {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
