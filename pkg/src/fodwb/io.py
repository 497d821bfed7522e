"""File formats: JSON-lines samples and predictions, JSON documents, FSL schemes.

Floats are written with 17 significant digits so every value survives a
write/read cycle bit for bit. All writes go to a temporary file in the
target directory and are renamed into place.
"""
import json
import math
import os
import tempfile
from contextlib import contextmanager

import numpy as np

from . import sh
from .errors import DataFormatError
from .phantom import FOD_ORDER, SIGNAL_ORDER, VoxelSample
from .rotation import Rotation

FORMAT_VERSION = 1


def fmt_float(v):
    v = float(v)
    if not math.isfinite(v):
        raise DataFormatError(f"cannot serialise non-finite value {v}")
    return format(v, ".17g")


def fmt_array(values):
    return "[" + ",".join(fmt_float(v) for v in np.ravel(values)) + "]"


def _umask():
    mask = os.umask(0)
    os.umask(mask)
    return mask


@contextmanager
def atomic_open(path, mode="w"):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, encoding="utf-8", newline="\n") as fh:
            yield fh
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sample_line(sample, extra=None):
    parts = [f'"group_id":{int(sample.group_id)}', f'"rotation":{fmt_array(sample.rotation.q)}']
    parts.append(f'"signal_sh":{fmt_array(sample.signal_sh.coeffs)}')
    parts.append(f'"fod_sh":{fmt_array(sample.fod_sh.coeffs)}')
    for key, value in (extra or {}).items():
        parts.append(f"{json.dumps(key)}:{json.dumps(value)}")
    return "{" + ",".join(parts) + "}"


def write_samples(path, samples):
    with atomic_open(path) as fh:
        for s in samples:
            fh.write(sample_line(s))
            fh.write("\n")


def _coeff_field(obj, key, order, lineno):
    values = obj.get(key)
    if not isinstance(values, list) or len(values) != sh.num_coeffs(order):
        raise DataFormatError(
            f"line {lineno}: {key!r} must hold {sh.num_coeffs(order)} numbers"
        )
    return sh.SHCoeffs(order, np.array(values, dtype=float))


def _iter_json_lines(path):
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(obj, dict):
                raise DataFormatError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def read_samples(path):
    samples = []
    for lineno, obj in _iter_json_lines(path):
        try:
            rot = Rotation(tuple(obj.get("rotation", (1.0, 0.0, 0.0, 0.0))))
            group = obj["group_id"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"{path}:{lineno}: bad group_id/rotation ({exc})") from exc
        samples.append(VoxelSample(
            int(group),
            _coeff_field(obj, "signal_sh", SIGNAL_ORDER, lineno),
            _coeff_field(obj, "fod_sh", FOD_ORDER, lineno),
            rot,
        ))
    return samples


def write_predictions(path, group_ids, fods, method):
    """One line per voxel: ``voxel_id``, ``group_id``, ``method``, 66 ``fod_sh`` values."""
    fods = np.asarray(fods, dtype=float)
    if fods.ndim != 2 or fods.shape[1] > sh.num_coeffs(FOD_ORDER):
        raise DataFormatError(f"unexpected prediction array shape {fods.shape}")
    fods = sh.pad_order(fods, FOD_ORDER)
    with atomic_open(path) as fh:
        for i, (g, f) in enumerate(zip(group_ids, fods)):
            fh.write(
                f'{{"voxel_id":{i},"group_id":{int(g)},"method":{json.dumps(method)},'
                f'"fod_sh":{fmt_array(f)}}}\n'
            )


def read_fod_lines(path):
    """Read ``fod_sh`` from a predictions or dataset file.

    Returns ``(group_ids, fods, voxel_ids, method)``; voxel ids default to
    line position and ``method`` is None for datasets.
    """
    groups, fods, voxel_ids, methods = [], [], [], set()
    for lineno, obj in _iter_json_lines(path):
        if "group_id" not in obj:
            raise DataFormatError(f"{path}:{lineno}: missing group_id")
        fod = obj.get("fod_sh")
        if not isinstance(fod, list) or len(fod) not in (sh.num_coeffs(8), sh.num_coeffs(10)):
            raise DataFormatError(f"{path}:{lineno}: fod_sh must hold 45 or 66 numbers")
        groups.append(int(obj["group_id"]))
        fods.append(sh.pad_order(np.array(fod, dtype=float), FOD_ORDER))
        voxel_ids.append(int(obj.get("voxel_id", len(voxel_ids))))
        methods.add(obj.get("method"))
    method = methods.pop() if len(methods) == 1 else None
    return np.array(groups, dtype=int), np.array(fods).reshape(-1, sh.num_coeffs(FOD_ORDER)), \
        np.array(voxel_ids, dtype=int), method


def write_json(path, obj):
    with atomic_open(path) as fh:
        json.dump(obj, fh, indent=1, allow_nan=False)
        fh.write("\n")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc


def write_fsl_scheme(bvec_path, bval_path, scheme):
    with atomic_open(bvec_path) as fh:
        for row in scheme.directions.T:
            fh.write(" ".join(fmt_float(v) for v in row) + "\n")
    with atomic_open(bval_path) as fh:
        fh.write(" ".join(fmt_float(scheme.bvalue) for _ in range(len(scheme))) + "\n")


def read_fsl_scheme(bvec_path, bval_path):
    """Read a single-shell FSL scheme; b=0 volumes are dropped."""
    try:
        bvecs = np.loadtxt(bvec_path, ndmin=2)
        bvals = np.loadtxt(bval_path, ndmin=1).ravel()
    except (OSError, ValueError) as exc:
        raise DataFormatError(f"cannot read FSL scheme: {exc}") from exc
    if bvecs.shape[0] != 3 and bvecs.shape[1] == 3:
        bvecs = bvecs.T
    if bvecs.shape[0] != 3 or bvecs.shape[1] != bvals.size:
        raise DataFormatError(f"bvec shape {bvecs.shape} does not match {bvals.size} b-values")
    weighted = bvals > 50
    shells = np.unique(np.round(bvals[weighted], -2))
    if shells.size != 1:
        raise DataFormatError(f"expected one diffusion-weighted shell, found {shells.tolist()}")
    dirs = bvecs[:, weighted].T
    return sh.GradientScheme(float(np.mean(bvals[weighted])), sh.normalize(dirs))
