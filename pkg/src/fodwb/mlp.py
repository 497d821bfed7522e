"""Multilayer perceptron regression from signal SH to FOD SH.

Plain numpy: rectifier hidden layers, identity output, mean squared error,
RMSprop updates, and early stopping under group-aware cross-validation so
rotated copies of one base voxel never straddle a train/validation split.
"""
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DivergedTraining, TooFewGroups

log = logging.getLogger(__name__)

DEFAULT_DIMS = (45, 400, 400, 400, 66)


@dataclass
class MLPModel:
    dims: tuple
    weights: list
    biases: list

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.weights) != len(self.dims) - 1 or len(self.biases) != len(self.weights):
            raise ConfigError("need one weight matrix and bias vector per layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.dims[i + 1], self.dims[i]) or b.shape != (self.dims[i + 1],):
                raise ConfigError(f"layer {i} has shapes {w.shape}, {b.shape} for dims {self.dims}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ConfigError(f"layer {i} holds non-finite parameters")

    @property
    def params(self):
        return [*self.weights, *self.biases]

    def copy(self):
        return MLPModel(self.dims, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def astype(self, dtype):
        return MLPModel(self.dims, [w.astype(dtype) for w in self.weights], [b.astype(dtype) for b in self.biases])

    def to_dict(self):
        return {
            "dims": list(self.dims),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            tuple(d["dims"]),
            [np.array(w, dtype=float).reshape(o, i) for w, i, o in zip(d["weights"], d["dims"], d["dims"][1:])],
            [np.array(b, dtype=float) for b in d["biases"]],
        )


@dataclass
class TrainConfig:
    dims: tuple = DEFAULT_DIMS
    learning_rate: float = 1e-3
    rms_decay: float = 0.9
    epsilon: float = 1e-8
    batch_size: int = 128
    max_epochs: int = 200
    patience: int = 10
    n_folds: int = 5
    val_fraction: float = 0.2
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        if self.dtype not in ("float32", "float64"):
            raise ConfigError("dtype must be 'float32' or 'float64'")
        if not 0 < self.rms_decay < 1:
            raise ConfigError("rms_decay must lie in (0, 1)")
        if not self.learning_rate > 0 or self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("need learning_rate > 0, batch_size >= 1, max_epochs >= 1")
        if self.n_folds < 2:
            raise ConfigError("n_folds must be >= 2")
        if not 0 < self.val_fraction < 1:
            raise ConfigError("val_fraction must lie in (0, 1)")

    def to_dict(self):
        d = asdict(self)
        d["dims"] = list(self.dims)
        return d


def init_model(dims, seed):
    """He-normal weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MLPModel(tuple(dims), weights, biases)


def _forward_cache(model, x):
    acts = [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w.T + b
        h = z if i == last else np.maximum(z, 0.0)
        acts.append(h)
    return acts


def _as_float(a):
    a = np.asarray(a)
    return a if a.dtype in (np.float32, np.float64) else a.astype(np.float64)


def forward(model, x):
    """Network output for one input vector or a batch of rows."""
    x = _as_float(x)
    return _forward_cache(model, x)[-1]


def loss_mse(pred, target):
    """Squared error averaged over components and then over samples."""
    return float(np.mean((np.asarray(pred, float) - np.asarray(target, float)) ** 2))


def backward(model, x, y):
    """Gradients of the batch MSE; returns ``(loss, grad_weights, grad_biases)``."""
    x = np.atleast_2d(_as_float(x))
    y = np.atleast_2d(_as_float(y))
    acts = _forward_cache(model, x)
    err = acts[-1] - y
    loss = float(np.mean(err * err))
    delta = (2.0 / err.size) * err
    gw = [None] * len(model.weights)
    gb = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        gw[i] = delta.T @ acts[i]
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ model.weights[i]) * (acts[i] > 0)
    return loss, gw, gb


@dataclass
class RmsState:
    sq_weights: list
    sq_biases: list

    @classmethod
    def zeros_like(cls, model):
        return cls([np.zeros_like(w) for w in model.weights], [np.zeros_like(b) for b in model.biases])


def rmsprop_step(model, state, grads, cfg):
    """One RMSprop update, applied in place; returns ``(model, state)``.

    ``grads`` is ``(grad_weights, grad_biases)`` as returned by ``backward``
    (without the loss).
    """
    rho, lr, eps = cfg.rms_decay, cfg.learning_rate, cfg.epsilon
    gw, gb = grads
    for params, sqs, gs in ((model.weights, state.sq_weights, gw), (model.biases, state.sq_biases, gb)):
        for p, v, g in zip(params, sqs, gs):
            tmp = np.square(g)
            tmp *= 1.0 - rho
            v *= rho
            v += tmp
            np.sqrt(v, out=tmp)
            tmp += eps
            np.divide(g, tmp, out=tmp)
            tmp *= lr
            p -= tmp
    return model, state


def grouped_folds(group_ids, n_folds, val_fraction, seed):
    """Split distinct group ids into ``n_folds`` (train, validation) pairs.

    Groups are shuffled once; fold ``k`` validates on a contiguous window of
    about ``val_fraction`` of them starting at ``k / n_folds`` of the way
    through. When ``val_fraction == 1 / n_folds`` the windows tile the
    groups exactly, i.e. ordinary k-fold over groups.
    """
    groups = np.unique(np.asarray(group_ids))
    n = groups.size
    if n < n_folds:
        raise TooFewGroups(f"{n} groups cannot fill {n_folds} folds")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xF01D]))
    groups = groups[rng.permutation(n)]
    starts = [k * n // n_folds for k in range(n_folds + 1)]
    folds = []
    for k in range(n_folds):
        if abs(val_fraction * n_folds - 1.0) < 1e-9:
            size = starts[k + 1] - starts[k]
        else:
            size = max(1, min(n - 1, int(round(val_fraction * n))))
        idx = (starts[k] + np.arange(size)) % n
        mask = np.zeros(n, dtype=bool)
        mask[idx] = True
        folds.append((np.sort(groups[~mask]), np.sort(groups[mask])))
    return folds


@dataclass
class FoldHistory:
    fold: int
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    best_epoch: int = -1

    @property
    def best_val_mse(self):
        return self.val_mse[self.best_epoch] if self.best_epoch >= 0 else float("inf")


@dataclass
class TrainResult:
    model: MLPModel
    best_fold: int
    histories: list

    @property
    def best_val_mse(self):
        return self.histories[self.best_fold].best_val_mse


def _batch_mse(model, x, y, chunk=4096):
    total = 0.0
    for i in range(0, len(x), chunk):
        err = forward(model, x[i : i + chunk]) - y[i : i + chunk]
        total += float(np.sum(np.square(err, dtype=np.float64)))
    return total / (len(x) * y.shape[1])


def fit_epochs(model, x, y, cfg, rng, epochs, state=None):
    """Plain mini-batch RMSprop for a fixed number of epochs; returns losses."""
    state = state or RmsState.zeros_like(model)
    losses = []
    for _ in range(epochs):
        losses.append(_epoch(model, state, x, y, cfg, rng))
    return losses


def _epoch(model, state, x, y, cfg, rng):
    order = rng.permutation(len(x))
    total = 0.0
    for i in range(0, len(x), cfg.batch_size):
        idx = order[i : i + cfg.batch_size]
        loss, gw, gb = backward(model, x[idx], y[idx])
        total += loss * len(idx)
        rmsprop_step(model, state, (gw, gb), cfg)
    return total / len(x)


def train(x, y, groups, cfg, progress=None):
    """Grouped k-fold training with early stopping.

    Each fold trains a fresh network; the weights from the epoch with the
    lowest validation MSE are kept, and the fold with the lowest such MSE
    supplies the returned model. Arithmetic runs in ``cfg.dtype``; the
    returned model is float64. Deterministic for fixed inputs and seed.
    """
    dtype = np.dtype(cfg.dtype)
    x = np.asarray(x, dtype=dtype)
    y = np.asarray(y, dtype=dtype)
    groups = np.asarray(groups)
    if x.shape[1] != cfg.dims[0] or y.shape[1] != cfg.dims[-1]:
        raise ConfigError(f"data shapes {x.shape}, {y.shape} do not match dims {cfg.dims}")
    histories = []
    best_models = []
    for k, (_, val_groups) in enumerate(grouped_folds(groups, cfg.n_folds, cfg.val_fraction, cfg.seed)):
        val_mask = np.isin(groups, val_groups)
        xt, yt, xv, yv = x[~val_mask], y[~val_mask], x[val_mask], y[val_mask]
        rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), k]))
        model = init_model(cfg.dims, rng).astype(dtype)
        state = RmsState.zeros_like(model)
        hist = FoldHistory(k)
        best = model.copy()
        stale = 0
        for epoch in range(cfg.max_epochs):
            train_loss = _epoch(model, state, xt, yt, cfg, rng)
            val_loss = _batch_mse(model, xv, yv)
            if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
                raise DivergedTraining(epoch, fold=k, loss=train_loss)
            hist.train_mse.append(train_loss)
            hist.val_mse.append(val_loss)
            if hist.best_epoch < 0 or val_loss < hist.best_val_mse:
                hist.best_epoch = epoch
                best = model.copy()
                stale = 0
            else:
                stale += 1
            if progress:
                progress(k, epoch, train_loss, val_loss)
            log.debug("fold %d epoch %d train %.6g val %.6g", k, epoch, train_loss, val_loss)
            if stale >= cfg.patience:
                break
        histories.append(hist)
        best_models.append(best)
    best_fold = int(np.argmin([h.best_val_mse for h in histories]))
    return TrainResult(best_models[best_fold].astype(np.float64), best_fold, histories)


def predict(model, signal_sh):
    """FOD coefficients (order 10) for one signal vector or a batch."""
    return forward(model, signal_sh)

