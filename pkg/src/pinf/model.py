"""Multi-task quality regressor: a small MLP mapping the 29 features to the
7 severities (unrecognizable + six flaws), trained with task-weighted MSE,
Adam, and patience-based early stopping with best-epoch restore.

Training is a pure function of (data, config, seed): seeded init, seeded
shuffles, fixed reduction order in the kernels.
"""

from __future__ import annotations

import json
import math
import random
from array import array
from dataclasses import dataclass, field

from ._backend import kernels
from .features import (
    FEATURE_COUNT,
    FEATURE_LAYOUT_VERSION,
    FeatureVector,
    Scaler,
    extract_features,
    fit_scaler,
)
from .images import RasterImage
from .quality import OUTPUT_NAMES, QualityPrediction

MODEL_FILE_VERSION = 1
N_OUTPUTS = 7


class ModelFileError(ValueError):
    """Bad model file: version, schema, or value problems."""


@dataclass
class MlpParams:
    """Two-layer perceptron weights, stored flat row-major."""

    nin: int
    hidden: int
    nout: int
    w1: array  # nin x hidden
    b1: array  # hidden
    w2: array  # hidden x nout
    b2: array  # nout

    def tensors(self) -> list[array]:
        return [self.w1, self.b1, self.w2, self.b2]

    def copy(self) -> "MlpParams":
        return MlpParams(
            self.nin, self.hidden, self.nout,
            array("d", self.w1), array("d", self.b1),
            array("d", self.w2), array("d", self.b2),
        )


@dataclass
class AdamState:
    """First/second moment accumulators per tensor plus the step counter."""

    m: list[array]
    v: list[array]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: MlpParams) -> "AdamState":
        return cls(
            m=[array("d", bytes(8 * len(t))) for t in params.tensors()],
            v=[array("d", bytes(8 * len(t))) for t in params.tensors()],
        )

    def copy(self) -> "AdamState":
        return AdamState([array("d", a) for a in self.m], [array("d", a) for a in self.v], self.t)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 128
    max_epochs: int = 100
    patience: int = 3
    seed: int = 0
    hidden: int = 64
    single_task: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.hidden < 1:
            raise ValueError("hidden width must be >= 1")

    def task_weights(self) -> array:
        if self.single_task:
            return array("d", [1.0] + [0.0] * (N_OUTPUTS - 1))
        return array("d", [1.0 / N_OUTPUTS] * N_OUTPUTS)


@dataclass
class TrainHistory:
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stop_epoch: int = 0


class EarlyStopper:
    """Stop when the validation minimum is not renewed for `patience`
    consecutive epochs; remembers which epoch holds the minimum."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        """Record one epoch's validation loss; True means stop now."""
        if val_loss < self.best:
            self.best = val_loss
            self.best_epoch = epoch
            self.bad_epochs = 0
            return False
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience


def init_params(seed: int, hidden: int, nin: int = FEATURE_COUNT, nout: int = N_OUTPUTS) -> MlpParams:
    """Seeded uniform init in +-sqrt(6/fan_in); biases zero."""
    if hidden < 1:
        raise ValueError("hidden width must be >= 1")
    rng = random.Random(seed)
    bound1 = math.sqrt(6.0 / nin)
    bound2 = math.sqrt(6.0 / hidden)
    w1 = array("d", (rng.uniform(-bound1, bound1) for _ in range(nin * hidden)))
    w2 = array("d", (rng.uniform(-bound2, bound2) for _ in range(hidden * nout)))
    b1 = array("d", bytes(8 * hidden))
    b2 = array("d", bytes(8 * nout))
    return MlpParams(nin, hidden, nout, w1, b1, w2, b2)


def forward(params: MlpParams, x) -> list[float]:
    """out = W2 relu(W1 x + b1) + b2 for a single standardized input."""
    if len(x) != params.nin:
        raise ValueError(f"input has {len(x)} dims, model expects {params.nin}")
    xbuf = x if isinstance(x, array) else array("d", x)
    hbuf = array("d", bytes(8 * params.hidden))
    out = array("d", bytes(8 * params.nout))
    kernels.mlp_forward(
        params.w1, params.b1, params.w2, params.b2,
        params.nin, params.hidden, params.nout, xbuf, hbuf, out,
    )
    return list(out)


class _Scratch:
    """Reusable gradient and activation buffers for one parameter shape."""

    def __init__(self, params: MlpParams):
        self.gw1 = array("d", bytes(8 * params.nin * params.hidden))
        self.gb1 = array("d", bytes(8 * params.hidden))
        self.gw2 = array("d", bytes(8 * params.hidden * params.nout))
        self.gb2 = array("d", bytes(8 * params.nout))
        self.hbuf = array("d", bytes(8 * params.hidden))
        self.obuf = array("d", bytes(8 * params.nout))
        self.gobuf = array("d", bytes(8 * params.nout))
        self.ghbuf = array("d", bytes(8 * params.hidden))

    def grads(self) -> list[array]:
        return [self.gw1, self.gb1, self.gw2, self.gb2]

    def zero(self):
        for g in self.grads():
            for i in range(len(g)):
                g[i] = 0.0


def _loss_grad_raw(params: MlpParams, xs: array, ys: array, nb: int, tw: array,
                   scratch: _Scratch) -> float:
    scratch.zero()
    return kernels.mlp_loss_grad(
        params.w1, params.b1, params.w2, params.b2,
        params.nin, params.hidden, params.nout,
        xs, ys, nb, tw,
        scratch.gw1, scratch.gb1, scratch.gw2, scratch.gb2,
        scratch.hbuf, scratch.obuf, scratch.gobuf, scratch.ghbuf,
    )


def loss_and_grad(params: MlpParams, batch, task_weights=None):
    """Task-weighted mean squared error over a batch and its exact gradients.

    batch: list of (input vector, target vector). Returns (loss, grads) with
    grads ordered [w1, b1, w2, b2] like params.tensors().
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    tw = array("d", task_weights) if task_weights is not None else array(
        "d", [1.0 / params.nout] * params.nout
    )
    nb = len(batch)
    xs = array("d", bytes(8 * nb * params.nin))
    ys = array("d", bytes(8 * nb * params.nout))
    for s, (x, y) in enumerate(batch):
        if len(x) != params.nin or len(y) != params.nout:
            raise ValueError("batch entry dimensions do not match the model")
        for i, v in enumerate(x):
            if not math.isfinite(v):
                raise ValueError("non-finite input value in batch")
            xs[s * params.nin + i] = v
        for k, v in enumerate(y):
            if not math.isfinite(v):
                raise ValueError("non-finite target value in batch")
            ys[s * params.nout + k] = v
    scratch = _Scratch(params)
    loss = _loss_grad_raw(params, xs, ys, nb, tw, scratch)
    return loss, [array("d", g) for g in scratch.grads()]


def adam_step(params: MlpParams, grads: list[array], state: AdamState, cfg: TrainConfig):
    """Standard Adam with bias correction; returns (new params, new state)."""
    new_params = params.copy()
    new_state = state.copy()
    _adam_inplace(new_params, grads, new_state, cfg)
    return new_params, new_state


def _adam_inplace(params: MlpParams, grads, state: AdamState, cfg: TrainConfig):
    state.t += 1
    bc1 = 1.0 - cfg.beta1 ** state.t
    bc2 = 1.0 - cfg.beta2 ** state.t
    for tensor, g, m, v in zip(params.tensors(), grads, state.m, state.v):
        kernels.adam_step(
            tensor, g, m, v, len(tensor),
            cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, bc1, bc2,
        )


@dataclass
class QualityModel:
    """Trained regressor: parameters plus the input scaler and metadata."""

    params: MlpParams
    scaler: Scaler
    train_meta: dict = field(default_factory=dict)

    def predict_features(self, f: FeatureVector) -> QualityPrediction:
        return QualityPrediction.from_vector(forward(self.params, self.scaler.apply(f)))

    def predict(self, img: RasterImage) -> QualityPrediction:
        """Single inference: all 7 severities from one forward pass."""
        return self.predict_features(extract_features(img))


def _flatten_set(dataset, scaler: Scaler, nin: int, nout: int):
    n = len(dataset)
    xs = array("d", bytes(8 * n * nin))
    ys = array("d", bytes(8 * n * nout))
    for s, (f, y) in enumerate(dataset):
        z = scaler.apply(f)
        for i in range(nin):
            xs[s * nin + i] = z[i]
        if len(y) != nout:
            raise ValueError(f"target must have {nout} entries")
        for k in range(nout):
            v = y[k]
            if not math.isfinite(v):
                raise ValueError("non-finite target value")
            ys[s * nout + k] = v
    return xs, ys


def _gather(xs, ys, order, lo, hi, nin, nout, bx, by):
    for pos in range(lo, hi):
        src = order[pos]
        dst = pos - lo
        bx[dst * nin : (dst + 1) * nin] = xs[src * nin : (src + 1) * nin]
        by[dst * nout : (dst + 1) * nout] = ys[src * nout : (src + 1) * nout]


def train(train_set, val_set, cfg: TrainConfig):
    """Train on seeded mini-batches with early stopping.

    train_set / val_set: lists of (FeatureVector, 7-target list). The scaler
    is fitted on the training features only. Stops when the validation loss
    fails to set a new minimum for `patience` consecutive epochs; the
    returned parameters are the best epoch's (checkpoint restore).
    """
    if not train_set or not val_set:
        raise ValueError("train and validation sets must be non-empty")
    scaler = fit_scaler([f for f, _ in train_set])
    nin, nout = FEATURE_COUNT, N_OUTPUTS
    params = init_params(cfg.seed, cfg.hidden, nin, nout)
    state = AdamState.zeros_like(params)
    tw = cfg.task_weights()
    xs, ys = _flatten_set(train_set, scaler, nin, nout)
    vxs, vys = _flatten_set(val_set, scaler, nin, nout)
    n = len(train_set)
    nval = len(val_set)
    rng = random.Random(cfg.seed)
    order = list(range(n))
    scratch = _Scratch(params)
    vscratch = _Scratch(params)
    bx = array("d", bytes(8 * min(cfg.batch_size, n) * nin))
    by = array("d", bytes(8 * min(cfg.batch_size, n) * nout))

    history = TrainHistory()
    stopper = EarlyStopper(cfg.patience)
    best_params = params.copy()

    for epoch in range(1, cfg.max_epochs + 1):
        rng.shuffle(order)
        epoch_loss = 0.0
        lo = 0
        while lo < n:
            hi = min(lo + cfg.batch_size, n)
            nb = hi - lo
            _gather(xs, ys, order, lo, hi, nin, nout, bx, by)
            loss = _loss_grad_raw(params, bx, by, nb, tw, scratch)
            _adam_inplace(params, scratch.grads(), state, cfg)
            epoch_loss += loss * nb
            lo = hi
        history.train_losses.append(epoch_loss / n)

        val_loss = _loss_grad_raw(params, vxs, vys, nval, tw, vscratch)
        history.val_losses.append(val_loss)
        history.stop_epoch = epoch

        improved = val_loss < stopper.best
        stop = stopper.update(epoch, val_loss)
        if improved:
            best_params = params.copy()
        history.best_epoch = stopper.best_epoch
        if stop:
            break

    meta = {
        "seed": cfg.seed,
        "lr": cfg.learning_rate,
        "batch_size": cfg.batch_size,
        "max_epochs": cfg.max_epochs,
        "patience": cfg.patience,
        "hidden": cfg.hidden,
        "single_task": cfg.single_task,
        "epochs_run": history.stop_epoch,
        "best_epoch": history.best_epoch,
        "best_val_loss": stopper.best,
    }
    return QualityModel(best_params, scaler, meta), history


def predict(model: QualityModel, img: RasterImage) -> QualityPrediction:
    return model.predict(img)


# --- persistence ---------------------------------------------------------


def _rows(flat: array, nrows: int, ncols: int) -> list[list[float]]:
    return [list(flat[r * ncols : (r + 1) * ncols]) for r in range(nrows)]


def save_model(model: QualityModel, path) -> None:
    p = model.params
    doc = {
        "version": MODEL_FILE_VERSION,
        "feature_layout": FEATURE_LAYOUT_VERSION,
        "scaler": {"mean": list(model.scaler.mean), "std": list(model.scaler.std)},
        "hidden": p.hidden,
        "w1": _rows(p.w1, p.nin, p.hidden),
        "b1": list(p.b1),
        "w2": _rows(p.w2, p.hidden, p.nout),
        "b2": list(p.b2),
        "outputs": list(OUTPUT_NAMES),
        "train_meta": model.train_meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def _reject_constant(token):
    raise ModelFileError(f"non-finite value {token!r} in model file")


def _check_matrix(rows, nrows, ncols, name) -> array:
    if not isinstance(rows, list) or len(rows) != nrows:
        raise ModelFileError(f"model field {name!r} must have {nrows} rows")
    flat = array("d", bytes(0))
    for row in rows:
        if not isinstance(row, list) or len(row) != ncols:
            raise ModelFileError(f"model field {name!r} must have {ncols} columns")
        for v in row:
            _check_value(v, name)
        flat.extend(row)
    return flat


def _check_vector(vals, length, name) -> array:
    if not isinstance(vals, list) or len(vals) != length:
        raise ModelFileError(f"model field {name!r} must have {length} entries")
    for v in vals:
        _check_value(v, name)
    return array("d", vals)


def _check_value(v, name):
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ModelFileError(f"model field {name!r} contains a non-finite or non-numeric value")


def load_model(path) -> QualityModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFileError("model file must contain a JSON object")
    version = doc.get("version")
    if version != MODEL_FILE_VERSION:
        raise ModelFileError(f"unsupported model file version {version!r}")
    if doc.get("feature_layout") != FEATURE_LAYOUT_VERSION:
        raise ModelFileError(
            f"model expects feature layout {doc.get('feature_layout')!r}, "
            f"this build provides {FEATURE_LAYOUT_VERSION!r}"
        )
    if doc.get("outputs") != list(OUTPUT_NAMES):
        raise ModelFileError(
            f"model outputs {doc.get('outputs')!r} do not match {list(OUTPUT_NAMES)}"
        )
    hidden = doc.get("hidden")
    if not isinstance(hidden, int) or hidden < 1:
        raise ModelFileError(f"invalid hidden width {hidden!r}")
    scaler_doc = doc.get("scaler")
    if not isinstance(scaler_doc, dict):
        raise ModelFileError("model file missing scaler")
    mean = _check_vector(scaler_doc.get("mean"), FEATURE_COUNT, "scaler.mean")
    std = _check_vector(scaler_doc.get("std"), FEATURE_COUNT, "scaler.std")
    params = MlpParams(
        FEATURE_COUNT, hidden, N_OUTPUTS,
        _check_matrix(doc.get("w1"), FEATURE_COUNT, hidden, "w1"),
        _check_vector(doc.get("b1"), hidden, "b1"),
        _check_matrix(doc.get("w2"), hidden, N_OUTPUTS, "w2"),
        _check_vector(doc.get("b2"), N_OUTPUTS, "b2"),
    )
    meta = doc.get("train_meta") or {}
    return QualityModel(params, Scaler(mean, std), dict(meta))
