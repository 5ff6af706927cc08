"""GRU regression head over per-chunk document embeddings.

The model runs a single-layer GRU across a document's chunk vectors, applies
inverted dropout to the final hidden state, and maps it through a linear
layer to one scalar (the predicted citation score).  Training minimizes
mean absolute error with Adam; gradients are exact backpropagation through
time, computed per document so variable chunk counts need no padding.

All training arithmetic is float64 for reproducible gradient checks; the
embedding interchange files stay float32.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, fields as dataclass_fields
from typing import Sequence

import numpy as np

from .chunks import ChunkEmbeddings
from .errors import DegenerateLabels, FormatError, InvalidInput

CHECKPOINT_MAGIC = b"SCHP"
CHECKPOINT_VERSION = 1


@dataclass
class GruParams:
    """All trainable tensors; field order defines the checkpoint layout."""

    w_z: np.ndarray  # (dim_in, hidden)
    w_r: np.ndarray
    w_h: np.ndarray
    u_z: np.ndarray  # (hidden, hidden)
    u_r: np.ndarray
    u_h: np.ndarray
    b_z: np.ndarray  # (hidden,)
    b_r: np.ndarray
    b_h: np.ndarray
    w_out: np.ndarray  # (hidden,)
    b_out: np.ndarray  # scalar, shape ()

    @property
    def dim_in(self) -> int:
        return self.w_z.shape[0]

    @property
    def hidden(self) -> int:
        return self.w_z.shape[1]

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        return [(f.name, getattr(self, f.name)) for f in dataclass_fields(self)]

    def copy(self) -> "GruParams":
        return GruParams(**{name: arr.copy() for name, arr in self.tensors()})

    def zeros_like(self) -> "GruParams":
        return GruParams(**{name: np.zeros_like(arr) for name, arr in self.tensors()})


@dataclass
class TrainConfig:
    """Training hyperparameters; defaults are the model's standard settings."""

    learning_rate: float = 0.001
    epochs: int = 30
    batch_size: int = 12
    dropout_p: float = 0.3
    hidden: int = 512
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class Metrics:
    """Regression evaluation summary."""

    mse: float
    mae: float
    r2: float
    n: int


def init_params(dim_in: int, hidden: int, seed) -> GruParams:
    """Initialize parameters: Xavier-uniform input/output weights,
    Xavier-normal recurrent weights, zero biases.

    `seed` may be an int or a numpy Generator.  The draw order is fixed, so
    a given seed always produces identical parameters.
    """
    if dim_in < 1 or hidden < 1:
        raise InvalidInput(f"dims must be >= 1, got dim_in={dim_in} hidden={hidden}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    w_bound = np.sqrt(6.0 / (dim_in + hidden))
    u_std = np.sqrt(2.0 / (hidden + hidden))
    out_bound = np.sqrt(6.0 / (hidden + 1))
    return GruParams(
        w_z=rng.uniform(-w_bound, w_bound, (dim_in, hidden)),
        w_r=rng.uniform(-w_bound, w_bound, (dim_in, hidden)),
        w_h=rng.uniform(-w_bound, w_bound, (dim_in, hidden)),
        u_z=rng.normal(0.0, u_std, (hidden, hidden)),
        u_r=rng.normal(0.0, u_std, (hidden, hidden)),
        u_h=rng.normal(0.0, u_std, (hidden, hidden)),
        b_z=np.zeros(hidden),
        b_r=np.zeros(hidden),
        b_h=np.zeros(hidden),
        w_out=rng.uniform(-out_bound, out_bound, hidden),
        b_out=np.zeros(()),
    )


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class ForwardCache:
    """Intermediate values of one document's forward pass, kept for backprop."""

    x: np.ndarray        # (T, dim_in)
    hs: np.ndarray       # (T+1, hidden), hs[0] = 0
    z: np.ndarray        # (T, hidden)
    r: np.ndarray        # (T, hidden)
    h_tilde: np.ndarray  # (T, hidden)
    drop: np.ndarray     # (hidden,) inverted-dropout multiplier
    prediction: float


def _as_input_matrix(x, dim_in: int) -> np.ndarray:
    if isinstance(x, ChunkEmbeddings):
        x = x.vectors
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidInput("input must be a non-empty (chunks, dim) matrix")
    if x.shape[1] != dim_in:
        raise InvalidInput(f"input dim {x.shape[1]} does not match model dim {dim_in}")
    return x


def forward(
    params: GruParams,
    x,
    mode: str = "eval",
    dropout_p: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[float, ForwardCache]:
    """Run the GRU over a document's chunk vectors and predict its score.

    In train mode, dropout zeroes each final-state component with
    probability `dropout_p` and scales survivors by 1/(1-p); in eval mode
    the final state passes through unchanged.
    """
    x = _as_input_matrix(x, params.dim_in)
    steps, hidden = x.shape[0], params.hidden
    hs = np.zeros((steps + 1, hidden))
    z = np.empty((steps, hidden))
    r = np.empty((steps, hidden))
    h_tilde = np.empty((steps, hidden))
    for t in range(steps):
        x_t, h_prev = x[t], hs[t]
        z[t] = _sigmoid(x_t @ params.w_z + h_prev @ params.u_z + params.b_z)
        r[t] = _sigmoid(x_t @ params.w_r + h_prev @ params.u_r + params.b_r)
        h_tilde[t] = np.tanh(
            x_t @ params.w_h + (r[t] * h_prev) @ params.u_h + params.b_h
        )
        hs[t + 1] = (1.0 - z[t]) * h_prev + z[t] * h_tilde[t]

    if mode == "train" and dropout_p > 0.0:
        if rng is None:
            raise InvalidInput("train-mode dropout needs an rng")
        keep = rng.random(hidden) >= dropout_p
        drop = keep / (1.0 - dropout_p)
    elif mode in ("train", "eval"):
        drop = np.ones(hidden)
    else:
        raise InvalidInput(f"unknown mode {mode!r}")

    prediction = float(params.w_out @ (drop * hs[-1]) + params.b_out)
    return prediction, ForwardCache(
        x=x, hs=hs, z=z, r=r, h_tilde=h_tilde, drop=drop, prediction=prediction
    )


def _backprop_document(
    params: GruParams, cache: ForwardCache, dy: float, grads: GruParams
) -> None:
    """Accumulate d(dy * prediction)/d(params) into `grads` for one document."""
    dropped = cache.drop * cache.hs[-1]
    grads.w_out += dy * dropped
    grads.b_out += dy
    dh = dy * params.w_out * cache.drop

    for t in range(cache.x.shape[0] - 1, -1, -1):
        x_t, h_prev = cache.x[t], cache.hs[t]
        z, r, h_tilde = cache.z[t], cache.r[t], cache.h_tilde[t]

        dz = dh * (h_tilde - h_prev)
        dh_tilde = dh * z
        dh_prev = dh * (1.0 - z)

        da_h = dh_tilde * (1.0 - h_tilde * h_tilde)
        grads.w_h += np.outer(x_t, da_h)
        grads.u_h += np.outer(r * h_prev, da_h)
        grads.b_h += da_h
        ds = params.u_h @ da_h
        dr = ds * h_prev
        dh_prev += ds * r

        da_z = dz * z * (1.0 - z)
        grads.w_z += np.outer(x_t, da_z)
        grads.u_z += np.outer(h_prev, da_z)
        grads.b_z += da_z
        dh_prev += params.u_z @ da_z

        da_r = dr * r * (1.0 - r)
        grads.w_r += np.outer(x_t, da_r)
        grads.u_r += np.outer(h_prev, da_r)
        grads.b_r += da_r
        dh_prev += params.u_r @ da_r

        dh = dh_prev


def backward(
    params: GruParams,
    labels: Sequence[float],
    caches: Sequence[ForwardCache],
) -> GruParams:
    """Exact gradients of mean absolute error over a batch.

    The subgradient of |residual| at exactly zero is taken to be zero.
    """
    if len(labels) != len(caches) or not caches:
        raise InvalidInput("labels and caches must be non-empty and equal length")
    grads = params.zeros_like()
    n = len(caches)
    for y, cache in zip(labels, caches):
        residual = y - cache.prediction
        # d/dpred of |y - pred| = -sign(residual); sign(0) -> 0.
        dy = -float(np.sign(residual)) / n
        if dy != 0.0:
            _backprop_document(params, cache, dy, grads)
    return grads


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter tensor."""

    m: GruParams
    v: GruParams

    @classmethod
    def zeros(cls, params: GruParams) -> "AdamState":
        return cls(m=params.zeros_like(), v=params.zeros_like())


def adam_step(
    params: GruParams,
    grads: GruParams,
    state: AdamState,
    t: int,
    config: TrainConfig,
) -> None:
    """One in-place Adam update with bias correction (step counter t >= 1)."""
    if t < 1:
        raise InvalidInput(f"step counter must be >= 1, got {t}")
    b1, b2 = config.beta1, config.beta2
    for (name, p), (_, g) in zip(params.tensors(), grads.tensors()):
        m = getattr(state.m, name)
        v = getattr(state.v, name)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)


def _check_dataset(items: Sequence[ChunkEmbeddings]) -> int:
    if not items:
        raise InvalidInput("dataset is empty")
    dims = {item.dim for item in items}
    if len(dims) != 1:
        raise InvalidInput(f"mixed embedding dims in dataset: {sorted(dims)}")
    missing = [item.doc_id for item in items if item.label is None]
    if missing:
        raise InvalidInput(f"items without labels: {missing[:5]}")
    return dims.pop()


def predictions(params: GruParams, items: Sequence[ChunkEmbeddings]) -> np.ndarray:
    """Eval-mode predictions for every item, in order."""
    return np.array([forward(params, item)[0] for item in items])


def evaluate(params: GruParams, items: Sequence[ChunkEmbeddings]) -> Metrics:
    """MSE, MAE, and R^2 of eval-mode predictions against item labels.

    Raises DegenerateLabels when every label is identical (R^2 undefined);
    the exception carries the still-valid mse/mae values.
    """
    _check_dataset(items)
    y = np.array([item.label for item in items], dtype=np.float64)
    y_hat = predictions(params, items)
    residual = y - y_hat
    mse = float(np.mean(residual**2))
    mae = float(np.mean(np.abs(residual)))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        exc = DegenerateLabels(
            f"all {len(y)} labels equal {y[0]}; R^2 undefined (mse={mse}, mae={mae})"
        )
        exc.mse, exc.mae = mse, mae
        raise exc
    r2 = 1.0 - float(np.sum(residual**2)) / ss_tot
    return Metrics(mse=mse, mae=mae, r2=r2, n=len(y))


@dataclass
class TrainResult:
    """Trained parameters plus the per-epoch metric history.

    `best_params` is the checkpoint with the lowest validation MAE (equal to
    `params` when no validation set was given).
    """

    params: GruParams
    best_params: GruParams
    history: list[dict] = field(default_factory=list)


def train(
    items: Sequence[ChunkEmbeddings],
    config: TrainConfig,
    val_items: Sequence[ChunkEmbeddings] | None = None,
) -> TrainResult:
    """Train the GRU head on labeled chunk embeddings.

    Each epoch shuffles with the seeded generator and walks mini-batches of
    `config.batch_size` (the final short batch is kept).  Per-epoch train
    metrics are the mean over the epoch's train-mode forward passes; when a
    validation set is given, eval-mode MAE/MSE on it are recorded too.
    Everything is deterministic given (seed, config, dataset).
    """
    dim_in = _check_dataset(items)
    if val_items:
        if _check_dataset(val_items) != dim_in:
            raise InvalidInput("validation dim does not match training dim")

    params = init_params(dim_in, config.hidden, config.seed)
    # Independent stream for shuffling/dropout so it never aliases the init draw.
    loop_rng = np.random.default_rng([config.seed, 1])
    state = AdamState.zeros(params)
    labels = np.array([item.label for item in items], dtype=np.float64)

    history: list[dict] = []
    best_params = params.copy()
    best_val_mae = np.inf
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = loop_rng.permutation(len(items))
        abs_errors: list[float] = []
        sq_errors: list[float] = []
        for start in range(0, len(order), config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            caches = []
            batch_labels = []
            for i in batch_idx:
                pred, cache = forward(
                    params, items[i], mode="train",
                    dropout_p=config.dropout_p, rng=loop_rng,
                )
                caches.append(cache)
                batch_labels.append(labels[i])
                abs_errors.append(abs(labels[i] - pred))
                sq_errors.append((labels[i] - pred) ** 2)
            grads = backward(params, batch_labels, caches)
            step += 1
            adam_step(params, grads, state, step, config)

        row = {
            "epoch": epoch,
            "train_mae": float(np.mean(abs_errors)),
            "train_mse": float(np.mean(sq_errors)),
            "val_mae": None,
            "val_mse": None,
        }
        if val_items:
            val_y = np.array([item.label for item in val_items], dtype=np.float64)
            val_residual = val_y - predictions(params, val_items)
            row["val_mae"] = float(np.mean(np.abs(val_residual)))
            row["val_mse"] = float(np.mean(val_residual**2))
            if row["val_mae"] < best_val_mae:
                best_val_mae = row["val_mae"]
                best_params = params.copy()
        history.append(row)

    if not val_items:
        best_params = params.copy()
    return TrainResult(params=params, best_params=best_params, history=history)


def write_history(path, history: list[dict]) -> None:
    """Write per-epoch metrics as JSON-lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in history:
            ordered = {
                "epoch": row["epoch"],
                "train_mae": row["train_mae"],
                "val_mae": row["val_mae"],
                "train_mse": row["train_mse"],
                "val_mse": row["val_mse"],
            }
            fh.write(json.dumps(ordered) + "\n")


def save_checkpoint(path, params: GruParams) -> None:
    """Versioned binary checkpoint: magic, dims, then float64 LE tensors
    in GruParams field order."""
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<II", params.dim_in, params.hidden))
        for _, tensor in params.tensors():
            fh.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())


def load_checkpoint(path) -> GruParams:
    """Read a checkpoint written by save_checkpoint."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(
                f"bad checkpoint magic {magic!r}, expected {CHECKPOINT_MAGIC!r}",
                offset=0,
            )
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}", offset=4)
        dim_in, hidden = struct.unpack("<II", fh.read(8))
        shapes = {
            "w_z": (dim_in, hidden), "w_r": (dim_in, hidden), "w_h": (dim_in, hidden),
            "u_z": (hidden, hidden), "u_r": (hidden, hidden), "u_h": (hidden, hidden),
            "b_z": (hidden,), "b_r": (hidden,), "b_h": (hidden,),
            "w_out": (hidden,), "b_out": (),
        }
        tensors = {}
        for name, shape in shapes.items():
            count = int(np.prod(shape)) if shape else 1
            offset = fh.tell()
            raw = fh.read(8 * count)
            if len(raw) != 8 * count:
                raise FormatError(f"truncated checkpoint in tensor {name}", offset=offset)
            tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise FormatError("trailing bytes after checkpoint tensors", offset=fh.tell() - 1)
        return GruParams(**tensors)
