"""Supervised training of the denoising CNN on (interfered, clean) RD pairs."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import cnn
from .cnn import AdamState, ModelState, NumericError
from .detection import CfarParams, sinr
from .rd_pipeline import from_channels, to_channels

log = logging.getLogger(__name__)


def normalize(interfered: np.ndarray, clean: np.ndarray | None = None):
    """Scale a map pair by the peak magnitude of the interfered map.

    Returns ``(x, y, scale)`` with ``x = interfered / scale`` and
    ``y = clean / scale`` (``None`` when no clean map is given).
    """
    scale = float(np.max(np.abs(interfered)))
    if scale == 0.0:
        scale = 1.0
    return interfered / scale, None if clean is None else clean / scale, scale


def denormalize(x: np.ndarray, scale: float) -> np.ndarray:
    return x * scale


@dataclass
class PairSet:
    """Normalized 2-channel network inputs and targets.

    ``peaks`` holds per-frame clean-map CFAR cells (possibly empty) used to
    score validation SINR; ``scales`` undoes the normalization.
    """

    inputs: np.ndarray
    targets: np.ndarray
    scales: np.ndarray
    peaks: list | None = None

    def __len__(self):
        return len(self.inputs)

    @classmethod
    def from_maps(cls, interfered, clean, peaks=None, dtype=np.float32) -> "PairSet":
        xs, ys, ss = [], [], []
        for a, b in zip(interfered, clean):
            x, y, s = normalize(a, b)
            xs.append(to_channels(x))
            ys.append(to_channels(y))
            ss.append(s)
        return cls(
            np.asarray(xs, dtype=dtype),
            np.asarray(ys, dtype=dtype),
            np.asarray(ss, dtype=float),
            peaks,
        )

    def subset(self, idx) -> "PairSet":
        idx = np.asarray(idx)
        peaks = None if self.peaks is None else [self.peaks[i] for i in idx]
        return PairSet(self.inputs[idx], self.targets[idx], self.scales[idx], peaks)


@dataclass
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 8
    epochs: int = 100
    patience: int = 10
    seed: int = 0


@dataclass
class TrainResult:
    model: ModelState
    history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    optimizer: AdamState | None = None


def predict(model: ModelState, inputs: np.ndarray, batch_size: int = 16) -> np.ndarray:
    out = [cnn.forward(model, inputs[i : i + batch_size], "eval") for i in range(0, len(inputs), batch_size)]
    return np.concatenate(out) if out else np.empty_like(inputs)


def denoise_map(model: ModelState, rd: np.ndarray) -> np.ndarray:
    """Apply the network to one complex RD map and undo the normalization."""
    x, _, scale = normalize(rd)
    y = cnn.forward(model, to_channels(x)[None], "eval")[0]
    return denormalize(from_channels(y.astype(np.float64)), scale)


def mean_sinr(pred_channels: np.ndarray, peaks, cfar: CfarParams = CfarParams()) -> float:
    vals = [
        sinr(from_channels(p.astype(np.float64)), pk, cfar)
        for p, pk in zip(pred_channels, peaks)
        if len(pk)
    ]
    return float(np.mean(vals)) if vals else float("nan")


def evaluate(model: ModelState, data: PairSet, batch_size: int = 16) -> tuple[float, float]:
    """Validation MSE and mean SINR over frames with peaks."""
    pred = predict(model, data.inputs, batch_size)
    loss = float(np.mean((pred.astype(np.float64) - data.targets) ** 2))
    s = mean_sinr(pred, data.peaks) if data.peaks is not None else float("nan")
    return loss, s


def train(model: ModelState, train_set: PairSet, val_set: PairSet | None, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Mini-batch Adam on the MSE loss with best-validation checkpointing.

    ``model`` is updated in place and training continues from its current
    weights, so a pre-trained model can be fine-tuned by passing it again.
    Early stopping watches validation MSE (training MSE when no validation
    set is given).
    """
    if len(train_set) == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(cfg.seed)
    opt = AdamState(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    params = model.params()
    has_bn = any(model.arch.has_bn(i) for i in range(model.arch.n_layers))
    n = len(train_set)
    result = TrainResult(model.copy(), optimizer=opt)
    best = np.inf
    stale = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            if has_bn and len(idx) < 2:
                continue
            x = train_set.inputs[idx]
            pred = cnn.forward(model, x, "train")
            loss, grad = cnn.mse_loss(pred, train_set.targets[idx])
            if not np.isfinite(loss):
                raise NumericError(f"non-finite training loss at epoch {epoch}")
            grads, _ = cnn.backward(model, grad)
            cnn.adam_step(opt, params, grads)
            total += loss * len(idx)
        model.cache = None
        train_loss = total / n
        if val_set is not None and len(val_set):
            val_loss, val_sinr = evaluate(model, val_set)
        else:
            val_loss, val_sinr = train_loss, float("nan")
        if not np.isfinite(val_loss):
            raise NumericError(f"non-finite validation loss at epoch {epoch}")
        result.history.append(
            {"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "val_sinr": val_sinr}
        )
        log.debug("epoch %d train %.4g val %.4g sinr %.2f", epoch, train_loss, val_loss, val_sinr)
        if val_loss < best:
            best = val_loss
            stale = 0
            result.model = model.copy()
            result.best_epoch = epoch
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    result.model.mode = "eval"
    return result
