"""Data splitting, the mini-batch training loop and evaluation metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import tensor as T
from .adam import Adam
from .encoding import EncoderSpec, encode_batch
from .errors import (
    CompatibilityError,
    ConfigError,
    EmptyInputError,
    MapeUndefinedError,
    NumericError,
    SplitError,
)
from .model import Variant, forward, predict

__all__ = [
    "EncodedData",
    "encoder_specs",
    "encode_dataset",
    "SplitSpec",
    "split_indices",
    "stratified_split",
    "TrainConfig",
    "Metrics",
    "compute_metrics",
    "evaluate",
    "EarlyStopping",
    "History",
    "train",
]


@dataclass
class EncodedData:
    """One-hot inputs and targets ready for :func:`train`."""

    smiles: np.ndarray  # [N, smiles_len, |smiles vocab|]
    inchi: np.ndarray  # [N, inchi_len, |inchi vocab|]
    y: np.ndarray  # [N]
    ids: list
    smiles_spec: EncoderSpec = None
    inchi_spec: EncoderSpec = None

    def __len__(self):
        return len(self.y)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return EncodedData(self.smiles[idx], self.inchi[idx], self.y[idx],
                           [self.ids[i] for i in idx], self.smiles_spec, self.inchi_spec)


def encoder_specs(config, unknown_policy=None, overflow_policy="reject"):
    """Encoder specs matching a model config's vocabularies and lengths.

    ``unknown_policy`` defaults to ``map_to_unk`` when the vocabulary has an
    UNK slot and ``reject`` otherwise.
    """
    def spec(vocab, length):
        policy = unknown_policy or ("map_to_unk" if vocab.has_unk else "reject")
        return EncoderSpec(vocab, length, overflow_policy, policy)

    return spec(config.smiles_vocab, config.smiles_len), spec(config.inchi_vocab, config.inchi_len)


def encode_dataset(dataset, config, unknown_policy=None, overflow_policy="reject"):
    s_spec, i_spec = encoder_specs(config, unknown_policy, overflow_policy)
    return EncodedData(
        encode_batch(dataset.smiles, s_spec),
        encode_batch(dataset.inchi, i_spec),
        dataset.homo.copy(),
        [r.id for r in dataset.records],
        s_spec,
        i_spec,
    )


def check_compatible(model, data):
    cfg = model.config
    for label, spec, vocab, length in (
        ("SMILES", data.smiles_spec, cfg.smiles_vocab, cfg.smiles_len),
        ("InChI", data.inchi_spec, cfg.inchi_vocab, cfg.inchi_len),
    ):
        if spec is not None and (spec.vocabulary != vocab or spec.max_len != length):
            raise CompatibilityError(
                f"{label} encoding (len {spec.max_len}, vocab {len(spec.vocabulary)}) does not "
                f"match the model (len {length}, vocab {len(vocab)})"
            )
    if data.smiles.shape[1:] != (cfg.smiles_len, len(cfg.smiles_vocab)):
        raise CompatibilityError(f"SMILES array shape {data.smiles.shape[1:]} does not match model")
    if data.inchi.shape[1:] != (cfg.inchi_len, len(cfg.inchi_vocab)):
        raise CompatibilityError(f"InChI array shape {data.inchi.shape[1:]} does not match model")


# -- splitting ---------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple = (0.70, 0.20, 0.10)  # train, test, validation
    strat_bins: int = 10
    seed: int = 0

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ConfigError(f"need three positive ratios, got {self.ratios}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError(f"ratios must sum to 1, got {sum(self.ratios)}")
        if self.strat_bins < 1:
            raise ConfigError("strat_bins must be >= 1")


def _partition_sizes(n, ratios):
    n_train = int(math.floor(ratios[0] * n + 0.5))
    n_test = int(math.floor(ratios[1] * n + 0.5))
    return n_train, n_test, n - n_train - n_test


def split_indices(y, spec=SplitSpec()):
    """Stratified (train, test, validation) index arrays for targets ``y``.

    Samples are ranked by target and cut into ``strat_bins`` equal-count
    quantile bins, each bin is shuffled, and the bins are laid end to end.
    Walking that order, each sample goes to the partition furthest behind
    its quota, so every bin is apportioned in the split ratios and the
    global sizes are exact.
    """
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    if n < spec.strat_bins:
        raise SplitError(f"dataset of {n} samples is smaller than strat_bins={spec.strat_bins}")
    rng = np.random.default_rng(spec.seed)
    ranked = np.argsort(y, kind="stable")
    bin_of = np.arange(n) * spec.strat_bins // n
    order = []
    for b in range(spec.strat_bins):
        members = ranked[bin_of == b]
        order.extend(members[rng.permutation(len(members))])

    sizes = _partition_sizes(n, spec.ratios)
    ratios = np.asarray(spec.ratios)
    counts = np.zeros(3, dtype=np.int64)
    parts = ([], [], [])
    for pos, idx in enumerate(order):
        deficit = ratios * (pos + 1) - counts
        for k in np.argsort(-deficit, kind="stable"):
            if counts[k] < sizes[k]:
                break
        parts[k].append(int(idx))
        counts[k] += 1
    return tuple(np.array(sorted(p), dtype=np.int64) for p in parts)


def stratified_split(dataset, spec=SplitSpec()):
    """Split a Dataset or EncodedData into (train, test, validation)."""
    y = dataset.homo if hasattr(dataset, "homo") else dataset.y
    return tuple(dataset.subset(idx) for idx in split_indices(y, spec))


# -- metrics -----------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    mse: float
    mae: float
    mape: float  # percent

    def to_dict(self):
        return asdict(self)


def compute_metrics(y_true, y_pred):
    y = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if y.size == 0:
        raise EmptyInputError("cannot compute metrics on an empty set")
    err = p - y
    mse = float(np.mean(err * err))
    mae = float(np.mean(np.abs(err)))
    if np.any(np.abs(y) < 1e-9):
        raise MapeUndefinedError("MAPE undefined: some |target| < 1e-9",
                                 Metrics(mse, mae, float("nan")))
    mape = float(100.0 * np.mean(np.abs(err) / np.abs(y)))
    return Metrics(mse, mae, mape)


def evaluate(model, data):
    if len(data) == 0:
        raise EmptyInputError("cannot evaluate on an empty dataset")
    check_compatible(model, data)
    return compute_metrics(data.y, predict(model, data.smiles, data.inchi))


# -- training ----------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 32
    max_epochs: int = 200
    early_stop_patience: int = 20
    early_stop_metric: str = "val_mse"
    seed: int = 0
    restore_best: bool = True

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError("learning_rate must be non-negative")
        if self.batch_size < 1 or self.early_stop_patience < 1 or self.max_epochs < 0:
            raise ConfigError("batch_size and patience must be >= 1, max_epochs >= 0")
        if self.early_stop_metric != "val_mse":
            raise ConfigError(f"unsupported early_stop_metric {self.early_stop_metric!r}")


class EarlyStopping:
    """Stop after ``patience`` consecutive epochs without a new minimum."""

    def __init__(self, patience):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = None
        self.bad_epochs = 0

    def update(self, epoch, value):
        """Record ``value`` for ``epoch``; return True when training should stop."""
        if value < self.best:
            self.best, self.best_epoch, self.bad_epochs = value, epoch, 0
            return False
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience


@dataclass
class History:
    epochs: list = field(default_factory=list)
    best_epoch: int = None
    stopped_early: bool = False
    optimizer_steps: int = 0

    def __len__(self):
        return len(self.epochs)

    def column(self, key):
        return [e[key] for e in self.epochs]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_mse", "val_mse", "val_mape"])
            for e in self.epochs:
                w.writerow([e["epoch"], repr(e["train_mse"]), repr(e["val_mse"]), repr(e["val_mape"])])


def _fit_output_affine(model, y):
    affine = model.metadata.setdefault("output_affine", {"shift": 0.0, "scale": 1.0, "fitted": False})
    if affine.get("fitted"):
        return
    std = float(np.std(y))
    affine.update(shift=float(np.mean(y)), scale=std if std > 0 else 1.0, fitted=True)


def _val_metrics(model, data):
    pred = predict(model, data.smiles, data.inchi)
    try:
        return compute_metrics(data.y, pred)
    except MapeUndefinedError as exc:
        return exc.partial


def train(model, train_set, val_set, config=TrainConfig(), log=None):
    """Train ``model`` in place with Adam on mini-batch MSE.

    A model that has never been trained first gets its output shift and
    scale set to the mean and standard deviation of the training targets.
    Each epoch reshuffles the training set (the last partial batch is kept)
    and then scores the validation set; training stops once validation MSE
    has not improved for ``early_stop_patience`` epochs. With
    ``restore_best`` the best-epoch parameters are restored.
    Returns ``(model, history)``.
    """
    if len(train_set) == 0:
        raise EmptyInputError("training set is empty")
    check_compatible(model, train_set)
    if val_set is not None and len(val_set):
        check_compatible(model, val_set)
    else:
        val_set = None
    history = History()
    if config.max_epochs == 0:
        return model, history

    _fit_output_affine(model, train_set.y)
    variant = model.config.variant
    use_s = variant is not Variant.INCHI_ONLY
    use_i = variant is not Variant.SMILES_ONLY
    opt = Adam(model.named_parameters(), learning_rate=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    stopper = EarlyStopping(config.early_stop_patience)
    best_state = None
    n = len(train_set)

    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(n)
        total = 0.0
        for bno, start in enumerate(range(0, n, config.batch_size)):
            idx = perm[start : start + config.batch_size]
            pred = forward(model,
                           train_set.smiles[idx] if use_s else None,
                           train_set.inchi[idx] if use_i else None)
            loss = T.mse_loss(pred, train_set.y[idx])
            value = float(loss.data)
            if not math.isfinite(value):
                raise NumericError(f"non-finite loss at epoch {epoch}, batch {bno}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += value * len(idx)
        record = {"epoch": epoch, "train_mse": total / n, "val_mse": math.nan, "val_mape": math.nan}
        stop = False
        if val_set is not None:
            m = _val_metrics(model, val_set)
            if not math.isfinite(m.mse):
                raise NumericError(f"non-finite validation MSE at epoch {epoch}")
            record.update(val_mse=m.mse, val_mape=m.mape)
            stop = stopper.update(epoch, m.mse)
            if stopper.best_epoch == epoch and config.restore_best:
                best_state = {k: v.copy() for k, v in model.state_arrays().items()}
        history.epochs.append(record)
        if log is not None:
            log(record)
        if stop:
            history.stopped_early = True
            break

    history.optimizer_steps = opt.state.step
    history.best_epoch = stopper.best_epoch
    if best_state is not None:
        model.load_state_arrays(best_state)
    return model, history
