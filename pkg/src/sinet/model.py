"""SINet network variants assembled from :mod:`sinet.tensor` primitives.

Each branch is ``conv+ReLU -> conv+ReLU -> maxpool -> LSTM(seq) -> LSTM(last)``.
The dual-branch network runs one branch per notation and concatenates the
two final states before a ``dense(ReLU) -> dense(linear)`` head.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import tensor as T
from .encoding import INCHI_MAX_LEN, SMILES_MAX_LEN, Vocabulary
from .errors import ConfigError, DimensionError, UsageError

__all__ = [
    "Variant",
    "SinetConfig",
    "SinetModel",
    "build_model",
    "forward",
    "predict",
    "count_parameters",
    "expected_parameter_count",
    "union_vocabulary",
    "model_summary",
]


class Variant(str, Enum):
    SMILES_ONLY = "smiles"
    INCHI_ONLY = "inchi"
    CONCAT_SINGLE_BRANCH = "concat"
    DUAL_BRANCH = "dual"


@dataclass(frozen=True)
class SinetConfig:
    smiles_vocab: Vocabulary
    inchi_vocab: Vocabulary
    variant: Variant = Variant.DUAL_BRANCH
    smiles_len: int = SMILES_MAX_LEN
    inchi_len: int = INCHI_MAX_LEN
    conv_layers: int = 2
    conv_filters: int = 32
    kernel_size: int = 3
    pool_size: int = 2
    lstm_layers: int = 2
    lstm_units: int = 64
    dense_units: int = 64

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        counts = dict(
            smiles_len=self.smiles_len, inchi_len=self.inchi_len,
            conv_layers=self.conv_layers, conv_filters=self.conv_filters,
            kernel_size=self.kernel_size, pool_size=self.pool_size,
            lstm_layers=self.lstm_layers, lstm_units=self.lstm_units,
            dense_units=self.dense_units,
        )
        for key, value in counts.items():
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{key} must be a positive integer, got {value!r}")
        if self.kernel_size % 2 == 0:
            raise ConfigError(f"kernel_size must be odd, got {self.kernel_size}")
        for name, length in self.branch_lengths().items():
            if length // self.pool_size == 0:
                raise ConfigError(f"{name} branch length {length} < pool_size {self.pool_size}")

    def branches(self):
        """Branch name -> (sequence length, input width), in build order."""
        v = self.variant
        if v is Variant.SMILES_ONLY:
            return {"smiles": (self.smiles_len, len(self.smiles_vocab))}
        if v is Variant.INCHI_ONLY:
            return {"inchi": (self.inchi_len, len(self.inchi_vocab))}
        if v is Variant.CONCAT_SINGLE_BRANCH:
            width = len(union_vocabulary(self.smiles_vocab, self.inchi_vocab))
            return {"concat": (self.smiles_len + self.inchi_len, width)}
        return {
            "smiles": (self.smiles_len, len(self.smiles_vocab)),
            "inchi": (self.inchi_len, len(self.inchi_vocab)),
        }

    def branch_lengths(self):
        return {k: n for k, (n, _) in self.branches().items()}

    def merge_width(self):
        return self.lstm_units * len(self.branches())

    def to_dict(self):
        return {
            "variant": self.variant.value,
            "smiles_len": self.smiles_len,
            "inchi_len": self.inchi_len,
            "conv_layers": self.conv_layers,
            "conv_filters": self.conv_filters,
            "kernel_size": self.kernel_size,
            "pool_size": self.pool_size,
            "lstm_layers": self.lstm_layers,
            "lstm_units": self.lstm_units,
            "dense_units": self.dense_units,
            "smiles_vocab": self.smiles_vocab.to_lines(),
            "inchi_vocab": self.inchi_vocab.to_lines(),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["smiles_vocab"] = Vocabulary.from_lines(d["smiles_vocab"])
        d["inchi_vocab"] = Vocabulary.from_lines(d["inchi_vocab"])
        return cls(**d)


def union_vocabulary(a, b):
    """Code-point sorted union; UNK reserved if either side reserves it."""
    return Vocabulary(tuple(sorted(set(a.chars) | set(b.chars))), a.has_unk or b.has_unk)


def _projection(src, dst):
    """0/1 matrix mapping one-hot columns of ``src`` onto ``dst``."""
    P = np.zeros((len(src), len(dst)))
    for i, c in enumerate(src.chars):
        P[i, dst.lookup(c)] = 1.0
    if src.has_unk:
        P[src.unk_index, dst.unk_index] = 1.0
    return P


@dataclass
class SinetModel:
    config: SinetConfig
    params: dict
    metadata: dict = field(default_factory=dict)

    def named_parameters(self):
        return list(self.params.items())

    def copy(self):
        params = {k: T.Tensor(t.data.copy(), requires_grad=True, name=k)
                  for k, t in self.params.items()}
        return SinetModel(self.config, params, copy.deepcopy(self.metadata))

    def state_arrays(self):
        return {k: t.data for k, t in self.params.items()}

    def load_state_arrays(self, arrays):
        for k, t in self.params.items():
            t.data[...] = arrays[k]

    @property
    def output_shift(self):
        return float(self.metadata.get("output_affine", {}).get("shift", 0.0))

    @property
    def output_scale(self):
        return float(self.metadata.get("output_affine", {}).get("scale", 1.0))


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _layer_specs(config):
    """(name, kind, shapes) for every layer in build order."""
    specs = []
    K, F, H = config.kernel_size, config.conv_filters, config.lstm_units
    for branch, (_, width) in config.branches().items():
        cin = width
        for j in range(1, config.conv_layers + 1):
            specs.append((f"{branch}.conv{j}", "conv", (K, cin, F)))
            cin = F
        d = F
        for j in range(1, config.lstm_layers + 1):
            specs.append((f"{branch}.lstm{j}", "lstm", (d, H)))
            d = H
    specs.append(("head.dense", "dense", (config.merge_width(), config.dense_units)))
    specs.append(("head.out", "dense", (config.dense_units, 1)))
    return specs


def expected_parameter_count(config):
    """Closed-form parameter count for ``config``."""
    K, F, H, D = config.kernel_size, config.conv_filters, config.lstm_units, config.dense_units
    total = 0
    for _, width in config.branches().values():
        total += K * width * F + F
        total += (config.conv_layers - 1) * (K * F * F + F)
        total += 4 * (F * H + H * H + H)
        total += (config.lstm_layers - 1) * 4 * (H * H + H * H + H)
    M = config.merge_width()
    total += M * D + D
    total += D * 1 + 1
    return total


def build_model(config, seed=0):
    """Fresh model with seeded, per-layer independent initialization.

    Conv and dense weights use Glorot-uniform, LSTM recurrent weights
    uniform(-1/sqrt(h), 1/sqrt(h)), forget-gate biases 1 and other biases 0.
    """
    if not isinstance(config, SinetConfig):
        raise ConfigError("build_model needs a SinetConfig")
    specs = _layer_specs(config)
    streams = np.random.SeedSequence(seed).spawn(len(specs))
    params = {}

    def add(name, arr):
        params[name] = T.Tensor(arr, requires_grad=True, name=name)

    for (name, kind, shape), ss in zip(specs, streams):
        rng = np.random.Generator(np.random.PCG64(ss))
        if kind == "conv":
            K, cin, cout = shape
            add(f"{name}.kernel", _glorot(rng, shape, K * cin, K * cout))
            add(f"{name}.bias", np.zeros(cout))
        elif kind == "lstm":
            d, h = shape
            add(f"{name}.W", _glorot(rng, (d, 4 * h), d, 4 * h))
            lim = 1.0 / np.sqrt(h)
            add(f"{name}.U", rng.uniform(-lim, lim, size=(h, 4 * h)))
            b = np.zeros(4 * h)
            b[h : 2 * h] = 1.0
            add(f"{name}.b", b)
        else:
            n, m = shape
            add(f"{name}.weight", _glorot(rng, shape, n, m))
            add(f"{name}.bias", np.zeros(m))

    metadata = {
        "seed": int(seed),
        "conv_activation": "relu",
        "head_activations": ["relu", "linear"],
        "lstm_gate_order": list(T.GATE_ORDER),
        "lstm_return_sequences": [True] * (config.lstm_layers - 1) + [False],
        "initialization": "glorot_uniform conv/dense/lstm-input; uniform(+-1/sqrt(h)) lstm-recurrent; forget bias 1",
        "concat_input": "both notations one-hot over the union vocabulary, stacked in time (smiles then inchi)",
        "provenance": "scratch",
        "provenance_chain": [],
        "output_affine": {"shift": 0.0, "scale": 1.0, "fitted": False},
    }
    return SinetModel(config, params, metadata)


def _check_input(batch, length, width, label):
    x = np.asarray(batch.data if isinstance(batch, T.Tensor) else batch, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (length, width):
        raise DimensionError(f"{label} batch has shape {x.shape}, expected [B, {length}, {width}]")
    return x


def _branch(model, prefix, x):
    cfg = model.config
    p = model.params
    h = x
    for j in range(1, cfg.conv_layers + 1):
        h = T.relu(T.conv1d_same(h, p[f"{prefix}.conv{j}.kernel"], p[f"{prefix}.conv{j}.bias"]))
    h = T.maxpool1d(h, cfg.pool_size)
    for j in range(1, cfg.lstm_layers + 1):
        lp = T.LstmParams(p[f"{prefix}.lstm{j}.W"], p[f"{prefix}.lstm{j}.U"], p[f"{prefix}.lstm{j}.b"])
        h = T.lstm_layer_forward(h, lp, return_sequence=j < cfg.lstm_layers)
    return h


def forward(model, smiles_batch=None, inchi_batch=None):
    """Predicted HOMO (eV) per sample as a graph-connected ``Tensor [B]``."""
    cfg = model.config
    v = cfg.variant
    needs_smiles = v is not Variant.INCHI_ONLY
    needs_inchi = v is not Variant.SMILES_ONLY
    if needs_smiles and smiles_batch is None:
        raise UsageError(f"variant {v.value!r} needs a SMILES batch")
    if needs_inchi and inchi_batch is None:
        raise UsageError(f"variant {v.value!r} needs an InChI batch")
    xs = _check_input(smiles_batch, cfg.smiles_len, len(cfg.smiles_vocab), "SMILES") if needs_smiles else None
    xi = _check_input(inchi_batch, cfg.inchi_len, len(cfg.inchi_vocab), "InChI") if needs_inchi else None
    if xs is not None and xi is not None and xs.shape[0] != xi.shape[0]:
        raise DimensionError(f"batch size mismatch: SMILES {xs.shape[0]} vs InChI {xi.shape[0]}")

    if v is Variant.SMILES_ONLY:
        feats = _branch(model, "smiles", xs)
    elif v is Variant.INCHI_ONLY:
        feats = _branch(model, "inchi", xi)
    elif v is Variant.CONCAT_SINGLE_BRANCH:
        union = union_vocabulary(cfg.smiles_vocab, cfg.inchi_vocab)
        joined = np.concatenate(
            [xs @ _projection(cfg.smiles_vocab, union), xi @ _projection(cfg.inchi_vocab, union)],
            axis=1,
        )
        feats = _branch(model, "concat", joined)
    else:
        feats = T.concat(_branch(model, "smiles", xs), _branch(model, "inchi", xi))

    p = model.params
    hidden = T.dense(feats, p["head.dense.weight"], p["head.dense.bias"], "relu")
    out = T.dense(hidden, p["head.out.weight"], p["head.out.bias"], "linear")
    out = T.affine(out, model.output_scale, model.output_shift)
    return T.Tensor._from_op(out.data.reshape(-1), (out,), lambda g: (g.reshape(out.shape),))


def predict(model, smiles_batch=None, inchi_batch=None, batch_size=256):
    """Numpy predictions in eV, evaluated in chunks."""
    n = None
    for b in (smiles_batch, inchi_batch):
        if b is not None:
            n = len(b) if np.ndim(b) == 3 else 1
            break
    if n is None:
        raise UsageError("predict needs at least one input batch")
    outs = []
    for s in range(0, n, batch_size):
        sb = smiles_batch[s : s + batch_size] if smiles_batch is not None and np.ndim(smiles_batch) == 3 else smiles_batch
        ib = inchi_batch[s : s + batch_size] if inchi_batch is not None and np.ndim(inchi_batch) == 3 else inchi_batch
        outs.append(forward(model, sb, ib).data)
    return np.concatenate(outs)


def count_parameters(model):
    return int(sum(t.size for t in model.params.values()))


def model_summary(model):
    """JSON-ready description: layers, output shapes, parameter counts."""
    cfg = model.config
    layers = []
    for branch, (length, width) in cfg.branches().items():
        t_len = length
        for j in range(1, cfg.conv_layers + 1):
            k = model.params[f"{branch}.conv{j}.kernel"]
            b = model.params[f"{branch}.conv{j}.bias"]
            layers.append({"name": f"{branch}.conv{j}", "type": "conv1d_same+relu",
                           "output_shape": [t_len, cfg.conv_filters], "parameters": k.size + b.size})
        t_len //= cfg.pool_size
        layers.append({"name": f"{branch}.pool", "type": "maxpool1d",
                       "output_shape": [t_len, cfg.conv_filters], "parameters": 0})
        for j in range(1, cfg.lstm_layers + 1):
            n = sum(model.params[f"{branch}.lstm{j}.{r}"].size for r in ("W", "U", "b"))
            shape = [t_len, cfg.lstm_units] if j < cfg.lstm_layers else [cfg.lstm_units]
            layers.append({"name": f"{branch}.lstm{j}", "type": "lstm",
                           "output_shape": shape, "parameters": n})
    if len(cfg.branches()) > 1:
        layers.append({"name": "merge", "type": "concat",
                       "output_shape": [cfg.merge_width()], "parameters": 0})
    for name, units, act in (("head.dense", cfg.dense_units, "relu"), ("head.out", 1, "linear")):
        n = model.params[f"{name}.weight"].size + model.params[f"{name}.bias"].size
        layers.append({"name": name, "type": f"dense+{act}", "output_shape": [units], "parameters": n})
    return {
        "variant": cfg.variant.value,
        "layers": layers,
        "total_parameters": count_parameters(model),
        "metadata": model.metadata,
    }


def with_variant(config, variant):
    return replace(config, variant=Variant(variant))
