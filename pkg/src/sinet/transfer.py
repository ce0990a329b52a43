"""Pretrain-then-fine-tune workflow and its from-scratch control."""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field, replace

import numpy as np

from .checkpoint import checkpoint_id, load_checkpoint, to_bytes
from .model import SinetModel, build_model
from .training import (
    SplitSpec,
    TrainConfig,
    check_compatible,
    encode_dataset,
    evaluate,
    split_indices,
    train,
)

__all__ = ["finetune", "compare_transfer", "TransferReport", "resolve_source"]


def resolve_source(source):
    """Return ``(model copy, checkpoint id)`` for a path, bytes or model."""
    if isinstance(source, SinetModel):
        return source.copy(), checkpoint_id(to_bytes(source))
    if isinstance(source, (bytes, bytearray)):
        from .checkpoint import from_bytes

        return from_bytes(source), checkpoint_id(bytes(source))
    with open(source, "rb") as fh:
        data = fh.read()
    return load_checkpoint(source), checkpoint_id(data)


def finetune(source, train_set, val_set, config=TrainConfig()):
    """Continue training every layer of a source model on target data.

    The optimizer starts from fresh Adam moments. ``train_set`` and
    ``val_set`` must be encoded with the source model's vocabularies and
    lengths. Returns ``(model, history)``; the model's provenance becomes
    ``finetuned-from:<source id>``.
    """
    model, source_id = resolve_source(source)
    check_compatible(model, train_set)
    if val_set is not None and len(val_set):
        check_compatible(model, val_set)
    meta = model.metadata
    meta["provenance_chain"] = list(meta.get("provenance_chain", [])) + [source_id]
    meta["provenance"] = f"finetuned-from:{source_id}"
    # Keep the source's output scaling; fine-tuning only changes weights.
    meta.setdefault("output_affine", {"shift": 0.0, "scale": 1.0})["fitted"] = True
    return train(model, train_set, val_set, config)


@dataclass
class TransferReport:
    source_checkpoint_id: str
    seeds: list
    rows: list = field(default_factory=list)  # one dict per (seed, mode)

    def metrics(self, mode):
        return [r for r in self.rows if r["mode"] == mode]

    def summary(self):
        out = {}
        for mode in ("scratch", "finetuned"):
            rows = self.metrics(mode)
            for key in ("mse", "mae", "mape"):
                vals = [r[key] for r in rows]
                out[f"{mode}_{key}_mean"] = statistics.fmean(vals)
                out[f"{mode}_{key}_stdev"] = statistics.stdev(vals) if len(vals) > 1 else 0.0
        return out

    @property
    def scratch_mape(self):
        return np.array([r["mape"] for r in self.metrics("scratch")])

    @property
    def finetuned_mape(self):
        return np.array([r["mape"] for r in self.metrics("finetuned")])

    def to_json(self, path=None):
        doc = {
            "source_checkpoint_id": self.source_checkpoint_id,
            "seeds": list(self.seeds),
            "rows": self.rows,
            "summary": self.summary(),
        }
        text = json.dumps(doc, indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path):
        cols = ["seed", "mode", "mse", "mae", "mape", "epochs", "best_epoch", "n_train", "n_test"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows:
                w.writerow([r[c] for c in cols])


def compare_transfer(source, target_dataset, config=TrainConfig(), seeds=range(10), split=None,
                     log=None):
    """Scratch vs fine-tuned runs on identical per-seed target splits.

    For each seed the target set is split with that seed, a fresh model of
    the source architecture is trained from scratch, and the source model
    is fine-tuned; both are scored on the same test indices.
    """
    source_model, source_id = resolve_source(source)
    data = encode_dataset(target_dataset, source_model.config)
    report = TransferReport(source_id, list(seeds))
    for seed in report.seeds:
        spec = replace(split, seed=seed) if split is not None else SplitSpec(seed=seed)
        tr_idx, te_idx, va_idx = split_indices(data.y, spec)
        tr, te, va = data.subset(tr_idx), data.subset(te_idx), data.subset(va_idx)
        run_cfg = replace(config, seed=seed)
        runs = (
            ("scratch", lambda: train(build_model(source_model.config, seed), tr, va, run_cfg)),
            ("finetuned", lambda: finetune(source_model, tr, va, run_cfg)),
        )
        for mode, run in runs:
            model, history = run()
            m = evaluate(model, te)
            row = {
                "seed": seed,
                "mode": mode,
                "mse": m.mse,
                "mae": m.mae,
                "mape": m.mape,
                "epochs": len(history),
                "best_epoch": history.best_epoch,
                "n_train": len(tr),
                "n_test": len(te),
                "test_indices": te_idx.tolist(),
            }
            report.rows.append(row)
            if log is not None:
                log(row)
    return report
