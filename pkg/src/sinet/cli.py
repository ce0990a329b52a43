"""``sinet`` command-line interface.

Exit codes: 0 success, 2 usage, 3 data error, 4 numeric error, 5 I/O error.
Set ``SINET_THREADS`` to cap BLAS threads (default 1, which keeps runs
bitwise reproducible).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .data_io import DEFAULT_TEMPERATURE_K, apply_boltzmann, load_csv
from .encoding import (
    INCHI_MAX_LEN,
    SMILES_MAX_LEN,
    EncoderSpec,
    Vocabulary,
    build_vocabulary,
    encode_onehot,
)
from .errors import (
    CompatibilityError,
    ConfigError,
    DataError,
    EncodingError,
    FormatError,
    NumericError,
    UsageError,
)
from .model import SinetConfig, build_model, model_summary, predict
from .scharber import ScharberInputs, open_circuit_voltage, open_circuit_voltage_magnitude, pce
from .training import SplitSpec, TrainConfig, encode_dataset, evaluate, split_indices, train
from .transfer import compare_transfer, finetune

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4, 5


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(path, args, started, inputs=(), artifacts=None, metrics=None):
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "config": {k: v for k, v in vars(args).items() if k != "func"},
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): _digest(p) for p in inputs},
        "artifacts": artifacts or {},
        "metrics": metrics or {},
        "sinet_version": __version__,
        "started": started,
        "finished": _now(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _column_map(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise UsageError(f"--column expects canonical=header, got {pair!r}")
        k, v = pair.split("=", 1)
        out[k] = v
    return out


def _load(args, require_target=True):
    ds = load_csv(args.data, _column_map(args.column), require_target=require_target)
    if require_target and not args.no_boltzmann:
        ds = apply_boltzmann(ds, args.temperature)
    return ds


def _train_config(args):
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        early_stop_patience=args.patience,
        seed=args.seed,
        restore_best=not args.no_restore_best,
    )


def _split_spec(args):
    return SplitSpec(seed=args.seed, strat_bins=args.strat_bins)


def _add_data_flags(p, require_target=True):
    p.add_argument("--data", required=True, help="molecule CSV (id,smiles,inchi,homo_ev)")
    p.add_argument("--column", action="append", metavar="CANON=HEADER",
                   help="map a canonical column name to a header in the file")
    if require_target:
        p.add_argument("--temperature", type=float, default=DEFAULT_TEMPERATURE_K,
                       help="Boltzmann temperature for conformer averaging (K)")
        p.add_argument("--no-boltzmann", action="store_true",
                       help="use homo_ev as-is even when conformer columns exist")


def _add_train_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--max-epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--strat-bins", type=int, default=10)
    p.add_argument("--no-restore-best", action="store_true")


def _write_history(history, path):
    history.to_csv(path)


# -- commands ----------------------------------------------------------------


def cmd_train(args):
    started = _now()
    ds = _load(args)
    sv = build_vocabulary(ds.smiles, reserve_unk=not args.no_unk)
    iv = build_vocabulary(ds.inchi, reserve_unk=not args.no_unk)
    config = SinetConfig(
        sv, iv, args.variant,
        smiles_len=args.smiles_len, inchi_len=args.inchi_len,
        conv_layers=args.conv_layers, conv_filters=args.conv_filters,
        kernel_size=args.kernel_size, pool_size=args.pool_size,
        lstm_layers=args.lstm_layers, lstm_units=args.lstm_units,
        dense_units=args.dense_units,
    )
    overflow = "truncate" if args.truncate else "reject"
    data = encode_dataset(ds, config, overflow_policy=overflow)
    tr_idx, te_idx, va_idx = split_indices(data.y, _split_spec(args))
    model = build_model(config, args.seed)
    model, history = train(model, data.subset(tr_idx), data.subset(va_idx), _train_config(args))
    test = evaluate(model, data.subset(te_idx))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "model.sinc"
    cid = save_checkpoint(model, ckpt)
    _write_history(history, out / "history.csv")
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(model_summary(model), fh, indent=2)
    metrics = {"test": test.to_dict(), "best_epoch": history.best_epoch,
               "epochs": len(history), "optimizer_steps": history.optimizer_steps}
    _write_manifest(
        out / "manifest.json", args, started, inputs=[args.data],
        artifacts={"checkpoint": str(ckpt), "checkpoint_id": cid,
                   "history": str(out / "history.csv"), "summary": str(out / "summary.json"),
                   "split": {"train": tr_idx.tolist(), "test": te_idx.tolist(),
                             "validation": va_idx.tolist()}},
        metrics=metrics,
    )
    print(json.dumps({"checkpoint": str(ckpt), "checkpoint_id": cid, "test": test.to_dict()}))
    return EXIT_OK


def cmd_finetune(args):
    started = _now()
    ds = _load(args)
    source = load_checkpoint(args.checkpoint)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = _train_config(args)
    if args.compare_scratch:
        report = compare_transfer(args.checkpoint, ds, config,
                                  seeds=range(args.seed, args.seed + args.seeds),
                                  split=_split_spec(args))
        report.to_csv(out / "report.csv")
        report.to_json(out / "report.json")
        _write_manifest(out / "manifest.json", args, started, inputs=[args.data, args.checkpoint],
                        artifacts={"report_csv": str(out / "report.csv"),
                                   "report_json": str(out / "report.json")},
                        metrics=report.summary())
        with open(out / "report.csv", encoding="utf-8") as fh:
            sys.stdout.write(fh.read())
        return EXIT_OK

    data = encode_dataset(ds, source.config)
    tr_idx, te_idx, va_idx = split_indices(data.y, _split_spec(args))
    model, history = finetune(args.checkpoint, data.subset(tr_idx), data.subset(va_idx), config)
    test = evaluate(model, data.subset(te_idx))
    ckpt = out / "model.sinc"
    cid = save_checkpoint(model, ckpt)
    _write_history(history, out / "history.csv")
    _write_manifest(out / "manifest.json", args, started, inputs=[args.data, args.checkpoint],
                    artifacts={"checkpoint": str(ckpt), "checkpoint_id": cid,
                               "history": str(out / "history.csv"),
                               "provenance": model.metadata["provenance"]},
                    metrics={"test": test.to_dict(), "best_epoch": history.best_epoch})
    print(json.dumps({"checkpoint": str(ckpt), "checkpoint_id": cid, "test": test.to_dict()}))
    return EXIT_OK


def cmd_eval(args):
    started = _now()
    ds = _load(args)
    model = load_checkpoint(args.checkpoint)
    metrics = evaluate(model, encode_dataset(ds, model.config)).to_dict()
    text = json.dumps(metrics)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(text + "\n", encoding="utf-8")
        _write_manifest(out / "manifest.json", args, started, inputs=[args.data, args.checkpoint],
                        artifacts={"metrics": str(out / "metrics.json")}, metrics=metrics)
    return EXIT_OK


def cmd_predict(args):
    started = _now()
    ds = _load(args, require_target=False)
    model = load_checkpoint(args.checkpoint)
    data = encode_dataset(ds, model.config)
    preds = predict(model, data.smiles, data.inchi)
    out_fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out_fh, lineterminator="\n")
        w.writerow(["id", "homo_pred_ev"])
        for rid, p in zip(data.ids, preds):
            w.writerow([rid, repr(float(p))])
    finally:
        if args.out:
            out_fh.close()
    if args.manifest:
        _write_manifest(args.manifest, args, started, inputs=[args.data, args.checkpoint],
                        artifacts={"predictions": args.out or "<stdout>"})
    return EXIT_OK


def cmd_scharber(args):
    started = _now()
    inputs = ScharberInputs(args.homo, args.lumo, args.ff, args.jsc, args.pin)
    voc = open_circuit_voltage(inputs.e_homo_donor, inputs.e_lumo_acceptor)
    eff = pce(voc, inputs)
    print(f"Voc={voc:.3f} V, PCE={eff:.3f}%")
    result = {"voc_v": voc, "pce_percent": eff}
    if args.magnitude_convention:
        voc_m = open_circuit_voltage_magnitude(inputs.e_homo_donor, inputs.e_lumo_acceptor)
        eff_m = pce(voc_m, inputs)
        print(f"[magnitude convention, not the default formula] Voc={voc_m:.3f} V, PCE={eff_m:.3f}%")
        result.update(voc_magnitude_v=voc_m, pce_magnitude_percent=eff_m)
    if args.manifest:
        _write_manifest(args.manifest, args, started, metrics=result)
    return EXIT_OK


def cmd_encode(args):
    started = _now()
    if args.checkpoint:
        cfg = load_checkpoint(args.checkpoint).config
        vocab, length = ((cfg.smiles_vocab, cfg.smiles_len) if args.kind == "smiles"
                         else (cfg.inchi_vocab, cfg.inchi_len))
    elif args.vocab:
        vocab = Vocabulary.load(args.vocab)
        length = SMILES_MAX_LEN if args.kind == "smiles" else INCHI_MAX_LEN
    else:
        vocab = build_vocabulary([args.string])
        length = SMILES_MAX_LEN if args.kind == "smiles" else INCHI_MAX_LEN
    if args.max_len:
        length = args.max_len
    policy = "map_to_unk" if vocab.has_unk else "reject"
    spec = EncoderSpec(vocab, length, "truncate" if args.truncate else "reject", policy)
    m = encode_onehot(args.string, spec)
    rows = m if args.full else m[: min(len(args.string), length)]
    print("# columns: " + " ".join(vocab.to_lines()))
    for row in rows:
        print(" ".join(str(int(v)) for v in row))
    if not args.full and len(args.string) < length:
        print(f"# {length - len(args.string)} zero padding rows omitted")
    if args.out:
        np.save(args.out, m)
    if args.manifest:
        _write_manifest(args.manifest, args, started,
                        artifacts={"matrix": args.out} if args.out else {},
                        metrics={"shape": list(m.shape)})
    return EXIT_OK


def cmd_gradcheck(args):
    from .gradcheck import audit

    started = _now()
    failures = 0
    report = []
    for seed in range(args.seed, args.seed + args.seeds):
        for label, r in audit(seed):
            status = "PASS" if r.passed else "FAIL"
            failures += not r.passed
            report.append({"seed": seed, "check": label, "max_rel_error": r.max_rel_error,
                           "tolerance": r.tolerance, "passed": r.passed})
            print(f"{status} seed={seed} {label}: max rel err {r.max_rel_error:.3e} (tol {r.tolerance:.0e})")
    print(f"{len(report) - failures}/{len(report)} checks passed")
    if args.manifest:
        _write_manifest(args.manifest, args, started, metrics={"checks": report, "failures": failures})
    return EXIT_OK if failures == 0 else EXIT_NUMERIC


# -- parser ------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="sinet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from scratch")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--variant", choices=["dual", "smiles", "inchi", "concat"], default="dual")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--smiles-len", type=int, default=SMILES_MAX_LEN)
    p.add_argument("--inchi-len", type=int, default=INCHI_MAX_LEN)
    p.add_argument("--conv-layers", type=int, default=2)
    p.add_argument("--conv-filters", type=int, default=32)
    p.add_argument("--kernel-size", type=int, default=3)
    p.add_argument("--pool-size", type=int, default=2)
    p.add_argument("--lstm-layers", type=int, default=2)
    p.add_argument("--lstm-units", type=int, default=64)
    p.add_argument("--dense-units", type=int, default=64)
    p.add_argument("--no-unk", action="store_true", help="do not reserve an UNK column")
    p.add_argument("--truncate", action="store_true", help="truncate over-long strings")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("finetune", help="fine-tune a checkpoint on a target dataset")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--compare-scratch", action="store_true",
                   help="also train from scratch per seed and write a transfer report")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds for --compare-scratch")
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("eval", help="MSE/MAE/MAPE of a checkpoint on a dataset")
    _add_data_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="per-molecule HOMO predictions as CSV")
    _add_data_flags(p, require_target=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("scharber", help="open-circuit voltage and PCE")
    p.add_argument("--homo", type=float, required=True, help="donor HOMO (eV)")
    p.add_argument("--lumo", type=float, required=True, help="acceptor LUMO (eV)")
    p.add_argument("--ff", type=float, default=0.65, help="fill factor")
    p.add_argument("--jsc", type=float, required=True, help="short-circuit current (mA/cm^2)")
    p.add_argument("--pin", type=float, default=100.0, help="incident power (mW/cm^2)")
    p.add_argument("--magnitude-convention", action="store_true",
                   help="also report Voc from |E_HOMO| - |E_LUMO| (not the default formula)")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_scharber)

    p = sub.add_parser("encode", help="print a one-hot matrix")
    p.add_argument("--string", required=True)
    p.add_argument("--kind", choices=["smiles", "inchi"], default="smiles")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--checkpoint", help="use this checkpoint's vocabulary and length")
    src.add_argument("--vocab", help="vocabulary text file, one character per line")
    p.add_argument("--max-len", type=int)
    p.add_argument("--truncate", action="store_true")
    p.add_argument("--full", action="store_true", help="also print padding rows")
    p.add_argument("--out", help="save the matrix as .npy")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("gradcheck", help="finite-difference audit of all gradients")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def _exit_code(exc):
    if isinstance(exc, (UsageError, ConfigError)):
        return EXIT_USAGE
    if isinstance(exc, FormatError):
        return EXIT_IO
    if isinstance(exc, (DataError, EncodingError, CompatibilityError)):
        return EXIT_DATA
    if isinstance(exc, (NumericError, ArithmeticError)):
        return EXIT_NUMERIC
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, ValueError):
        return EXIT_USAGE
    return None


def main(argv=None):
    args = build_parser().parse_args(argv)
    from threadpoolctl import threadpool_limits

    try:
        threads = int(os.environ.get("SINET_THREADS", "1"))
    except ValueError:
        print("sinet: SINET_THREADS must be an integer", file=sys.stderr)
        return EXIT_USAGE
    with threadpool_limits(limits=max(threads, 1)):
        try:
            return args.func(args)
        except Exception as exc:
            code = _exit_code(exc)
            if code is None:
                raise
            print(f"sinet {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
            return code


if __name__ == "__main__":
    sys.exit(main())
