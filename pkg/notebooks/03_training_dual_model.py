"""
Training the dual-branch network on a small synthetic corpus
The synthetic target depends on double bonds (explicit only in SMILES) and
protonation (explicit only in InChI), so each single-notation model misses
part of the signal. Reduced widths keep this to about a minute on one core.
"""

import time

from sinet.encoding import build_vocabulary
from sinet.model import SinetConfig, build_model, count_parameters
from sinet.synthetic import make_dataset
from sinet.training import SplitSpec, TrainConfig, encode_dataset, evaluate, stratified_split, train

ds = make_dataset(1500, seed=123)
sv, iv = build_vocabulary(ds.smiles, True), build_vocabulary(ds.inchi, True)
widths = dict(smiles_len=56, inchi_len=72, conv_filters=8, lstm_units=16, dense_units=16)

print(f"{'variant':<8} {'params':>7} {'epochs':>6} {'test MAPE':>10} {'time':>6}")
for variant in ("smiles", "inchi", "concat", "dual"):
    cfg = SinetConfig(sv, iv, variant, **widths)
    data = encode_dataset(ds, cfg)
    tr, te, va = stratified_split(data, SplitSpec(seed=0))
    t0 = time.time()
    model, history = train(build_model(cfg, 0), tr, va, TrainConfig(max_epochs=10, early_stop_patience=3))
    m = evaluate(model, te)
    print(f"{variant:<8} {count_parameters(model):>7} {len(history):>6} {m.mape:>9.3f}% {time.time() - t0:>5.0f}s")
