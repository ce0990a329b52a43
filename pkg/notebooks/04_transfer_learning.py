"""
Pretrain on a large source set, fine-tune on a small shifted target set
Compares fine-tuning against training from scratch on identical splits.
This is a scaled-down version of the acceptance run (a few minutes on one core).
"""

from sinet.checkpoint import save_checkpoint
from sinet.encoding import build_vocabulary
from sinet.model import SinetConfig, build_model
from sinet.synthetic import TARGET_DOMAIN, make_dataset
from sinet.training import SplitSpec, TrainConfig, encode_dataset, evaluate, stratified_split, train
from sinet.transfer import compare_transfer

source = make_dataset(5000, seed=11)
target = make_dataset(240, seed=12, domain=TARGET_DOMAIN)

cfg = SinetConfig(build_vocabulary(source.smiles, True), build_vocabulary(source.inchi, True),
                  smiles_len=56, inchi_len=72, conv_filters=8, lstm_units=16, dense_units=16)
data = encode_dataset(source, cfg)
tr, te, va = stratified_split(data, SplitSpec(seed=0))
pretrained, history = train(build_model(cfg, 0), tr, va, TrainConfig(max_epochs=8, early_stop_patience=5))
print(f"source model: {len(history)} epochs, test MAPE {evaluate(pretrained, te).mape:.3f}%")
cid = save_checkpoint(pretrained, "/tmp/source.sinc")
print("saved checkpoint", cid)

report = compare_transfer("/tmp/source.sinc", target, TrainConfig(max_epochs=100, early_stop_patience=20),
                          seeds=range(3), log=lambda r: print(f"  seed {r['seed']} {r['mode']:<9} MAPE {r['mape']:.3f}%"))
s = report.summary()
print(f"\nscratch   {s['scratch_mape_mean']:.3f}% +- {s['scratch_mape_stdev']:.3f}")
print(f"finetuned {s['finetuned_mape_mean']:.3f}% +- {s['finetuned_mape_stdev']:.3f}")
