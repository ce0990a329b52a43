"""
One-hot encoding of SMILES and InChI strings
Each notation gets its own character vocabulary and a fixed sequence
length; shorter strings are padded with zero rows.
"""

import numpy as np

from sinet.encoding import EncoderSpec, build_vocabulary, decode_onehot, encode_onehot
from sinet.synthetic import make_dataset

ds = make_dataset(5, seed=0)
for r in ds:
    print(f"{r.id}  {r.smiles:<28} {r.inchi}")

smiles_vocab = build_vocabulary(ds.smiles, reserve_unk=True)
inchi_vocab = build_vocabulary(ds.inchi, reserve_unk=True)
print("\nSMILES vocabulary:", smiles_vocab.to_lines())
print("InChI vocabulary :", inchi_vocab.to_lines())

spec = EncoderSpec(smiles_vocab, max_len=82, unknown_policy="map_to_unk")
m = encode_onehot(ds[0].smiles, spec)
print(f"\nencoded '{ds[0].smiles}' -> matrix {m.shape}")
print("first rows:")
print(m[:4].astype(int))
print("row sums:", m.sum(axis=1)[: len(ds[0].smiles) + 3], "...")
print("decoded back:", decode_onehot(m, spec))

# a character outside the vocabulary lands in the reserved last column
m_unk = encode_onehot("C#N", spec)
print("\n'C#N' with '#' unseen: column of row 1 =", int(np.argmax(m_unk[1])), "of", spec.width)
