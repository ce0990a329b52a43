"""Synthetic donor-like molecules with SMILES-like and InChI-like strings.

The generator draws a small structural description (backbone atoms,
C=C double bonds, aromatic rings, side branches, protonation) and renders
it twice. The two renderings expose different facts, mirroring how the real
notations differ:

* double bonds appear explicitly as ``=`` in the SMILES string, and only
  implicitly (through the hydrogen count of the formula) in the InChI string;
* protonation appears only in the InChI string, as a ``/p+q`` layer.

The HOMO target is a linear function of the description plus small noise,
so a model needs both strings to recover it fully. The strings are not
chemically valid and are only meant for benchmarking the learning code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_io import Dataset, MoleculeRecord

__all__ = ["DomainParams", "SOURCE_DOMAIN", "TARGET_DOMAIN", "make_dataset", "linear_length_dataset"]


@dataclass(frozen=True)
class DomainParams:
    backbone: tuple = (3, 9)  # inclusive range of backbone heavy atoms
    ring_probs: tuple = (0.5, 0.35, 0.15)  # P(0, 1, 2 aromatic rings)
    max_double: int = 3
    hetero_prob: float = 0.25
    proton_probs: tuple = (0.6, 0.3, 0.1)  # P(q = 0, 1, 2)
    base: float = -5.45
    w_double: float = 0.11
    w_ring: float = 0.10
    w_proton: float = -0.16
    w_nitrogen: float = 0.05
    w_oxygen: float = -0.04
    noise: float = 0.01


SOURCE_DOMAIN = DomainParams()
TARGET_DOMAIN = DomainParams(
    backbone=(4, 9),
    ring_probs=(0.25, 0.45, 0.30),
    proton_probs=(0.4, 0.4, 0.2),
    base=-5.30,
    w_double=0.14,
    w_ring=0.07,
    w_proton=-0.20,
    w_nitrogen=0.07,
    w_oxygen=-0.02,
    noise=0.015,
)


def _molecule(rng, p):
    n_back = int(rng.integers(p.backbone[0], p.backbone[1] + 1))
    atoms = ["C"] + [
        str(rng.choice(["N", "O", "S"])) if rng.random() < p.hetero_prob else "C"
        for _ in range(n_back - 1)
    ]
    n_rings = int(rng.choice(len(p.ring_probs), p=p.ring_probs))
    q = int(rng.choice(len(p.proton_probs), p=p.proton_probs))

    cc_bonds = [j for j in range(n_back - 1) if atoms[j] == "C" and atoms[j + 1] == "C"]
    n_double = int(rng.integers(0, min(p.max_double, len(cc_bonds)) + 1))
    doubles = set(rng.choice(cc_bonds, size=n_double, replace=False).tolist()) if n_double else set()

    branches = {}
    for j in range(1, n_back):
        if rng.random() < 0.2:
            branches[j] = str(rng.choice(["C", "O", "N", "CC"]))
    ring_at = sorted(rng.choice(np.arange(n_back), size=n_rings, replace=False).tolist())

    tokens = []
    for j, a in enumerate(atoms):
        tokens.append(a)
        if j in branches:
            tokens.append(f"({branches[j]})")
        if j in ring_at:
            d = ring_at.index(j) + 1
            tokens.append(f"(c{d}ccccc{d})")
        if j in doubles:
            tokens.append("=")
    smiles = "".join(tokens)

    heavy = atoms + [c for b in branches.values() for c in b] + ["c"] * (6 * n_rings)
    n_c = sum(a in ("C", "c") for a in heavy)
    n_n = heavy.count("N")
    n_o = heavy.count("O")
    n_s = heavy.count("S")
    n_heavy = len(heavy)
    n_h = max(2 * n_c + n_n + 2 - 2 * n_double - 8 * n_rings, 1)
    formula = "".join(
        sym + (str(k) if k > 1 else "")
        for sym, k in (("C", n_c), ("H", n_h), ("N", n_n), ("O", n_o), ("S", n_s))
        if k
    )
    conn = "-".join(str(k) for k in range(1, n_back + 1))
    if n_rings:
        conn += "".join(f"({n_back + 6 * r + 1}-{n_back + 6 * r + 6})" for r in range(n_rings))
    h_layer = f"/h1H3,2-{n_heavy}H" if n_heavy > 2 else "/h1-2H3"
    inchi = f"InChI=1S/{formula}/c{conn}{h_layer}" + (f"/p+{q}" if q else "")

    homo = (
        p.base
        + p.w_double * n_double
        + p.w_ring * n_rings
        + p.w_proton * q
        + p.w_nitrogen * n_n
        + p.w_oxygen * n_o
        + p.noise * rng.standard_normal()
    )
    return smiles, inchi, float(homo)


def make_dataset(n, seed=0, domain=SOURCE_DOMAIN, name=None):
    """``n`` synthetic molecules drawn from ``domain`` with a seeded PRNG."""
    rng = np.random.default_rng(seed)
    records = []
    for k in range(n):
        smiles, inchi, homo = _molecule(rng, domain)
        records.append(MoleculeRecord(f"syn{k:06d}", smiles, inchi, homo))
    return Dataset(records, name or f"synthetic-{n}-{seed}", "synthetic")


def linear_length_dataset(n=32, seed=0, max_len=82, slope=0.02, base=-5.0):
    """Strings of repeated ``C`` whose target is linear in their length."""
    rng = np.random.default_rng(seed)
    lengths = rng.choice(np.arange(1, max_len + 1), size=n, replace=False)
    records = [
        MoleculeRecord(f"lin{k:03d}", "C" * int(L), "InChI=" + "C" * int(L), base + slope * int(L))
        for k, L in enumerate(lengths)
    ]
    return Dataset(records, f"linear-length-{n}", "synthetic")
