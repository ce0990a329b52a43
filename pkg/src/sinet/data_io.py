"""Molecule datasets: CSV ingestion/export, conformer averaging, statistics."""

from __future__ import annotations

import csv
import math
import statistics
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from .encoding import INCHI_MAX_LEN, SMILES_MAX_LEN
from .errors import DataError, EmptyInputError, NumericError

__all__ = [
    "BOLTZMANN_EV_PER_K",
    "DEFAULT_TEMPERATURE_K",
    "MoleculeRecord",
    "Dataset",
    "load_csv",
    "export_csv",
    "boltzmann_weights",
    "boltzmann_average",
    "apply_boltzmann",
    "dataset_stats",
]

BOLTZMANN_EV_PER_K = 8.617333262e-5
DEFAULT_TEMPERATURE_K = 298.15
REQUIRED_COLUMNS = ("id", "smiles", "inchi", "homo_ev")
CONFORMER_COLUMNS = ("conf_homo_ev", "conf_rel_e")
PROVENANCES = ("source", "target-experimental", "target-dft", "synthetic")


@dataclass(frozen=True)
class MoleculeRecord:
    id: str
    smiles: str
    inchi: str
    homo_ev: float
    conformers: tuple = None  # ((homo_ev, rel_energy_ev), ...)

    def validate(self, where="", require_target=True):
        if not self.smiles:
            raise DataError(f"{where}empty SMILES for {self.id!r}")
        if not self.inchi.startswith("InChI="):
            raise DataError(f"{where}InChI for {self.id!r} lacks the 'InChI=' prefix: {self.inchi!r}")
        if not require_target and math.isnan(self.homo_ev):
            return
        if not math.isfinite(self.homo_ev):
            raise DataError(f"{where}non-finite HOMO for {self.id!r}")
        if not -10.0 < self.homo_ev < 0.0:
            warnings.warn(f"{where}HOMO {self.homo_ev} eV for {self.id!r} outside (-10, 0) eV")


@dataclass
class Dataset:
    records: list
    name: str = "dataset"
    provenance: str = "source"
    rows: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise DataError(f"unknown provenance {self.provenance!r}")
        counts = Counter(r.id for r in self.records)
        dups = sorted(k for k, n in counts.items() if n > 1)
        if dups:
            raise DataError(f"duplicate ids: {dups}")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def smiles(self):
        return [r.smiles for r in self.records]

    @property
    def inchi(self):
        return [r.inchi for r in self.records]

    @property
    def homo(self):
        return np.array([r.homo_ev for r in self.records], dtype=np.float64)

    def subset(self, indices, name=None):
        return Dataset([self.records[i] for i in indices], name or self.name, self.provenance)


def _parse_float(text, row, column):
    try:
        return float(text)
    except ValueError:
        raise DataError(f"row {row}, column {column!r}: cannot parse {text!r} as a float") from None


def _parse_float_list(text, row, column):
    return [_parse_float(t, row, column) for t in text.split(";")]


def load_csv(path, column_map=None, name=None, provenance="source", require_target=True):
    """Read a UTF-8 CSV with header ``id,smiles,inchi,homo_ev``.

    ``column_map`` maps canonical names to the file's header names. With
    ``require_target=False`` the ``homo_ev`` column may be absent (values
    become NaN), which is what prediction inputs look like.
    Optional ``conf_homo_ev`` / ``conf_rel_e`` columns hold ``;``-joined
    conformer values. Row numbers in messages count the header as row 1.
    """
    column_map = dict(column_map or {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        position = {h: i for i, h in enumerate(header)}

        def col(canonical):
            return position.get(column_map.get(canonical, canonical))

        needed = REQUIRED_COLUMNS if require_target else REQUIRED_COLUMNS[:3]
        missing = [c for c in needed if col(c) is None]
        if missing:
            raise DataError(f"{path}: missing required columns {missing}")
        conf_cols = [col(c) for c in CONFORMER_COLUMNS]
        if (conf_cols[0] is None) != (conf_cols[1] is None):
            raise DataError(f"{path}: conformer columns must appear together")

        records, row_of = [], {}
        dup_rows = {}
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"row {rownum}: expected {len(header)} fields, got {len(row)}")
            rid = row[col("id")]
            if col("homo_ev") is None:
                homo = math.nan
            else:
                homo = _parse_float(row[col("homo_ev")], rownum, "homo_ev")
            conformers = None
            if conf_cols[0] is not None and row[conf_cols[0]] != "":
                ch = _parse_float_list(row[conf_cols[0]], rownum, "conf_homo_ev")
                ce = _parse_float_list(row[conf_cols[1]], rownum, "conf_rel_e")
                if len(ch) != len(ce):
                    raise DataError(f"row {rownum}: conformer lists differ in length")
                conformers = tuple(zip(ch, ce))
            rec = MoleculeRecord(rid, row[col("smiles")], row[col("inchi")], homo, conformers)
            rec.validate(where=f"row {rownum}: ", require_target=require_target)
            if rid in row_of:
                dup_rows.setdefault(rid, [row_of[rid]]).append(rownum)
            else:
                row_of[rid] = rownum
            records.append(rec)
    if dup_rows:
        detail = "; ".join(f"{k!r} on rows {', '.join(map(str, v))}" for k, v in dup_rows.items())
        raise DataError(f"duplicate ids: {detail}")
    ds = Dataset(records, name or str(path), provenance)
    ds.rows = [row_of[r.id] for r in records]
    return ds


def export_csv(dataset, path):
    """Write ``dataset`` in the :func:`load_csv` schema; floats use ``repr``."""
    with_conf = any(r.conformers for r in dataset.records)
    header = list(REQUIRED_COLUMNS) + (list(CONFORMER_COLUMNS) if with_conf else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in dataset.records:
            row = [r.id, r.smiles, r.inchi, repr(float(r.homo_ev))]
            if with_conf:
                confs = r.conformers or ()
                row.append(";".join(repr(float(h)) for h, _ in confs))
                row.append(";".join(repr(float(e)) for _, e in confs))
            w.writerow(row)


def boltzmann_weights(rel_energies_ev, temperature_k=DEFAULT_TEMPERATURE_K):
    e = np.asarray(rel_energies_ev, dtype=np.float64)
    if e.size == 0:
        raise EmptyInputError("no conformers")
    if not np.all(np.isfinite(e)):
        raise NumericError("non-finite conformer energy")
    if not temperature_k > 0:
        raise ValueError(f"temperature must be positive, got {temperature_k}")
    z = -(e - e.min()) / (BOLTZMANN_EV_PER_K * temperature_k)
    w = np.exp(z)
    return w / w.sum()


def boltzmann_average(conformers, temperature_k=DEFAULT_TEMPERATURE_K):
    """Boltzmann-weighted mean HOMO over ``(homo_ev, rel_energy_ev)`` pairs."""
    conformers = list(conformers)
    if not conformers:
        raise EmptyInputError("no conformers")
    homo = np.array([c[0] for c in conformers], dtype=np.float64)
    if not np.all(np.isfinite(homo)):
        raise NumericError("non-finite conformer HOMO")
    w = boltzmann_weights([c[1] for c in conformers], temperature_k)
    return float(np.dot(w, homo))


def apply_boltzmann(dataset, temperature_k=DEFAULT_TEMPERATURE_K):
    """Replace ``homo_ev`` by the conformer average wherever conformers exist."""
    recs = [
        replace(r, homo_ev=boltzmann_average(r.conformers, temperature_k)) if r.conformers else r
        for r in dataset.records
    ]
    return Dataset(recs, dataset.name, dataset.provenance)


def _hist(lengths):
    return dict(sorted(Counter(lengths).items()))


def dataset_stats(dataset, smiles_max_len=SMILES_MAX_LEN, inchi_max_len=INCHI_MAX_LEN):
    """Summary statistics; warns when strings exceed the encoder lengths."""
    if len(dataset) == 0:
        raise EmptyInputError("dataset is empty")
    homo = [r.homo_ev for r in dataset.records]
    slen = [len(r.smiles) for r in dataset.records]
    ilen = [len(r.inchi) for r in dataset.records]
    if max(slen) > smiles_max_len:
        warnings.warn(f"longest SMILES ({max(slen)}) exceeds encoder max_len {smiles_max_len}")
    if max(ilen) > inchi_max_len:
        warnings.warn(f"longest InChI ({max(ilen)}) exceeds encoder max_len {inchi_max_len}")
    return {
        "count": len(homo),
        "homo_min": min(homo),
        "homo_max": max(homo),
        "homo_mean": statistics.fmean(homo),
        "homo_stdev": statistics.pstdev(homo),
        "smiles_len_min": min(slen),
        "smiles_len_max": max(slen),
        "smiles_len_hist": _hist(slen),
        "inchi_len_min": min(ilen),
        "inchi_len_max": max(ilen),
        "inchi_len_hist": _hist(ilen),
        "smiles_charset_size": len(set("".join(dataset.smiles))),
        "inchi_charset_size": len(set("".join(dataset.inchi))),
    }
