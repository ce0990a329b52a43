"""CSV ingestion, Boltzmann averaging and dataset statistics."""

import math
from decimal import Decimal, localcontext
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sinet.data_io import (
    BOLTZMANN_EV_PER_K,
    Dataset,
    MoleculeRecord,
    apply_boltzmann,
    boltzmann_average,
    boltzmann_weights,
    dataset_stats,
    export_csv,
    load_csv,
)
from sinet.encoding import build_vocabulary
from sinet.errors import DataError, EmptyInputError, NumericError

HEADER = "id,smiles,inchi,homo_ev\n"
ROWS = [
    "m1,CCO,InChI=1S/C2H6O/c1-2-3/h3H;2H2;1H3,-5.61\n",
    "m2,c1ccccc1,InChI=1S/C6H6/c1-2-4-6-5-3-1/h1-6H,-6.04\n",
    "m3,C=C,InChI=1S/C2H4/c1-2/h1-2H2,-5.10\n",
]


def decimal_boltzmann(conformers, t):
    """50-digit reference evaluation of the Boltzmann-weighted mean."""
    with localcontext() as ctx:
        ctx.prec = 50
        kt = Decimal(BOLTZMANN_EV_PER_K) * Decimal(t)
        w = [(-(Decimal(e) - min(Decimal(c[1]) for c in conformers)) / kt).exp() for _, e in conformers]
        return float(sum(wi * Decimal(h) for wi, (h, _) in zip(w, conformers)) / sum(w))


def _write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoad:
    def test_three_rows_in_order(self, tmp_path):
        ds = load_csv(_write(tmp_path, HEADER + "".join(ROWS)))
        assert [r.id for r in ds] == ["m1", "m2", "m3"]
        assert ds.homo.tolist() == [-5.61, -6.04, -5.10]
        assert ds.rows == [2, 3, 4]

    def test_duplicate_rows_named(self, tmp_path):
        text = HEADER + ROWS[0] + ROWS[1] + ROWS[2] + "m4,CC,InChI=1S/C2H6/c1-2/h1-2H3,-6.5\n" + ROWS[0]
        with pytest.raises(DataError, match=r"'m1' on rows 2, 6"):
            load_csv(_write(tmp_path, text))

    def test_duplicate_on_rows_2_and_5(self, tmp_path):
        text = HEADER + ROWS[0] + ROWS[1] + ROWS[2] + ROWS[0]
        with pytest.raises(DataError, match=r"rows 2, 5"):
            load_csv(_write(tmp_path, text))

    def test_missing_prefix(self, tmp_path):
        text = HEADER + ROWS[0] + "m2,CC,1S/C2H6O/c1-2-3,-5.0\n"
        with pytest.raises(DataError, match="row 3"):
            load_csv(_write(tmp_path, text))

    def test_bad_float(self, tmp_path):
        with pytest.raises(DataError, match="row 2.*homo_ev"):
            load_csv(_write(tmp_path, HEADER + "m1,C,InChI=1S/CH4,abc\n"))

    def test_missing_column(self, tmp_path):
        with pytest.raises(DataError, match="homo_ev"):
            load_csv(_write(tmp_path, "id,smiles,inchi\nm1,C,InChI=1S/CH4\n"))

    def test_column_map(self, tmp_path):
        text = "name,SMILES,InChI,HOMO\nm1,C,InChI=1S/CH4,-7.0\n"
        ds = load_csv(_write(tmp_path, text), {"id": "name", "smiles": "SMILES", "inchi": "InChI",
                                               "homo_ev": "HOMO"})
        assert ds[0] == MoleculeRecord("m1", "C", "InChI=1S/CH4", -7.0)

    def test_out_of_range_warns(self, tmp_path):
        with pytest.warns(UserWarning, match="outside"):
            load_csv(_write(tmp_path, HEADER + "m1,C,InChI=1S/CH4,1.5\n"))

    def test_no_target(self, tmp_path):
        ds = load_csv(_write(tmp_path, "id,smiles,inchi\nm1,C,InChI=1S/CH4\n"), require_target=False)
        assert math.isnan(ds[0].homo_ev)

    def test_conformers(self, tmp_path):
        text = "id,smiles,inchi,homo_ev,conf_homo_ev,conf_rel_e\nm1,C,InChI=1S/CH4,-5.0,-5.0;-6.0,0;0\n"
        ds = apply_boltzmann(load_csv(_write(tmp_path, text)))
        assert ds[0].homo_ev == pytest.approx(-5.5, abs=1e-12)


class TestExport:
    def test_round_trip(self, tmp_path):
        recs = [MoleculeRecord("a", "C(=O)O", "InChI=1S/CH2O2", -5.123456789012345,
                               ((-5.1, 0.0), (-5.3000000000000007, 0.0123))),
                MoleculeRecord("b", "CC", "InChI=1S/C2H6", 0.1 + 0.2 - 6.0)]
        ds = Dataset(recs, "x")
        export_csv(ds, tmp_path / "o.csv")
        back = load_csv(tmp_path / "o.csv")
        assert back.records[0] == recs[0]
        assert back.records[1].homo_ev == recs[1].homo_ev and back.records[1].conformers is None

    @settings(max_examples=50, deadline=None)
    @given(vals=st.lists(st.floats(-9.99, -0.01, allow_nan=False), min_size=1, max_size=5))
    def test_floats_bit_exact(self, tmp_path_factory, vals):
        path = tmp_path_factory.mktemp("rt") / "o.csv"
        ds = Dataset([MoleculeRecord(f"m{i}", "C", "InChI=1S/CH4", v) for i, v in enumerate(vals)])
        export_csv(ds, path)
        assert load_csv(path).homo.tobytes() == ds.homo.tobytes()


class TestBoltzmann:
    def test_equal_energies_mean(self):
        assert boltzmann_average([(-5.0, 0.2), (-6.0, 0.2)]) == pytest.approx(-5.5, abs=1e-15)

    def test_single(self):
        assert boltzmann_average([(-5.3, 0.7)]) == -5.3

    def test_two_term_hand_evaluation(self):
        kt = BOLTZMANN_EV_PER_K * 298.15
        assert kt == pytest.approx(0.025693, abs=5e-7)
        w1 = 1.0 / (1.0 + math.exp(-0.1 / kt))
        expected = w1 * -5.0 + (1 - w1) * -5.4
        assert boltzmann_average([(-5.0, 0.0), (-5.4, 0.1)], 298.15) == pytest.approx(expected, abs=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(e=st.lists(st.floats(0, 2), min_size=1, max_size=8), t=st.floats(1, 5000),
           shift=st.floats(-50, 50))
    def test_weights_distribution_and_shift(self, e, t, shift):
        w = boltzmann_weights(e, t)
        assert np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12
        homo = [-5.0 - 0.1 * i for i in range(len(e))]
        a = boltzmann_average(zip(homo, e), t)
        b = boltzmann_average(zip(homo, [x + shift for x in e]), t)
        assert a == pytest.approx(b, abs=1e-9)

    def test_high_temperature_limit(self):
        # the gap to the plain mean is about cov(homo, dE) / kT; with meV-scale
        # spreads that term is below 1e-9 at 1e9 K
        conf = [(-5.2, 5e-6), (-5.9, 0.0), (-4.8, 1e-5)]
        assert abs(boltzmann_average(conf, 1e9) - np.mean([-5.2, -5.9, -4.8])) <= 1e-9

    def test_low_temperature_limit(self):
        conf = [(-5.2, 0.05), (-5.9, 0.0), (-4.8, 0.3)]
        assert abs(boltzmann_average(conf, 1e-6) - -5.9) <= 1e-9

    @pytest.mark.parametrize("t", [1e-6, 1.0, 298.15, 1e4, 1e9])
    def test_matches_high_precision(self, t):
        conf = [(-5.2, 0.05), (-5.9, 0.0), (-4.8, 0.3)]
        assert abs(boltzmann_average(conf, t) - decimal_boltzmann(conf, t)) <= 1e-13

    def test_errors(self):
        with pytest.raises(EmptyInputError):
            boltzmann_average([])
        with pytest.raises(NumericError):
            boltzmann_average([(-5.0, math.inf)])
        with pytest.raises(ValueError):
            boltzmann_average([(-5.0, 0.0)], 0.0)


class TestStats:
    def test_single_record(self):
        s = dataset_stats(Dataset([MoleculeRecord("a", "CCO", "InChI=1S/C2H6O", -5.5)]))
        assert s["homo_stdev"] == 0 and s["homo_min"] == s["homo_max"] == s["homo_mean"] == -5.5
        assert s["smiles_len_hist"] == {3: 1}

    def test_overlength_warns(self):
        ds = Dataset([MoleculeRecord("a", "C" * 90, "InChI=1S/C", -5.5)])
        with pytest.warns(UserWarning, match="exceeds"):
            dataset_stats(ds)

    def test_no_warning_when_within(self):
        ds = Dataset([MoleculeRecord("a", "CC", "InChI=1S/C", -5.5)])
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            dataset_stats(ds)

    def test_charset_matches_vocabulary(self, small_dataset):
        s = dataset_stats(small_dataset)
        assert s["smiles_charset_size"] == len(build_vocabulary(small_dataset.smiles))
        assert s["inchi_charset_size"] == len(build_vocabulary(small_dataset.inchi))

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            dataset_stats(Dataset([]))
