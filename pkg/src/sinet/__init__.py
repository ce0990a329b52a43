"""Dual-notation (SMILES + InChI) neural regression of donor HOMO energies."""

__version__ = "0.1.0"

from .checkpoint import load_checkpoint, save_checkpoint
from .data_io import Dataset, MoleculeRecord, boltzmann_average, dataset_stats, load_csv
from .encoding import EncoderSpec, Vocabulary, build_vocabulary, decode_onehot, encode_onehot
from .model import SinetConfig, SinetModel, Variant, build_model, count_parameters, forward, predict
from .scharber import open_circuit_voltage, pce
from .training import Metrics, SplitSpec, TrainConfig, evaluate, stratified_split, train
from .transfer import TransferReport, compare_transfer, finetune

__all__ = [
    "__version__",
    "load_checkpoint", "save_checkpoint",
    "Dataset", "MoleculeRecord", "boltzmann_average", "dataset_stats", "load_csv",
    "EncoderSpec", "Vocabulary", "build_vocabulary", "decode_onehot", "encode_onehot",
    "SinetConfig", "SinetModel", "Variant", "build_model", "count_parameters", "forward", "predict",
    "open_circuit_voltage", "pce",
    "Metrics", "SplitSpec", "TrainConfig", "evaluate", "stratified_split", "train",
    "TransferReport", "compare_transfer", "finetune",
]
