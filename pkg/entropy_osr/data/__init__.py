from .pgm import bilinear_resize, read_pgm, write_pgm
from .readers import BaseReader
from .readers.manifest import ManifestReader, load_dir
from .rng import RNG_ALGORITHM, make_rng
from .synthetic import base_pattern, gen_synthetic
from .types import Dataset, ImageEntry, SynthConfig, restrict, subsample_per_class
from .writers import BaseWriter
from .writers.csv import CSVWriter, read_csv
from .writers.json import JSONWriter
from .writers.manifest import MANIFEST_NAME, ManifestWriter, export_dataset

__all__ = (
    "Dataset",
    "SynthConfig",
    "ImageEntry",
    "restrict",
    "subsample_per_class",
    "gen_synthetic",
    "base_pattern",
    "load_dir",
    "export_dataset",
    "read_pgm",
    "write_pgm",
    "bilinear_resize",
    "make_rng",
    "RNG_ALGORITHM",
    "BaseReader",
    "ManifestReader",
    "BaseWriter",
    "ManifestWriter",
    "CSVWriter",
    "JSONWriter",
    "read_csv",
    "MANIFEST_NAME",
)
