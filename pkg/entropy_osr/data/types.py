import dataclasses
from typing import Iterable, Optional, Tuple

import numpy as np

from ..errors import ConfigError, DataError

SPLITS = ("train", "test")


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.flags.writeable = False
    return array


@dataclasses.dataclass(frozen=True)
class Dataset:
    """Labeled single-channel images sharing one H x W, values in [0, 1].

    Labels are 0-based class ids indexing ``class_names``. Instances are
    immutable (the arrays are read-only) and may be shared between workers.
    """

    images: np.ndarray
    labels: np.ndarray
    class_names: Tuple[str, ...]
    split_tag: str = "train"

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if images.ndim != 3:
            raise DataError(
                f"Images must be stacked as (N, H, W), got shape {images.shape}",
                code="image_shape",
            )
        if len(images) != len(labels):
            raise DataError(
                f"{len(images)} images but {len(labels)} labels", code="length_mismatch"
            )
        if len(labels) and (labels.min() < 0 or labels.max() >= len(self.class_names)):
            raise DataError(
                f"Labels must be in 0..{len(self.class_names) - 1}",
                code="label_range",
            )
        if self.split_tag not in SPLITS:
            raise DataError(f"Unknown split {self.split_tag}", code="split_tag")
        object.__setattr__(self, "images", _frozen(images))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    def __len__(self):
        return len(self.labels)

    @property
    def image_size(self) -> Tuple[int, int]:
        return tuple(self.images.shape[1:])

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def class_ids(self) -> Tuple[int, ...]:
        return tuple(sorted(set(int(x) for x in self.labels)))

    def indices_of(self, class_id: int) -> np.ndarray:
        return np.flatnonzero(self.labels == class_id)

    def counts(self):
        return {
            int(k): int(v) for k, v in zip(*np.unique(self.labels, return_counts=True))
        }

    def take(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            images=self.images[indices],
            labels=self.labels[indices],
            class_names=self.class_names,
            split_tag=self.split_tag,
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.class_names == other.class_names
            and self.split_tag == other.split_tag
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.images, other.images)
        )


@dataclasses.dataclass(frozen=True)
class SynthConfig:
    n_classes: int = 6
    per_class: int = 100
    image_size: int = 32
    speckle_looks: int = 4
    difficulty: float = 0.8
    seed: int = 0
    test_per_class: Optional[int] = None
    "test split size per class, defaults to per_class"

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigError("n_classes must be at least 2", location="n_classes")
        if self.image_size < 16:
            raise ConfigError("image_size must be at least 16", location="image_size")
        if self.per_class < 1:
            raise ConfigError("per_class must be at least 1", location="per_class")
        if self.test_per_class is not None and self.test_per_class < 1:
            raise ConfigError(
                "test_per_class must be at least 1", location="test_per_class"
            )
        if self.speckle_looks < 1:
            raise ConfigError(
                "speckle_looks must be a positive integer", location="speckle_looks"
            )
        if not 0.0 <= self.difficulty <= 1.0:
            raise ConfigError("difficulty must lie in [0, 1]", location="difficulty")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer", location="seed")

    @property
    def json(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, js):
        fields = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in js.items() if k in fields})


@dataclasses.dataclass
class ImageEntry:
    class_name: str
    relative_path: str
    image: np.ndarray


def restrict(ds: Dataset, class_ids: Iterable[int]) -> Dataset:
    """Keeps only samples of ``class_ids``; labels keep their original ids."""
    class_ids = sorted(set(int(c) for c in class_ids))
    if not class_ids:
        raise DataError("restrict needs at least one class id", code="empty_restrict")
    unknown = [c for c in class_ids if not 0 <= c < ds.n_classes]
    if unknown:
        raise DataError(f"Unknown class ids {unknown}", code="unknown_class")
    mask = np.isin(ds.labels, class_ids)
    if not mask.any():
        raise DataError(
            f"No samples left after restricting to classes {class_ids}",
            code="empty_restrict",
        )
    return ds.take(np.flatnonzero(mask))


def subsample_per_class(ds: Dataset, per_class: int) -> Dataset:
    """Keeps the first ``per_class`` samples of every class (training budget)."""
    if per_class <= 0:
        return ds
    keep = []
    for class_id in ds.class_ids:
        keep.extend(ds.indices_of(class_id)[:per_class].tolist())
    return ds.take(sorted(keep))
