import csv
import logging
from typing import Dict, Iterator, List, Sequence

import numpy as np

from ...errors import DataError
from ..pgm import bilinear_resize, read_pgm
from ..types import Dataset, ImageEntry
from . import BaseReader

log = logging.getLogger("entropy_osr.data")


class ManifestReader(BaseReader):
    """Reads header-less ``class_name,relative_path`` lines pointing to P5 images.

    Relative paths resolve against the directory of the manifest.
    """

    def __iter__(self) -> Iterator[ImageEntry]:
        with self._open() as fp:
            for line_no, row in enumerate(csv.reader(fp), start=1):
                if not row or not "".join(row).strip():
                    continue
                if len(row) != 2:
                    raise DataError(
                        f"Manifest line {line_no} must be class_name,relative_path",
                        code="manifest_line",
                        location=f"{self.source}:{line_no}",
                    )
                class_name, relative_path = row[0].strip(), row[1].strip()
                path = (
                    self.base_path / relative_path if self.base_path else relative_path
                )
                yield ImageEntry(
                    class_name=class_name,
                    relative_path=relative_path,
                    image=read_pgm(path),
                )


def load_dir(
    manifest_path,
    image_size: int = 32,
    resize: bool = True,
    split_tag="train",
    class_names: Sequence[str] = None,
) -> Dataset:
    """Loads a manifest + PGM dataset.

    Classes are numbered by first appearance. With ``resize`` every image is
    bilinearly resized to ``image_size`` x ``image_size``; without it all images
    must already share one size. Passing ``class_names`` pins the numbering,
    so a test split gets the ids of its training split.
    """
    class_ids: Dict[str, int] = {name: i for i, name in enumerate(class_names or ())}
    images: List[np.ndarray] = []
    labels: List[int] = []
    for entry in ManifestReader(source=manifest_path):
        if class_names and entry.class_name not in class_ids:
            raise DataError(
                f"Class {entry.class_name} of {entry.relative_path} is not in {list(class_names)}",
                code="unknown_class",
                location=entry.relative_path,
            )
        class_id = class_ids.setdefault(entry.class_name, len(class_ids))
        image = entry.image
        if resize:
            image = bilinear_resize(image, image_size, image_size)
        elif images and image.shape != images[0].shape:
            raise DataError(
                f"Image {entry.relative_path} has shape {image.shape}, "
                f"expected {images[0].shape} (resize disabled)",
                code="inconsistent_shape",
                location=entry.relative_path,
            )
        images.append(image)
        labels.append(class_id)
    if not images:
        raise DataError(f"Manifest {manifest_path} lists no images", code="empty_manifest")
    log.info("Loaded %s images of %s classes from %s", len(images), len(class_ids), manifest_path)
    return Dataset(
        images=np.stack(images),
        labels=np.asarray(labels),
        class_names=tuple(class_ids),
        split_tag=split_tag,
    )
