"""
SAR-like synthetic targets.

Every class is an oriented 2-D Gaussian blob over a dim background. The blob's
center, orientation, width and aspect depend on the class id and are scaled by
``difficulty``: at 0 every class shares the same centered round blob, at 1 the
classes are as far apart as the generator goes. Samples multiply the base
pattern by L-look speckle (gamma with shape L and scale 1/L, mean 1) and clip to
[0, 1].
"""
import logging
import math
from typing import Tuple

import numpy as np

from .rng import make_rng
from .types import Dataset, SynthConfig

log = logging.getLogger("entropy_osr.data")

BACKGROUND = 0.05
PEAK = 0.55
BASE_SIGMA = 0.35

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_SILVER = math.sqrt(2.0) - 1.0


def class_name(class_id: int) -> str:
    return f"class_{class_id:02d}"


def base_pattern(
    class_id: int, n_classes: int, image_size: int, difficulty: float
) -> np.ndarray:
    t = class_id / n_classes
    center_y = difficulty * 0.35 * math.sin(2 * math.pi * t)
    center_x = difficulty * 0.35 * math.cos(2 * math.pi * t)
    theta = difficulty * math.pi * t
    sigma_major = BASE_SIGMA * (1.0 + difficulty * 0.6 * ((class_id * _GOLDEN) % 1.0))
    aspect = 1.0 + difficulty * 2.5 * ((class_id * _SILVER + 0.5) % 1.0)
    sigma_minor = sigma_major / aspect

    coords = (np.arange(image_size) + 0.5) / image_size * 2.0 - 1.0
    yy, xx = np.meshgrid(coords - center_y, coords - center_x, indexing="ij")
    along = xx * math.cos(theta) + yy * math.sin(theta)
    across = -xx * math.sin(theta) + yy * math.cos(theta)
    blob = np.exp(-0.5 * ((along / sigma_major) ** 2 + (across / sigma_minor) ** 2))
    return BACKGROUND + PEAK * blob


def speckle(rng: np.random.Generator, looks: int, shape) -> np.ndarray:
    return rng.gamma(shape=looks, scale=1.0 / looks, size=shape)


def _split(cfg: SynthConfig, split_tag: str, per_class: int) -> Dataset:
    split_key = 0 if split_tag == "train" else 1
    size = cfg.image_size
    images = np.empty((cfg.n_classes * per_class, size, size), dtype=np.float64)
    labels = np.empty(cfg.n_classes * per_class, dtype=np.int64)
    row = 0
    for class_id in range(cfg.n_classes):
        pattern = base_pattern(class_id, cfg.n_classes, size, cfg.difficulty)
        for index in range(per_class):
            # one stream per sample keeps samples independent of generation order
            rng = make_rng(cfg.seed, "noise", split_key, class_id, index)
            noisy = pattern * speckle(rng, cfg.speckle_looks, pattern.shape)
            images[row] = np.clip(noisy, 0.0, 1.0)
            labels[row] = class_id
            row += 1
    return Dataset(
        images=images,
        labels=labels,
        class_names=tuple(class_name(k) for k in range(cfg.n_classes)),
        split_tag=split_tag,
    )


def gen_synthetic(cfg: SynthConfig) -> Tuple[Dataset, Dataset]:
    """Generates (train, test) datasets; a pure function of ``cfg``."""
    log.info(
        "Generating %s synthetic classes, %s px, looks %s, difficulty %s, seed %s",
        cfg.n_classes,
        cfg.image_size,
        cfg.speckle_looks,
        cfg.difficulty,
        cfg.seed,
    )
    train = _split(cfg, "train", cfg.per_class)
    test = _split(cfg, "test", cfg.test_per_class or cfg.per_class)
    return train, test
