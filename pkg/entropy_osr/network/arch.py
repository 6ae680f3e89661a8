import dataclasses
import math
from typing import Dict, Mapping, Tuple

import numpy as np

from ..autodiff import Graph, Tensor, resolve_dtype
from ..data.rng import make_rng
from ..errors import ConfigError, NumericError, ShapeError

PARAMS_VERSION = 1

DISCRIMINATOR_INPUTS = ("embedding", "distances")


@dataclasses.dataclass(frozen=True)
class Arch:
    input_size: int = 32
    conv_channels: Tuple[int, ...] = (16, 32, 64, 64)
    kernel_size: int = 3
    discriminator_input: str = "distances"
    n_closed: int = 4
    "prototype count seen by the discriminator when it takes distances"

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        if not self.conv_channels:
            raise ConfigError("Arch needs at least one conv block", location="conv_channels")
        if any(c < 1 for c in self.conv_channels):
            raise ConfigError("Channel counts must be positive", location="conv_channels")
        if self.input_size % (2 ** len(self.conv_channels)):
            raise ConfigError(
                f"input_size {self.input_size} is not divisible by 2^{len(self.conv_channels)}",
                location="image_size",
            )
        if self.kernel_size < 1 or self.kernel_size % 2 != 1:
            raise ConfigError("kernel_size must be a positive odd number", location="kernel_size")
        if self.discriminator_input not in DISCRIMINATOR_INPUTS:
            raise ConfigError(
                f"discriminator_input must be one of {DISCRIMINATOR_INPUTS}",
                location="discriminator_input",
            )

    @property
    def embed_dim(self) -> int:
        return self.conv_channels[-1]

    @property
    def discriminator_dim(self) -> int:
        if self.discriminator_input == "distances":
            return self.n_closed
        return self.embed_dim

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        shapes = {}
        in_channels = 1
        k = self.kernel_size
        for block, out_channels in enumerate(self.conv_channels):
            shapes[f"conv{block}.weight"] = (out_channels, in_channels, k, k)
            shapes[f"conv{block}.bias"] = (out_channels,)
            in_channels = out_channels
        shapes["disc.weight"] = (self.discriminator_dim, 2)
        shapes["disc.bias"] = (2,)
        return shapes

    @property
    def json(self):
        return {
            "input_size": self.input_size,
            "conv_channels": list(self.conv_channels),
            "kernel_size": self.kernel_size,
            "discriminator_input": self.discriminator_input,
            "n_closed": self.n_closed,
        }

    @classmethod
    def from_json(cls, js):
        return cls(**{**js, "conv_channels": tuple(js["conv_channels"])})


def _fan_in(shape) -> int:
    if len(shape) == 4:
        return shape[1] * shape[2] * shape[3]
    return shape[0]


class Params:
    """Immutable parameter snapshot; training produces new snapshots."""

    def __init__(
        self,
        arch: Arch,
        arrays: Mapping[str, np.ndarray],
        seed: int,
        dtype="f64",
        version: int = PARAMS_VERSION,
        step: int = 0,
    ):
        self.arch = arch
        self.seed = int(seed)
        self.dtype = dtype
        self.version = version
        self.step = step
        np_dtype = resolve_dtype(dtype)
        shapes = arch.param_shapes()
        if list(arrays) != list(shapes):
            raise ShapeError(
                f"Parameter names {list(arrays)} do not match the arch {list(shapes)}",
                code="param_names",
            )
        frozen = {}
        for name, array in arrays.items():
            array = np.array(array, dtype=np_dtype)
            if array.shape != shapes[name]:
                raise ShapeError(
                    f"Parameter {name} has shape {array.shape}, arch needs {shapes[name]}",
                    code="param_shape",
                    location=name,
                )
            if not np.all(np.isfinite(array)):
                raise NumericError(f"Parameter {name} is not finite", code="param_finite", location=name)
            array.flags.writeable = False
            frozen[name] = array
        self.arrays: Dict[str, np.ndarray] = frozen

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self.arrays)

    def leaves(self, graph: Graph, requires_grad=True) -> Dict[str, Tensor]:
        return {
            name: graph.leaf(array, requires_grad=requires_grad, name=name)
            for name, array in self.arrays.items()
        }

    def sgd_step(self, grads: Mapping[str, np.ndarray], lr: float) -> "Params":
        """Plain SGD, no momentum."""
        return Params(
            self.arch,
            {name: array - lr * grads[name] for name, array in self.arrays.items()},
            seed=self.seed,
            dtype=self.dtype,
            version=self.version,
            step=self.step + 1,
        )

    def __eq__(self, other):
        if not isinstance(other, Params):
            return NotImplemented
        return (
            self.arch == other.arch
            and self.dtype == other.dtype
            and self.names == other.names
            and all(
                np.array_equal(self.arrays[n], other.arrays[n]) for n in self.names
            )
        )

    __hash__ = None

    def __repr__(self):
        return f"Params(arch={self.arch}, seed={self.seed}, dtype={self.dtype}, step={self.step})"


def init_params(arch: Arch, seed: int, dtype="f64") -> Params:
    """Uniform(-b, b) weights with b = sqrt(6 / fan_in); zero biases."""
    rng = make_rng(seed, "init")
    arrays = {}
    for name, shape in arch.param_shapes().items():
        if name.endswith(".bias"):
            arrays[name] = np.zeros(shape)
        else:
            bound = math.sqrt(6.0 / _fan_in(shape))
            arrays[name] = rng.uniform(-bound, bound, size=shape)
    return Params(arch, arrays, seed=seed, dtype=dtype)
