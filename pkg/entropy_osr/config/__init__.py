"""
Run configuration.

Values are layered ``DEFAULTS`` <- config file <- ``--key value`` overrides and
validated by :class:`RunConfigSchema`. The validated mapping is echoed into
every artifact a command writes.
"""
import dataclasses
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

import marshmallow as ma
from deepmerge import Merger

from ..data.types import SynthConfig
from ..errors import ConfigError
from ..meta.types import EvalConfig, TrainConfig
from ..network import Arch
from ..registry import config_reader_for
from .schema import RunConfigSchema
from .validation_errors import config_error, format_validation_error

log = logging.getLogger("entropy_osr.config")

DEFAULTS: Dict[str, Any] = {
    "n_classes": 6,
    "per_class": 100,
    "test_per_class": 50,
    "image_size": 32,
    "speckle_looks": 4,
    "difficulty": 0.8,
    "conv_channels": [16, 32, 64, 64],
    "kernel_size": 3,
    "discriminator_input": "distances",
    "episodes": 2000,
    "n_closed": 4,
    "n_support": 10,
    "n_query": 10,
    "n_open": 10,
    "lambda1": 0.5,
    "lambda2": 0.25,
    "lambda3": 0.25,
    "lr0": 0.01,
    "lr_halving_period": 1000,
    "tau": 0.1,
    "mode": "features",
    "seed": 0,
    "scalar_width": "f64",
    "open_balanced": False,
    "train_per_class": 0,
    "threshold": 0.5,
    "decision_rule": "discriminator",
    "sweep_grid": [round(0.1 * i, 1) for i in range(11)],
    "n_known": 0,
    "eval_rounds": 4,
    "test_support_per_class": 0,
    "workers": 1,
    "batch_size": 256,
    "gradcheck_eps": 1e-5,
    "gradcheck_tol": 1e-6,
    "gradcheck_entries": 20,
    "data_dir": "",
    "checkpoint": "model.ckpt",
    "report_dir": "reports",
    "log_level": "WARNING",
}

# lists from a later layer replace earlier ones instead of being appended
config_merger = Merger([(dict, ["merge"]), (list, ["override"])], ["override"], ["override"])


def read_config_file(path) -> Dict[str, Any]:
    reader_class = config_reader_for(path)
    values: Dict[str, Any] = {}
    for chunk in reader_class(source=Path(path)):
        values.update(chunk)
    log.info("Read %s keys from %s", len(values), path)
    return values


def parse_overrides(args: Sequence[str]) -> Dict[str, str]:
    """``["--episodes", "10", "--mode=logits"]`` -> ``{"episodes": "10", "mode": "logits"}``."""
    overrides = {}
    args = list(args)
    while args:
        arg = args.pop(0)
        if not arg.startswith("--") or len(arg) == 2:
            raise ConfigError(f"Expected --key value, got '{arg}'", code="override")
        key, sep, value = arg[2:].partition("=")
        if not sep:
            if not args:
                raise ConfigError(f"Missing value for --{key}", code="override", location=key)
            value = args.pop(0)
        overrides[key.replace("-", "_")] = value
    return overrides


@dataclasses.dataclass(frozen=True)
class RunConfig:
    values: Mapping[str, Any]

    def __getattr__(self, name):
        if name == "values":
            raise AttributeError(name)
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name)

    @property
    def echo(self) -> Dict[str, Any]:
        return {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in sorted(self.values.items())}

    def replace(self, **changes) -> "RunConfig":
        return build_config([dict(self.values), changes])

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            n_classes=self.n_classes,
            per_class=self.per_class,
            image_size=self.image_size,
            speckle_looks=self.speckle_looks,
            difficulty=self.difficulty,
            seed=self.seed,
            test_per_class=self.test_per_class,
        )

    def arch(self) -> Arch:
        return Arch(
            input_size=self.image_size,
            conv_channels=tuple(self.conv_channels),
            kernel_size=self.kernel_size,
            discriminator_input=self.discriminator_input,
            n_closed=self.n_closed,
        )

    def train_config(self) -> TrainConfig:
        fields = {f.name for f in dataclasses.fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in self.values.items() if k in fields})

    def eval_config(self) -> EvalConfig:
        fields = {f.name for f in dataclasses.fields(EvalConfig)}
        return EvalConfig(**{k: v for k, v in self.values.items() if k in fields})


def build_config(layers: Iterable[Mapping[str, Any]]) -> RunConfig:
    merged: Dict[str, Any] = {}
    for layer in layers:
        merged = config_merger.merge(merged, dict(layer))
    try:
        values = RunConfigSchema().load(merged)
    except ma.ValidationError as e:
        raise config_error(e)
    return RunConfig(values)


def load_run_config(config_file: Optional[str] = None, overrides: Sequence[str] = ()) -> RunConfig:
    layers = [DEFAULTS]
    if config_file:
        layers.append(read_config_file(config_file))
    layers.append(parse_overrides(overrides))
    return build_config(layers)


__all__ = (
    "DEFAULTS",
    "RunConfig",
    "RunConfigSchema",
    "build_config",
    "load_run_config",
    "parse_overrides",
    "read_config_file",
    "format_validation_error",
)
