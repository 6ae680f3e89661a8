"""Loss-term ablations trained and meta-tested on one seed and dataset."""
import dataclasses
import logging
from typing import Dict, Mapping, Optional

from ..data.types import Dataset
from ..ext_config import ABLATION_VARIANTS
from ..network import Arch
from .callbacks import TrainingCallback
from .protocol import MetaTestResult, meta_test, training_split
from .trainer import meta_train
from .types import EvalConfig, TrainConfig

log = logging.getLogger("entropy_osr.meta")


@dataclasses.dataclass
class AblationResult:
    results: Dict[str, MetaTestResult]
    configs: Dict[str, TrainConfig]

    def fpr(self, variant: str) -> float:
        return self.results[variant].average.fpr

    @property
    def json(self):
        variants = {
            name: {
                "lambdas": list(self.configs[name].lambdas),
                "metrics": result.average.json,
            }
            for name, result in self.results.items()
        }
        ret = {"variants": variants}
        if "full" in self.results:
            ret["fpr_minus_full"] = {
                name: self.fpr(name) - self.fpr("full") for name in self.results if name != "full"
            }
        return ret


def ablate(
    train: Dataset,
    test: Dataset,
    train_cfg: TrainConfig,
    eval_cfg: EvalConfig,
    arch: Optional[Arch] = None,
    variants: Mapping[str, Mapping] = None,
    callback: Optional[TrainingCallback] = None,
) -> AblationResult:
    variants = ABLATION_VARIANTS if variants is None else variants
    results, configs = {}, {}
    for name, overrides in variants.items():
        cfg = train_cfg.replace(**overrides)
        log.info("Ablation variant %s: lambdas %s", name, cfg.lambdas)
        trained = meta_train(training_split(train, eval_cfg), cfg, arch, callback)
        results[name] = meta_test(trained.params, train, test, cfg, eval_cfg)
        configs[name] = cfg
    return AblationResult(results=results, configs=configs)
