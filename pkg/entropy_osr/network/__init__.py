from .arch import DISCRIMINATOR_INPUTS, PARAMS_VERSION, Arch, Params, init_params
from .checkpoint import (
    dumps_checkpoint,
    load_checkpoint,
    loads_checkpoint,
    save_checkpoint,
)
from .model import OPEN_SLOT, discriminate, discriminate_graph, embed, embed_graph

__all__ = (
    "Arch",
    "Params",
    "init_params",
    "PARAMS_VERSION",
    "DISCRIMINATOR_INPUTS",
    "embed",
    "embed_graph",
    "discriminate",
    "discriminate_graph",
    "OPEN_SLOT",
    "save_checkpoint",
    "load_checkpoint",
    "dumps_checkpoint",
    "loads_checkpoint",
)
