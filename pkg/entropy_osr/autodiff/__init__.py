from . import ops
from .gradcheck import GradCheckResult, grad_check
from .graph import DTYPES, Graph, Node, Tensor, backward, forward, resolve_dtype

__all__ = (
    "ops",
    "Graph",
    "Node",
    "Tensor",
    "DTYPES",
    "resolve_dtype",
    "forward",
    "backward",
    "grad_check",
    "GradCheckResult",
)
