"""Differentiable network kernel: tape autodiff, MLP/GRU bodies, optimizers."""
from . import autodiff
from .autodiff import Tape, Var
from .checkpoint import load_checkpoint, save_checkpoint
from .networks import CELL_TYPES, FEEDFORWARD, RECURRENT, NetSpec, Network, concat_inputs
from .optim import Adam, RMSProp
from .params import ParameterStore

__all__ = [
    "autodiff",
    "Tape",
    "Var",
    "ParameterStore",
    "NetSpec",
    "Network",
    "concat_inputs",
    "FEEDFORWARD",
    "RECURRENT",
    "CELL_TYPES",
    "Adam",
    "RMSProp",
    "save_checkpoint",
    "load_checkpoint",
]
