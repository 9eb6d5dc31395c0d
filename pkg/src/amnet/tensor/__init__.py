from .core import ShapeError, Tape, Tensor, UsageError, backward
from .ops import (
    ConvSpec,
    add,
    avg_pool2d,
    bilinear_resize,
    concat_depth,
    conv2d,
    max_pool2d,
    mean,
    multiply,
    relu,
    resize_matrix,
    scale,
    sigmoid,
    square,
    subtract,
    sum_all,
    xcorr,
)
from .params import Param, ParamStore, adam_step, xavier_init

__all__ = [
    "ConvSpec",
    "Param",
    "ParamStore",
    "ShapeError",
    "Tape",
    "Tensor",
    "UsageError",
    "adam_step",
    "add",
    "avg_pool2d",
    "backward",
    "bilinear_resize",
    "concat_depth",
    "conv2d",
    "max_pool2d",
    "mean",
    "multiply",
    "relu",
    "resize_matrix",
    "scale",
    "sigmoid",
    "square",
    "subtract",
    "sum_all",
    "xavier_init",
]
