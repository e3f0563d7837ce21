"""Minimal dense-array numerics with reverse-mode differentiation."""
from .backend import COMPILED, backend_name
from .gradcheck import grad_check
from .params import (FORMAT_VERSION, MAGIC, ParamStore, load_checkpoint,
                     save_checkpoint, sgd_step)
from .tensor import (ShapeError, Tensor, add, add_channel_bias, concat_channels,
                     concat_rows, conv2d, elementwise_mul, fully_connected,
                     global_avg_pool, relu, reshape, scale, smooth_l1,
                     softmax_xent, subtract, take_rows, tile_to)

__all__ = [
    "COMPILED", "backend_name", "grad_check",
    "FORMAT_VERSION", "MAGIC", "ParamStore", "load_checkpoint",
    "save_checkpoint", "sgd_step",
    "ShapeError", "Tensor", "add", "add_channel_bias", "concat_channels",
    "concat_rows", "conv2d", "elementwise_mul", "fully_connected",
    "global_avg_pool", "relu", "reshape", "scale", "smooth_l1",
    "softmax_xent", "subtract", "take_rows", "tile_to",
]
