"""Small numpy neural-network substrate: autodiff tensors, layers, Adam, checkpoints."""

from hxe.nnet.checkpoint import decode_params, encode_params, load_params, save_params
from hxe.nnet.layers import MLP, Conv2d, LayerNorm, Linear, Module, MultiHeadAttention, Parameter, TransformerBlock
from hxe.nnet.optim import Adam, adam_step, cosine_lr
from hxe.nnet.tensor import NonFiniteError, Tensor, as_tensor, no_grad

__all__ = [
    "decode_params", "encode_params", "load_params", "save_params", "MLP", "Conv2d", "LayerNorm",
    "Linear", "Module", "MultiHeadAttention", "Parameter", "TransformerBlock", "Adam", "adam_step",
    "cosine_lr", "NonFiniteError", "Tensor", "as_tensor", "no_grad",
]
