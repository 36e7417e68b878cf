"""Deterministic intra coding kernel and its decoder."""

from .bits import BitReader, BitstreamError, BitWriter
from .block import (EncodedBlock, ParamConfig, decode_block, decode_leaf, encode_block,
                    reconstruct, zigzag_order)
from .intra import Context, IntraMode, predict_all, predict_intra
from .transform import dct2_forward, dct2_inverse, dequantize, qstep, quantize

__all__ = [
    "BitReader", "BitWriter", "BitstreamError", "Context", "EncodedBlock", "IntraMode",
    "ParamConfig", "dct2_forward", "dct2_inverse", "decode_block", "decode_leaf",
    "dequantize", "encode_block", "predict_all", "predict_intra", "qstep", "quantize",
    "reconstruct", "zigzag_order",
]
