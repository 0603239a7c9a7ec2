"""tinylic: a deterministic learned image codec.

Content-adaptive transforms built from convolution and neighborhood
self-attention, uniform quantization with a quality scaling factor, a
four-stage checkerboard context model, and bit-exact range coding.
"""

from .backend import BACKEND
from .bitstream import Bitstream, parse, serialize
from .codec import EncodeResult, RdReport, decode_image, encode_image, make_report, rd_cost
from .config import ModelConfig
from .errors import (
    ConfigError,
    CorruptStreamError,
    FormatError,
    InputError,
    ShapeError,
    TinylicError,
    WeightLoadError,
)
from .image import mse, psnr, read_ppm, write_ppm
from .quantizer import QualityFactor
from .weights import WeightStore, init_weights, load_weights, save_weights

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Bitstream",
    "ConfigError",
    "CorruptStreamError",
    "EncodeResult",
    "FormatError",
    "InputError",
    "ModelConfig",
    "QualityFactor",
    "RdReport",
    "ShapeError",
    "TinylicError",
    "WeightLoadError",
    "WeightStore",
    "decode_image",
    "encode_image",
    "init_weights",
    "load_weights",
    "make_report",
    "mse",
    "parse",
    "psnr",
    "rd_cost",
    "read_ppm",
    "save_weights",
    "serialize",
    "write_ppm",
    "__version__",
]
