"""Intra image codec whose partition decisions can be driven by CNN feature distortion."""

from .distortion import DistortionKind
from .estimators import FeatureExtractor, IntraCodec
from .feature_net import Network, identity_network, load_weights, seeded_test_network
from .frame_io import Frame, load_pgm, save_pgm
from .metrics import bd_rate, feature_fidelity, psnr
from .rdo import EncoderConfig, decode_frame, encode_frame, lambda_from_qp

__version__ = "0.1.0"

__all__ = [
    "DistortionKind", "EncoderConfig", "FeatureExtractor", "Frame", "IntraCodec", "Network",
    "bd_rate", "decode_frame", "encode_frame", "feature_fidelity", "identity_network",
    "lambda_from_qp", "load_pgm", "load_weights", "psnr", "save_pgm", "seeded_test_network",
]
