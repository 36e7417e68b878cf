"""Forward pass of a small conv/ReLU/max-pool feature extractor.

The default topology is two 3x3 convolutions (64 channels each) with ReLUs,
followed by a 2x2 max-pool: the first block of a VGG-style network.

Weight files are a text manifest plus a raw little-endian float32 blob::

    # comment
    input 3            (optional; defaults to the first conv's input count)
    blob weights.bin   (path relative to the manifest)
    conv 3 64
    relu
    conv 64 64
    relu
    maxpool2

Per conv layer the blob holds ``out*in*9`` kernel taps in (out, in, ky, kx)
order followed by ``out`` biases.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .frame_io import Block, zero_pad_block

MIN_FEATURE_SIZE = 8


class WeightsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Feature tensor stored as a ``(channels, height, width)`` array."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 3:
            raise ValueError(f"feature maps are 3-D, got shape {self.values.shape}")

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class ConvLayer:
    """3x3 convolution, stride 1, zero padding 1."""

    kernel: np.ndarray  # (out, in, 3, 3)
    bias: np.ndarray  # (out,)

    def __post_init__(self):
        k = np.asarray(self.kernel)
        b = np.asarray(self.bias)
        if k.ndim != 4 or k.shape[2:] != (3, 3):
            raise ValueError(f"kernel must have shape (out, in, 3, 3), got {k.shape}")
        if b.shape != (k.shape[0],):
            raise ValueError(f"bias must have shape ({k.shape[0]},), got {b.shape}")

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[1]

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[0]


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class MaxPool2:
    pass


Layer = Union[ConvLayer, ReLU, MaxPool2]


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple
    input_channels: int
    dtype: np.dtype = field(default=np.dtype(np.float32))

    def __post_init__(self):
        dtype = np.dtype(self.dtype)
        object.__setattr__(self, "dtype", dtype)
        layers = []
        channels = self.input_channels
        for layer in self.layers:
            if isinstance(layer, ConvLayer):
                if layer.in_channels != channels:
                    raise ValueError(
                        f"conv expects {layer.in_channels} channels, previous layer gives {channels}")
                layer = ConvLayer(np.ascontiguousarray(layer.kernel, dtype=dtype),
                                  np.ascontiguousarray(layer.bias, dtype=dtype))
                layer.kernel.flags.writeable = False
                layer.bias.flags.writeable = False
                channels = layer.out_channels
            elif not isinstance(layer, (ReLU, MaxPool2)):
                raise TypeError(f"unsupported layer {layer!r}")
            layers.append(layer)
        object.__setattr__(self, "layers", tuple(layers))

    @property
    def output_channels(self) -> int:
        convs = [l for l in self.layers if isinstance(l, ConvLayer)]
        return convs[-1].out_channels if convs else self.input_channels

    def forward(self, x: np.ndarray) -> FeatureMap:
        fm = FeatureMap(np.asarray(x, dtype=self.dtype))
        for layer in self.layers:
            if isinstance(layer, ConvLayer):
                fm = conv2d(fm, layer)
            elif isinstance(layer, ReLU):
                fm = relu(fm)
            else:
                fm = maxpool2(fm)
        return fm

    def scaled(self, factor: float) -> "Network":
        """Copy whose output is multiplied by ``factor > 0``.

        The last conv's taps and bias are scaled; valid because every layer
        after it (ReLU, max-pool) is positively homogeneous.
        """
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        idx = max(i for i, l in enumerate(self.layers) if isinstance(l, ConvLayer))
        layers = list(self.layers)
        last = layers[idx]
        layers[idx] = ConvLayer(last.kernel * factor, last.bias * factor)
        return Network(tuple(layers), self.input_channels, self.dtype)


def conv2d(inp: FeatureMap, layer: ConvLayer) -> FeatureMap:
    x = inp.values
    c, h, w = x.shape
    if c != layer.in_channels:
        raise ValueError(f"channel mismatch: input has {c}, layer expects {layer.in_channels}")
    padded = np.zeros((c, h + 2, w + 2), dtype=x.dtype)
    padded[:, 1:-1, 1:-1] = x
    # im2col: rows in (in, ky, kx) order to match the kernel layout
    cols = np.empty((c, 3, 3, h, w), dtype=x.dtype)
    for ky in range(3):
        for kx in range(3):
            cols[:, ky, kx] = padded[:, ky:ky + h, kx:kx + w]
    k = layer.kernel.reshape(layer.out_channels, c * 9).astype(x.dtype, copy=False)
    out = k @ cols.reshape(c * 9, h * w)
    out += layer.bias.astype(x.dtype, copy=False)[:, None]
    return FeatureMap(out.reshape(layer.out_channels, h, w))


def relu(inp: FeatureMap) -> FeatureMap:
    return FeatureMap(np.maximum(inp.values, 0))


def maxpool2(inp: FeatureMap) -> FeatureMap:
    c, h, w = inp.values.shape
    if h < 2 or w < 2:
        raise ValueError(f"max-pool needs at least 2x2 input, got {w}x{h}")
    h2, w2 = 2 * (h // 2), 2 * (w // 2)
    v = inp.values
    out = np.maximum(np.maximum(v[:, 0:h2:2, 0:w2:2], v[:, 0:h2:2, 1:w2:2]),
                     np.maximum(v[:, 1:h2:2, 0:w2:2], v[:, 1:h2:2, 1:w2:2]))
    return FeatureMap(out)


def block_input(samples: np.ndarray, net: Network) -> np.ndarray:
    """Scale to [0, 1], zero-pad to the minimum size and replicate channels."""
    h, w = samples.shape
    if h < MIN_FEATURE_SIZE or w < MIN_FEATURE_SIZE:
        samples = zero_pad_block(Block.from_array(samples), max(w, MIN_FEATURE_SIZE),
                                 max(h, MIN_FEATURE_SIZE)).samples
    x = (np.asarray(samples, dtype=net.dtype) / net.dtype.type(255))[None]
    if net.input_channels == 3:
        x = np.repeat(x, 3, axis=0)
    elif net.input_channels != 1:
        raise ValueError(f"cannot feed a luminance block to a {net.input_channels}-channel network")
    return x


def extract_features(block, net: Network) -> FeatureMap:
    samples = block.samples if isinstance(block, Block) else np.asarray(block)
    if samples.size == 0:
        raise ValueError("empty block")
    return net.forward(block_input(samples, net))


def default_topology(in_channels: int, width: int = 64):
    """Layer shapes of the default extractor as ``(kind, in, out)`` tuples."""
    return [("conv", in_channels, width), ("relu",), ("conv", width, width), ("relu",),
            ("maxpool2",)]


def seeded_test_network(seed: int, in_channels: int = 1, width: int = 64) -> Network:
    """Default-topology network with reproducible pseudo-random weights.

    Weights come from ``numpy.random.default_rng(seed)`` (PCG64): each conv's
    taps are normal with He scaling ``sqrt(2 / (9 * in))``, drawn as float64 in
    (out, in, ky, kx) order, then biases normal with std 0.01; everything is
    cast to float32.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for entry in default_topology(in_channels, width):
        if entry[0] == "conv":
            _, cin, cout = entry
            kernel = rng.normal(0.0, np.sqrt(2.0 / (9 * cin)), size=(cout, cin, 3, 3))
            bias = rng.normal(0.0, 0.01, size=cout)
            layers.append(ConvLayer(kernel.astype(np.float32), bias.astype(np.float32)))
        elif entry[0] == "relu":
            layers.append(ReLU())
        else:
            layers.append(MaxPool2())
    return Network(tuple(layers), in_channels)


def identity_network() -> Network:
    """Single 1->1 conv with a unit centre tap: features are pixels / 255.

    Evaluated in float64 so its feature distortions track pixel SSE to
    round-off (about 1e-13 relative).
    """
    kernel = np.zeros((1, 1, 3, 3))
    kernel[0, 0, 1, 1] = 1.0
    return Network((ConvLayer(kernel, np.zeros(1)),), 1, np.float64)


def load_weights(manifest_path) -> Network:
    manifest_path = os.fspath(manifest_path)
    with open(manifest_path) as fh:
        lines = fh.read().splitlines()
    entries = []
    blob_name = None
    input_channels = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "conv" and len(parts) == 3:
                entries.append(("conv", int(parts[1]), int(parts[2])))
            elif parts[0] in ("relu", "maxpool2") and len(parts) == 1:
                entries.append((parts[0],))
            elif parts[0] == "blob" and len(parts) == 2:
                blob_name = parts[1]
            elif parts[0] == "input" and len(parts) == 2:
                input_channels = int(parts[1])
            else:
                raise ValueError
        except ValueError:
            raise WeightsError(f"{manifest_path}:{lineno}: cannot parse {raw!r}") from None
    if blob_name is None:
        raise WeightsError("manifest names no blob")
    blob_path = os.path.join(os.path.dirname(manifest_path), blob_name)
    if not os.path.exists(blob_path):
        raise WeightsError(f"missing blob {blob_path}")
    blob = np.fromfile(blob_path, dtype="<f4")
    convs = [s for s in entries if s[0] == "conv"]
    if not convs:
        raise WeightsError("manifest declares no conv layer")
    expected = sum(o * i * 9 + o for _, i, o in convs)
    if blob.size != expected:
        raise WeightsError(f"shape mismatch: blob has {blob.size} floats, manifest needs {expected}")
    if not np.all(np.isfinite(blob)):
        raise WeightsError("non-finite weight in blob")
    layers = []
    offset = 0
    for entry in entries:
        if entry[0] == "conv":
            _, cin, cout = entry
            n = cout * cin * 9
            kernel = blob[offset:offset + n].reshape(cout, cin, 3, 3)
            bias = blob[offset + n:offset + n + cout]
            offset += n + cout
            layers.append(ConvLayer(kernel, bias))
        elif entry[0] == "relu":
            layers.append(ReLU())
        else:
            layers.append(MaxPool2())
    try:
        return Network(tuple(layers), input_channels or convs[0][1])
    except ValueError as exc:
        raise WeightsError(f"shape mismatch: {exc}") from None


def save_weights(net: Network, manifest_path, blob_name: str = None) -> None:
    """Write ``net`` in the manifest + blob format read by :func:`load_weights`."""
    manifest_path = os.fspath(manifest_path)
    if blob_name is None:
        blob_name = os.path.splitext(os.path.basename(manifest_path))[0] + ".bin"
    lines = [f"input {net.input_channels}", f"blob {blob_name}"]
    chunks = []
    for layer in net.layers:
        if isinstance(layer, ConvLayer):
            lines.append(f"conv {layer.in_channels} {layer.out_channels}")
            chunks += [layer.kernel.ravel(), layer.bias.ravel()]
        elif isinstance(layer, ReLU):
            lines.append("relu")
        else:
            lines.append("maxpool2")
    with open(manifest_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    blob = np.concatenate(chunks).astype("<f4") if chunks else np.zeros(0, "<f4")
    blob.tofile(os.path.join(os.path.dirname(manifest_path), blob_name))
