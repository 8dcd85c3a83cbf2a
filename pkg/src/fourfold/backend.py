"""Electronic CNN operators and the hybrid optical/electronic forward pass."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from fourfold import _accel
from fourfold.array import run_layer
from fourfold.correlator import CorrelatorSpec, Kernel, _same_padding
from fourfold.errors import ConfigError, GeometryError, InvalidInputError
from fourfold.field import RGB_WAVELENGTHS

LAYER_KINDS = ("conv", "activation", "maxpool", "lrn", "bias")
FIRST_LAYER_MODES = ("optical-simulated", "electronic-oracle")

# AlexNet local response normalization constants
LRN_DEFAULTS = {"depth_radius": 2, "k_const": 2.0, "alpha_const": 1e-4, "beta_const": 0.75}


def _stack(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3:
        raise InvalidInputError(f"expected a (channels, height, width) stack, got shape {a.shape}")
    return a


def conv2d(inputs, kernels, stride: int = 1, biases=None, padding: str | None = None) -> np.ndarray:
    """Cross-channel summed convolution.

    ``kernels`` has shape ``(out_channels, in_channels, k, k)``. The kernel is
    flipped (true convolution), matching the optical correlator. ``padding``
    defaults to ``"same"`` (zero padded) at stride 1 and ``"valid"`` otherwise.
    """
    x = _stack(inputs)
    w = np.asarray(kernels, dtype=np.float64)
    if w.ndim == 2:
        w = w[None, None]
    if w.ndim != 4:
        raise InvalidInputError(f"kernels must be (out, in, k, k), got shape {w.shape}")
    if w.shape[1] != x.shape[0]:
        raise InvalidInputError(f"kernels expect {w.shape[1]} input channels, got {x.shape[0]}")
    if stride < 1:
        raise InvalidInputError(f"stride must be >= 1, got {stride}")
    if padding is None:
        padding = "same" if stride == 1 else "valid"
    if padding == "same":
        if stride != 1:
            raise InvalidInputError("same padding is only defined for stride 1")
        padded = [_same_padding(ch, w.shape[2:]) for ch in x]
    elif padding == "valid":
        if w.shape[2] > x.shape[1] or w.shape[3] > x.shape[2]:
            raise InvalidInputError("kernel larger than input in valid mode")
        padded = list(x)
    else:
        raise InvalidInputError(f"unknown padding {padding!r}")
    outs = []
    for o in range(w.shape[0]):
        acc = None
        for c in range(w.shape[1]):
            y = _accel.conv_valid(padded[c], w[o, c], stride)
            acc = y if acc is None else acc + y
        if biases is not None:
            acc = acc + float(biases[o])
        outs.append(acc)
    return np.stack(outs)


def activation(inputs, kind: str = "relu") -> np.ndarray:
    x = _stack(inputs)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "square":
        return x * x
    raise InvalidInputError(f"unknown activation {kind!r}")


def maxpool(inputs, window: int = 3, stride: int = 2) -> np.ndarray:
    x = _stack(inputs)
    if window < 1 or stride < 1:
        raise InvalidInputError("window and stride must be >= 1")
    if window > x.shape[1] or window > x.shape[2]:
        raise GeometryError(f"pool window {window} larger than input {x.shape[1:]}")
    return np.stack([_accel.maxpool(ch, window, stride) for ch in x])


def lrn(inputs, depth_radius=2, k_const=2.0, alpha_const=1e-4, beta_const=0.75) -> np.ndarray:
    """Cross-channel local response normalization, window clipped at the stack edges."""
    x = _stack(inputs)
    if depth_radius < 0:
        raise InvalidInputError("depth_radius must be >= 0")
    sq = x * x
    csum = np.concatenate([np.zeros((1,) + x.shape[1:]), np.cumsum(sq, axis=0)])
    n = x.shape[0]
    lo = np.clip(np.arange(n) - depth_radius, 0, n)
    hi = np.clip(np.arange(n) + depth_radius + 1, 0, n)
    window = csum[hi] - csum[lo]
    return x / (k_const + alpha_const * window) ** beta_const


@dataclass
class LayerSpec:
    kind: str
    kernels: np.ndarray | None = dc_field(default=None, repr=False)
    stride: int = 1
    use_bias: bool = False
    biases: list | None = None
    function: str = "relu"
    window: int = 3
    depth_radius: int = LRN_DEFAULTS["depth_radius"]
    k_const: float = LRN_DEFAULTS["k_const"]
    alpha_const: float = LRN_DEFAULTS["alpha_const"]
    beta_const: float = LRN_DEFAULTS["beta_const"]
    padding: str | None = None

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if self.stride < 1 or self.window < 1:
            raise ConfigError("stride and window must be >= 1")
        if self.kind == "conv":
            if self.kernels is None:
                raise ConfigError("conv layer needs kernels")
            w = np.asarray(self.kernels, dtype=np.float64)
            if w.ndim != 4:
                raise ConfigError(f"conv kernels must be (out, in, k, k), got shape {w.shape}")
            self.kernels = w
            if self.use_bias and (self.biases is None or len(self.biases) != w.shape[0]):
                raise ConfigError("conv layer with use_bias needs one bias per output channel")
        if self.kind == "bias" and self.biases is None:
            raise ConfigError("bias layer needs values")
        if self.kind == "activation" and self.function not in ("relu", "square"):
            raise ConfigError(f"unknown activation {self.function!r}")

    def describe(self) -> str:
        if self.kind == "conv":
            o, c, kr, kc = self.kernels.shape
            return f"conv {c}->{o} {kr}x{kc}/s{self.stride}"
        if self.kind == "activation":
            return f"activation {self.function}"
        if self.kind == "maxpool":
            return f"maxpool {self.window}/s{self.stride}"
        return self.kind


def apply_layer(x, layer: LayerSpec) -> np.ndarray:
    if layer.kind == "conv":
        biases = layer.biases if layer.use_bias else None
        return conv2d(x, layer.kernels, layer.stride, biases, layer.padding)
    if layer.kind == "activation":
        return activation(x, layer.function)
    if layer.kind == "maxpool":
        return maxpool(x, layer.window, layer.stride)
    if layer.kind == "lrn":
        return lrn(x, layer.depth_radius, layer.k_const, layer.alpha_const, layer.beta_const)
    # bias: per-channel offset, e.g. after detection
    b = np.asarray(layer.biases, dtype=np.float64)
    x = _stack(x)
    if b.size not in (1, x.shape[0]):
        raise InvalidInputError(f"{b.size} biases for {x.shape[0]} channels")
    return x + b.reshape(-1, 1, 1)


@dataclass
class NetworkSpec:
    """Ordered layers. The first two layers are the frontend: conv then square.

    ``channel_policy`` controls how the electronic-oracle frontend combines
    input channels: ``"detect-then-sum"`` squares each channel's convolution
    before summing (what the optics does); ``"sum-then-detect"`` is the
    ordinary conv + square.
    """

    layers: list
    first_layer_mode: str = "electronic-oracle"
    channel_policy: str = "detect-then-sum"
    normalize: bool = True

    def __post_init__(self):
        if self.first_layer_mode not in FIRST_LAYER_MODES:
            raise ConfigError(f"unknown first_layer_mode {self.first_layer_mode!r}")
        if self.channel_policy not in ("detect-then-sum", "sum-then-detect"):
            raise ConfigError(f"unknown channel_policy {self.channel_policy!r}")
        self.validate()

    def validate(self):
        if len(self.layers) < 2:
            raise ConfigError("network needs a conv layer followed by a square activation")
        conv, act = self.layers[0], self.layers[1]
        if conv.kind != "conv":
            raise ConfigError("first layer must be conv")
        if act.kind != "activation" or act.function != "square":
            raise ConfigError("first conv must be followed by a square activation")
        if conv.stride != 1:
            raise ConfigError("frontend convolution must use stride 1")
        if conv.use_bias:
            raise ConfigError("frontend convolution cannot carry a bias")
        if self.first_layer_mode == "optical-simulated" and self.channel_policy != "detect-then-sum":
            raise ConfigError("optical frontend can only sum channels after detection")

    @property
    def frontend(self) -> LayerSpec:
        return self.layers[0]

    @property
    def remaining(self) -> list:
        return self.layers[2:]

    @classmethod
    def from_dict(cls, doc: dict, base_dir: Path | None = None) -> NetworkSpec:
        from fourfold.io import read_krn1

        known = {"layers", "first_layer_mode", "channel_policy", "normalize"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown network keys: {sorted(unknown)}")
        layers = []
        for i, entry in enumerate(doc.get("layers", [])):
            entry = dict(entry)
            kind = entry.pop("kind", None)
            if kind == "conv":
                src = entry.pop("kernels", None)
                in_ch = entry.pop("in_channels", 1)
                if isinstance(src, str):
                    path = Path(src)
                    if base_dir is not None and not path.is_absolute():
                        path = base_dir / path
                    flat = read_krn1(path)
                    shapes = {k.shape for k in flat}
                    if len(shapes) != 1:
                        raise ConfigError(f"layer {i}: kernels in {path} differ in shape")
                    if len(flat) % in_ch:
                        raise ConfigError(f"layer {i}: {len(flat)} kernels not divisible by {in_ch} channels")
                    w = np.stack([k.weights for k in flat]).reshape(len(flat) // in_ch, in_ch, *flat[0].shape)
                elif src is not None:
                    w = np.asarray(src, dtype=np.float64)
                    if w.ndim == 3:
                        w = w[:, None]
                else:
                    raise ConfigError(f"layer {i}: conv layer needs kernels")
                entry["kernels"] = w
            if "fn" in entry:
                entry["function"] = entry.pop("fn")
            if "values" in entry:
                entry["biases"] = entry.pop("values")
            try:
                layers.append(LayerSpec(kind=kind, **entry))
            except TypeError as exc:
                raise ConfigError(f"layer {i}: {exc}") from None
        return cls(
            layers,
            doc.get("first_layer_mode", "electronic-oracle"),
            doc.get("channel_policy", "detect-then-sum"),
            bool(doc.get("normalize", True)),
        )

    @classmethod
    def from_json(cls, path) -> NetworkSpec:
        path = Path(path)
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(doc, path.parent)


def channel_specs(spec: CorrelatorSpec, n_channels: int, wavelengths=None) -> list:
    """Per-channel correlator specs; three channels default to the R/G/B sources."""
    if wavelengths is None:
        if n_channels == 3:
            wavelengths = [RGB_WAVELENGTHS[c] for c in ("red", "green", "blue")]
        else:
            wavelengths = [spec.wavelength] * n_channels
    if len(wavelengths) != n_channels:
        raise ConfigError(f"{len(wavelengths)} wavelengths for {n_channels} channels")
    return [spec.with_wavelength(lam) for lam in wavelengths]


def frontend_oracle(x, kernels, channel_policy="detect-then-sum") -> np.ndarray:
    """Electronic stand-in for the optical first layer (stride 1, square, no bias)."""
    x = _stack(x)
    w = np.asarray(kernels, dtype=np.float64)
    if channel_policy == "sum-then-detect":
        return activation(conv2d(x, w, 1), "square")
    maps = []
    for o in range(w.shape[0]):
        acc = np.zeros(x.shape[1:])
        for c in range(x.shape[0]):
            acc = acc + conv2d(x[c], w[o, c], 1)[0] ** 2
        maps.append(acc)
    return np.stack(maps)


def network_forward(
    image_channels,
    net: NetworkSpec,
    optical_spec: CorrelatorSpec | None = None,
    wavelengths=None,
    grid_size: int | None = None,
    threads: int | None = None,
    trace: list | None = None,
) -> np.ndarray:
    """Hybrid forward pass. ``trace`` (if given) receives (layer, shape) pairs."""
    x = _stack(image_channels)
    net.validate()
    conv = net.frontend
    if conv.kernels.shape[1] != x.shape[0]:
        raise ConfigError(f"frontend expects {conv.kernels.shape[1]} channels, got {x.shape[0]}")
    if net.first_layer_mode == "optical-simulated":
        if x.min() < 0 or x.max() > 1:
            raise InvalidInputError("optical frontend needs input values in [0, 1]")
        spec = CorrelatorSpec() if optical_spec is None else optical_spec
        specs = channel_specs(spec, x.shape[0], wavelengths)
        kernels = [[Kernel(conv.kernels[o, c]) for o in range(conv.kernels.shape[0])] for c in range(x.shape[0])]
        out = np.stack(run_layer(list(x), kernels, specs, 1.0, grid_size, threads).maps)
    else:
        out = frontend_oracle(x, conv.kernels, net.channel_policy)
    if net.normalize:
        peak = out.max()
        if peak > 0:
            out = out / peak
    if trace is not None:
        trace.append((f"{conv.describe()} + square [{net.first_layer_mode}]", out.shape))
    for layer in net.remaining:
        out = apply_layer(out, layer)
        if trace is not None:
            trace.append((layer.describe(), out.shape))
    return out
