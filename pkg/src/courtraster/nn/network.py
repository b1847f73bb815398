"""Model descriptors and the network graph that executes them.

A ModelSpec is an ordered list of layer descriptors per branch: an image
trunk (convolutional), a feature trunk (dense), and a head that consumes the
concatenated trunk outputs and ends with a 10-way softmax. The three
architectures are:

    ffn       standardize -> [dense(256), batchnorm, relu] x 2
    cnn       [conv 32x3x3, batchnorm, relu, maxpool 2x2] x 3
              -> flatten -> dense(400), batchnorm, relu
    combined  both trunks -> concat(400 + 256) -> dense(1000), batchnorm,
              relu

each followed by dense(classes) + softmax in the head. Shapes are chain-
checked when the Network is built. Weights initialize uniformly within
+/- sqrt(1 / fan_in); biases start at zero, batch-norm at identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import (
    BatchNorm,
    Conv3x3,
    Dense,
    Flatten,
    MaxPool2,
    ReLU,
    ShapeError,
    Standardize,
    softmax_logloss,
)


@dataclass(frozen=True)
class LayerDef:
    kind: str  # conv | maxpool | dense | relu | batchnorm | flatten | standardize | softmax
    units: int = 0

    def to_list(self):
        return [self.kind, self.units]


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # ffn | cnn | combined
    image_shape: tuple[int, int, int] | None
    feature_dim: int | None
    image_layers: tuple[LayerDef, ...] = ()
    feature_layers: tuple[LayerDef, ...] = ()
    head_layers: tuple[LayerDef, ...] = ()
    classes: int = 10

    def uses_images(self) -> bool:
        return bool(self.image_layers)

    def uses_features(self) -> bool:
        return bool(self.feature_layers)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "image_shape": list(self.image_shape) if self.image_shape else None,
            "feature_dim": self.feature_dim,
            "image_layers": [l.to_list() for l in self.image_layers],
            "feature_layers": [l.to_list() for l in self.feature_layers],
            "head_layers": [l.to_list() for l in self.head_layers],
            "classes": self.classes,
        }

    @staticmethod
    def from_dict(d: dict) -> "ModelSpec":
        mk = lambda items: tuple(LayerDef(k, u) for k, u in items)
        return ModelSpec(
            kind=d["kind"],
            image_shape=tuple(d["image_shape"]) if d["image_shape"] else None,
            feature_dim=d["feature_dim"],
            image_layers=mk(d["image_layers"]),
            feature_layers=mk(d["feature_layers"]),
            head_layers=mk(d["head_layers"]),
            classes=d["classes"],
        )

    def param_count(self) -> int:
        return Network(self).param_count()


def _conv_block(filters: int) -> list[LayerDef]:
    return [
        LayerDef("conv", filters),
        LayerDef("batchnorm"),
        LayerDef("relu"),
        LayerDef("maxpool"),
    ]


def build_cnn(
    image_shape: tuple[int, int, int] = (11, 94, 50),
    filters: int = 32,
    blocks: int = 3,
    head_width: int = 400,
    classes: int = 10,
) -> ModelSpec:
    layers: list[LayerDef] = []
    for _ in range(blocks):
        layers += _conv_block(filters)
    layers += [
        LayerDef("flatten"),
        LayerDef("dense", head_width),
        LayerDef("batchnorm"),
        LayerDef("relu"),
    ]
    return ModelSpec(
        kind="cnn",
        image_shape=tuple(image_shape),
        feature_dim=None,
        image_layers=tuple(layers),
        head_layers=(LayerDef("dense", classes), LayerDef("softmax")),
        classes=classes,
    )


def build_ffn(
    feature_dim: int = 198,
    widths: tuple[int, ...] = (256, 256),
    classes: int = 10,
) -> ModelSpec:
    """Stand-alone feature network. ``widths=()`` leaves only the
    standardizer ahead of the softmax layer, i.e. logistic regression."""
    layers: list[LayerDef] = [LayerDef("standardize")]
    for w in widths:
        layers += [LayerDef("dense", w), LayerDef("batchnorm"), LayerDef("relu")]
    return ModelSpec(
        kind="ffn",
        image_shape=None,
        feature_dim=feature_dim,
        feature_layers=tuple(layers),
        head_layers=(LayerDef("dense", classes), LayerDef("softmax")),
        classes=classes,
    )


def build_combined(
    cnn: ModelSpec, ffn: ModelSpec, join_width: int = 1000
) -> ModelSpec:
    """Joint model: both trunks feed one concatenated hidden layer, trained
    end to end from scratch."""
    if not cnn.uses_images() or not ffn.uses_features():
        raise ValueError("combined model needs a cnn spec and an ffn spec")
    if cnn.classes != ffn.classes:
        raise ValueError("class counts differ between branches")
    return ModelSpec(
        kind="combined",
        image_shape=cnn.image_shape,
        feature_dim=ffn.feature_dim,
        image_layers=cnn.image_layers,
        feature_layers=ffn.feature_layers,
        head_layers=(
            LayerDef("dense", join_width),
            LayerDef("batchnorm"),
            LayerDef("relu"),
            LayerDef("dense", cnn.classes),
            LayerDef("softmax"),
        ),
        classes=cnn.classes,
    )


class Network:
    """Executable layer graph for a ModelSpec.

    Parameters live in an external dict keyed ``img.N.w``-style so they can
    be saved, swapped, or cast wholesale; layer objects only hold forward
    caches. Not safe for concurrent training; inference with frozen params
    is read-only apart from those caches.
    """

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.image_layers, img_out = self._build(spec.image_layers, "img", spec.image_shape)
        self.feature_layers, feat_out = self._build(
            spec.feature_layers, "feat", (spec.feature_dim,) if spec.feature_dim else None
        )
        widths = [s[0] for s in (img_out, feat_out) if s is not None]
        if not widths:
            raise ShapeError("model has neither an image nor a feature trunk")
        self._split = widths[0] if len(widths) == 2 else None
        head_defs = spec.head_layers
        if not head_defs or head_defs[-1].kind != "softmax":
            raise ShapeError("head must end with a softmax layer")
        self.head_layers, head_out = self._build(head_defs[:-1], "head", (sum(widths),))
        if head_out != (spec.classes,):
            raise ShapeError(f"head produces {head_out}, expected ({spec.classes},)")

    def _build(self, defs, prefix, in_shape):
        if not defs:
            return [], None if in_shape is None else in_shape
        if in_shape is None:
            raise ShapeError(f"{prefix}: layers given but no input shape")
        layers = []
        shape = tuple(in_shape)
        for i, d in enumerate(defs):
            name = f"{prefix}.{i}"
            if d.kind == "conv":
                if len(shape) != 3:
                    raise ShapeError(f"{name}: conv needs (C, H, W) input, have {shape}")
                layers.append(Conv3x3(name, shape[0], d.units))
                shape = (d.units, shape[1], shape[2])
            elif d.kind == "maxpool":
                if len(shape) != 3:
                    raise ShapeError(f"{name}: maxpool needs (C, H, W) input, have {shape}")
                layers.append(MaxPool2(name))
                shape = (shape[0],) + MaxPool2.out_hw(shape[1], shape[2])
            elif d.kind == "dense":
                if len(shape) != 1:
                    raise ShapeError(f"{name}: dense needs flat input, have {shape}")
                layers.append(Dense(name, shape[0], d.units))
                shape = (d.units,)
            elif d.kind == "relu":
                layers.append(ReLU(name))
            elif d.kind == "batchnorm":
                conv = len(shape) == 3
                layers.append(BatchNorm(name, shape[0], conv))
            elif d.kind == "flatten":
                layers.append(Flatten(name))
                shape = (int(np.prod(shape)),)
            elif d.kind == "standardize":
                if len(shape) != 1:
                    raise ShapeError(f"{name}: standardize needs flat input, have {shape}")
                layers.append(Standardize(name, shape[0]))
            else:
                raise ShapeError(f"{name}: unknown layer kind {d.kind!r}")
        return layers, shape

    # -- parameters ---------------------------------------------------------

    def all_layers(self):
        return [*self.image_layers, *self.feature_layers, *self.head_layers]

    def param_shapes(self) -> dict[str, tuple]:
        shapes: dict[str, tuple] = {}
        for layer in self.all_layers():
            shapes.update(layer.param_shapes())
        return shapes

    def trainable_names(self) -> list[str]:
        out = []
        for layer in self.all_layers():
            for name in layer.param_shapes():
                if not name.endswith((".running_mean", ".running_var", ".mean", ".std")):
                    out.append(name)
        return out

    def param_count(self) -> int:
        shapes = self.param_shapes()
        return int(sum(np.prod(shapes[n]) for n in self.trainable_names()))

    def init_params(self, seed: int, dtype=np.float32) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        params: dict[str, np.ndarray] = {}
        for layer in self.all_layers():
            if isinstance(layer, (Conv3x3, Dense)):
                bound = np.sqrt(1.0 / layer.fan_in())
                shape = layer.param_shapes()[layer.w_name]
                params[layer.w_name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
                params[layer.b_name] = np.zeros(shape[0] if isinstance(layer, Conv3x3) else shape[1], dtype=dtype)
            elif isinstance(layer, BatchNorm):
                c = layer.channels
                params[layer.g_name] = np.ones(c, dtype=dtype)
                params[layer.b_name] = np.zeros(c, dtype=dtype)
                params[layer.rm_name] = np.zeros(c, dtype=dtype)
                params[layer.rv_name] = np.ones(c, dtype=dtype)
            elif isinstance(layer, Standardize):
                params[layer.m_name] = np.zeros(layer.dim, dtype=dtype)
                params[layer.s_name] = np.ones(layer.dim, dtype=dtype)
        return params

    # -- execution ----------------------------------------------------------
    # public arrays are (N, C, H, W); the trunk runs channels-last internally

    @staticmethod
    def _to_channels_last(x):
        return np.ascontiguousarray(x.transpose(0, 2, 3, 1))

    @staticmethod
    def _to_channels_first(x):
        return np.ascontiguousarray(x.transpose(0, 3, 1, 2))

    def forward(self, images, features, params, train: bool):
        parts = []
        if self.image_layers:
            if images is None:
                raise ShapeError("model needs images")
            x = self._to_channels_last(images)
            for layer in self.image_layers:
                x = layer.forward(x, params, train)
            parts.append(x)
        if self.feature_layers:
            if features is None:
                raise ShapeError("model needs features")
            x = features
            for layer in self.feature_layers:
                x = layer.forward(x, params, train)
            parts.append(x)
        h = np.concatenate(parts, axis=1) if len(parts) == 2 else parts[0]
        for layer in self.head_layers:
            h = layer.forward(h, params, train)
        return h

    def backward(self, dlogits, params, grads):
        d = dlogits
        for layer in reversed(self.head_layers):
            d = layer.backward(d, params, grads)
        dimg = dfeat = None
        if self._split is not None:
            d_img_part, d_feat_part = d[:, : self._split], d[:, self._split :]
        elif self.image_layers:
            d_img_part, d_feat_part = d, None
        else:
            d_img_part, d_feat_part = None, d
        if self.image_layers and d_img_part is not None:
            x = d_img_part
            for layer in reversed(self.image_layers):
                x = layer.backward(x, params, grads)
            dimg = self._to_channels_first(x) if x.ndim == 4 else x
        if self.feature_layers and d_feat_part is not None:
            x = d_feat_part
            for layer in reversed(self.feature_layers):
                x = layer.backward(x, params, grads)
            dfeat = x
        return dimg, dfeat

    def loss_and_grads(self, images, features, labels, params):
        """Mean log loss over the batch, error rate, and parameter grads."""
        logits = self.forward(images, features, params, train=True)
        probs, losses, dlogits = softmax_logloss(logits, labels)
        n = len(labels)
        grads: dict[str, np.ndarray] = {}
        self.backward(dlogits / n, params, grads)
        err = float(np.mean(np.argmax(probs, axis=1) != labels))
        return float(losses.mean()), err, grads

    # -- partial execution over the image trunk (feature visualization) -----

    def conv_relu_index(self, conv_ordinal: int) -> int:
        """Index just past the ReLU of the conv_ordinal-th conv block
        (1-based) in the image trunk."""
        seen = 0
        for i, layer in enumerate(self.image_layers):
            if isinstance(layer, Conv3x3):
                seen += 1
                if seen == conv_ordinal:
                    for j in range(i + 1, len(self.image_layers)):
                        if isinstance(self.image_layers[j], ReLU):
                            return j + 1
                    raise ShapeError(f"conv block {conv_ordinal} has no ReLU")
        raise ShapeError(f"image trunk has fewer than {conv_ordinal} conv layers")

    def forward_image_to(self, x, params, stop: int):
        x = self._to_channels_last(x)
        for layer in self.image_layers[:stop]:
            x = layer.forward(x, params, train=False)
        return self._to_channels_first(x) if x.ndim == 4 else x

    def backward_image_from(self, dout, params, stop: int):
        scratch: dict[str, np.ndarray] = {}
        d = self._to_channels_last(dout) if dout.ndim == 4 else dout
        for layer in reversed(self.image_layers[:stop]):
            d = layer.backward(d, params, scratch)
        return self._to_channels_first(d) if d.ndim == 4 else d


def init_params(spec: ModelSpec, seed: int, dtype=np.float32) -> dict[str, np.ndarray]:
    """Fresh parameter dict for a spec: weights uniform within
    +/- sqrt(1/fan_in), biases zero, batch norm at identity."""
    return Network(spec).init_params(seed, dtype=dtype)
