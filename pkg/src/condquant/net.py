"""Fully-connected quantizer network x -> Q points in R^{n_y}.

All weights and biases live in one flat float64 vector. Layer ``l`` stores its
weight matrix (out x in, row-major) followed by its bias.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = 1
LEAK = 0.01


class CheckpointError(ValueError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class ShapeMismatchError(CheckpointError):
    pass


class NonFiniteParameterError(CheckpointError):
    pass


def _leaky_relu(z):
    return np.where(z > 0, z, LEAK * z)


def _leaky_relu_deriv(z):
    return np.where(z > 0, 1.0, LEAK)


def _tanh_deriv(z):
    return 1.0 - np.tanh(z) ** 2


ACTIVATIONS = {
    "leaky_relu": (_leaky_relu, _leaky_relu_deriv),
    "tanh": (np.tanh, _tanh_deriv),
}


def _affine(a, w, b):
    # row-by-row reduction, so a point's output does not depend on the batch it is in
    return (a[:, None, :] * w[None, :, :]).sum(axis=-1) + b


@dataclass(frozen=True)
class NetArchitecture:
    input_dim: int
    n_y: int
    Q: int
    hidden_layers: int = 5
    width: int | None = None
    activation: str = "leaky_relu"

    def __post_init__(self):
        if self.width is None:
            object.__setattr__(self, "width", self.n_y * self.Q)
        for name in ("input_dim", "n_y", "Q", "hidden_layers", "width"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise ValueError(f"architecture field '{name}' must be an integer >= 1, got {value!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; choose from {sorted(ACTIVATIONS)}")

    @property
    def output_dim(self) -> int:
        return self.n_y * self.Q

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(fan_out, fan_in) for each affine map, output layer last."""
        dims = [self.input_dim] + [self.width] * self.hidden_layers + [self.output_dim]
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]

    @property
    def n_params(self) -> int:
        return sum(o * i + o for o, i in self.layer_shapes())

    def to_dict(self) -> dict:
        return {
            "input_dim": int(self.input_dim),
            "hidden": int(self.hidden_layers),
            "width": int(self.width),
            "activation": self.activation,
            "n_y": int(self.n_y),
            "Q": int(self.Q),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetArchitecture":
        return cls(
            input_dim=d["input_dim"],
            n_y=d["n_y"],
            Q=d["Q"],
            hidden_layers=d["hidden"],
            width=d["width"],
            activation=d["activation"],
        )


@dataclass
class QuantizerNet:
    arch: NetArchitecture
    params: np.ndarray
    seed: int | None = None
    iterations_trained: int | None = None
    _views: list = field(init=False, repr=False)

    def __post_init__(self):
        self.params = np.ascontiguousarray(self.params, dtype=np.float64)
        if self.params.shape != (self.arch.n_params,):
            raise ShapeMismatchError(
                f"shape mismatch: architecture needs {self.arch.n_params} parameters, got {self.params.size}"
            )
        self.check_finite()
        self._build_views()

    def _build_views(self):
        views, offset = [], 0
        for out_dim, in_dim in self.arch.layer_shapes():
            w = self.params[offset : offset + out_dim * in_dim].reshape(out_dim, in_dim)
            offset += out_dim * in_dim
            b = self.params[offset : offset + out_dim]
            offset += out_dim
            views.append((w, b))
        self._views = views

    def set_params(self, params: np.ndarray):
        """Overwrite parameters in place, keeping layer views valid."""
        self.params[:] = params
        self.check_finite()

    def check_finite(self):
        if not np.all(np.isfinite(self.params)):
            raise NonFiniteParameterError("non-finite parameter in network")

    @classmethod
    def init(cls, arch: NetArchitecture, seed: int) -> "QuantizerNet":
        """Glorot-uniform weights, zero biases; deterministic in ``seed``."""
        rng = np.random.Generator(np.random.Philox(key=[seed & 0xFFFF_FFFF_FFFF_FFFF, 0x1217]))
        net = cls(arch, np.zeros(arch.n_params), seed=seed)
        for w, _ in net._views:
            fan_out, fan_in = w.shape
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            w[...] = rng.uniform(-bound, bound, size=w.shape)
        return net

    @property
    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return self._views

    def _forward_cached(self, xs):
        act, _ = ACTIVATIONS[self.arch.activation]
        a = xs
        cache = []
        for w, b in self._views[:-1]:
            z = _affine(a, w, b)
            cache.append((a, z))
            a = act(z)
        w, b = self._views[-1]
        cache.append((a, None))
        return _affine(a, w, b), cache

    def _as_batch(self, xs):
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.arch.input_dim:
            raise ValueError(f"inputs must have shape (B, {self.arch.input_dim}), got {xs.shape}")
        return xs

    def forward_batch(self, xs) -> np.ndarray:
        """Quantizer points for a batch of conditions; shape (B, Q, n_y)."""
        out, _ = self._forward_cached(self._as_batch(xs))
        return out.reshape(-1, self.arch.Q, self.arch.n_y)

    def backward_batch(self, xs, upstream) -> np.ndarray:
        """Sum over the batch of d<upstream_b, forward(x_b)>/d params."""
        xs = self._as_batch(xs)
        upstream = np.asarray(upstream, dtype=np.float64)
        expected = (xs.shape[0], self.arch.Q, self.arch.n_y)
        if upstream.shape != expected:
            raise ValueError(f"upstream must have shape {expected}, got {upstream.shape}")
        _, deriv = ACTIVATIONS[self.arch.activation]
        _, cache = self._forward_cached(xs)
        g = upstream.reshape(xs.shape[0], -1)
        grads = [None] * len(cache)
        for layer in reversed(range(len(cache))):
            a_in = cache[layer][0]
            grads[layer] = (g.T @ a_in, g.sum(axis=0))
            if layer > 0:
                g = (g @ self._views[layer][0]) * deriv(cache[layer - 1][1])
        flat = []
        for gw, gb in grads:
            flat.append(gw.ravel())
            flat.append(gb)
        return np.concatenate(flat)

    def forward(self, x) -> np.ndarray:
        """Q points in R^{n_y} for a single condition ``x``; shape (Q, n_y)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.arch.input_dim,):
            raise ValueError(f"condition must have shape ({self.arch.input_dim},), got {x.shape}")
        return self.forward_batch(x[None, :])[0]

    def backward(self, x, upstream) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.arch.input_dim,):
            raise ValueError(f"condition must have shape ({self.arch.input_dim},), got {x.shape}")
        return self.backward_batch(x[None, :], np.asarray(upstream, dtype=np.float64)[None])

    def pre_activations(self, xs) -> list[np.ndarray]:
        _, cache = self._forward_cached(self._as_batch(xs))
        return [z for _, z in cache[:-1]]

    def to_document(self) -> dict:
        doc = {"format_version": FORMAT_VERSION, "arch": self.arch.to_dict()}
        if self.seed is not None:
            doc["seed"] = int(self.seed)
        if self.iterations_trained is not None:
            doc["iterations_trained"] = int(self.iterations_trained)
        doc["params"] = self.params
        return doc

    def save(self) -> str:
        return dumps_document(self.to_document())

    @classmethod
    def load(cls, text: str) -> "QuantizerNet":
        return net_from_document(parse_document(text))


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def _encode(value, key="") -> str:
    if isinstance(value, np.ndarray):
        if not np.all(np.isfinite(value)):
            raise NonFiniteParameterError(f"non-finite parameter in '{key}'")
        return "[" + ", ".join(format_float(v) for v in value.ravel()) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(v, k)}" for k, v in value.items()) + "}"
    if isinstance(value, float):
        return format_float(value)
    return json.dumps(value, sort_keys=True)


def dumps_document(doc: dict) -> str:
    """Serialize a checkpoint document; floats use 17 significant digits."""
    lines = [f"  {json.dumps(key)}: {_encode(value, key)}" for key, value in doc.items()]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def parse_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"malformed checkpoint document: {exc}") from exc
    if not isinstance(doc, dict):
        raise CheckpointError("malformed checkpoint document: top level must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"version mismatch: expected format_version {FORMAT_VERSION}, got {version!r}")
    return doc


def net_from_document(doc: dict) -> QuantizerNet:
    try:
        arch = NetArchitecture.from_dict(doc["arch"])
        raw = doc["params"]
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"malformed checkpoint document: missing {exc}") from exc
    params = np.asarray(raw, dtype=np.float64)
    if params.shape != (arch.n_params,):
        raise ShapeMismatchError(
            f"shape mismatch: architecture needs {arch.n_params} parameters, got {params.size}"
        )
    if not np.all(np.isfinite(params)):
        raise NonFiniteParameterError("non-finite parameter in checkpoint")
    return QuantizerNet(arch, params, seed=doc.get("seed"), iterations_trained=doc.get("iterations_trained"))
