"""Experiment spec files: YAML with strict key checking.

Example::

    name: additive-1d
    sampler: additive        # additive | multiplicative | dataset
    n_x: 1
    n_y: 1
    Q: 5
    train:
      max_iterations: 3000
      seed: 0
    net:
      hidden_layers: 5
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from condquant.kernel import KernelParams
from condquant.net import NetArchitecture
from condquant.samplers import ConditionalSampler, EmpiricalJoint, additive_gaussian, multiplicative_gaussian, read_dataset
from condquant.trainer import TrainConfig


class SpecError(ValueError):
    pass


TOP_KEYS = {"name", "sampler", "n_x", "n_y", "Q", "dataset", "knn_k", "output_dir", "train", "net"}
TRAIN_KEYS = {"B", "J", "a", "r", "max_iterations", "seed", "lr", "beta1", "beta2", "eps", "clip_norm",
              "checkpoint_every", "log_every"}
NET_KEYS = {"hidden_layers", "width", "activation"}
INT_KEYS = {"n_x", "n_y", "Q", "knn_k", "B", "J", "max_iterations", "seed", "checkpoint_every", "log_every",
            "hidden_layers", "width"}
FLOAT_KEYS = {"a", "r", "lr", "beta1", "beta2", "eps", "clip_norm"}
SAMPLERS = ("additive", "multiplicative", "dataset")


def _check_section(section: dict, allowed: set, prefix: str):
    if not isinstance(section, dict):
        raise SpecError(f"'{prefix.rstrip('.') or 'spec'}' must be a mapping")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise SpecError(f"unknown key '{prefix}{unknown[0]}'")
    for key, value in section.items():
        if key in INT_KEYS and (not isinstance(value, int) or isinstance(value, bool)):
            raise SpecError(f"'{prefix}{key}' must be an integer, got {value!r}")
        if key in FLOAT_KEYS and value is not None and (not isinstance(value, (int, float)) or isinstance(value, bool)):
            raise SpecError(f"'{prefix}{key}' must be a number, got {value!r}")


@dataclass
class ExperimentSpec:
    name: str
    sampler: str
    n_x: int
    n_y: int
    Q: int
    dataset: str | None = None
    knn_k: int | None = None
    output_dir: str | None = None
    train: dict = field(default_factory=dict)
    net: dict = field(default_factory=dict)
    base_dir: Path = field(default=Path("."), repr=False)

    @classmethod
    def from_dict(cls, raw, base_dir=".") -> "ExperimentSpec":
        if not isinstance(raw, dict):
            raise SpecError("spec must be a mapping")
        _check_section(raw, TOP_KEYS, "")
        _check_section(raw.get("train", {}) or {}, TRAIN_KEYS, "train.")
        _check_section(raw.get("net", {}) or {}, NET_KEYS, "net.")
        for key in ("name", "sampler", "n_x", "n_y", "Q"):
            if key not in raw:
                raise SpecError(f"missing required key '{key}'")
        if raw["sampler"] not in SAMPLERS:
            raise SpecError(f"'sampler' must be one of {', '.join(SAMPLERS)}, got {raw['sampler']!r}")
        spec = cls(**{k: v for k, v in raw.items() if k not in ("train", "net")},
                   train=dict(raw.get("train") or {}), net=dict(raw.get("net") or {}), base_dir=Path(base_dir))
        spec.resolve()
        return spec

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise SpecError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(raw, base_dir=path.parent)

    def to_dict(self) -> dict:
        d = {"name": self.name, "sampler": self.sampler, "n_x": self.n_x, "n_y": self.n_y, "Q": self.Q}
        for key in ("dataset", "knn_k", "output_dir"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        d["train"] = dict(self.train)
        d["net"] = dict(self.net)
        return d

    def train_config(self, seed: int | None = None) -> TrainConfig:
        t = dict(self.train)
        try:
            kernel = KernelParams(t.pop("a", 1e-6), t.pop("r", 1.0))
        except ValueError as exc:
            field_name = "train.a" if "'a'" in str(exc) else "train.r"
            raise SpecError(f"invalid '{field_name}': {exc}") from exc
        if seed is not None:
            t["seed"] = seed
        try:
            return TrainConfig(kernel=kernel, **t)
        except ValueError as exc:
            raise SpecError(f"invalid train section: {exc}") from exc

    def architecture(self) -> NetArchitecture:
        try:
            return NetArchitecture(input_dim=self.n_x, n_y=self.n_y, Q=self.Q, **self.net)
        except ValueError as exc:
            raise SpecError(f"invalid net section: {exc}") from exc

    def build_sampler(self) -> ConditionalSampler:
        if self.sampler in ("additive", "multiplicative"):
            if self.n_x != self.n_y:
                raise SpecError(f"sampler '{self.sampler}' needs n_x == n_y, got {self.n_x} and {self.n_y}")
            if self.n_x < 1:
                raise SpecError("'n_x' must be >= 1")
            build = additive_gaussian if self.sampler == "additive" else multiplicative_gaussian
            return build(self.n_x)
        if self.dataset is None or self.knn_k is None:
            raise SpecError("sampler 'dataset' needs 'dataset' and 'knn_k'")
        path = self.base_dir / self.dataset
        try:
            xs, ys = read_dataset(path)
        except OSError as exc:
            raise SpecError(f"cannot read dataset '{path}': {exc}") from exc
        except ValueError as exc:
            raise SpecError(f"invalid dataset: {exc}") from exc
        if (xs.shape[1], ys.shape[1]) != (self.n_x, self.n_y):
            raise SpecError(f"dataset has n_x={xs.shape[1]}, n_y={ys.shape[1]} but spec says "
                            f"n_x={self.n_x}, n_y={self.n_y}")
        try:
            return EmpiricalJoint(xs, ys, self.knn_k)
        except ValueError as exc:
            raise SpecError(f"invalid 'knn_k': {exc}") from exc

    def resolve(self, seed: int | None = None) -> tuple[TrainConfig, NetArchitecture, ConditionalSampler]:
        return self.train_config(seed), self.architecture(), self.build_sampler()
