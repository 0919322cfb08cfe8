"""Training loop: sample a batch of conditions, sample each conditional law,
push the conditions through the network and descend the mean squared
kernel distance between the J-sample and the Q network points."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from condquant.kernel import KernelParams
from condquant.measures import (
    batch_distance_squared,
    batch_points_grad,
    distance_squared_reference,
    empirical,
)
from condquant.net import NetArchitecture, QuantizerNet, dumps_document, net_from_document, parse_document
from condquant.optim import AdamState, adam_step
from condquant.rng import EVAL_Y, SAMPLE_X, SAMPLE_Y, Rng
from condquant.samplers import ConditionalSampler


class NonFiniteLossError(FloatingPointError):
    def __init__(self, iteration: int, detail: str):
        super().__init__(f"non-finite loss at iteration {iteration}: {detail}")
        self.iteration = iteration


class CheckpointWriteError(OSError):
    pass


@dataclass
class TrainConfig:
    B: int = 128
    J: int = 64
    kernel: KernelParams = field(default_factory=KernelParams)
    max_iterations: int = 1000
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = None
    checkpoint_every: int = 250
    log_every: int = 10
    # recompute each logged loss with the naive double loops (slow; tests only)
    check_loss: bool = False

    def __post_init__(self):
        for name in ("B", "J", "max_iterations", "checkpoint_every", "log_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"'{name}' must be >= 1, got {getattr(self, name)!r}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["kernel"] = {"a": self.kernel.a, "r": self.kernel.r}
        return d


@dataclass
class TrainReport:
    losses: list[tuple[int, float]]
    wall_ms: list[float]
    config: dict
    final_checkpoint: str | None = None

    @property
    def loss_values(self) -> np.ndarray:
        return np.array([v for _, v in self.losses])


def draw_batch(sampler: ConditionalSampler, rng: Rng, iteration: int, B: int, J: int):
    """Conditions (B, n_x) and conditional samples (B, J, n_y) for one iteration."""
    xs = sampler.sample_x(rng.stream(SAMPLE_X, iteration), B)
    ys = np.stack([sampler.sample_y_given_x(rng.stream(SAMPLE_Y, iteration, b), xs[b], J) for b in range(B)])
    return xs, ys


def loss_and_grad(net: QuantizerNet, p: KernelParams, xs: np.ndarray, ys: np.ndarray, full: bool = True):
    """Mean squared distance over the batch and its parameter gradient.

    With ``full`` the loss includes the J x J sample self-term. That term has
    no parameter gradient, so the loop only pays for it on logged iterations.
    """
    out = net.forward_batch(xs)
    if full:
        per_element = batch_distance_squared(p, out, ys)
    else:
        per_element = batch_distance_squared(p, out, ys, include_target_self=False)
    upstream = batch_points_grad(p, out, ys) / xs.shape[0]
    return float(per_element.mean()), net.backward_batch(xs, upstream)


def batch_loss(net: QuantizerNet, sampler: ConditionalSampler, p: KernelParams, B: int, J: int,
               rng: Rng, iteration: int = 0):
    if (sampler.n_x, sampler.n_y) != (net.arch.input_dim, net.arch.n_y):
        raise ValueError(
            f"sampler dims (n_x={sampler.n_x}, n_y={sampler.n_y}) do not match network "
            f"(n_x={net.arch.input_dim}, n_y={net.arch.n_y})"
        )
    xs, ys = draw_batch(sampler, rng, iteration, B, J)
    loss, grad = loss_and_grad(net, p, xs, ys)
    if not np.isfinite(loss):
        raise NonFiniteLossError(iteration, f"batch loss {loss!r}")
    return loss, grad


def reference_batch_loss(net: QuantizerNet, p: KernelParams, xs, ys) -> float:
    out = net.forward_batch(xs)
    total = 0.0
    for b in range(xs.shape[0]):
        total += distance_squared_reference(p, empirical(ys[b]), empirical(out[b]))
    return total / xs.shape[0]


def checkpoint_document(net: QuantizerNet, state: AdamState, iteration: int) -> str:
    doc = net.to_document()
    doc["iterations_trained"] = iteration
    doc["optimizer"] = {**state.to_dict(), "m": state.m, "v": state.v}
    return dumps_document(doc)


def load_checkpoint(text: str) -> tuple[QuantizerNet, AdamState | None]:
    """Network plus optimizer state (``None`` for a bare network document)."""
    doc = parse_document(text)
    net = net_from_document(doc)
    opt = doc.get("optimizer")
    if opt is None:
        return net, None
    state = AdamState(net.arch.n_params, **opt)
    return net, state


def _write(path: Path, text: str):
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CheckpointWriteError(f"cannot write {path}: {exc}") from exc


def _write_logs(out_dir: Path, losses, wall_ms, write_timing: bool):
    # timing lives in its own file so the loss log stays byte-reproducible
    log = "iteration,loss\n" + "".join(f"{it},{v:.17g}\n" for it, v in losses)
    (out_dir / "train_log.csv").write_text(log, encoding="utf-8")
    if not write_timing:
        return
    timing = "iteration,wall_ms\n" + "".join(f"{it},{ms:.3f}\n" for it, ms in enumerate(wall_ms))
    (out_dir / "timing.csv").write_text(timing, encoding="utf-8")


def train(config: TrainConfig, arch: NetArchitecture, sampler: ConditionalSampler,
          out_dir=None, net: QuantizerNet | None = None,
          write_timing: bool = False) -> tuple[QuantizerNet, TrainReport]:
    """Run ``config.max_iterations`` iterations of the training loop.

    With ``out_dir`` set, writes ``train_log.csv``, periodic
    ``checkpoint_<iter>.ckpt`` files, the final ``model.ckpt`` and, if
    ``write_timing``, per-iteration wall times in ``timing.csv``.
    """
    # single-threaded BLAS keeps reductions, hence the loss trace, identical on any host
    with threadpool_limits(limits=1):
        return _train(config, arch, sampler, out_dir, net, write_timing)


def _train(config: TrainConfig, arch: NetArchitecture, sampler: ConditionalSampler,
           out_dir, net, write_timing):
    if (sampler.n_x, sampler.n_y) != (arch.input_dim, arch.n_y):
        raise ValueError(
            f"sampler dims (n_x={sampler.n_x}, n_y={sampler.n_y}) do not match architecture "
            f"(input_dim={arch.input_dim}, n_y={arch.n_y})"
        )
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    if net is None:
        net = QuantizerNet.init(arch, config.seed)
    state = AdamState(arch.n_params, lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                      eps=config.eps, clip_norm=config.clip_norm)
    rng = Rng(config.seed)
    p = config.kernel
    losses: list[tuple[int, float]] = []
    wall_ms: list[float] = []

    for it in range(config.max_iterations):
        start = time.perf_counter()
        xs, ys = draw_batch(sampler, rng, it, config.B, config.J)
        logged = it % config.log_every == 0
        loss, grad = loss_and_grad(net, p, xs, ys, full=logged)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            if out_dir is not None:
                _write_logs(out_dir, losses, wall_ms, write_timing)
            raise NonFiniteLossError(it, f"loss={loss!r}, gradient finite={bool(np.all(np.isfinite(grad)))}")
        if logged:
            losses.append((it, loss))
            if config.check_loss:
                ref = reference_batch_loss(net, p, xs, ys)
                if abs(ref - loss) > 1e-10 * max(1.0, abs(ref)):
                    raise AssertionError(f"iteration {it}: logged loss {loss!r} != reference {ref!r}")
        net.set_params(adam_step(state, net.params, grad))
        wall_ms.append((time.perf_counter() - start) * 1e3)
        done = it + 1
        if out_dir is not None and done % config.checkpoint_every == 0 and done < config.max_iterations:
            net.iterations_trained = done
            _write(out_dir / f"checkpoint_{done:06d}.ckpt", checkpoint_document(net, state, done))

    net.iterations_trained = config.max_iterations
    final = checkpoint_document(net, state, config.max_iterations)
    report = TrainReport(losses, wall_ms, config.to_dict())
    if out_dir is not None:
        path = out_dir / "model.ckpt"
        _write(path, final)
        _write_logs(out_dir, losses, wall_ms, write_timing)
        report.final_checkpoint = str(path)
    else:
        report.final_checkpoint = final
    return net, report


@dataclass
class EvalResult:
    x: np.ndarray
    points: np.ndarray
    loss: float


def evaluate(net: QuantizerNet, sampler: ConditionalSampler, p: KernelParams, x_list, J_eval: int,
             seed: int = 0) -> list[EvalResult]:
    """Network quantizers at each condition plus a Monte-Carlo loss on fresh draws."""
    rng = Rng(seed)
    results = []
    for i, x in enumerate(x_list):
        x = np.asarray(x, dtype=np.float64)
        points = net.forward(x)
        ys = sampler.sample_y_given_x(rng.stream(EVAL_Y, 0, i), x, J_eval)
        loss = float(batch_distance_squared(p, points[None], ys[None])[0])
        results.append(EvalResult(x, points, loss))
    return results
