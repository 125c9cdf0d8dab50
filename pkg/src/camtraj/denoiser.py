"""Conditional diffusion transformer over flattened pose sequences.

The denoiser predicts the injected noise. A single conditioning token
``c = e_s + e_cam`` (timestep embedding plus projected condition vector) is
prepended to the embedded trajectory, learnable positional embeddings are
added, and the sequence runs through pre-norm transformer blocks. The output
row for the conditioning token is dropped; the remaining T rows are the noise
estimate, from which the clean trajectory is recovered algebraically.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import autograd as ag
from . import checkpoint
from .autograd import Tape, Tensor
from .losses import (
    LossReport,
    WavRegConfig,
    accreg,
    angle_diagnostic,
    jerk,
    lowpass_reg,
    velreg,
    wavreg,
)
from .taskgen import COND_DIM, write_atomic


class StepOutOfRange(ValueError):
    pass


class NonFiniteLoss(FloatingPointError):
    pass


class NonFiniteSample(FloatingPointError):
    pass


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    steps: int
    alpha_bar: np.ndarray  # (S + 1,), alpha_bar[0] == 1

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar, dtype=np.float64)
        if ab.shape != (self.steps + 1,):
            raise ValueError("alpha_bar needs steps + 1 entries")
        if ab[0] != 1.0 or np.any(np.diff(ab) >= 0) or np.any(ab <= 0):
            raise ValueError("alpha_bar must start at 1 and decrease strictly inside (0, 1]")
        ab.flags.writeable = False
        object.__setattr__(self, "alpha_bar", ab)

    @classmethod
    def cosine(cls, steps: int = 1000, offset: float = 0.008, lo: float = 1e-5, hi: float = 1 - 1e-5) -> "NoiseSchedule":
        """Squared-cosine schedule mapped affinely into [lo, hi] for s >= 1.

        The affine squeeze keeps the sequence strictly decreasing where a hard
        clamp would flatten the tail.
        """
        s = np.arange(steps + 1) / steps
        f = np.cos((s + offset) / (1 + offset) * np.pi / 2) ** 2
        ab = lo + (hi - lo) * (f / f[0])
        ab[0] = 1.0
        return cls(steps, ab)

    def check(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.int64)
        if np.any(s < 1) or np.any(s > self.steps):
            raise StepOutOfRange(f"diffusion step must lie in [1, {self.steps}]")
        return s

    def beta(self, s) -> np.ndarray:
        s = self.check(s)
        return 1.0 - self.alpha_bar[s] / self.alpha_bar[s - 1]

    def posterior_variance(self, s) -> np.ndarray:
        s = self.check(s)
        return self.beta(s) * (1.0 - self.alpha_bar[s - 1]) / (1.0 - self.alpha_bar[s])


def forward_noise(k0, s, eps, sched: NoiseSchedule) -> np.ndarray:
    """``sqrt(ab_s) k0 + sqrt(1 - ab_s) eps``; ``s`` may be per-item for batches."""
    s = sched.check(s)
    ab = sched.alpha_bar[s]
    k0, eps = np.asarray(k0, dtype=np.float64), np.asarray(eps, dtype=np.float64)
    if ab.ndim:
        ab = ab.reshape(ab.shape + (1,) * (k0.ndim - ab.ndim))
    return np.sqrt(ab) * k0 + np.sqrt(1.0 - ab) * eps


@dataclass(frozen=True)
class DenoiserConfig:
    traj_len: int = 13
    channels: int = 12
    latent_dim: int = 64
    depth: int = 2
    heads: int = 4
    cond_dim: int = COND_DIM
    mlp_ratio: int = 4

    def __post_init__(self):
        for name in ("traj_len", "channels", "latent_dim", "depth", "heads", "cond_dim", "mlp_ratio"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.latent_dim % self.heads:
            raise ValueError("latent_dim must be divisible by heads")


Params = dict[str, Tensor]


def _sinusoidal(n: int, dim: int) -> np.ndarray:
    pos = np.arange(n)[:, None]
    freqs = np.exp(-math.log(10000.0) * np.arange(0, dim, 2) / dim)
    table = np.zeros((n, dim))
    table[:, 0::2] = np.sin(pos * freqs)
    table[:, 1::2] = np.cos(pos * freqs[: dim // 2])
    return table


def init_params(cfg: DenoiserConfig, diffusion_steps: int, seed) -> Params:
    rng = np.random.default_rng(seed)
    D, C, H = cfg.latent_dim, cfg.channels, cfg.mlp_ratio * cfg.latent_dim
    arrays: dict[str, np.ndarray] = {}

    def linear(name, fan_in, fan_out):
        bound = 1.0 / math.sqrt(fan_in)
        arrays[f"{name}.w"] = rng.uniform(-bound, bound, (fan_in, fan_out))
        arrays[f"{name}.b"] = np.zeros(fan_out)

    def norm(name):
        arrays[f"{name}.g"] = np.ones(D)
        arrays[f"{name}.b"] = np.zeros(D)

    linear("in_proj", C, D)
    arrays["time_embed"] = _sinusoidal(diffusion_steps, D)
    linear("cam_proj", cfg.cond_dim, D)
    arrays["pos_embed"] = rng.uniform(-0.02, 0.02, (cfg.traj_len + 1, D))
    def zeros(name, fan_in, fan_out):
        arrays[f"{name}.w"] = np.zeros((fan_in, fan_out))
        arrays[f"{name}.b"] = np.zeros(fan_out)

    for i in range(cfg.depth):
        p = f"blocks.{i}"
        for m in _BLOCK_MODS:
            zeros(f"{p}.ada.{m}", D, D)
        norm(f"{p}.ln1")
        for m in ("q", "k", "v", "o"):
            linear(f"{p}.attn.{m}", D, D)
        norm(f"{p}.ln2")
        linear(f"{p}.mlp.fc1", D, H)
        linear(f"{p}.mlp.fc2", H, D)
    norm("final_ln")
    for m in _FINAL_MODS:
        zeros(f"final.ada.{m}", D, D)
    arrays["out_proj.w"] = np.zeros((D, C))
    arrays["out_proj.b"] = np.zeros(C)
    return {k: Tensor(v, requires_grad=True, name=k) for k, v in arrays.items()}


def _affine(x: Tensor, params: Params, name: str) -> Tensor:
    return ag.add(ag.matmul(x, params[f"{name}.w"]), params[f"{name}.b"])


def _norm(x: Tensor, params: Params, name: str) -> Tensor:
    return ag.add(ag.elementwise_mul(ag.layer_norm_rows(x), params[f"{name}.g"]), params[f"{name}.b"])


def _attention(x: Tensor, params: Params, prefix: str, heads: int) -> Tensor:
    N, L, D = x.shape
    dh = D // heads

    def split(t):
        return ag.transpose(ag.reshape(t, (N, L, heads, dh)), (0, 2, 1, 3))

    q = split(_affine(x, params, f"{prefix}.q"))
    k = split(_affine(x, params, f"{prefix}.k"))
    v = split(_affine(x, params, f"{prefix}.v"))
    scores = ag.scalar_mul(ag.matmul(q, ag.transpose(k)), 1.0 / math.sqrt(dh))
    out = ag.matmul(ag.softmax_rows(scores), v)
    out = ag.reshape(ag.transpose(out, (0, 2, 1, 3)), (N, L, D))
    return _affine(out, params, f"{prefix}.o")


_BLOCK_MODS = ("shift1", "scale1", "gate1", "shift2", "scale2", "gate2")
_FINAL_MODS = ("shift", "scale")


def _modulation(c_act: Tensor, params: Params, prefix: str, names: Sequence[str]) -> dict[str, Tensor]:
    """Per-sample (N, 1, D) shift/scale/gate vectors regressed from the conditioning vector."""
    N, D = c_act.shape
    return {m: ag.reshape(_affine(c_act, params, f"{prefix}.{m}"), (N, 1, D)) for m in names}


def _modulate(h: Tensor, shift: Tensor, scale: Tensor) -> Tensor:
    return ag.add(ag.add(h, ag.elementwise_mul(h, scale)), shift)


def _block(x: Tensor, c_act: Tensor, params: Params, i: int, heads: int) -> Tensor:
    """Pre-norm block with zero-initialised adaptive layer-norm modulation."""
    p = f"blocks.{i}"
    mod = _modulation(c_act, params, f"{p}.ada", _BLOCK_MODS)
    h = _modulate(_norm(x, params, f"{p}.ln1"), mod["shift1"], mod["scale1"])
    x = ag.add(x, ag.elementwise_mul(_attention(h, params, f"{p}.attn", heads), ag.add(mod["gate1"], 1.0)))
    h = _modulate(_norm(x, params, f"{p}.ln2"), mod["shift2"], mod["scale2"])
    h = _affine(ag.gelu(_affine(h, params, f"{p}.mlp.fc1")), params, f"{p}.mlp.fc2")
    return ag.add(x, ag.elementwise_mul(h, ag.add(mod["gate2"], 1.0)))


def denoise_forward(k_s, s, cond, params: Params, cfg: DenoiserConfig, sched: NoiseSchedule):
    """Return ``(eps_hat, k0_hat)`` for noisy input ``k_s`` at step(s) ``s``.

    ``k_s`` is (T, C) or (N, T, C); ``s`` is a scalar or (N,); ``cond`` is
    (cond_dim,) or (N, cond_dim).
    """
    k_s = np.asarray(k_s, dtype=np.float64)
    single = k_s.ndim == 2
    if single:
        k_s = k_s[None]
    N = k_s.shape[0]
    if k_s.shape[1:] != (cfg.traj_len, cfg.channels):
        raise ag.ShapeMismatch(f"expected (N, {cfg.traj_len}, {cfg.channels}) input, got {k_s.shape}")
    s = sched.check(np.broadcast_to(np.asarray(s), (N,)))
    cond = np.asarray(cond, dtype=np.float64).reshape(-1, cfg.cond_dim)
    if cond.shape[0] == 1 and N > 1:
        cond = np.broadcast_to(cond, (N, cfg.cond_dim))
    if cond.shape[0] != N:
        raise ag.ShapeMismatch(f"{cond.shape[0]} condition vectors for a batch of {N}")

    tokens = _affine(ag.Tensor(k_s), params, "in_proj")
    e_s = ag.row_gather(params["time_embed"], s - 1)
    e_cam = _affine(ag.Tensor(cond), params, "cam_proj")
    c_vec = ag.add(e_s, e_cam)
    c = ag.reshape(c_vec, (N, 1, cfg.latent_dim))
    x = ag.add(ag.concat_rows([c, tokens]), params["pos_embed"])
    c_act = ag.gelu(c_vec)
    for i in range(cfg.depth):
        x = _block(x, c_act, params, i, cfg.heads)
    mod = _modulation(c_act, params, "final.ada", _FINAL_MODS)
    out = _affine(_modulate(_norm(x, params, "final_ln"), mod["shift"], mod["scale"]), params, "out_proj")
    eps_hat = ag.slice_rows(out, 1, cfg.traj_len + 1)

    ab = sched.alpha_bar[s].reshape(N, 1, 1)
    k0_hat = ag.elementwise_mul(ag.sub(k_s, ag.elementwise_mul(eps_hat, np.sqrt(1.0 - ab))), 1.0 / np.sqrt(ab))
    if single:
        eps_hat = ag.reshape(eps_hat, eps_hat.shape[1:])
        k0_hat = ag.reshape(k0_hat, k0_hat.shape[1:])
    return eps_hat, k0_hat


# optimisation ---------------------------------------------------------------


class Adam:
    def __init__(self, params: Params, lr: float = 1e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for k, p in self.params.items():
            g = p.grad
            m, v = self.m[k], self.v[k]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _aux_term(name: str, k0_hat: Tensor, k0: np.ndarray, loss_cfg: WavRegConfig):
    """Auxiliary regulariser value (summed over the batch) and per-band values."""
    if name == "wavreg":
        res = wavreg(k0_hat, k0, loss_cfg)
        return res.value, tuple(float(v) for v in res.per_band)
    fn: Callable = {"velreg": velreg, "accreg": accreg, "jerk": jerk, "lowpass": lowpass_reg}[name]
    return fn(k0_hat), ()


def _collect(params: Params) -> np.ndarray:
    return np.concatenate([p.grad.ravel() for p in params.values()])


def _assign(params: Params, flat: np.ndarray) -> None:
    i = 0
    for p in params.values():
        n = p.data.size
        p.grad = flat[i : i + n].reshape(p.data.shape).copy()
        i += n


def train_step(
    k0: np.ndarray,
    cond: np.ndarray,
    params: Params,
    sched: NoiseSchedule,
    cfg: DenoiserConfig,
    loss_cfg: WavRegConfig,
    rng: np.random.Generator,
    optimizer: Adam,
    regularizer: str = "wavreg",
    diagnostics: bool = True,
) -> LossReport:
    """One optimisation step on a batch of normalised clean trajectories (N, T, C)."""
    k0 = np.asarray(k0, dtype=np.float64)
    if k0.ndim != 3 or k0.shape[0] == 0:
        raise ValueError("batch must be a nonempty (N, T, C) array")
    N = k0.shape[0]
    s = rng.integers(1, sched.steps + 1, size=N)
    eps = rng.standard_normal(k0.shape)
    k_s = forward_noise(k0, s, eps, sched)
    beta = loss_cfg.beta

    with Tape() as tape:
        eps_hat, k0_hat = denoise_forward(k_s, s, cond, params, cfg, sched)
        l_diff = ag.mse(eps_hat, eps)
        aux, per_band = _aux_term(regularizer, k0_hat, k0, loss_cfg)
        l_wav = ag.scalar_mul(aux, 1.0 / N)
        total = ag.add(l_diff, ag.scalar_mul(l_wav, beta))
    diff_v, wav_v, total_v = float(l_diff.data), float(l_wav.data), float(total.data)
    if not all(map(math.isfinite, (diff_v, wav_v, total_v))):
        raise NonFiniteLoss(f"non-finite loss: diff={diff_v} wav={wav_v}")
    per_band = tuple(v / N for v in per_band)

    optimizer.zero_grad()
    r = sin_phi = bound = float("nan")
    if diagnostics:
        tape.backward(l_diff)
        g_diff = _collect(params)
        if beta > 0:
            optimizer.zero_grad()
            tape.backward(l_wav)
            g_wav = _collect(params)
            _assign(params, g_diff + beta * g_wav)
            diag = angle_diagnostic(g_diff, g_wav, beta)
            r, sin_phi, bound = diag.ratio, diag.sin_phi, diag.bound
        else:
            r, sin_phi, bound = 0.0, 0.0, 0.0
    else:
        tape.backward(total)
    optimizer.step()
    return LossReport(diff_v, wav_v, total_v, per_band, r, sin_phi, bound)


def sample(
    cond,
    params: Params,
    sched: NoiseSchedule,
    cfg: DenoiserConfig,
    seed,
) -> np.ndarray:
    """Ancestral sampling from pure noise at step S down to step 1.

    ``cond`` may be (cond_dim,) with a scalar seed, or (N, cond_dim) with N
    seeds; each item draws all of its noise from its own seeded stream.
    Returns values in the model's (normalised) space.
    """
    cond = np.asarray(cond, dtype=np.float64)
    single = cond.ndim == 1
    cond = cond.reshape(-1, cfg.cond_dim)
    seeds = [seed] if np.ndim(seed) == 0 else list(seed)
    if len(seeds) != cond.shape[0]:
        raise ValueError(f"{len(seeds)} seeds for {cond.shape[0]} condition vectors")
    rngs = [np.random.default_rng(int(sd)) for sd in seeds]
    shape = (cfg.traj_len, cfg.channels)
    x = np.stack([r.standard_normal(shape) for r in rngs])
    ab = sched.alpha_bar
    for s in range(sched.steps, 0, -1):
        eps_hat, _ = denoise_forward(x, s, cond, params, cfg, sched)
        beta = 1.0 - ab[s] / ab[s - 1]
        mean = (x - beta / math.sqrt(1.0 - ab[s]) * eps_hat.data) / math.sqrt(1.0 - beta)
        if s > 1:
            sigma = math.sqrt(beta * (1.0 - ab[s - 1]) / (1.0 - ab[s]))
            x = mean + sigma * np.stack([r.standard_normal(shape) for r in rngs])
        else:
            x = mean
    if not np.all(np.isfinite(x)):
        raise NonFiniteSample("sampler produced non-finite values")
    return x[0] if single else x


# model bundle -----------------------------------------------------------------


@dataclass
class TrainConfig:
    steps: int = 3000
    batch_size: int = 64
    lr: float = 2e-3
    regularizer: str = "wavreg"
    diffusion_steps: int = 1000
    diag_every: int = 10  # gradient-mixing diagnostics cost a second backward pass
    lr_schedule: str = "cosine"  # or "constant"
    warmup: int = 100
    ema_decay: float = 0.999  # 0 disables; sampling uses the averaged weights

    def __post_init__(self):
        if self.steps < 0 or self.batch_size < 1 or not self.lr > 0 or self.diag_every < 0:
            raise ValueError("need steps >= 0, batch_size >= 1, lr > 0, diag_every >= 0")
        if self.lr_schedule not in ("cosine", "constant") or self.warmup < 0 or not 0 <= self.ema_decay < 1:
            raise ValueError("need lr_schedule in {cosine, constant}, warmup >= 0, 0 <= ema_decay < 1")
        if self.regularizer not in ("wavreg", "velreg", "accreg", "jerk", "lowpass"):
            raise ValueError(f"unknown regularizer {self.regularizer!r}")


def lr_at(step: int, cfg: TrainConfig) -> float:
    """Learning rate for 1-based ``step``: linear warmup, then constant or cosine decay to 0."""
    if cfg.warmup and step <= cfg.warmup:
        return cfg.lr * step / cfg.warmup
    if cfg.lr_schedule == "constant":
        return cfg.lr
    span = max(cfg.steps - cfg.warmup, 1)
    return cfg.lr * 0.5 * (1.0 + math.cos(math.pi * (step - cfg.warmup) / span))


@dataclass
class CameraModel:
    cfg: DenoiserConfig
    sched: NoiseSchedule
    params: Params
    mean: np.ndarray  # per-channel normalisation, (C,)
    std: np.ndarray
    loss_cfg: WavRegConfig = field(default_factory=WavRegConfig)
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0

    def normalize(self, flat: np.ndarray) -> np.ndarray:
        return (np.asarray(flat) - self.mean) / self.std

    def denormalize(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z) * self.std + self.mean

    def sample(self, cond, seed) -> np.ndarray:
        """Flat trajectories in scene units."""
        return self.denormalize(sample(cond, self.params, self.sched, self.cfg, seed))

    def tensors(self) -> dict[str, np.ndarray]:
        out = {k: p.data for k, p in self.params.items()}
        out["norm.mean"] = self.mean
        out["norm.std"] = self.std
        return out

    def sidecar(self) -> dict:
        return {
            "cfg": asdict(self.cfg),
            "schedule": {"kind": "cosine", "steps": self.sched.steps},
            "normalization": {"mean": self.mean.tolist(), "std": self.std.tolist()},
            "loss_cfg": {
                "levels": self.loss_cfg.levels,
                "weight_approx": self.loss_cfg.weight_approx,
                "weight_details": list(self.loss_cfg.weight_details),
                "beta": self.loss_cfg.beta,
            },
            "train_cfg": asdict(self.train_cfg),
            "seed": self.seed,
        }

    def save(self, path: str | os.PathLike) -> None:
        """Write ``path`` (binary tensors) and ``path + '.json'`` (sidecar)."""
        path = Path(path)
        write_atomic(path, checkpoint.dumps(self.tensors()))
        write_atomic(path.with_name(path.name + ".json"), json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "CameraModel":
        path = Path(path)
        tensors = checkpoint.loads(path.read_bytes())
        meta = json.loads(path.with_name(path.name + ".json").read_text(encoding="utf-8"))
        cfg = DenoiserConfig(**meta["cfg"])
        sched = NoiseSchedule.cosine(meta["schedule"]["steps"])
        mean, std = tensors.pop("norm.mean"), tensors.pop("norm.std")
        params = {k: Tensor(v, requires_grad=True, name=k) for k, v in tensors.items()}
        lc = meta["loss_cfg"]
        loss_cfg = WavRegConfig(lc["levels"], lc["weight_approx"], tuple(lc["weight_details"]), lc["beta"])
        return cls(cfg, sched, params, mean, std, loss_cfg, TrainConfig(**meta["train_cfg"]), meta["seed"])


def normalization_stats(flats: np.ndarray, floor: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel mean and std over all samples and steps of (N, T, C) data.

    A channel that never varies (R[0,1] is identically zero for yaw-pitch
    motion) gets scale ``floor`` rather than 1, so whatever small error the
    network leaves in it stays negligible after denormalising.
    """
    flats = np.asarray(flats, dtype=np.float64)
    mean = flats.reshape(-1, flats.shape[-1]).mean(axis=0)
    std = flats.reshape(-1, flats.shape[-1]).std(axis=0)
    return mean, np.maximum(std, floor)


def train(
    flats: np.ndarray,
    conds: np.ndarray,
    cfg: DenoiserConfig | None = None,
    loss_cfg: WavRegConfig | None = None,
    train_cfg: TrainConfig | None = None,
    seed: int = 0,
    log: Callable[[int, LossReport], None] | None = None,
) -> CameraModel:
    """Fit a model on (N, T, C) flat trajectories and (N, cond_dim) conditions.

    Initialisation, batch order and diffusion noise all derive from ``seed``.
    """
    flats = np.asarray(flats, dtype=np.float64)
    conds = np.asarray(conds, dtype=np.float64)
    loss_cfg = loss_cfg or WavRegConfig()
    train_cfg = train_cfg or TrainConfig()
    if cfg is None:
        cfg = DenoiserConfig(traj_len=flats.shape[1], channels=flats.shape[2], cond_dim=conds.shape[1])
    if flats.shape[1:] != (cfg.traj_len, cfg.channels) or conds.shape != (flats.shape[0], cfg.cond_dim):
        raise ag.ShapeMismatch("training data does not match the model configuration")
    sched = NoiseSchedule.cosine(train_cfg.diffusion_steps)
    init_seed, data_seed = np.random.SeedSequence(seed).spawn(2)
    params = init_params(cfg, sched.steps, init_seed)
    mean, std = normalization_stats(flats)
    data = (flats - mean) / std
    opt = Adam(params, lr=train_cfg.lr)
    rng = np.random.default_rng(data_seed)
    n = data.shape[0]
    b = min(train_cfg.batch_size, n)
    order = rng.permutation(n)
    pos = 0
    ema = {k: p.data.copy() for k, p in params.items()} if train_cfg.ema_decay else None
    for step in range(1, train_cfg.steps + 1):
        opt.lr = lr_at(step, train_cfg)
        if pos + b > n:
            order = rng.permutation(n)
            pos = 0
        idx = order[pos : pos + b]
        pos += b
        rep = train_step(
            data[idx],
            conds[idx],
            params,
            sched,
            cfg,
            loss_cfg,
            rng,
            opt,
            train_cfg.regularizer,
            diagnostics=bool(train_cfg.diag_every) and step % train_cfg.diag_every == 0,
        )
        if ema is not None:
            d = min(train_cfg.ema_decay, (1.0 + step) / (10.0 + step))  # early steps forget the init quickly
            for k, p in params.items():
                ema[k] *= d
                ema[k] += (1.0 - d) * p.data
        if log is not None:
            log(step, rep)
    if ema is not None:
        params = {k: Tensor(v, requires_grad=True, name=k) for k, v in ema.items()}
    return CameraModel(cfg, sched, params, mean, std, loss_cfg, train_cfg, seed)
