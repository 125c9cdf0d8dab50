"""Wavelet regularisation, smoothness baselines and gradient-mixing diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .haar import analysis_matrix, band_slices


class TooShort(ValueError):
    pass


class ZeroBaseGradient(ValueError):
    pass


@dataclass(frozen=True)
class WavRegConfig:
    """Scale weights ``[lambda_a, lambda_dL, ..., lambda_d1]`` and mixing weight beta."""

    levels: int = 3
    weight_approx: float = 2.0
    weight_details: tuple[float, ...] = (1.0, 0.5, 0.25)
    beta: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "weight_details", tuple(float(w) for w in self.weight_details))
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if len(self.weight_details) != self.levels:
            raise ValueError(f"need {self.levels} detail weights, got {len(self.weight_details)}")
        if self.beta < 0 or not math.isfinite(self.beta):
            raise ValueError("beta must be finite and >= 0")
        w = (float(self.weight_approx), *self.weight_details)
        if w[-1] < 0:
            raise ValueError("weights must be nonnegative")
        # strictly decreasing from coarse to fine; a run of zeros is allowed at the fine end
        for hi, lo in zip(w, w[1:]):
            if not (hi > lo or hi == lo == 0.0) or w[0] <= 0:
                raise ValueError(f"scale weights must decrease from coarse to fine: {list(w)}")

    @property
    def weights(self) -> tuple[float, ...]:
        return (float(self.weight_approx), *self.weight_details)


@lru_cache(maxsize=64)
def _weighted_analysis(T: int, levels: int, weights: tuple[float, ...]) -> np.ndarray:
    W = analysis_matrix(T, levels)
    row_w = np.empty(W.shape[0])
    for sl, lam in zip(band_slices(T, levels), weights):
        row_w[sl] = lam
    M = row_w[:, None] * W
    M.flags.writeable = False
    return M


@dataclass
class WavRegResult:
    value: Tensor
    per_band: np.ndarray = field(repr=False)  # [a_L, d_L, ..., d_1]


def wavreg(pred, target, cfg: WavRegConfig) -> WavRegResult:
    """Weighted L1 distance between Haar pyramids, summed over rows and channels.

    Accepts (T, C) or batched (..., T, C) inputs; everything is summed. Since
    the weights are nonnegative, ``lambda * |c|`` is folded into the analysis
    operator so the whole loss is one ``l1`` node.
    """
    pred, target = ag.as_tensor(pred), ag.as_tensor(target)
    if pred.shape != target.shape:
        raise ag.ShapeMismatch(f"wavreg: shapes differ {pred.shape} vs {target.shape}")
    T = pred.shape[-2]
    if T < 2:
        raise TooShort("wavreg needs T >= 2")
    M = _weighted_analysis(T, cfg.levels, cfg.weights)
    cp = ag.matmul(M, pred)
    ct = ag.matmul(M, target)
    value = ag.l1(cp, ct)
    absdiff = np.abs(cp.data - ct.data)
    per_band = np.array([absdiff[..., sl, :].sum() for sl in band_slices(T, cfg.levels)])
    return WavRegResult(value, per_band)


def total_loss(diff, wav, beta: float):
    return diff + beta * wav


def _difference_penalty(pred, order: int) -> Tensor:
    pred = ag.as_tensor(pred)
    T = pred.shape[-2]
    if T < order + 1:
        raise TooShort(f"order-{order} difference needs T >= {order + 1}, got {T}")
    D = np.diff(np.eye(T), n=order, axis=0)
    d = ag.matmul(D, pred)
    return ag.sum(ag.elementwise_mul(d, d))


def velreg(pred) -> Tensor:
    return _difference_penalty(pred, 1)


def accreg(pred) -> Tensor:
    return _difference_penalty(pred, 2)


def jerk(pred) -> Tensor:
    return _difference_penalty(pred, 3)


@lru_cache(maxsize=64)
def highpass_projector(T: int, cutoff_fraction: float) -> np.ndarray:
    """Real orthogonal projector onto DFT bins above ``cutoff_fraction`` of Nyquist.

    ``|P x|^2`` is the (orthonormal-DFT) spectral energy in those bins.
    """
    k = np.arange(T)
    frac = np.minimum(k, T - k) / (T / 2.0)
    keep = frac > cutoff_fraction
    F = np.fft.fft(np.eye(T), axis=0, norm="ortho")
    P = np.real(F.conj().T @ (keep[:, None] * F))
    P.flags.writeable = False
    return P


def lowpass_reg(pred, cutoff_fraction: float = 0.5) -> Tensor:
    pred = ag.as_tensor(pred)
    T = pred.shape[-2]
    if T < 2:
        raise TooShort("lowpass_reg needs T >= 2")
    h = ag.matmul(highpass_projector(T, float(cutoff_fraction)), pred)
    return ag.sum(ag.elementwise_mul(h, h))


REGULARIZERS = {
    "wavreg": None,
    "velreg": velreg,
    "accreg": accreg,
    "jerk": jerk,
    "lowpass": lowpass_reg,
}


# gradient diagnostics ---------------------------------------------------------


def grad_ratio(g_diff, g_wav, beta: float) -> float:
    """``beta * |g_wav| / |g_diff|``."""
    nd = float(np.linalg.norm(np.ravel(g_diff)))
    if nd == 0.0:
        raise ZeroBaseGradient("diffusion gradient has zero norm")
    nw = float(np.linalg.norm(np.ravel(g_wav)))
    if not (math.isfinite(beta) and math.isfinite(nw) and math.isfinite(nd)):
        return beta * nw / nd
    # correctly rounded, so the result is within half an ulp of the exact line in beta
    return float(Fraction(beta) * Fraction(nw) / Fraction(nd))


@dataclass(frozen=True)
class AngleReport:
    ratio: float
    sin_phi: float
    bound: float  # inf when ratio >= 1

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.bound)


def angle_diagnostic(g_diff, g_wav, beta: float) -> AngleReport:
    """Deviation of ``g_diff + beta * g_wav`` from ``g_diff``.

    ``sin_phi`` is the norm of the auxiliary term's component orthogonal to
    ``g_diff`` over the norm of the combined gradient.
    """
    gd = np.ravel(np.asarray(g_diff, dtype=np.float64))
    gw = np.ravel(np.asarray(g_wav, dtype=np.float64))
    r = grad_ratio(gd, gw, beta)
    u = beta * gw
    perp = u - (np.dot(u, gd) / np.dot(gd, gd)) * gd
    tot = float(np.linalg.norm(gd + u))
    sin_phi = float(np.linalg.norm(perp)) / tot if tot > 0 else float("nan")
    bound = r / (1.0 - r) if r < 1.0 else float("inf")
    return AngleReport(r, sin_phi, bound)


@dataclass(frozen=True)
class LossReport:
    diff: float
    wav: float
    total: float
    per_band: tuple[float, ...]
    r_beta: float = float("nan")
    sin_phi: float = float("nan")
    bound: float = float("nan")
