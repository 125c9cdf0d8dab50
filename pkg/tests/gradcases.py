"""Scalar test functions for finite-difference checks, one per primitive and per loss.

Each builder takes an rng and returns ``(f, x)`` where ``f`` maps a Tensor to a
scalar Tensor. Fixed random weights turn non-scalar outputs into generic scalars.
"""
import numpy as np

from camtraj import autograd as ag
from camtraj.autograd import Tensor
from camtraj.haar import analysis_matrix
from camtraj.losses import WavRegConfig, accreg, jerk, lowpass_reg, velreg, wavreg


def _contract(y, rng):
    w = rng.standard_normal(y.shape)
    return lambda t: ag.sum(ag.elementwise_mul(t, Tensor(w)))


def _unary(op, shape=(4, 5), shift=0.0):
    def build(rng):
        x = rng.standard_normal(shape) + shift
        w = Tensor(rng.standard_normal(op(Tensor(x)).shape))
        return (lambda t: ag.sum(ag.elementwise_mul(op(t), w))), x

    return build


def _binary_left(op, other_shape, shape=(4, 5)):
    def build(rng):
        x = rng.standard_normal(shape)
        other = Tensor(rng.standard_normal(other_shape))
        w = Tensor(rng.standard_normal(op(Tensor(x), other).shape))
        return (lambda t: ag.sum(ag.elementwise_mul(op(t, other), w))), x

    return build


def _binary_right(op, other_shape, shape=(4, 5)):
    def build(rng):
        x = rng.standard_normal(shape)
        other = Tensor(rng.standard_normal(other_shape))
        w = Tensor(rng.standard_normal(op(other, Tensor(x)).shape))
        return (lambda t: ag.sum(ag.elementwise_mul(op(other, t), w))), x

    return build


def _relu_away_from_kink(rng):
    x = rng.standard_normal((4, 5))
    x = np.where(np.abs(x) < 1e-3, 0.5, x)
    w = Tensor(rng.standard_normal(x.shape))
    return (lambda t: ag.sum(ag.elementwise_mul(ag.relu(t), w))), x


def _row_gather(rng):
    idx = rng.integers(0, 6, size=9)
    w = Tensor(rng.standard_normal((9, 3)))
    return (lambda t: ag.sum(ag.elementwise_mul(ag.row_gather(t, idx), w))), rng.standard_normal((6, 3))


def _concat(rng):
    other = Tensor(rng.standard_normal((2, 5)))
    w = Tensor(rng.standard_normal((6, 5)))
    return (lambda t: ag.sum(ag.elementwise_mul(ag.concat_rows([other, t]), w))), rng.standard_normal((4, 5))


def _mse(rng):
    y = Tensor(rng.standard_normal((4, 5)))
    return (lambda t: ag.mse(t, y)), rng.standard_normal((4, 5))


def _away_from_zero(d, margin=1e-3):
    # keep every |difference| clear of the L1 kink so the stencil never straddles it
    return np.where(np.abs(d) < margin, np.copysign(0.5, d), d)


def _l1(rng):
    y = rng.standard_normal((4, 5))
    x = y + _away_from_zero(rng.standard_normal((4, 5)))
    return (lambda t: ag.l1(t, Tensor(y))), x


PRIMITIVES = {
    "add": _binary_left(ag.add, (4, 5)),
    "add_broadcast": _binary_right(ag.add, (3, 4, 5), shape=(1, 5)),
    "sub": _binary_right(ag.sub, (4, 5)),
    "scalar_mul": _unary(lambda t: ag.scalar_mul(t, -1.7)),
    "elementwise_mul": _binary_left(ag.elementwise_mul, (4, 5)),
    "matmul_left": _binary_left(ag.matmul, (5, 3)),
    "matmul_right": _binary_right(ag.matmul, (3, 4), shape=(4, 5)),
    "matmul_batched": _binary_left(ag.matmul, (2, 5, 3), shape=(2, 4, 5)),
    "matmul_batch_weight": _binary_right(ag.matmul, (3, 6, 4), shape=(4, 5)),
    "transpose": _unary(ag.transpose, shape=(2, 4, 5)),
    "transpose_axes": _unary(lambda t: ag.transpose(t, (1, 0, 2)), shape=(2, 4, 5)),
    "reshape": _unary(lambda t: ag.reshape(t, (5, 4)), shape=(4, 5)),
    "concat_rows": _concat,
    "slice_rows": _unary(lambda t: ag.slice_rows(t, 1, 3)),
    "row_gather": _row_gather,
    "relu": _relu_away_from_kink,
    "gelu": _unary(ag.gelu),
    "softmax_rows": _unary(ag.softmax_rows),
    "layer_norm_rows": _unary(ag.layer_norm_rows),
    "sum": _unary(ag.sum),
    "mean": _unary(ag.mean),
    "mse": _mse,
    "l1": _l1,
}


def _loss(fn):
    def build(rng):
        target = rng.standard_normal((16, 12))
        x = rng.standard_normal((16, 12))
        return (lambda t: fn(t, target)), x

    return build


def _wavreg_case(rng):
    cfg = WavRegConfig()
    target = rng.standard_normal((16, 12))
    # pick coefficient-space differences in general position, then map back (T=16 is unpadded)
    W = analysis_matrix(16, cfg.levels)
    x = target + W.T @ _away_from_zero(rng.standard_normal((16, 12)))
    return (lambda t: wavreg(t, Tensor(target), cfg).value), x


LOSSES = {
    "wavreg": _wavreg_case,
    "velreg": _loss(lambda t, _: velreg(t)),
    "accreg": _loss(lambda t, _: accreg(t)),
    "jerk": _loss(lambda t, _: jerk(t)),
    "lowpass_reg": _loss(lambda t, _: lowpass_reg(t, 0.5)),
}
