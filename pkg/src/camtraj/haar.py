"""Orthonormal Haar DWT along the time axis of (T, C) signals."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SQRT2 = np.sqrt(2.0)


class OddLength(ValueError):
    pass


class TooShort(ValueError):
    pass


class InconsistentPyramid(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WaveletPyramid:
    approx: np.ndarray  # (T_pad / 2^L, C)
    details: tuple[np.ndarray, ...]  # d_L ... d_1, coarse to fine
    levels: int
    original_length: int
    pad: tuple[int, int]  # (left, right) reflect amounts

    @property
    def padded_length(self) -> int:
        return self.original_length + self.pad[0] + self.pad[1]

    def bands(self) -> list[np.ndarray]:
        """[a_L, d_L, ..., d_1]."""
        return [self.approx, *self.details]

    def detail(self, level: int) -> np.ndarray:
        """d_level, with level 1 the finest."""
        return self.details[self.levels - level]

    def replace(self, approx=None, details=None) -> "WaveletPyramid":
        return WaveletPyramid(
            self.approx if approx is None else approx,
            self.details if details is None else tuple(details),
            self.levels,
            self.original_length,
            self.pad,
        )


def _as_2d(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[:, None], True
    if x.ndim != 2:
        raise ValueError(f"expected a (T, C) matrix, got shape {x.shape}")
    return x, False


def dwt_level(x) -> tuple[np.ndarray, np.ndarray]:
    x, vec = _as_2d(x)
    if x.shape[0] % 2:
        raise OddLength(f"length {x.shape[0]} is odd; pad before transforming")
    even, odd = x[0::2], x[1::2]
    a = (even + odd) / SQRT2
    d = (even - odd) / SQRT2
    if vec:
        return a[:, 0], d[:, 0]
    return a, d


def pad_amounts(T: int, levels: int) -> tuple[int, int]:
    """Reflect-pad split so that T_pad is the smallest multiple of 2^L >= T.

    Odd totals put the extra sample on the right.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if T < 2:
        raise TooShort("need at least 2 samples")
    block = 2**levels
    total = -T % block
    left = total // 2
    return left, total - left


def reflect_pad(x: np.ndarray, left: int, right: int) -> np.ndarray:
    """Symmetric padding without repeating the edge sample."""
    return np.pad(x, ((left, right), (0, 0)), mode="reflect")


def dwt_multi(x, levels: int) -> WaveletPyramid:
    x, _ = _as_2d(x)
    T = x.shape[0]
    left, right = pad_amounts(T, levels)
    a = reflect_pad(x, left, right)
    if a.shape[0] // 2**levels < 1:
        raise TooShort(f"T_pad={a.shape[0]} too short for {levels} levels")
    details = []
    for _ in range(levels):
        a, d = dwt_level(a)
        details.append(d)
    return WaveletPyramid(a, tuple(reversed(details)), levels, T, (left, right))


def _idwt_level(a: np.ndarray, d: np.ndarray) -> np.ndarray:
    out = np.empty((2 * a.shape[0], a.shape[1]))
    out[0::2] = (a + d) / SQRT2
    out[1::2] = (a - d) / SQRT2
    return out


def idwt_padded(p: WaveletPyramid) -> np.ndarray:
    """Inverse transform without cropping: the padded signal."""
    if len(p.details) != p.levels:
        raise InconsistentPyramid(f"{len(p.details)} detail bands for {p.levels} levels")
    a = np.asarray(p.approx, dtype=np.float64)
    for d in p.details:
        d = np.asarray(d, dtype=np.float64)
        if d.shape != a.shape:
            raise InconsistentPyramid(f"detail shape {d.shape} does not match approximation {a.shape}")
        a = _idwt_level(a, d)
    if a.shape[0] != p.padded_length:
        raise InconsistentPyramid(f"reconstructed length {a.shape[0]} != padded length {p.padded_length}")
    return a


def idwt(p: WaveletPyramid) -> np.ndarray:
    full = idwt_padded(p)
    return full[p.pad[0] : p.pad[0] + p.original_length]


@dataclass(frozen=True)
class EnergySplit:
    approx: float
    details: tuple[float, ...]  # d_L ... d_1
    total: float

    @property
    def lf_fraction(self) -> float:
        return self.approx / self.total if self.total > 0 else 1.0


def energy_split(p: WaveletPyramid) -> EnergySplit:
    ea = float(np.sum(np.square(p.approx)))
    ed = tuple(float(np.sum(np.square(d))) for d in p.details)
    return EnergySplit(ea, ed, ea + sum(ed))


def lowpass_reconstruct(p: WaveletPyramid) -> np.ndarray:
    return idwt(p.replace(details=[np.zeros_like(d) for d in p.details]))


@lru_cache(maxsize=64)
def analysis_matrix(T: int, levels: int) -> np.ndarray:
    """Linear operator taking a length-T signal to its stacked coefficients.

    Rows are ordered ``[a_L, d_L, ..., d_1]`` (T_pad rows in total); padding
    is folded in, so ``analysis_matrix(T, L) @ x`` equals the concatenated
    bands of ``dwt_multi(x, L)``.
    """
    p = dwt_multi(np.eye(T), levels)
    W = np.concatenate(p.bands(), axis=0)
    W.flags.writeable = False
    return W


def band_slices(T: int, levels: int) -> list[slice]:
    """Row ranges of each band inside ``analysis_matrix(T, levels)``."""
    left, right = pad_amounts(T, levels)
    n = (T + left + right) // 2**levels
    out = [slice(0, n)]
    start = n
    for _ in range(levels):
        out.append(slice(start, start + n))
        start += n
        n *= 2
    return out
