"""Kinematic and spectral diagnostics for camera trajectories.

Integrals over time are replaced by left Riemann sums with step ``dt``.
``lowpass_error`` (RMS residual of the approximation-only reconstruction) and
the per-axis sign-retention rate stand in for the smoothness and geometric
retention scores, whose exact formulas are not fixed anywhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .haar import dwt_multi, energy_split, lowpass_reconstruct
from .trajectory import TRANSLATION_CHANNELS, Trajectory, flatten, rotation_angle, step_distances


@dataclass(frozen=True)
class Kinematics:
    angular_speed: np.ndarray  # rad / s, (T-1,)
    linear_speed: np.ndarray  # units / s, (T-1,)


def kinematics(traj: Trajectory) -> Kinematics:
    if len(traj) < 2:
        raise ValueError("kinematics needs T >= 2")
    dt = traj.frame_interval
    ang = rotation_angle(traj.rotations[:-1], traj.rotations[1:]) / dt
    lin = np.linalg.norm(np.diff(traj.translations, axis=0), axis=1) / dt
    return Kinematics(ang, lin)


def motion_energy(traj: Trajectory) -> float:
    """Discrete kinetic energy ``sum (v^2 + w^2) dt``."""
    k = kinematics(traj)
    return float(np.sum(k.linear_speed**2 + k.angular_speed**2) * traj.frame_interval)


def hf_energy(x, cutoff_fraction: float = 0.5) -> float:
    """Spectral energy strictly above ``cutoff_fraction`` of Nyquist, summed over channels.

    Uses the orthonormal real FFT; interior bins count twice since each stands
    for a conjugate pair, so the full spectrum sums to ``|x|^2``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    T = x.shape[0]
    if T < 2:
        raise ValueError("hf_energy needs T >= 2")
    X = np.fft.rfft(x, axis=0, norm="ortho")
    k = np.arange(X.shape[0])
    mult = np.full(k.shape, 2.0)
    mult[0] = 1.0
    if T % 2 == 0:
        mult[-1] = 1.0
    keep = (2.0 * k / T) > cutoff_fraction
    return float(np.sum(mult[keep, None] * np.abs(X[keep]) ** 2))


def accel_energy(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] < 3:
        return 0.0
    return float(np.sum(np.diff(x, n=2, axis=0) ** 2))


def sign_retained(x: np.ndarray, recon: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Per-channel flag: does ``recon`` keep the sign of the net change of ``x``?

    Channels whose net change is within ``tol`` are reported as retained.
    """
    net = x[-1] - x[0]
    net_r = recon[-1] - recon[0]
    return (np.abs(net) <= tol) | (np.sign(net) == np.sign(net_r))


@dataclass(frozen=True)
class AnalysisReport:
    angular_speed: np.ndarray
    linear_speed: np.ndarray
    motion_energy: float
    accel_energy: float
    hf_energy: float
    lf_fraction: float
    lowpass_error: float
    max_step: float
    band_energies: tuple[float, ...]  # [a_L, d_L, ..., d_1]
    sign_retained: bool  # net translation sign kept per axis by the low-pass reconstruction

    def row(self) -> dict[str, float]:
        out = {
            "lf_fraction": self.lf_fraction,
            "lowpass_error": self.lowpass_error,
            "motion_energy": self.motion_energy,
            "hf_energy": self.hf_energy,
            "accel_energy": self.accel_energy,
            "max_step": self.max_step,
        }
        out["band_a"] = self.band_energies[0]
        for i, e in enumerate(self.band_energies[1:]):
            out[f"band_d{len(self.band_energies) - 1 - i}"] = e
        return out


def analyze(traj: Trajectory, levels: int = 3, cutoff_fraction: float = 0.5) -> AnalysisReport:
    x = flatten(traj)
    pyr = dwt_multi(x, levels)
    split = energy_split(pyr)
    recon = lowpass_reconstruct(pyr)
    k = kinematics(traj)
    trans = list(TRANSLATION_CHANNELS)
    return AnalysisReport(
        angular_speed=k.angular_speed,
        linear_speed=k.linear_speed,
        motion_energy=float(np.sum(k.linear_speed**2 + k.angular_speed**2) * traj.frame_interval),
        accel_energy=accel_energy(x),
        hf_energy=hf_energy(x, cutoff_fraction),
        lf_fraction=split.lf_fraction,
        lowpass_error=float(np.sqrt(np.mean((x - recon) ** 2))),
        max_step=float(step_distances(traj).max()),
        band_energies=(split.approx, *split.details),
        sign_retained=bool(np.all(sign_retained(x[:, trans], recon[:, trans]))),
    )
