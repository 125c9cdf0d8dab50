"""Instruction-conditioned camera trajectory diffusion with wavelet regularisation."""

from .haar import dwt_multi, idwt
from .losses import WavRegConfig, wavreg
from .taskgen import Instruction, SceneStub, generate_trajectory
from .trajectory import Pose, Trajectory, flatten, unflatten

__all__ = [
    "Instruction",
    "Pose",
    "SceneStub",
    "Trajectory",
    "WavRegConfig",
    "dwt_multi",
    "flatten",
    "generate_trajectory",
    "idwt",
    "unflatten",
    "wavreg",
]
