"""Standalone pose-line reader used to cross-check the exporter.

Deliberately shares no code with the package: plain string splitting and
numpy only.
"""
import numpy as np


def parse_pose_lines(lines):
    """Return (R, t, stamps) arrays from ``t_us fx fy cx cy k1 k2 [R|t row-major]`` lines."""
    R, t, stamps = [], [], []
    for line in lines:
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 19:
            raise ValueError(f"expected 19 fields, got {len(fields)}")
        stamps.append(int(fields[0]))
        m = np.array([float(v) for v in fields[7:]]).reshape(3, 4)
        R.append(m[:, :3])
        t.append(m[:, 3])
    return np.array(R), np.array(t), np.array(stamps)
