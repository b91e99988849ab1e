"""Gaussian-bump potential model and its complex-scaled continuation.

The potential is a sum of ``m`` identical isotropic gaussians of width
``sigma`` placed at the vertices of a regular m-gon of circumradius ``R``.
Everything here is a closed-form expression; the complex-scaled variants
substitute ``r -> r e^{i alpha}`` analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class PhasePoint(NamedTuple):
    """A point of the four-dimensional phase space (unit mass)."""

    x: float
    y: float
    px: float
    py: float


@dataclass(frozen=True)
class ModelConfig:
    """Bump count, ring radius and gaussian width."""

    m: int = 3
    R: float = 1.4
    sigma: float = 1.0 / 3.0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"need at least two bumps, got m={self.m}")
        if not self.R > 0:
            raise ValueError(f"ring radius must be positive, got R={self.R}")
        if not self.sigma > 0:
            raise ValueError(f"gaussian width must be positive, got sigma={self.sigma}")


@dataclass(frozen=True)
class ScalingAngle:
    """Complex-scaling angle in radians, restricted to [0, pi/4).

    The upper bound keeps the rotated kinetic symbol e^{-2ia} |p|^2 / 2
    inside a half plane, so the scaled operator stays sectorial.
    """

    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < math.pi / 4:
            raise ValueError(f"scaling angle must lie in [0, pi/4), got {self.alpha}")


def bump_centers(m, R):
    """Vertices of the regular m-gon, as an (m, 2) array.

    Point k (1-based) is (R cos(2 pi k / m), R sin(2 pi k / m)), so the
    last row sits on the positive x axis.
    """
    if m < 1:
        raise ValueError("need at least one bump")
    if not R > 0:
        raise ValueError("radius must be positive")
    angles = 2.0 * np.pi * np.arange(1, m + 1) / m
    return R * np.column_stack([np.cos(angles), np.sin(angles)])


def potential(config, x, y):
    """Sum of gaussian bumps at (x, y); accepts scalars or broadcastable arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inv_two_sigma2 = 0.5 / config.sigma**2
    total = 0.0
    for cx, cy in bump_centers(config.m, config.R):
        total = total + np.exp(-((x - cx) ** 2 + (y - cy) ** 2) * inv_two_sigma2)
    return total if total.ndim else float(total)


def potential_gradient(config, x, y):
    """Analytic gradient of :func:`potential`, returned as (dV/dx, dV/dy)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inv_sigma2 = 1.0 / config.sigma**2
    gx = 0.0
    gy = 0.0
    for cx, cy in bump_centers(config.m, config.R):
        dx = x - cx
        dy = y - cy
        g = np.exp(-0.5 * (dx**2 + dy**2) * inv_sigma2)
        gx = gx - dx * inv_sigma2 * g
        gy = gy - dy * inv_sigma2 * g
    if np.ndim(gx):
        return gx, gy
    return float(gx), float(gy)


def scaled_potential(config, alpha, x, y):
    """Analytic continuation of the potential under r -> r e^{i alpha}.

    Each bump becomes a gaussian with center e^{-ia} c_k and width
    e^{-ia} sigma, evaluated through the rearrangement
    exp(-((x - e^{-ia} c_x)^2 + (y - e^{-ia} c_y)^2) e^{2ia} / (2 sigma^2)),
    which avoids complex square roots and reduces to the real potential at
    alpha = 0.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    a = alpha.alpha if isinstance(alpha, ScalingAngle) else float(alpha)
    rot = np.exp(-1j * a)
    coeff = np.exp(2j * a) * 0.5 / config.sigma**2
    total = 0.0 + 0.0j
    for cx, cy in bump_centers(config.m, config.R):
        total = total + np.exp(-((x - rot * cx) ** 2 + (y - rot * cy) ** 2) * coeff)
    return total if np.ndim(total) else complex(total)


def hamiltonian(config, p):
    """Classical energy (|p|^2 / 2 + V) of a phase point."""
    return 0.5 * (p.px**2 + p.py**2) + potential(config, p.x, p.y)


def scaled_symbol(config, alpha, p):
    """Complex-scaled classical symbol e^{-2ia} |p|^2 / 2 + V_alpha."""
    a = alpha.alpha if isinstance(alpha, ScalingAngle) else float(alpha)
    kinetic = np.exp(-2j * a) * 0.5 * (p.px**2 + p.py**2)
    return kinetic + scaled_potential(config, a, p.x, p.y)
