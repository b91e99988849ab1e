"""Sinc basis on a uniform grid: grid sizing, kinetic and potential factors.

Basis functions are shifted, scaled sinc functions; they span the
band-limited subspace with |p| <= pi hbar / dx. The kinetic matrix follows
from the Fourier representation of the second derivative on that subspace
(diagonal hbar^2 pi^2 / (6 dx^2), validated by the derivative oracle in the
tests). Potential factors are computed by trapezoidal quadrature whose
aliasing and truncation errors have explicit gaussian bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .model import bump_centers


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid: corners, point counts and derived spacings."""

    X0: float
    X1: float
    Y0: float
    Y1: float
    Nx: int
    Ny: int

    def __post_init__(self):
        if not (self.X0 < self.X1 and self.Y0 < self.Y1):
            raise ValueError("grid box is empty")
        if self.Nx < 1 or self.Ny < 1:
            raise ValueError("need at least one grid point per axis")

    @property
    def dx(self):
        return (self.X1 - self.X0) / self.Nx

    @property
    def dy(self):
        return (self.Y1 - self.Y0) / self.Ny

    def x_points(self):
        return self.X0 + np.arange(self.Nx) * self.dx

    def y_points(self):
        return self.Y0 + np.arange(self.Ny) * self.dy


@dataclass(frozen=True)
class QuadratureSpec:
    """Trapezoid step and half-width (nodes run from -n_q to n_q)."""

    delta: float
    n_q: int

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("quadrature step must be positive")
        if self.n_q < 2:
            raise ValueError("need at least two quadrature nodes per side")


@dataclass
class FactorMatrix:
    """One-dimensional factor of a tensor-product term."""

    values: np.ndarray
    axis: str
    kind: str  # "kinetic" | "bump" | "identity"

    @property
    def n(self):
        return self.values.shape[0]


def sinc_basis_value(m, dx, x):
    """Value of the m-th basis function at x (scalar or array)."""
    if not dx > 0:
        raise ValueError("grid spacing must be positive")
    u = (np.asarray(x, dtype=float) - m * dx) / dx
    return np.sinc(u) / math.sqrt(dx)


def grid_from_model(config, hbar, E_c, V_min=1e-4, factor=1.6):
    """Grid covering {V >= V_min} with resolution for momenta up to factor * sqrt(2 E_c).

    The box is the bounding rectangle of discs of radius
    sigma sqrt(2 ln(1/V_min)) around the bump centers, and the point counts
    are ceil(factor * L * sqrt(8 E_c) / (2 pi hbar)) per axis.
    """
    if not 0 < V_min < 1:
        raise ValueError("V_min must lie in (0, 1)")
    if not E_c > 0:
        raise ValueError("E_c must be positive")
    r_c = config.sigma * math.sqrt(2.0 * math.log(1.0 / V_min))
    centers = bump_centers(config.m, config.R)
    x0 = centers[:, 0].min() - r_c
    x1 = centers[:, 0].max() + r_c
    y0 = centers[:, 1].min() - r_c
    y1 = centers[:, 1].max() + r_c
    scale = factor * math.sqrt(8.0 * E_c) / (2.0 * math.pi * hbar)
    nx = math.ceil((x1 - x0) * scale)
    ny = math.ceil((y1 - y0) * scale)
    return GridSpec(x0, x1, y0, y1, nx, ny)


def kinetic_matrix(hbar, dx, n, axis="x"):
    """Matrix of -(hbar^2 / 2) d^2/dx^2 in the sinc basis (real symmetric Toeplitz)."""
    if n < 1:
        raise ValueError("need at least one basis function")
    col = np.empty(n)
    col[0] = math.pi**2 / 6.0
    if n > 1:
        j = np.arange(1, n)
        col[1:] = (-1.0) ** j / j.astype(float) ** 2
    col *= hbar**2 / dx**2
    return FactorMatrix(values=toeplitz(col), axis=axis, kind="kinetic")


def identity_factor(n, axis):
    return FactorMatrix(values=np.eye(n), axis=axis, kind="identity")


def gaussian_factor_matrix(center, sigma, points, dx, q, axis="x"):
    """Quadrature matrix of a (possibly complex) 1-D gaussian in the sinc basis.

    Nodes are centered on Re(center) so the truncation half-width stays
    modest regardless of where the bump sits in the box.
    """
    if q.delta > dx / 2 + 1e-15:
        raise ValueError(f"quadrature step {q.delta} exceeds dx/2 = {dx / 2}")
    points = np.asarray(points, dtype=float)
    t = center.real + np.arange(-q.n_q, q.n_q + 1) * q.delta
    g = np.exp(-((t - center) ** 2) / (2.0 * sigma**2))
    phi = np.sinc((t[None, :] - points[:, None]) / dx) / math.sqrt(dx)
    values = (phi * (g * q.delta)) @ phi.T
    values = 0.5 * (values + values.T)  # enforce exact symmetry
    return FactorMatrix(values=values, axis=axis, kind="bump")


def quadrature_error_bound(sigma, delta, n_q, dx):
    """Aliasing plus truncation bound for the gaussian quadrature above."""
    s2 = abs(sigma) ** 2
    aliasing = 2.0 * math.exp(-s2 * math.pi**2 / (2.0 * delta**2))
    truncation = (math.sqrt(2.0 * math.pi * s2) / dx) * math.exp(
        -((n_q - 1) ** 2) * delta**2 / (2.0 * s2)
    )
    return aliasing + truncation


def default_quadrature(sigma, dx, target=1e-12):
    """Quadrature putting both error terms below target.

    The step is dx/2, shrunk further if a coarse grid would leave the
    aliasing term above target; the half-width then pushes the truncation
    term below target as well.
    """
    s = abs(sigma)
    delta_alias = s * math.pi / math.sqrt(2.0 * math.log(2.0 / target))
    delta = min(dx / 2.0, delta_alias)
    arg = math.sqrt(2.0 * math.pi) * s / (dx * target)
    n_q = 1 + math.ceil((s / delta) * math.sqrt(2.0 * math.log(max(arg, math.e))))
    return QuadratureSpec(delta=delta, n_q=n_q)
