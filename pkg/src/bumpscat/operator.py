"""Complex-scaled Hamiltonian as a short sum of tensor products.

The two-dimensional operator never materializes: each term is a pair of
one-dimensional factor matrices, applied to a reshaped vector as
A_x . U . A_y^T. With Nx ~ Ny ~ sqrt(N) one application costs O(N^{3/2})
and storage O(Nx^2 + Ny^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .dvr import (
    FactorMatrix,
    default_quadrature,
    gaussian_factor_matrix,
    identity_factor,
    kinetic_matrix,
    quadrature_error_bound,
)
from .errors import DenseGuardError, OperatorShapeError, QuadratureBoundExceeded
from .model import ModelConfig, ScalingAngle, bump_centers

DENSE_GUARD = 4096
QUADRATURE_GATE = 1e-10


@dataclass
class TensorOperator:
    """Sum of coefficient * (A_x tensor A_y) terms on an Nx x Ny grid."""

    terms: List[Tuple[complex, FactorMatrix, FactorMatrix]]
    Nx: int
    Ny: int

    @property
    def N(self):
        return self.Nx * self.Ny


def assemble(config, alpha, hbar, grid, q=None):
    """Build the scaled operator on the given grid.

    Terms are e^{-2ia} (K_x ox I_y) + e^{-2ia} (I_x ox K_y) plus one
    gaussian product per bump with scaled center e^{-ia} c_k and width
    e^{-ia} sigma. The potential quadrature must certify an error below
    the assembly gate.
    """
    a = alpha.alpha if isinstance(alpha, ScalingAngle) else float(alpha)
    rot = np.exp(-1j * a)
    sigma_a = rot * config.sigma

    qx = q if q is not None else default_quadrature(sigma_a, grid.dx)
    qy = q if q is not None else default_quadrature(sigma_a, grid.dy)
    for qq, d, name in ((qx, grid.dx, "x"), (qy, grid.dy, "y")):
        bound = quadrature_error_bound(sigma_a, qq.delta, qq.n_q, d)
        if bound > QUADRATURE_GATE:
            raise QuadratureBoundExceeded(
                f"{name}-axis quadrature bound {bound:.3e} exceeds {QUADRATURE_GATE:.0e}"
            )

    coeff_kin = complex(np.exp(-2j * a))
    kx = kinetic_matrix(hbar, grid.dx, grid.Nx, axis="x")
    ky = kinetic_matrix(hbar, grid.dy, grid.Ny, axis="y")
    terms = [
        (coeff_kin, kx, identity_factor(grid.Ny, "y")),
        (coeff_kin, identity_factor(grid.Nx, "x"), ky),
    ]
    xpts = grid.x_points()
    ypts = grid.y_points()
    for cx_r, cy_r in bump_centers(config.m, config.R):
        gx = gaussian_factor_matrix(rot * cx_r, sigma_a, xpts, grid.dx, qx, axis="x")
        gy = gaussian_factor_matrix(rot * cy_r, sigma_a, ypts, grid.dy, qy, axis="y")
        terms.append((1.0 + 0.0j, gx, gy))
    return TensorOperator(terms=terms, Nx=grid.Nx, Ny=grid.Ny)


def apply(op, v):
    """Matrix-vector product, term by term on the reshaped vector."""
    v = np.asarray(v)
    if v.shape != (op.N,):
        raise OperatorShapeError(f"expected vector of length {op.N}, got shape {v.shape}")
    u = v.reshape(op.Nx, op.Ny)
    out = np.zeros((op.Nx, op.Ny), dtype=complex)
    for coeff, ax, ay in op.terms:
        if ax.kind == "identity" and ay.kind == "identity":
            out += coeff * u
        elif ax.kind == "identity":
            out += coeff * (u @ ay.values.T)
        elif ay.kind == "identity":
            out += coeff * (ax.values @ u)
        else:
            out += coeff * (ax.values @ u @ ay.values.T)
    return out.reshape(op.N)


def apply_adjoint(op, v):
    """Product with the conjugate transpose (factors are symmetric, so A^H = conj A)."""
    v = np.asarray(v)
    if v.shape != (op.N,):
        raise OperatorShapeError(f"expected vector of length {op.N}, got shape {v.shape}")
    u = v.reshape(op.Nx, op.Ny)
    out = np.zeros((op.Nx, op.Ny), dtype=complex)
    for coeff, ax, ay in op.terms:
        cc = np.conj(coeff)
        if ax.kind == "identity" and ay.kind == "identity":
            out += cc * u
        elif ax.kind == "identity":
            out += cc * (u @ np.conj(ay.values).T)
        elif ay.kind == "identity":
            out += cc * (np.conj(ax.values) @ u)
        else:
            out += cc * (np.conj(ax.values) @ u @ np.conj(ay.values).T)
    return out.reshape(op.N)


def to_dense(op):
    """Explicit N x N matrix; testing only, guarded by size."""
    if op.N > DENSE_GUARD:
        raise DenseGuardError(f"refusing to densify an operator of size {op.N} > {DENSE_GUARD}")
    out = np.zeros((op.N, op.N), dtype=complex)
    for coeff, ax, ay in op.terms:
        out += coeff * np.kron(ax.values, ay.values)
    return out
