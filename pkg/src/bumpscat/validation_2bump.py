"""Semiclassical checks for the two-bump model.

For two bumps every energy below the barrier top has a unique trapped
periodic orbit along the symmetry axis. Its complex action C(lambda) and
the per-traversal multiplier theta(E) of the section return map feed the
quantization condition, which places resonances on an integer lattice
after the map

    F1 = Re C / (2 pi hbar) - 1/2,   F2 = Im C / (hbar log theta) + 1/2.

Residuals to the nearest lattice point measure the size of the neglected
O(hbar^2) corrections.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from .classical import SectionPoint, _map_once
from .errors import BranchTrackingError, EmptyResonanceSet, FixedPointError, TurningPointError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)  # map to [0, 1]
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


@dataclass
class ActionResult:
    """Complex action along the trapped orbit, with the contour endpoints."""

    lam: complex
    C: complex
    x0: complex
    x1: complex


@dataclass
class LyapunovResult:
    """Per-traversal multiplier of the return map at the symmetric bounce."""

    E: float
    theta: float
    det: float
    method: str = "central-fd"


@dataclass
class LatticeImage:
    """Image of a resonance under the lattice map with its residual."""

    lam: complex
    F1: float
    F2: float
    m: int
    n: int
    res1: float
    res2: float


@dataclass
class LatticeResidualSummary:
    count: int
    median_sup: float
    max_sup: float


def turning_points(E, R, sigma):
    """Classical turning points of the axis orbit for real E in (0, 1)."""
    if not 0.0 < E < 1.0:
        raise TurningPointError(f"energy must lie in (0, 1), got {E}")
    s = math.sqrt(-2.0 * sigma**2 * math.log(E))
    x0 = -R + s
    x1 = R - s
    if not x0 < x1:
        raise TurningPointError(
            f"turning points out of order at E={E}: x0={x0:.6g} >= x1={x1:.6g}"
        )
    return x0, x1


def _axis_potential(z, R, sigma):
    inv = 0.5 / sigma**2
    return np.exp(-((z + R) ** 2) * inv) + np.exp(-((z - R) ** 2) * inv)


def _complex_turning_points(lam, R, sigma):
    s = cmath.sqrt(-2.0 * sigma**2 * cmath.log(lam))
    return -R + s, R - s


def _branch_sqrt(u):
    """Square root with nonnegative real part."""
    w = np.sqrt(u.astype(complex))
    flip = w.real < 0.0
    w[flip] = -w[flip]
    return w


def _panel(lam, z0, dz, R, sigma, s_lo, s_hi, tol, depth):
    """Adaptive 64-node Gauss-Legendre integration of the momentum integrand."""

    def quad(a, b):
        s = a + (b - a) * _GL_NODES
        z = z0 + s * dz
        u = 2.0 * (lam - _axis_potential(z, R, sigma))
        small = np.abs(u) < 1e-12
        if np.any(small & (s > 0.01) & (s < 0.99)):
            raise BranchTrackingError(
                f"integrand vanished mid-contour at s={s[small][0]:.6g}"
            )
        w = _branch_sqrt(u)
        return (b - a) * float(np.sum(_GL_WEIGHTS * w.real)) + 1j * (b - a) * float(
            np.sum(_GL_WEIGHTS * w.imag)
        )

    whole = quad(s_lo, s_hi)
    mid = 0.5 * (s_lo + s_hi)
    left = quad(s_lo, mid)
    right = quad(mid, s_hi)
    if abs(whole - (left + right)) <= tol or depth >= 48:
        return left + right
    return _panel(lam, z0, dz, R, sigma, s_lo, mid, 0.5 * tol, depth + 1) + _panel(
        lam, z0, dz, R, sigma, mid, s_hi, 0.5 * tol, depth + 1
    )


def action(lam, model):
    """Complex action C(lambda) = 2 integral sqrt(2 (lambda - V)) between turning points.

    The contour is the straight segment joining the analytically continued
    turning points; the square-root branch keeps a nonnegative real part,
    which is the continuous continuation of the real positive momentum at
    the contour midpoint.
    """
    if model.m != 2:
        raise ValueError(f"the action validation applies to two bumps, got m={model.m}")
    lam = complex(lam)
    if not 0.0 < lam.real < 1.0:
        raise TurningPointError(f"Re(lambda) must lie in (0, 1), got {lam.real}")
    if abs(lam.imag) > 0.1 * lam.real:
        raise TurningPointError(f"|Im(lambda)| too large for the contour: {lam}")
    z0, z1 = _complex_turning_points(lam, model.R, model.sigma)
    dz = z1 - z0
    integral = _panel(lam, z0, dz, model.R, model.sigma, 0.0, 1.0, 1e-12, 0)
    return ActionResult(lam=lam, C=2.0 * dz * integral, x0=z0, x1=z1)


def _tight_section_config(cfg):
    return replace(cfg, rtol=1e-12, atol=1e-14, crossing_tol=1e-13, drift_tol=1e-6)


def _return_map(cfg, u, p):
    """Half-period return map around the symmetric bounce, in centered coordinates."""
    result, _ = _map_once(cfg, SectionPoint(theta=math.pi + u, ptheta=p, k=0), direction=1)
    if not isinstance(result, SectionPoint):
        raise FixedPointError(f"trapped-orbit trajectory escaped from u={u}, p={p}")
    return result.theta - math.pi, result.ptheta


def lyapunov_multiplier(E, cfg, fd_step=1e-6):
    """Larger eigenvalue (in magnitude) of the return-map Jacobian at the bounce.

    The fixed point sits at theta = pi, p_theta = 0 on either circle by
    symmetry; its residual under one map application is verified before
    differencing. The Jacobian of a single bump-to-bump traversal is formed
    by central differences.
    """
    if cfg.model.m != 2:
        raise ValueError(f"the trapped bounce orbit needs m=2, got m={cfg.model.m}")
    if not 0.0 < E < 1.0:
        raise TurningPointError(f"energy must lie in (0, 1), got {E}")
    tight = _tight_section_config(replace(cfg, E=float(E)))

    u0, p0 = 0.0, 0.0
    for _ in range(5):
        u1, p1 = _return_map(tight, u0, p0)
        res = math.hypot(
            (u1 - u0 + math.pi) % (2.0 * math.pi) - math.pi, p1 - p0
        )
        if res <= 1e-10:
            break
        # Newton step with a coarse finite-difference Jacobian
        J = _fd_jacobian(tight, u0, p0, 1e-7)
        A = J - np.eye(2)
        du = np.linalg.solve(A, -np.array([u1 - u0, p1 - p0]))
        u0 += du[0]
        p0 += du[1]
    else:
        raise FixedPointError(f"fixed point residual {res:.3e} > 1e-10 at E={E}")

    J = _fd_jacobian(tight, u0, p0, fd_step)
    eigs = np.linalg.eigvals(J)
    theta = float(np.max(np.abs(eigs)))
    return LyapunovResult(E=float(E), theta=theta, det=float(np.linalg.det(J)))


def _fd_jacobian(cfg, u, p, h):
    fup, fpp = _return_map(cfg, u + h, p)
    fum, fpm = _return_map(cfg, u - h, p)
    fup2, fpp2 = _return_map(cfg, u, p + h)
    fum2, fpm2 = _return_map(cfg, u, p - h)
    return np.array(
        [
            [(fup - fum) / (2 * h), (fup2 - fum2) / (2 * h)],
            [(fpp - fpm) / (2 * h), (fpp2 - fpm2) / (2 * h)],
        ]
    )


def lattice_map(lam, hbar, cfg):
    """Map a resonance to (F1, F2) and its nearest integer lattice point."""
    act = action(lam, cfg.model)
    lya = lyapunov_multiplier(complex(lam).real, cfg)
    f1 = act.C.real / (2.0 * math.pi * hbar) - 0.5
    f2 = act.C.imag / (hbar * math.log(lya.theta)) + 0.5
    m = int(round(f1))
    n = int(round(f2))
    return LatticeImage(
        lam=complex(lam), F1=f1, F2=f2, m=m, n=n, res1=f1 - m, res2=f2 - n
    )


def lattice_residuals(rset, hbar, cfg):
    """Median and maximum sup-norm residual of a resonance set under the map."""
    lams = rset.resonances if hasattr(rset, "resonances") else np.asarray(rset)
    if len(lams) == 0:
        raise EmptyResonanceSet("no resonances to map to the lattice")
    sups = []
    for lam in lams:
        img = lattice_map(lam, hbar, cfg)
        sups.append(max(abs(img.res1), abs(img.res2)))
    sups = np.array(sups)
    return LatticeResidualSummary(
        count=len(sups), median_sup=float(np.median(sups)), max_sup=float(sups.max())
    )
