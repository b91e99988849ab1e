"""Poincare section, section map and symbolic itineraries.

The section is the disjoint union of circles of radius R0 around the bump
centers, carrying coordinates (theta, p_theta) with theta measured from
the circle's own ray angle 2 pi k / m. Embedding into phase space uses the
energy-consistent outward radial momentum

    p_r = sqrt(2 (E - V) - p_theta^2 / R0^2),

so H(embed(s)) = E holds identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from . import _kernels as _k
from .errors import InadmissibleSectionPoint, IntegrationFailure, UndecidedTrajectory
from .model import ModelConfig, PhasePoint

ESCAPE = math.inf


class SectionPoint(NamedTuple):
    """Point (theta, p_theta) on the section circle with index k."""

    theta: float
    ptheta: float
    k: int


@dataclass(frozen=True)
class SectionConfig:
    """Section geometry, energy and integrator tolerances."""

    model: ModelConfig = field(default_factory=ModelConfig)
    E: float = 0.5
    R0: float = 1.0
    rtol: float = 1e-10
    atol: float = 1e-12
    crossing_tol: float = 1e-12
    time_budget_factor: float = 1e3
    escape_vmin: float = 1e-4
    drift_tol: float = 1e-8

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError(f"section energy must be positive, got E={self.E}")
        if not 0 < self.R0:
            raise ValueError(f"section radius must be positive, got R0={self.R0}")
        gap = self.model.R * math.sin(math.pi / self.model.m)
        if not self.R0 < gap:
            raise ValueError(
                f"section circles overlap: R0={self.R0} but adjacent centers "
                f"are only {2 * gap:.6g} apart"
            )
        for name in ("rtol", "atol", "crossing_tol", "time_budget_factor", "drift_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.escape_vmin < 1:
            raise ValueError("escape_vmin must lie in (0, 1)")


@dataclass(frozen=True)
class Itinerary:
    """Symbol sequence around a marked center circle.

    ``backward`` is stored in left-to-right sequence order (oldest symbol
    first), so a full record reads backward + (center) + forward. The
    infinity symbol is ``math.inf``.
    """

    backward: tuple
    center: int
    forward: tuple

    def __post_init__(self):
        seq = list(self.backward) + [self.center] + list(self.forward)
        for a, b in zip(seq, seq[1:]):
            if a == b:
                raise ValueError(f"adjacent symbols repeat in {seq}")
        for i, s in enumerate(seq):
            if s == ESCAPE and not (i == 0 or i == len(seq) - 1):
                raise ValueError(f"infinity away from the ends in {seq}")


def section_circle_centers(model):
    """Centers of the section circles, row k at angle 2 pi k / m."""
    angles = 2.0 * np.pi * np.arange(model.m) / model.m
    return model.R * np.column_stack([np.cos(angles), np.sin(angles)])


def _kernel_args(cfg):
    model = cfg.model
    centers = section_circle_centers(model)
    r_c = model.sigma * math.sqrt(2.0 * math.log(1.0 / cfg.escape_vmin))
    esc_r2 = (model.R + r_c) ** 2
    t_budget = cfg.time_budget_factor * model.R / math.sqrt(2.0 * cfg.E)
    drift_gate = cfg.drift_tol * max(1.0, cfg.E)
    return (
        cfg.R0,
        cfg.E,
        np.ascontiguousarray(centers[:, 0]),
        np.ascontiguousarray(centers[:, 1]),
        1.0 / model.sigma**2,
        cfg.rtol,
        cfg.atol,
        cfg.crossing_tol,
        t_budget,
        esc_r2,
        drift_gate,
    )


def embed(cfg, s):
    """Lift a section point to the energy surface {H = E}."""
    model = cfg.model
    centers = section_circle_centers(model)
    k = int(s.k)
    if not 0 <= k < model.m:
        raise ValueError(f"circle index {k} out of range for m={model.m}")
    phi = s.theta + 2.0 * math.pi * k / model.m
    x = centers[k, 0] + cfg.R0 * math.cos(phi)
    y = centers[k, 1] + cfg.R0 * math.sin(phi)
    inv_s2 = 1.0 / model.sigma**2
    v = _k._pot(x, y, centers[:, 0].copy(), centers[:, 1].copy(), inv_s2)
    pr2 = 2.0 * (cfg.E - v) - (s.ptheta / cfg.R0) ** 2
    if pr2 <= 0.0:
        raise InadmissibleSectionPoint(
            f"section point not on energy surface: E={cfg.E}, V={v:.6g}, "
            f"p_theta={s.ptheta}"
        )
    pr = math.sqrt(pr2)
    px = pr * math.cos(phi) - (s.ptheta / cfg.R0) * math.sin(phi)
    py = pr * math.sin(phi) + (s.ptheta / cfg.R0) * math.cos(phi)
    return PhasePoint(x, y, px, py)


def flow(config, p, t, rtol=1e-10, atol=1e-12):
    """Hamiltonian flow of a phase point for time t (either sign)."""
    centers = section_circle_centers(config)
    status, x, y, px, py = _k._flow(
        p.x, p.y, p.px, p.py, float(t),
        np.ascontiguousarray(centers[:, 0]),
        np.ascontiguousarray(centers[:, 1]),
        1.0 / config.sigma**2,
        rtol, atol,
    )
    if status == _k.STEP_UNDERFLOW:
        raise IntegrationFailure(f"step size underflow while flowing to t={t}")
    return PhasePoint(x, y, px, py)


def _map_once(cfg, s, direction=1):
    """One signed application of the section map; returns (result, drift)."""
    args = _kernel_args(cfg)
    status, th, pt, k, drift = _k._next_crossing(
        float(s.theta), float(s.ptheta), int(s.k), direction, *args
    )
    if status == _k.CROSS:
        return SectionPoint(th, pt, int(k)), drift
    if status == _k.ESCAPE:
        return ESCAPE, drift
    if status == _k.INADMISSIBLE:
        raise InadmissibleSectionPoint(
            f"section point not on energy surface: {s}"
        )
    if status == _k.UNDECIDED:
        raise UndecidedTrajectory(
            f"no crossing or escape within the time budget starting from {s}"
        )
    if status == _k.DRIFT_EXCEEDED:
        raise IntegrationFailure(
            f"energy drift {drift:.3e} exceeded the gate along the segment from {s}"
        )
    raise IntegrationFailure(f"step size underflow in the section map from {s}")


def poincare_map(cfg, s):
    """First outgoing intersection with any section circle, or ESCAPE."""
    result, _ = _map_once(cfg, s, direction=1)
    return result


def _itinerary_with_drift(cfg, s, half_length):
    args = _kernel_args(cfg)
    half_length = int(half_length)

    def one_side(direction):
        syms = np.empty(max(half_length, 1), dtype=np.int64)
        n, status, drift = _k._fill_itinerary(
            float(s.theta), float(s.ptheta), int(s.k), half_length, direction,
            syms, *args,
        )
        if status == _k.INADMISSIBLE:
            raise InadmissibleSectionPoint(f"section point not on energy surface: {s}")
        if status == _k.UNDECIDED:
            raise UndecidedTrajectory(f"undecided trajectory from {s}")
        if status in (_k.STEP_UNDERFLOW, _k.DRIFT_EXCEEDED):
            raise IntegrationFailure(f"integration failed along itinerary from {s}")
        out = [ESCAPE if c < 0 else int(c) for c in syms[:n]]
        return out, drift

    forward, drift_f = one_side(1) if half_length > 0 else ([], 0.0)
    backward_iter, drift_b = one_side(-1) if half_length > 0 else ([], 0.0)
    it = Itinerary(
        backward=tuple(reversed(backward_iter)),
        center=int(s.k),
        forward=tuple(forward),
    )
    return it, max(drift_f, drift_b)


def itinerary(cfg, s, half_length):
    """Symbolic itinerary of a section point, up to half_length each way."""
    it, _ = _itinerary_with_drift(cfg, s, half_length)
    return it


def is_symmetric(it, k):
    """True when the trajectory bounces at least k times both ways."""
    if k <= 0:
        return True
    n_fwd = sum(1 for s in it.forward if s != ESCAPE)
    n_bwd = sum(1 for s in it.backward if s != ESCAPE)
    return n_fwd >= k and n_bwd >= k
