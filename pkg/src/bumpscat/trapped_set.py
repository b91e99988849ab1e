"""Recursive island refinement and dimension estimates on the section.

The surviving set at bounce level k is sampled on cell-center meshes. Each
island (a maximal set of surviving cells sharing one symmetric symbol
sequence) is magnified onto its own n1 x n1 sub-mesh and re-classified at
level k+1, following the coarse-to-fine recursion until the islands are
smaller than the reporting mesh. The information dimension is then the
cell-probability entropy over the fixed reporting mesh, divided by log N0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from scipy import ndimage

from . import _kernels as _k
from .classical import _kernel_args
from .errors import BoxCountError, EmptyIslandSet, StoppingRuleViolation

log = logging.getLogger(__name__)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)
ISLAND_PAD_CELLS = 2


@dataclass(frozen=True)
class MeshWindow:
    """A rectangle in (theta, p_theta) split into n x n cells."""

    theta_range: Tuple[float, float]
    ptheta_range: Tuple[float, float]
    n: int

    def __post_init__(self):
        if not self.theta_range[0] < self.theta_range[1]:
            raise ValueError(f"empty theta range {self.theta_range}")
        if not self.ptheta_range[0] < self.ptheta_range[1]:
            raise ValueError(f"empty p_theta range {self.ptheta_range}")
        if self.n < 2:
            raise ValueError(f"need at least 2 cells per axis, got {self.n}")

    @property
    def dtheta(self):
        return (self.theta_range[1] - self.theta_range[0]) / self.n

    @property
    def dptheta(self):
        return (self.ptheta_range[1] - self.ptheta_range[0]) / self.n

    @property
    def cell_area(self):
        return self.dtheta * self.dptheta

    def centers(self):
        """Cell-center coordinate arrays (theta_i, ptheta_j), each length n."""
        i = np.arange(self.n) + 0.5
        return (
            self.theta_range[0] + i * self.dtheta,
            self.ptheta_range[0] + i * self.dptheta,
        )


@dataclass
class Survivors:
    """Classification of one mesh at bounce level k."""

    window: MeshWindow
    k: int
    mask: np.ndarray  # (n, n) bool, axis 0 = theta, axis 1 = p_theta
    fwd_codes: np.ndarray
    bwd_codes: np.ndarray
    undecided: int

    def cell_indices(self):
        return set(zip(*np.nonzero(self.mask)))


@dataclass
class Island:
    """Surviving cells sharing one symmetric symbol sequence."""

    label: str
    k: int
    window: MeshWindow
    cells: np.ndarray  # (ncells, 2) int indices into window
    centers: np.ndarray  # (ncells, 2) coordinates of the cell centers
    cell_area: float  # raw area of one cell of this island's mesh

    @property
    def area(self):
        return self.cells.shape[0] * self.cell_area

    def bounds(self):
        """Tight bounding rectangle of the surviving cells."""
        w = self.window
        i0, i1 = self.cells[:, 0].min(), self.cells[:, 0].max()
        j0, j1 = self.cells[:, 1].min(), self.cells[:, 1].max()
        return (
            (w.theta_range[0] + i0 * w.dtheta, w.theta_range[0] + (i1 + 1) * w.dtheta),
            (w.ptheta_range[0] + j0 * w.dptheta, w.ptheta_range[0] + (j1 + 1) * w.dptheta),
        )


@dataclass
class DimensionEstimate:
    """Entropy-based dimension of the section trapped set and derived exponent."""

    entropy: float
    D_section: float
    D_KE: float
    exponent: float
    params: Dict


def survivors(cfg, window, k):
    """Classify the window's cell centers at bounce level k."""
    th, pt = window.centers()
    TH, PT = np.meshgrid(th, pt, indexing="ij")
    args = _kernel_args(cfg)
    survived, undecided, fwd, bwd = _k._classify_mesh(
        np.ascontiguousarray(TH.ravel()),
        np.ascontiguousarray(PT.ravel()),
        0,
        int(k),
        *args,
    )
    n = window.n
    return Survivors(
        window=window,
        k=int(k),
        mask=survived.reshape(n, n).astype(bool),
        fwd_codes=fwd.reshape(n, n),
        bwd_codes=bwd.reshape(n, n),
        undecided=int(undecided.sum()),
    )


def connected_component_count(mask):
    """Number of 8-connected components of a boolean cell mask."""
    _, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    return count


def _decode(code, m, k):
    syms = []
    for _ in range(k):
        syms.append(int(code % m))
        code //= m
    return syms  # iteration order: nearest symbol first


def _sequence_label(bwd_code, fwd_code, m, k, center=0):
    bwd = _decode(bwd_code, m, k)  # (s_-1, s_-2, ..., s_-k)
    fwd = _decode(fwd_code, m, k)
    left = ",".join(str(s) for s in reversed(bwd))
    right = ",".join(str(s) for s in fwd)
    return f"{left}|{center}|{right}"


def islands_from_survivors(cfg, surv):
    """Group surviving cells into labeled islands.

    Cells are grouped by their symmetric sequence; 8-connected fragments
    with the same sequence belong to the same island.
    """
    m = cfg.model.m
    th, pt = surv.window.centers()
    idx = np.nonzero(surv.mask)
    pairs = {}
    for i, j in zip(*idx):
        key = (int(surv.bwd_codes[i, j]), int(surv.fwd_codes[i, j]))
        pairs.setdefault(key, []).append((i, j))
    out = []
    for (bc, fc), cells in sorted(pairs.items()):
        cells = np.array(cells, dtype=int)
        centers = np.column_stack([th[cells[:, 0]], pt[cells[:, 1]]])
        out.append(
            Island(
                label=_sequence_label(bc, fc, m, surv.k),
                k=surv.k,
                window=surv.window,
                cells=cells,
                centers=centers,
                cell_area=surv.window.cell_area,
            )
        )
    return out


def _padded_window(island, n1, base_window):
    """Sub-mesh window over the island's bounding box, padded and clipped."""
    w = island.window
    (t0, t1), (p0, p1) = island.bounds()
    t0 = max(t0 - ISLAND_PAD_CELLS * w.dtheta, base_window.theta_range[0])
    t1 = min(t1 + ISLAND_PAD_CELLS * w.dtheta, base_window.theta_range[1])
    p0 = max(p0 - ISLAND_PAD_CELLS * w.dptheta, base_window.ptheta_range[0])
    p1 = min(p1 + ISLAND_PAD_CELLS * w.dptheta, base_window.ptheta_range[1])
    return MeshWindow((t0, t1), (p0, p1), n1)


def refine(cfg, islands, n1, base_window=None, diagnostics=None):
    """Magnify each island onto an n1 x n1 mesh and classify at level k+1."""
    if not islands:
        raise EmptyIslandSet("no islands to refine")
    if base_window is None:
        base_window = islands[0].window
    out = []
    for island in islands:
        sub = _padded_window(island, n1, base_window)
        surv = survivors(cfg, sub, island.k + 1)
        if diagnostics is not None:
            diagnostics["undecided"] = diagnostics.get("undecided", 0) + surv.undecided
        children = islands_from_survivors(cfg, surv)
        if not children:
            log.warning(
                "island %s at level %d lost under refinement (possible resolution loss)",
                island.label,
                island.k,
            )
            continue
        out.extend(children)
    return out


def compute_islands(cfg, window, n1, k0, diagnostics=None):
    """Run the full recursion from the base window down to level k0."""
    if diagnostics is None:
        diagnostics = {}
    surv = survivors(cfg, window, 1)
    diagnostics["undecided"] = diagnostics.get("undecided", 0) + surv.undecided
    diagnostics["component_counts"] = [connected_component_count(surv.mask)]
    islands = islands_from_survivors(cfg, surv)
    diagnostics["islands_per_level"] = [len(islands)]
    for _ in range(1, k0):
        islands = refine(cfg, islands, n1, base_window=window, diagnostics=diagnostics)
        diagnostics["islands_per_level"].append(len(islands))
    return islands, diagnostics


def _normalized_diameter(island, L0):
    (t0, t1), (p0, p1) = island.bounds()
    tspan = L0.theta_range[1] - L0.theta_range[0]
    pspan = L0.ptheta_range[1] - L0.ptheta_range[0]
    return math.hypot((t1 - t0) / tspan, (p1 - p0) / pspan)


def information_dimension(cfg, L0, islands, check_diameters=True):
    """Entropy of cell probabilities over the reporting mesh L0, over log N0.

    Each finest surviving cell deposits its area into the L0 cell holding
    its center; the resulting probabilities p_ij give the dimension
    -sum p log p / log N0 of the section trapped set, from which the
    energy-surface dimension and the counting exponent follow.
    """
    if not islands:
        raise EmptyIslandSet("cannot estimate a dimension from an empty island set")
    eps0 = 1.0 / L0.n
    if check_diameters:
        worst = max(_normalized_diameter(isl, L0) for isl in islands)
        if worst > eps0:
            raise StoppingRuleViolation(
                f"finest island diameter {worst:.3e} exceeds the mesh size {eps0:.3e}; "
                "increase the recursion depth"
            )

    t_lo = L0.theta_range[0]
    p_lo = L0.ptheta_range[0]
    tspan = L0.theta_range[1] - t_lo
    pspan = L0.ptheta_range[1] - p_lo
    mass = {}
    for isl in islands:
        i_idx = np.floor((isl.centers[:, 0] - t_lo) / tspan * L0.n).astype(int)
        j_idx = np.floor((isl.centers[:, 1] - p_lo) / pspan * L0.n).astype(int)
        i_idx = np.clip(i_idx, 0, L0.n - 1)
        j_idx = np.clip(j_idx, 0, L0.n - 1)
        for i, j in zip(i_idx, j_idx):
            key = (int(i), int(j))
            mass[key] = mass.get(key, 0.0) + isl.cell_area
    total = sum(mass.values())
    p = np.array(list(mass.values())) / total
    entropy = float(-(p * np.log(p)).sum())
    d_section = entropy / math.log(L0.n)
    d_ke = d_section + 1.0
    return DimensionEstimate(
        entropy=entropy,
        D_section=d_section,
        D_KE=d_ke,
        exponent=(d_ke + 1.0) / 2.0,
        params={"N0": L0.n, "window": L0, "occupied_cells": len(mass)},
    )


def box_count_dimension(points, eps_coarse, eps_fine):
    """Box-count slope between two mesh scales over a normalized point set.

    ``points`` is an (npts, 2) array in the unit square; the slope of
    log(occupied cells) against log(1/eps) between the two scales is the
    Minkowski-dimension cross-check for the entropy estimate.
    """
    if not eps_coarse >= 4.0 * eps_fine:
        raise ValueError(
            f"scales must differ by at least 4x, got {eps_coarse} vs {eps_fine}"
        )
    points = np.asarray(points, dtype=float)

    def occupied(eps):
        idx = np.floor(points / eps).astype(int)
        return len({(int(i), int(j)) for i, j in idx})

    n_coarse = occupied(eps_coarse)
    n_fine = occupied(eps_fine)
    if n_coarse < 2:
        raise BoxCountError(
            f"only {n_coarse} occupied cells at the coarse scale; cannot fit a slope"
        )
    return (math.log(n_fine) - math.log(n_coarse)) / (
        math.log(1.0 / eps_fine) - math.log(1.0 / eps_coarse)
    )
