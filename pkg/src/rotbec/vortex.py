"""Discrete phase winding of a sampled wave function and the vortex-free disk about the origin."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .grid import ComplexField2D

ZERO_MODULUS = 1e-14
DEFAULT_THRESHOLD = 1e-6


@dataclass(frozen=True)
class WindingMap:
    """Integer winding per plaquette [i, i+1] x [j, j+1] (counter-clockwise)."""

    winding: np.ndarray = field(repr=False)
    unreliable: np.ndarray = field(repr=False)
    centers: tuple[np.ndarray, np.ndarray] = field(repr=False)

    @property
    def total(self) -> int:
        return int(self.winding.sum())


def _edge_phase(a, b):
    # principal value of arg(b) - arg(a)
    return np.angle(b * np.conj(a))


def winding_map(u: ComplexField2D) -> WindingMap:
    """Winding numbers on the (N-1) x (N-1) interior plaquettes (no wrap across the periodic seam)."""
    vals = u.values
    g = u.grid
    a, b = vals[:-1, :-1], vals[1:, :-1]
    c, d = vals[1:, 1:], vals[:-1, 1:]
    total = _edge_phase(a, b) + _edge_phase(b, c) + _edge_phase(c, d) + _edge_phase(d, a)
    w = np.rint(total / (2 * np.pi)).astype(int)
    m = np.abs(vals)
    low = m < ZERO_MODULUS
    bad = low[:-1, :-1] | low[1:, :-1] | low[1:, 1:] | low[:-1, 1:]
    cx = g.x[:-1] + 0.5 * g.h
    CX, CY = np.meshgrid(cx, cx, indexing="ij")
    return WindingMap(winding=w, unreliable=bad, centers=(CX, CY))


def loop_winding(u, i0: int, i1: int, j0: int, j1: int) -> int:
    """Winding of the phase around the node rectangle [i0, i1] x [j0, j1], counter-clockwise."""
    vals = u.values if isinstance(u, ComplexField2D) else np.asarray(u, dtype=complex)
    if not (i0 < i1 and j0 < j1):
        raise ConfigurationError("rectangle must have positive extent")
    path = np.concatenate(
        [
            vals[i0:i1, j0],
            vals[i1, j0:j1],
            vals[i1:i0:-1, j1],
            vals[i0, j1:j0:-1],
            vals[i0:i0 + 1, j0],
        ]
    )
    return int(np.rint(np.sum(_edge_phase(path[:-1], path[1:])) / (2 * np.pi)))


@dataclass
class VortexReport:
    vortices: list[tuple[tuple[float, float], int]]
    min_modulus_ratio: float
    vortex_free_radius: float
    strict_radius: float
    threshold: float
    scan_radius: float
    n_unresolved: int

    @property
    def n_vortices(self) -> int:
        return len(self.vortices)


def _obstructions(u: ComplexField2D, threshold: float):
    g = u.grid
    vals = u.values
    m = np.abs(vals)
    peak = m.max()
    if peak == 0:
        raise ConfigurationError("zero field has no phase")
    wm = winding_map(u)
    cmin = np.minimum.reduce([m[:-1, :-1], m[1:, :-1], m[1:, 1:], m[:-1, 1:]])
    resolved = (cmin > threshold * peak) & ~wm.unreliable
    vort = resolved & (wm.winding != 0)
    CX, CY = wm.centers
    half_diag = g.h / math.sqrt(2)
    # a plaquette meets the disk |x| < R once R exceeds |c| - h/sqrt(2)
    r_vort = np.hypot(CX, CY)[vort] - half_diag
    r_zero = np.sqrt(g.r2)[m < ZERO_MODULUS]
    r_low = np.sqrt(g.r2)[m <= threshold * peak]
    return wm, vort, resolved, r_vort, r_zero, r_low, peak


def vortex_free_radius(u: ComplexField2D, threshold: float = DEFAULT_THRESHOLD, strict: bool = False) -> float:
    """Largest origin-centred disk free of resolved nonzero windings and exact zeros.

    A plaquette counts as resolved when all four corners exceed ``threshold``
    times max|u|; below that the phase is not trusted. With ``strict`` the
    disk must also keep |u| > threshold * max|u| everywhere. The result is
    capped at the largest disk inside the grid, L - h.
    """
    if not 0 <= threshold < 1:
        raise ConfigurationError(f"threshold must lie in [0, 1), got {threshold}")
    g = u.grid
    _, _, _, r_vort, r_zero, r_low, _ = _obstructions(u, threshold)
    cands = [g.L - g.h]
    for arr in (r_vort, r_zero) + ((r_low,) if strict else ()):
        if arr.size:
            cands.append(float(arr.min()))
    return max(0.0, min(cands))


def scan_vortices(u: ComplexField2D, radius: float = 2.0, threshold: float = DEFAULT_THRESHOLD) -> VortexReport:
    """Resolved vortices with plaquette centre inside |x| <= radius, plus the radii of the clean disks."""
    g = u.grid
    wm, vort, resolved, *_, peak = _obstructions(u, threshold)
    CX, CY = wm.centers
    inside = np.hypot(CX, CY) <= radius
    idx = np.argwhere(vort & inside)
    vortices = [((float(CX[i, j]), float(CY[i, j])), int(wm.winding[i, j])) for i, j in idx]
    disk = np.sqrt(g.r2) <= radius
    return VortexReport(
        vortices=vortices,
        min_modulus_ratio=float(np.abs(u.values)[disk].min() / peak),
        vortex_free_radius=vortex_free_radius(u, threshold),
        strict_radius=vortex_free_radius(u, threshold, strict=True),
        threshold=threshold,
        scan_radius=radius,
        n_unresolved=int(np.count_nonzero(~resolved & inside & (wm.winding != 0))),
    )
