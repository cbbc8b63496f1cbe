"""Radial ground state of  Q'' + Q'/r = Q - Q^3  and the constants derived from it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline
from scipy.special import k0, k1

from .errors import ConfigurationError, DomainRangeError, NumericalError
from .grid import ComplexField2D, Grid2D

R0 = 1e-4
MATCH_RADIUS = 9.0
MAX_BISECTIONS = 200


@dataclass(frozen=True)
class RadialProfile:
    r: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    dq: np.ndarray = field(repr=False)
    q0: float
    r_match: float

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @cached_property
    def spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.r, self.q, self.dq)

    def __call__(self, r):
        return self.spline(r)

    def derivative(self, r):
        return self.spline.derivative()(r)


@dataclass(frozen=True)
class TownesConstants:
    a_star: float
    M2: float
    lam: float
    C_tilde: float
    q0: float
    kinetic: float
    quartic: float
    pohozaev_kinetic: float
    pohozaev_quartic: float

    def as_dict(self) -> dict[str, float]:
        return {
            "a_star": self.a_star,
            "M2": self.M2,
            "lambda": self.lam,
            "C_tilde": self.C_tilde,
            "q0": self.q0,
            "pohozaev_kinetic": self.pohozaev_kinetic,
            "pohozaev_quartic": self.pohozaev_quartic,
        }


def _rhs(r, q, p):
    return p, q - q**3 - p / r


def _rk4_step(r, q, p, dr):
    k1q, k1p = _rhs(r, q, p)
    k2q, k2p = _rhs(r + dr / 2, q + dr / 2 * k1q, p + dr / 2 * k1p)
    k3q, k3p = _rhs(r + dr / 2, q + dr / 2 * k2q, p + dr / 2 * k2p)
    k4q, k4p = _rhs(r + dr, q + dr * k3q, p + dr * k3p)
    return (
        q + dr / 6 * (k1q + 2 * k2q + 2 * k3q + k4q),
        p + dr / 6 * (k1p + 2 * k2p + 2 * k3p + k4p),
    )


def _start(q0):
    # series Q = q0 + Q''(0) r^2 / 2 removes the 1/r singularity
    c = (q0 - q0**3) / 2
    return q0 + c * R0**2 / 2, c * R0


def _integrate(q0, r_end, dr, record=False):
    """March from R0 to ``r_end``; first step lands on ``dr`` so the rest is uniform.

    Returns a classification (+1 crossed zero, -1 turned back, 0 neither) and,
    when ``record`` is set, the samples on r = 0, dr, 2 dr, ...
    """
    q, p = _start(q0)
    q, p = _rk4_step(R0, q, p, dr - R0)
    r = dr
    n_steps = int(round(r_end / dr))
    qs, ps = ([q0, q], [0.0, p]) if record else (None, None)
    status = 0
    for n in range(1, n_steps):
        q, p = _rk4_step(r, q, p, dr)
        r = (n + 1) * dr
        if record:
            qs.append(q)
            ps.append(p)
        elif q < 0:
            status = 1
            break
        elif p > 0:
            status = -1
            break
    if record:
        return status, np.array(qs), np.array(ps)
    return status, None, None


def _integrate_inward(c, r, m, dr):
    """Full nonlinear ODE from r[-1] down to r[m], started on c*K0."""
    n = r.size
    q, p = c * k0(r[-1]), -c * k1(r[-1])
    qs = np.empty(n - m)
    ps = np.empty(n - m)
    qs[-1], ps[-1] = q, p
    for j in range(n - 1, m, -1):
        q, p = _rk4_step(r[j], q, p, -dr)
        qs[j - 1 - m], ps[j - 1 - m] = q, p
    return qs, ps


def _classify(q0, r_end, dr):
    return _integrate(q0, r_end, dr)[0]


def shoot_townes(r_max: float = 20.0, tol: float = 1e-12, dr: float = 1e-3) -> RadialProfile:
    """Bisect on Q(0) between a trajectory that crosses zero and one that turns back up.

    The separatrix cannot be followed to large r in floating point, so beyond a
    matching radius the profile is replaced by the decaying branch, integrated
    inward from ``r_max`` starting on c*K0(r) and scaled to match Q there.
    """
    if r_max < 15:
        raise ConfigurationError(f"r_max must be >= 15, got {r_max}")
    if tol > 1e-10:
        raise ConfigurationError(f"tol must be <= 1e-10, got {tol}")

    lo = hi = None
    for cand in np.arange(1.25, 6.0, 0.25):
        s = _classify(cand, r_max, dr)
        if s == -1:
            lo = cand
        elif s == 1:
            hi = cand
            break
    if lo is None or hi is None:
        raise ConfigurationError("could not bracket Q(0) between turning and crossing trajectories")

    # bisect down to floating-point resolution; the unstable mode amplifies
    # any error in Q(0) like exp(2r) relative to Q
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        s = _classify(mid, r_max, dr)
        if s == 1:
            hi = mid
        elif s == -1:
            lo = mid
        else:
            lo = hi = mid
            break
    if hi - lo > tol:
        raise NumericalError(f"shooting bracket stalled at width {hi - lo:.3e} > tol={tol:.1e}")

    q0 = 0.5 * (lo + hi)
    _, q_lo, _ = _integrate(lo, r_max, dr, record=True)
    _, q_hi, _ = _integrate(hi, r_max, dr, record=True)
    _, q_mid, p_mid = _integrate(q0, r_max, dr, record=True)
    r = dr * np.arange(q_mid.size)

    spread = np.abs(q_hi - q_lo)
    bad = np.nonzero((spread > 1e-9 * np.abs(q_mid)) | (q_mid <= 0))[0]
    limit = r[bad[0]] if bad.size else r[-1]
    r_match = min(MATCH_RADIUS, limit)
    m = int(round(r_match / dr))
    if m < int(5.0 / dr):
        raise NumericalError(f"shooting trajectory unreliable beyond r={limit:.2f}")

    # decaying branch: integrate inward from r_max (the stable direction)
    c = q_mid[m] / k0(r[m])
    for _ in range(3):
        q_in, p_in = _integrate_inward(c, r, m, dr)
        c *= q_mid[m] / q_in[0]
    q_in, p_in = _integrate_inward(c, r, m, dr)
    q = np.concatenate([q_mid[:m], q_in])
    p = np.concatenate([p_mid[:m], p_in])
    return RadialProfile(r=r, q=q, dq=p, q0=float(q0), r_match=float(r[m]))


def townes_constants(q: RadialProfile) -> TownesConstants:
    r, Q, P = q.r, q.q, q.dq
    w = 2 * np.pi * r
    a_star = simpson(w * Q**2, x=r)
    M2 = simpson(w * r**2 * Q**2, x=r)
    kinetic = simpson(w * P**2, x=r)
    quartic = simpson(w * Q**4, x=r)
    lam = (5.0 * M2 / 4.0) ** 0.25
    return TownesConstants(
        a_star=float(a_star),
        M2=float(M2),
        lam=float(lam),
        C_tilde=float(-8.0 * lam**4 / (5.0 * a_star)),
        q0=q.q0,
        kinetic=float(kinetic),
        quartic=float(quartic),
        pohozaev_kinetic=float(abs(kinetic - a_star) / a_star),
        pohozaev_quartic=float(abs(0.5 * quartic - a_star) / a_star),
    )


@lru_cache(maxsize=4)
def default_profile(r_max: float = 20.0, tol: float = 1e-12) -> RadialProfile:
    return shoot_townes(r_max=r_max, tol=tol)


@lru_cache(maxsize=4)
def default_constants(r_max: float = 20.0, tol: float = 1e-12) -> TownesConstants:
    return townes_constants(default_profile(r_max, tol))


def _radius(q: RadialProfile, grid: Grid2D, center):
    cx, cy = center
    if q.r_max < grid.L * math.sqrt(2) + math.hypot(cx, cy):
        raise DomainRangeError(
            f"profile support r_max={q.r_max} does not cover the grid (L={grid.L}, center={center})"
        )
    X, Y = grid.mesh
    return X - cx, Y - cy


def lift_to_grid(q: RadialProfile, grid: Grid2D, center=(0.0, 0.0)) -> ComplexField2D:
    """Sample Q(|x - center|) on the grid nodes (real valued)."""
    dx, dy = _radius(q, grid, center)
    return ComplexField2D(grid, q(np.hypot(dx, dy)))


def lift_gradient(q: RadialProfile, grid: Grid2D, center=(0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Exact partial derivatives Q'(r) x_i / r on the grid nodes."""
    dx, dy = _radius(q, grid, center)
    rr = np.hypot(dx, dy)
    dq = q.derivative(rr)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(rr > 0, dq / rr, 0.0)
    return f * dx, f * dy


def gn_ratio(u, a_star: float) -> float:
    """Ratio of the two sides of  int|u|^4 <= (2/a*) int|grad u|^2 int|u|^2  (<= 1)."""
    g = u.grid
    vals = u.values
    quartic = g.integrate(np.abs(vals) ** 4)
    kinetic = float(np.real(g.inner(vals, -g.lap(vals))))
    mass = g.integrate(np.abs(vals) ** 2)
    return float(quartic / ((2.0 / a_star) * kinetic * mass))


def gn_equality_check(q: RadialProfile, grid: Grid2D, a_star: float | None = None) -> float:
    """Relative defect of the Gagliardo-Nirenberg equality at the lifted Q."""
    if a_star is None:
        a_star = townes_constants(q).a_star
    u = lift_to_grid(q, grid)
    g = grid
    quartic = g.integrate(np.abs(u.values) ** 4)
    kinetic = float(np.real(g.inner(u.values, -g.lap(u.values))))
    mass = u.mass
    return float(abs(quartic - (2.0 / a_star) * kinetic * mass) / quartic)


def write_constants(path, c: TownesConstants) -> None:
    lines = [f"{k} = {v!r}" for k, v in c.as_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_constants(path) -> dict[str, float]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition("=")
        out[key.strip()] = float(val)
    return out
