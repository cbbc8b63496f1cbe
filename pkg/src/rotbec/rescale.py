"""Blow-up data of a minimizer: peak location, length scales, rescaled and phase-aligned profile."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigurationError, DomainRangeError, NumericalError
from .grid import ComplexField2D, Grid2D
from .townes import RadialProfile, TownesConstants, lift_to_grid

if TYPE_CHECKING:
    from .gpe import MinimizerResult

COMPARISON_GRID = Grid2D(10.0, 256)


def _spectral_newton(u: ComplexField2D, p, steps: int = 4):
    """Polish a peak of |u|^2 with Newton steps on its trigonometric interpolant."""
    g = u.grid
    fk = np.fft.fft2(np.abs(u.values) ** 2) / g.N**2
    k = g.k_deriv
    p = np.array(p, dtype=float)
    for _ in range(steps):
        ex = np.exp(1j * k * (p[0] + g.L))
        ey = np.exp(1j * k * (p[1] + g.L))
        ikx, iky = 1j * k * ex, 1j * k * ey
        kxx, kyy = -(k**2) * ex, -(k**2) * ey
        grad = np.array([np.real(ikx @ fk @ ey), np.real(ex @ fk @ iky)])
        hess = np.array(
            [
                [np.real(kxx @ fk @ ey), np.real(ikx @ fk @ iky)],
                [np.real(ikx @ fk @ iky), np.real(ex @ fk @ kyy)],
            ]
        )
        if np.linalg.eigvalsh(hess).max() >= 0:
            break
        step = np.linalg.solve(hess, grad)
        if np.hypot(*step) > g.h:
            break
        p = p - step
        if np.hypot(*step) < 1e-14:
            break
    return p


def locate_max(u: ComplexField2D, refine: str = "spectral") -> tuple[float, float]:
    """Global maximum point of |u|.

    The best node (ties go to the smallest |x|) is refined by a quadratic fit
    of |u|^2 on its 3x3 neighbourhood; ``refine="spectral"`` adds Newton
    polishing on the Fourier interpolant.
    """
    g = u.grid
    m2 = np.abs(u.values) ** 2
    peak = m2.max()
    if peak == 0:
        raise ConfigurationError("cannot locate the maximum of the zero field")
    cand = np.argwhere(m2 >= peak * (1 - 1e-14))
    X, Y = g.mesh
    i, j = min(cand, key=lambda ij: (X[tuple(ij)] ** 2 + Y[tuple(ij)] ** 2, tuple(ij)))
    if i in (0, g.N - 1) or j in (0, g.N - 1):
        raise DomainRangeError("maximum of |u| lies on the domain boundary; enlarge the domain")

    patch = m2[i - 1 : i + 2, j - 1 : j + 2]
    s = np.array([-1.0, 0.0, 1.0])
    di, dj = np.meshgrid(s, s, indexing="ij")
    A = np.column_stack([np.ones(9), di.ravel(), dj.ravel(), di.ravel() ** 2, (di * dj).ravel(), dj.ravel() ** 2])
    c = np.linalg.lstsq(A, patch.ravel(), rcond=None)[0]
    hess = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
    offset = np.zeros(2)
    if np.all(np.linalg.eigvalsh(hess) < 0):
        offset = np.linalg.solve(hess, -c[1:3])
        offset = np.clip(offset, -1.0, 1.0)
    p = np.array([X[i, j], Y[i, j]]) + g.h * offset
    if refine == "spectral":
        p = _spectral_newton(u, p)
    return float(p[0]), float(p[1])


def rescale(
    u: ComplexField2D,
    x_a,
    eps: float,
    Omega: float,
    amplitude: float,
    out_grid: Grid2D = COMPARISON_GRID,
    require_inside: bool = False,
) -> ComplexField2D:
    """amplitude * u(eps x + x_a) * exp(-i Omega eps x . x_a_perp) on ``out_grid``.

    The lab field is evaluated through its Fourier interpolant. Parts of the
    window outside the lab box are filled with zero; pass
    ``require_inside=True`` to reject such windows instead.
    """
    if eps <= 0:
        raise ConfigurationError(f"eps must be positive, got {eps}")
    xa = np.asarray(x_a, dtype=float)
    xs = xa[0] + eps * out_grid.x
    ys = xa[1] + eps * out_grid.x
    vals = u.grid.sample(u.values, xs, ys, outside="raise" if require_inside else "zero")
    X, Y = out_grid.mesh
    # x . x_a_perp with x_a_perp = (-x_a2, x_a1)
    gauge = np.exp(-1j * Omega * eps * (-X * xa[1] + Y * xa[0]))
    return ComplexField2D(out_grid, amplitude * vals * gauge)


def unrescale(v: ComplexField2D, x_a, eps: float, Omega: float, amplitude: float, lab_grid: Grid2D) -> ComplexField2D:
    """Inverse of :func:`rescale` back onto a lab grid."""
    xa = np.asarray(x_a, dtype=float)
    xs = (lab_grid.x - xa[0]) / eps
    ys = (lab_grid.x - xa[1]) / eps
    vals = v.grid.sample(v.values, xs, ys, outside="zero")
    X, Y = lab_grid.mesh
    gauge = np.exp(1j * Omega * (-(X - xa[0]) * xa[1] + (Y - xa[1]) * xa[0]))
    return ComplexField2D(lab_grid, vals * gauge / amplitude)


def align_phase(v: ComplexField2D, qfield: ComplexField2D) -> tuple[float, ComplexField2D]:
    """Constant phase theta minimizing ||e^{i theta} v - q||; returns (theta, e^{i theta} v)."""
    overlap = v.grid.inner(qfield.values, v.values)
    if abs(overlap) <= 1e-300 or abs(overlap) < 1e-14 * math.sqrt(v.mass * qfield.mass):
        raise NumericalError("phase alignment undefined: field has no overlap with the reference")
    theta = -float(np.angle(overlap))
    return theta, ComplexField2D(v.grid, np.exp(1j * theta) * v.values)


@dataclass
class BlowupRecord:
    a: float
    beta: float
    C0: float
    Omega: float
    I: float
    mu: float
    x_a: tuple[float, float]
    eps_a: float
    eps_bar: float
    theta: float
    sup_dist: float
    l2_dist: float
    eps_theory: float
    eps_ratio: float
    mu_eps2: float
    max_point_ratio: float

    @property
    def abs_x_a(self) -> float:
        return math.hypot(*self.x_a)

    def as_dict(self):
        return asdict(self)


def profile_distances(w: ComplexField2D, target: ComplexField2D) -> tuple[float, float]:
    diff = w.values - target.values
    return float(np.abs(diff).max()), w.grid.norm(diff)


def blowup_record(
    result: MinimizerResult,
    constants: TownesConstants,
    profile: RadialProfile,
    out_grid: Grid2D = COMPARISON_GRID,
) -> tuple[BlowupRecord, ComplexField2D]:
    """Scalars of the blow-up analysis plus the aligned profile w_a (compared with Q/sqrt(a*))."""
    if not result.mu < 0:
        raise NumericalError(f"mu={result.mu:.4g} >= 0: not in the blow-up regime")
    trap = result.trap
    eps = result.eps_a
    w = rescale(result.field, result.x_a, eps, trap.Omega, eps, out_grid)
    qn = lift_to_grid(profile, out_grid) * (1.0 / math.sqrt(constants.a_star))
    theta, w = align_phase(w, qn)
    sup, l2 = profile_distances(w, qn)
    eps_th = trap.gap ** ((1 + 2 * trap.beta) / 4) / (math.sqrt(trap.C0) * constants.lam)
    r2 = result.x_a[0] ** 2 + result.x_a[1] ** 2
    rec = BlowupRecord(
        a=trap.a,
        beta=trap.beta,
        C0=trap.C0,
        Omega=trap.Omega,
        I=result.energy.total,
        mu=result.mu,
        x_a=result.x_a,
        eps_a=eps,
        eps_bar=result.eps_bar,
        theta=theta,
        sup_dist=sup,
        l2_dist=l2,
        eps_theory=eps_th,
        eps_ratio=eps / eps_th,
        mu_eps2=-result.mu * eps**2,
        max_point_ratio=(r2 - 1.0) / result.eps_bar**2,
    )
    return rec, w


def rescaled_nu(result: MinimizerResult, profile: RadialProfile, out_grid: Grid2D = COMPARISON_GRID):
    """nu = eps_bar sqrt(a) u(eps_bar x + x_a) e^{-i eps_bar Omega x.x_a_perp}, aligned to Q."""
    trap = result.trap
    eb = result.eps_bar
    nu = rescale(result.field, result.x_a, eb, trap.Omega, eb * math.sqrt(trap.a), out_grid)
    q = lift_to_grid(profile, out_grid)
    return align_phase(nu, q)
