"""Rotating Gross-Pitaevskii energy in the quartic trap and its constrained minimization.

    F(u) = int |(grad - i Omega x_perp) u|^2 + (Omega^2/8) int (|x|^2 - 1)^2 |u|^2 - (a/2) int |u|^4

with ``x_perp = (-x2, x1)`` and ``Omega = C0 (a* - a)^(-beta)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericalError, ResolutionError
from .grid import ComplexField2D, Grid2D, check_decay
from .townes import RadialProfile, default_constants, default_profile

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrapSpec:
    """One minimization instance. ``C0 = 0`` gives the non-rotating (and trap-free) problem."""

    a: float
    a_star: float
    C0: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if self.C0 < 0:
            raise ConfigurationError(f"C0 must be non-negative, got {self.C0}")
        if not 0.0 <= self.beta < 0.5:
            raise ConfigurationError(f"beta must lie in [0, 1/2), got {self.beta}")
        if self.a < 0:
            raise ConfigurationError(f"a must be non-negative, got {self.a}")
        if self.a >= self.a_star:
            raise ConfigurationError(
                f"a={self.a} >= a*={self.a_star}: the energy is unbounded below and has no minimizer"
            )

    @classmethod
    def from_fraction(cls, fraction: float, C0: float = 1.0, beta: float = 0.0, a_star: float | None = None):
        if a_star is None:
            a_star = default_constants().a_star
        return cls(a=fraction * a_star, a_star=a_star, C0=C0, beta=beta)

    @property
    def gap(self) -> float:
        return self.a_star - self.a

    @property
    def Omega(self) -> float:
        return self.C0 * self.gap ** (-self.beta)


@dataclass(frozen=True)
class EnergyBreakdown:
    covariant_kinetic: float
    trap: float
    interaction: float

    @property
    def total(self) -> float:
        return self.covariant_kinetic + self.trap + self.interaction


class GPEOperator:
    """Linear part H = -Lap + 2i Omega x_perp.grad + Omega^2|x|^2 + (Omega^2/8)(|x|^2-1)^2 on a grid."""

    def __init__(self, grid: Grid2D, trap: TrapSpec):
        self.grid = grid
        self.trap = trap
        om = trap.Omega
        X, Y = grid.mesh
        self.omega = om
        self.X, self.Y = X, Y
        self.v_rot = om**2 * grid.r2
        self.v_trap = om**2 / 8.0 * (grid.r2 - 1.0) ** 2
        self.v_total = self.v_rot + self.v_trap

    def apply(self, u: np.ndarray) -> np.ndarray:
        g = self.grid
        uk = np.fft.fft2(u)
        out = np.fft.ifft2(g.k2 * uk) + self.v_total * u
        if self.omega != 0.0:
            kd = g.k_deriv
            d1 = np.fft.ifft2(1j * kd[:, None] * uk)
            d2 = np.fft.ifft2(1j * kd[None, :] * uk)
            out += 2j * self.omega * (-self.Y * d1 + self.X * d2)
        return out

    def parts(self, u: np.ndarray, hu: np.ndarray | None = None) -> EnergyBreakdown:
        g = self.grid
        if hu is None:
            hu = self.apply(u)
        dens = np.abs(u) ** 2
        trap = g.integrate(self.v_trap * dens)
        quad = float(np.real(g.inner(u, hu)))
        return EnergyBreakdown(
            covariant_kinetic=float(quad - trap),
            trap=float(trap),
            interaction=float(-0.5 * self.trap.a * g.integrate(dens**2)),
        )


@lru_cache(maxsize=8)
def operator_for(grid: Grid2D, trap: TrapSpec) -> GPEOperator:
    return GPEOperator(grid, trap)


def _vals(u):
    return u.values if isinstance(u, ComplexField2D) else np.asarray(u, dtype=complex)


def energy(u: ComplexField2D, trap: TrapSpec) -> EnergyBreakdown:
    """Three energy terms; the covariant kinetic term is expanded as
    int|grad u|^2 - 2 Omega int x_perp.Im(conj(u) grad u) + Omega^2 int |x|^2 |u|^2."""
    g = u.grid
    v = u.values
    om = trap.Omega
    X, Y = g.mesh
    dens = np.abs(v) ** 2
    vk = np.fft.fft2(v)
    grad_sq = g.h**2 / g.N**2 * np.sum(g.k2 * np.abs(vk) ** 2)
    d1, d2 = g.grad(v)
    current = np.imag(np.conj(v) * d1), np.imag(np.conj(v) * d2)
    cross = g.integrate(-Y * current[0] + X * current[1])
    cov = grad_sq - 2.0 * om * cross + om**2 * g.integrate(g.r2 * dens)
    return EnergyBreakdown(
        covariant_kinetic=float(cov),
        trap=float(om**2 / 8.0 * g.integrate((g.r2 - 1.0) ** 2 * dens)),
        interaction=float(-0.5 * trap.a * g.integrate(dens**2)),
    )


def modulus_kinetic(u) -> float:
    """int |grad |u||^2, evaluated spectrally."""
    g = u.grid
    mk = np.fft.fft2(np.abs(_vals(u)))
    return float(g.h**2 / g.N**2 * np.sum(g.k2 * np.abs(mk) ** 2))


def el_residual(u: ComplexField2D, trap: TrapSpec, mu: float) -> ComplexField2D:
    """Pointwise defect  H u - mu u - a|u|^2 u  of the Euler-Lagrange equation."""
    op = operator_for(u.grid, trap)
    v = u.values
    return ComplexField2D(u.grid, op.apply(v) - mu * v - trap.a * np.abs(v) ** 2 * v)


def rayleigh_quotient(u: ComplexField2D, trap: TrapSpec) -> float:
    """<H u - a|u|^2 u, u> / <u, u>, computed from the operator directly."""
    op = operator_for(u.grid, trap)
    v = u.values
    g = u.grid
    gu = op.apply(v) - trap.a * np.abs(v) ** 2 * v
    return float(np.real(g.inner(v, gu)) / u.mass)


def chemical_potential(u: ComplexField2D, trap: TrapSpec, total_energy: float) -> float:
    """mu = I - (a/2) int |u|^4 for a unit-mass minimizer."""
    return float(total_energy - 0.5 * trap.a * u.grid.integrate(np.abs(u.values) ** 4))


def _cutoff(s):
    # smooth step: 1 for s <= 1, 0 for s >= 2
    def bump(t):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)

    a = bump(2.0 - s)
    b = bump(s - 1.0)
    return a / (a + b)


def default_tau(trap: TrapSpec, lam: float | None = None) -> float:
    if lam is None:
        lam = default_constants().lam
    if trap.C0 == 0:
        return 1.0
    return lam * math.sqrt(trap.C0) * trap.gap ** (-(1 + 2 * trap.beta) / 4)


def init_trial(
    grid: Grid2D,
    trap: TrapSpec,
    y0=(1.0, 0.0),
    tau: float | None = None,
    profile: RadialProfile | None = None,
) -> ComplexField2D:
    """Cut-off, rescaled Q centred at the unit vector ``y0`` with phase exp(i Omega x.y0_perp)."""
    y0 = np.asarray(y0, dtype=float)
    if abs(np.hypot(*y0) - 1.0) > 1e-12:
        raise ConfigurationError(f"y0 must be a unit vector, got {tuple(y0)}")
    if profile is None:
        profile = default_profile()
    if tau is None:
        tau = default_tau(trap)
    if tau <= 0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    if tau * grid.h > 0.5:
        raise ResolutionError(f"tau={tau:.3g} is unresolved at h={grid.h:.3g} (tau*h > 0.5); refine the grid")
    X, Y = grid.mesh
    dx, dy = X - y0[0], Y - y0[1]
    s = np.hypot(dx, dy)
    amp = _cutoff(s) * profile(np.minimum(tau * s, profile.r_max))
    phase = trap.Omega * (-X * y0[1] + Y * y0[0])
    u = ComplexField2D(grid, amp * np.exp(1j * phase))
    return u.normalized()


@dataclass
class MinimizeOptions:
    tol: float = 1e-8
    max_iter: int = 4000
    step: float = 0.5
    backtrack: float = 0.5
    step_floor: float = 1e-8
    max_step: float = 8.0
    armijo: float = 1e-4
    preconditioned: bool = True
    conjugate: bool = True
    restarts: int = 1
    seed: int = 0
    perturbation: float = 0.3
    check_diamagnetic: bool = True
    min_width_cells: float = 4.0


@dataclass
class MinimizerResult:
    field: ComplexField2D
    trap: TrapSpec
    energy: EnergyBreakdown
    mu: float
    iterations: int
    residual: float
    converged: bool
    x_a: tuple[float, float]
    eps_a: float
    eps_bar: float
    energy_history: np.ndarray = field(repr=False)
    diamagnetic_margin: float = math.inf
    candidate_energies: tuple[float, ...] = ()

    @property
    def I(self) -> float:
        return self.energy.total


class _Flow:
    """Projected (optionally preconditioned, conjugate) descent on the unit-mass sphere."""

    def __init__(self, op: GPEOperator, opts: MinimizeOptions):
        self.op = op
        self.g = op.grid
        self.a = op.trap.a
        self.opts = opts

    def evaluate(self, u):
        hu = self.op.apply(u)
        dens = np.abs(u) ** 2
        e = float(np.real(self.g.inner(u, hu))) - 0.5 * self.a * self.g.integrate(dens**2)
        return hu, dens, e

    def trial(self, u, d, t):
        """Retracted point u(t) = (u + t d)/||u + t d|| with its energy and dE/dt."""
        g = self.g
        v = u + t * d
        nv = g.norm(v)
        v = v / nv
        hv, dv, ev = self.evaluate(v)
        gv = hv - self.a * dv * v
        mu_v = float(np.real(g.inner(v, gv)))
        dphi = 2.0 * float(np.real(g.inner(gv - mu_v * v, d))) / nv
        return v, hv, dv, ev, dphi

    def precondition(self, r, alpha):
        if not self.opts.preconditioned:
            return r
        g = self.g
        d = np.sqrt(alpha / (alpha + self.op.v_total))
        return d * np.fft.ifft2(np.fft.fft2(d * r) / (alpha + g.k2))

    def run(self, u):
        g, o = self.g, self.opts
        real_inner = lambda x, y: float(np.real(g.inner(x, y)))  # noqa: E731
        hu, dens, e = self.evaluate(u)
        history = [e]
        margin = math.inf
        t = o.step if o.preconditioned else o.step * g.h**2 * 1e-2 / 0.5
        d_old = r_old = pr_old = None
        res = math.inf
        mu = math.nan
        converged = False
        it = 0
        slack_scale = 1e-13
        for it in range(1, o.max_iter + 1):
            gu = hu - self.a * dens * u
            mu = real_inner(u, gu)
            r = gu - mu * u
            res = g.norm(r)
            if o.check_diamagnetic:
                cov = real_inner(u, hu) - g.integrate(self.op.v_trap * dens)
                margin = min(margin, cov - modulus_kinetic(ComplexField2D(g, u)))
            if res < o.tol:
                converged = True
                break
            if it % 50 == 0:
                log.debug("iter %d  E=%.15g  mu=%.6g  residual=%.3e  step=%.3g", it, e, mu, res, t)
            pr = self.precondition(r, max(1.0, abs(mu)))
            pr = pr - real_inner(u, pr) * u
            d = -pr
            if o.conjugate and d_old is not None:
                denom = real_inner(r_old, pr_old)
                beta = max(0.0, real_inner(r - r_old, pr) / denom) if denom > 0 else 0.0
                d_prev = d_old - real_inner(u, d_old) * u
                d = -pr + beta * d_prev
            slope = 2.0 * real_inner(r, d)
            if slope >= 0:
                d = -pr
                slope = 2.0 * real_inner(r, d)
            slack = slack_scale * max(1.0, abs(e))
            trial = self.trial(u, d, t)
            # secant on the directional derivative gives a near-exact line
            # minimizer once energy differences drown in roundoff
            if trial[4] > slope:
                t_sec = t * slope / (slope - trial[4])
                if 0 < t_sec < 50 * t:
                    alt = self.trial(u, d, t_sec)
                    if alt[3] <= trial[3] + slack:
                        t, trial = t_sec, alt
            while trial[3] > e + o.armijo * t * slope + slack:
                t *= o.backtrack
                if t < o.step_floor:
                    if res < 1e3 * o.tol:
                        log.info("line search stalled at residual %.3e", res)
                        return self._pack(u, hu, e, mu, it, res, False, history, margin)
                    raise NumericalError(
                        f"energy not decreasing after backtracking to step {t:.2e} (residual {res:.3e})"
                    )
                trial = self.trial(u, d, t)
            u, hu, dens, e = trial[:4]
            history.append(e)
            d_old, r_old, pr_old = d, r, pr
            t = min(t * 1.5, o.max_step if o.preconditioned else 1.0)
        return self._pack(u, hu, e, mu, it, res, converged, history, margin)

    @staticmethod
    def _pack(u, hu, e, mu, it, res, converged, history, margin):
        return dict(u=u, hu=hu, e=e, mu=mu, iterations=it, residual=res, converged=converged,
                    history=np.array(history), margin=margin)


def _perturb(u: ComplexField2D, amplitude: float, seed: int) -> ComplexField2D:
    g = u.grid
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((g.N, g.N))
    # keep only long wavelengths so the phase field is smooth
    smooth = np.fft.ifft2(np.fft.fft2(noise) * np.exp(-g.k2 / 4.0)).real
    smooth /= np.abs(smooth).max()
    return ComplexField2D(g, u.values * np.exp(1j * amplitude * np.pi * smooth)).normalized()


def minimize(
    trap: TrapSpec,
    grid: Grid2D,
    init: ComplexField2D | None = None,
    opts: MinimizeOptions | None = None,
) -> MinimizerResult:
    """Minimize the energy over unit-mass fields from ``init`` plus ``opts.restarts``
    phase-perturbed restarts; the lowest-energy run is returned."""
    from .rescale import locate_max

    if trap.a >= trap.a_star:
        raise ConfigurationError("a >= a*: no minimizer exists")
    opts = opts or MinimizeOptions()
    if init is None:
        tau = min(default_tau(trap), 0.5 / grid.h)
        init = init_trial(grid, trap, tau=tau)
    if init.grid != grid:
        raise ConfigurationError("initial field lives on a different grid")
    init = init.normalized()

    op = operator_for(grid, trap)
    flow = _Flow(op, opts)
    starts = [init] + [_perturb(init, opts.perturbation, opts.seed + k) for k in range(opts.restarts)]
    runs = [flow.run(s.values) for s in starts]
    best = min(runs, key=lambda rr: rr["e"])

    u = ComplexField2D(grid, best["u"])
    parts = op.parts(u.values, best["hu"])
    mod_kin = modulus_kinetic(u)
    eps_a = 1.0 / math.sqrt(mod_kin) if mod_kin > 0 else math.inf
    mu = chemical_potential(u, trap, parts.total)
    eps_bar = math.sqrt(-1.0 / mu) if mu < 0 else math.nan
    if eps_a < opts.min_width_cells * grid.h:
        raise ResolutionError(
            f"minimizer width eps_a={eps_a:.3g} is below {opts.min_width_cells:g} grid cells (h={grid.h:.3g}); "
            "use a finer grid"
        )
    check_decay(u)
    return MinimizerResult(
        field=u,
        trap=trap,
        energy=parts,
        mu=mu,
        iterations=best["iterations"],
        residual=best["residual"],
        converged=best["converged"],
        x_a=locate_max(u),
        eps_a=eps_a,
        eps_bar=eps_bar,
        energy_history=best["history"],
        diamagnetic_margin=min(rr["margin"] for rr in runs),
        candidate_energies=tuple(rr["e"] for rr in runs),
    )


def result_scalars(result: MinimizerResult) -> dict[str, float]:
    e = result.energy
    return {
        "a": result.trap.a,
        "C0": result.trap.C0,
        "beta": result.trap.beta,
        "Omega": result.trap.Omega,
        "I": e.total,
        "covariant_kinetic": e.covariant_kinetic,
        "trap": e.trap,
        "interaction": e.interaction,
        "mu": result.mu,
        "iterations": result.iterations,
        "residual": result.residual,
        "converged": int(result.converged),
        "x_a1": result.x_a[0],
        "x_a2": result.x_a[1],
        "eps_a": result.eps_a,
        "eps_bar": result.eps_bar,
        "diamagnetic_margin": result.diamagnetic_margin,
    }


def write_result_record(path, result: MinimizerResult) -> None:
    """Flat ``key = value`` record of the scalar outputs of one run."""
    Path(path).write_text("".join(f"{k} = {float(v)!r}\n" for k, v in result_scalars(result).items()))
