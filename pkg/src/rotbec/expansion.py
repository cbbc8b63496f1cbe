"""Linearized operators around Q and the correction fields Psi1, Psi2, Phi_I.

    L  = -Lap + 1 -   Q^2     kernel {Q}
    Lt = -Lap + 1 - 3 Q^2     kernel {d1 Q, d2 Q}

The corrections solve

    Lt Psi1 = -[|x|^2 + (x.x0)^2 / 2] Q,               grad Psi1(0) = 0
    Lt Psi2 = -(|x|^2 + C~)(x.x0) Q / 2,               grad Psi2(0) = 0
    L  PhiI = -2 x_perp . grad Psi1,                    <Q, PhiI> = 0

and enter  nu ~ Q + W^2 e^4 Psi1 + W^2 e^5 Psi2 + i W^3 e^6 PhiI  (W = Omega, e = eps_bar).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import LinearOperator, minres

from .errors import ConfigurationError, NumericalError, OrthogonalityError
from .grid import ComplexField2D, Grid2D, write_snapshot
from .townes import RadialProfile, TownesConstants, lift_gradient, lift_to_grid

SOLVABILITY_TOL = 1e-8
RESIDUAL_TOL = 1e-8


class LinearizedOperator:
    """Real symmetric operator -Lap + 1 - c Q^2 on a periodic grid with its approximate kernel."""

    def __init__(self, kind: str, grid: Grid2D, profile: RadialProfile):
        if kind not in ("L", "Ltilde"):
            raise ConfigurationError(f"kind must be 'L' or 'Ltilde', got {kind!r}")
        self.kind = kind
        self.grid = grid
        q = lift_to_grid(profile, grid).values.real
        self.q = q
        self.potential = 1.0 - (1.0 if kind == "L" else 3.0) * q**2
        if kind == "L":
            raw = [q]
        else:
            raw = list(lift_gradient(profile, grid))
        self.kernel_raw = raw
        # orthonormal in the discrete product h^2 sum
        mat = np.column_stack([k.ravel() for k in raw]) * grid.h
        qmat, _ = np.linalg.qr(mat)
        self.kernel = [col.reshape(grid.N, grid.N) / grid.h for col in qmat.T]

    def apply(self, v: np.ndarray) -> np.ndarray:
        return -self.grid.lap(v) + self.potential * v

    def inner(self, v, w) -> float:
        return float(np.real(self.grid.inner(v, w)))

    def project(self, v: np.ndarray) -> np.ndarray:
        for k in self.kernel:
            v = v - self.inner(k, v) * k
        return v

    def kernel_residuals(self) -> list[float]:
        g = self.grid
        return [g.norm(self.apply(k)) / g.norm(k) for k in self.kernel_raw]

    @cached_property
    def _fourier_inverse(self) -> np.ndarray:
        return 1.0 / (1.0 + self.grid.k2)


@dataclass
class SolveReport:
    solution: np.ndarray = field(repr=False)
    iterations: int
    residual: float
    projected_residual: float
    kernel_products: tuple[float, ...]


def solve_kernel_projected(
    A: LinearizedOperator,
    rhs,
    tol: float = SOLVABILITY_TOL,
    rtol: float = 1e-13,
    maxiter: int = 2000,
    report: bool = False,
):
    """Solve A x = rhs on the orthogonal complement of the kernel.

    The kernel is restored with unit eigenvalue, B = P A P + (1 - P), so the
    system stays nonsingular and its solution has no kernel component when
    the right-hand side has none. MINRES with the Fourier preconditioner
    (1 - Lap)^{-1} handles the indefinite case.
    """
    g = A.grid
    f = np.real(rhs.values if isinstance(rhs, ComplexField2D) else np.asarray(rhs))
    scale = g.norm(f)
    if scale == 0:
        zero = np.zeros_like(f)
        return SolveReport(zero, 0, 0.0, 0.0, (0.0,) * len(A.kernel)) if report else zero
    products = tuple(A.inner(k, f) for k in A.kernel)
    if max(abs(p) for p in products) > tol * scale:
        raise OrthogonalityError(
            "right-hand side is not orthogonal to the kernel: "
            + ", ".join(f"{p:.3e}" for p in products)
            + f" (scale {scale:.3e})",
            inner_products=products,
        )
    n = g.N
    f = A.project(f)

    def mv(x):
        x = x.reshape(n, n)
        px = A.project(x)
        return (A.project(A.apply(px)) + (x - px)).ravel()

    def prec(x):
        x = x.reshape(n, n)
        return np.fft.ifft2(np.fft.fft2(x) * A._fourier_inverse).real.ravel()

    B = LinearOperator((n * n, n * n), matvec=mv, dtype=float)
    M = LinearOperator((n * n, n * n), matvec=prec, dtype=float)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = minres(B, f.ravel(), M=M, rtol=rtol, maxiter=maxiter, callback=cb)
    x = A.project(x.reshape(n, n))
    proj_res = g.norm(A.project(A.apply(x)) - f) / scale
    full_res = g.norm(A.apply(x) - f) / scale
    if info != 0 and proj_res > RESIDUAL_TOL:
        raise NumericalError(f"kernel-projected solve stalled (info={info}, residual {proj_res:.3e})")
    if proj_res > RESIDUAL_TOL:
        raise NumericalError(f"kernel-projected residual {proj_res:.3e} exceeds {RESIDUAL_TOL:.0e}")
    if report:
        return SolveReport(x, count[0], full_res, proj_res, products)
    return x


def _unit(x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    n = math.hypot(*x0)
    if n == 0:
        raise ConfigurationError("x0 must be nonzero")
    return x0 / n


def psi1_rhs(grid: Grid2D, q: np.ndarray, x0) -> np.ndarray:
    x0 = _unit(x0)
    X, Y = grid.mesh
    s = X * x0[0] + Y * x0[1]
    return -(grid.r2 + 0.5 * s**2) * q


def psi2_rhs(grid: Grid2D, q: np.ndarray, x0, c_tilde: float) -> np.ndarray:
    x0 = _unit(x0)
    X, Y = grid.mesh
    s = X * x0[0] + Y * x0[1]
    return -0.5 * (grid.r2 + c_tilde) * s * q


def grad_at_origin(grid: Grid2D, v: np.ndarray) -> np.ndarray:
    d1, d2 = grid.grad(v)
    i, j = grid.origin_index
    return np.array([d1[i, j].real, d2[i, j].real], dtype=float)


def _pin_gradient(A: LinearizedOperator, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Add c1 d1Q + c2 d2Q so that grad(psi)(0) = 0 on the grid."""
    g = A.grid
    # columns: gradient at 0 of each kernel field, i.e. the Hessian of Q at 0
    hess = np.column_stack([grad_at_origin(g, k) for k in A.kernel_raw])
    if abs(np.linalg.det(hess)) < 1e-12 * np.abs(hess).max() ** 2:
        raise NumericalError("Hessian of Q at the origin is singular on this grid")
    c = np.linalg.solve(hess, -grad_at_origin(g, psi))
    out = psi + c[0] * A.kernel_raw[0] + c[1] * A.kernel_raw[1]
    return out, c


def solve_psi1(townes: TownesConstants, profile: RadialProfile, grid: Grid2D, x0=(1.0, 0.0), op=None):
    A = op or LinearizedOperator("Ltilde", grid, profile)
    rhs = psi1_rhs(grid, A.q, x0)
    psi = solve_kernel_projected(A, rhs)
    return _pin_gradient(A, psi)[0]


def solve_psi2(
    townes: TownesConstants,
    profile: RadialProfile,
    grid: Grid2D,
    x0=(1.0, 0.0),
    c_tilde: float | None = None,
    op=None,
):
    """``c_tilde`` overrides the constant (the problem is solvable only for -2 M2 / a*)."""
    A = op or LinearizedOperator("Ltilde", grid, profile)
    ct = townes.C_tilde if c_tilde is None else c_tilde
    rhs = psi2_rhs(grid, A.q, x0, ct)
    psi = solve_kernel_projected(A, rhs)
    return _pin_gradient(A, psi)[0]


def phi_rhs(grid: Grid2D, psi1: np.ndarray) -> np.ndarray:
    X, Y = grid.mesh
    d1, d2 = grid.grad(np.real(psi1))
    return -2.0 * (-Y * d1 + X * d2)


def solve_phi_I(townes: TownesConstants, profile: RadialProfile, grid: Grid2D, psi1, op=None):
    A = op or LinearizedOperator("L", grid, profile)
    return solve_kernel_projected(A, phi_rhs(grid, psi1))


@dataclass
class ExpansionSet:
    grid: Grid2D
    x0: tuple[float, float]
    c_tilde: float
    psi1: np.ndarray = field(repr=False)
    psi2: np.ndarray = field(repr=False)
    phi_I: np.ndarray = field(repr=False)
    solvability: dict[str, float] = field(default_factory=dict)
    grad_psi1_origin: tuple[float, float] = (0.0, 0.0)
    grad_psi2_origin: tuple[float, float] = (0.0, 0.0)
    q_phi_product: float = 0.0

    def write(self, outdir) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = []
        for name in ("psi1", "psi2", "phi_I"):
            p = outdir / f"{name}.txt"
            write_snapshot(p, ComplexField2D(self.grid, getattr(self, name)), 0.0, 0.0)
            paths.append(p)
        return paths


def build_expansion(
    townes: TownesConstants,
    profile: RadialProfile,
    grid: Grid2D,
    x0=(1.0, 0.0),
) -> ExpansionSet:
    """Solve all three correction problems for the direction ``x0``."""
    x0 = _unit(x0)
    Lt = LinearizedOperator("Ltilde", grid, profile)
    L = LinearizedOperator("L", grid, profile)
    r1 = psi1_rhs(grid, Lt.q, x0)
    r2 = psi2_rhs(grid, Lt.q, x0, townes.C_tilde)
    solv = {}
    for name, r in (("psi1", r1), ("psi2", r2)):
        sc = grid.norm(r)
        for i, k in enumerate(Lt.kernel):
            solv[f"{name}_d{i + 1}Q"] = Lt.inner(k, r) / sc
    psi1 = _pin_gradient(Lt, solve_kernel_projected(Lt, r1))[0]
    psi2 = _pin_gradient(Lt, solve_kernel_projected(Lt, r2))[0]
    rp = phi_rhs(grid, psi1)
    solv["phi_Q"] = L.inner(L.kernel[0], rp) / grid.norm(rp)
    phi = solve_kernel_projected(L, rp)
    return ExpansionSet(
        grid=grid,
        x0=(float(x0[0]), float(x0[1])),
        c_tilde=townes.C_tilde,
        psi1=psi1,
        psi2=psi2,
        phi_I=phi,
        solvability=solv,
        grad_psi1_origin=tuple(float(v) for v in grad_at_origin(grid, psi1)),
        grad_psi2_origin=tuple(float(v) for v in grad_at_origin(grid, psi2)),
        q_phi_product=float(L.inner(L.q, phi)),
    )


@dataclass(frozen=True)
class ExpansionResiduals:
    r0: float
    r1: float
    r2: float
    r_im: float
    im_ratio: float
    scale1: float
    scale2: float
    scale_im: float

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def expansion_residuals(
    nu: ComplexField2D,
    q: ComplexField2D,
    eset: ExpansionSet,
    Omega: float,
    eps_bar: float,
) -> ExpansionResiduals:
    """Sup-norm remainders of nu after subtracting successive expansion terms, divided by the order of the last term kept."""
    if nu.grid != eset.grid or q.grid != eset.grid:
        raise ConfigurationError("nu, Q and the expansion set must share one grid")
    s1 = Omega**2 * eps_bar**4
    s2 = Omega**2 * eps_bar**5
    s_im = Omega**3 * eps_bar**6
    v = nu.values
    d0 = v - q.values
    d1 = d0 - s1 * eset.psi1
    d2 = d1 - s2 * eset.psi2
    sup = lambda a: float(np.abs(a).max())  # noqa: E731
    return ExpansionResiduals(
        r0=sup(d0),
        r1=sup(d1) / s1,
        r2=sup(d2) / s2,
        r_im=sup(v.imag - s_im * eset.phi_I) / s_im,
        im_ratio=sup(v.imag) / s_im,
        scale1=s1,
        scale2=s2,
        scale_im=s_im,
    )


def write_residuals(path, res: ExpansionResiduals, extra: dict | None = None) -> None:
    items = dict(res.as_dict())
    if extra:
        items.update(extra)
    Path(path).write_text("".join(f"{k} = {v!r}\n" for k, v in items.items()))
