"""Square periodic grid with Fourier differentiation and midpoint quadrature.

Arrays are indexed ``values[i, j]`` with ``i`` running along x1 and ``j``
along x2. The node layout is ``x = -L + h * n`` for ``n = 0..N-1`` so the
origin sits exactly on node ``(N/2, N/2)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainRangeError


@dataclass(frozen=True)
class Grid2D:
    L: float
    N: int

    def __post_init__(self):
        if self.N < 32 or self.N & (self.N - 1):
            raise ConfigurationError(f"N must be a power of two >= 32, got {self.N}")
        if not self.L > 0:
            raise ConfigurationError(f"half extent must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def r2(self) -> np.ndarray:
        X, Y = self.mesh
        return X**2 + Y**2

    @property
    def origin_index(self) -> tuple[int, int]:
        return self.N // 2, self.N // 2

    @cached_property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    @cached_property
    def k_deriv(self) -> np.ndarray:
        # odd derivatives drop the unpaired Nyquist mode
        k = self.k.copy()
        k[self.N // 2] = 0.0
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        return self.k[:, None] ** 2 + self.k[None, :] ** 2

    # array-level operators -------------------------------------------------

    def lap(self, u: np.ndarray) -> np.ndarray:
        out = np.fft.ifft2(-self.k2 * np.fft.fft2(u))
        return out.real if np.isrealobj(u) else out

    def grad(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        uk = np.fft.fft2(u)
        kd = self.k_deriv
        d1 = np.fft.ifft2(1j * kd[:, None] * uk)
        d2 = np.fft.ifft2(1j * kd[None, :] * uk)
        if np.isrealobj(u):
            return d1.real, d2.real
        return d1, d2

    def integrate(self, f: np.ndarray) -> float:
        return self.h**2 * np.sum(f)

    def inner(self, u: np.ndarray, v: np.ndarray) -> complex:
        """Discrete L2 product, conjugate-linear in the first slot."""
        return self.h**2 * np.vdot(u, v)

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(self.h**2 * np.sum(np.abs(u) ** 2)))

    # interpolation ---------------------------------------------------------

    def _eval_matrix(self, pts: np.ndarray) -> np.ndarray:
        phase = np.outer(pts + self.L, self.k)
        E = np.exp(1j * phase)
        # Nyquist as a cosine keeps real data real between nodes
        E[:, self.N // 2] = np.cos(phase[:, self.N // 2])
        return E

    def sample(self, u: np.ndarray, xs: np.ndarray, ys: np.ndarray, outside: str = "zero") -> np.ndarray:
        """Evaluate the trigonometric interpolant of ``u`` on the tensor grid ``xs x ys``.

        Points outside ``[-L, L)`` are set to zero when ``outside="zero"`` and
        rejected with :class:`DomainRangeError` when ``outside="raise"``.
        """
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        out_x = (xs < -self.L) | (xs > self.L - self.h)
        out_y = (ys < -self.L) | (ys > self.L - self.h)
        if outside == "raise" and (out_x.any() or out_y.any()):
            raise DomainRangeError("evaluation window extends beyond the grid")
        uk = np.fft.fft2(u) / self.N**2
        vals = self._eval_matrix(xs) @ uk @ self._eval_matrix(ys).T
        if outside == "zero":
            vals[out_x, :] = 0.0
            vals[:, out_y] = 0.0
        return vals


@dataclass(frozen=True)
class ComplexField2D:
    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.N, self.grid.N):
            raise ConfigurationError(f"field shape {vals.shape} does not match grid N={self.grid.N}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "values", vals)

    @cached_property
    def mass(self) -> float:
        return float(self.grid.h**2 * np.sum(np.abs(self.values) ** 2))

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    def normalized(self, mass: float = 1.0) -> ComplexField2D:
        return ComplexField2D(self.grid, self.values * np.sqrt(mass / self.mass))

    def __mul__(self, c):
        return ComplexField2D(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: ComplexField2D) -> ComplexField2D:
        return ComplexField2D(self.grid, self.values + other.values)

    def __sub__(self, other: ComplexField2D) -> ComplexField2D:
        return ComplexField2D(self.grid, self.values - other.values)


def _values(u):
    return u.values if isinstance(u, ComplexField2D) else np.asarray(u)


def laplacian(u: ComplexField2D) -> ComplexField2D:
    return ComplexField2D(u.grid, u.grid.lap(u.values))


def gradient(u: ComplexField2D) -> tuple[ComplexField2D, ComplexField2D]:
    d1, d2 = u.grid.grad(u.values)
    return ComplexField2D(u.grid, d1), ComplexField2D(u.grid, d2)


def integrate(f, grid: Grid2D | None = None) -> float | complex:
    """Midpoint-rule integral of samples ``f`` (array or field)."""
    if grid is None:
        grid = f.grid
    return grid.integrate(_values(f))


def boundary_ratio(u) -> float:
    """Largest modulus on the outer ring of nodes relative to the global maximum."""
    m = np.abs(_values(u))
    edge = max(m[0, :].max(), m[-1, :].max(), m[:, 0].max(), m[:, -1].max())
    peak = m.max()
    return float(edge / peak) if peak > 0 else 0.0


def check_decay(u, rel: float = 1e-10) -> bool:
    """Warn when the field has not decayed to ``rel`` of its peak at the box edge."""
    ratio = boundary_ratio(u)
    if ratio > rel:
        warnings.warn(
            f"field at the box edge is {ratio:.2e} of its maximum (> {rel:.0e}); "
            "periodic truncation may be inaccurate, consider a larger L",
            RuntimeWarning,
            stacklevel=2,
        )
        return False
    return True


def crop(values: np.ndarray, source: Grid2D, target: Grid2D) -> np.ndarray:
    """Restrict node samples from ``source`` to a smaller ``target`` grid with the same spacing."""
    offset = (target.L - source.L) / source.h
    n0 = int(round(-offset))
    if not (
        np.isclose(source.h, target.h, rtol=1e-12)
        and abs(offset + n0) < 1e-9
        and 0 <= n0
        and n0 + target.N <= source.N
    ):
        raise DomainRangeError("target grid is not a node-aligned subgrid of the source")
    return np.asarray(values)[n0 : n0 + target.N, n0 : n0 + target.N]


def write_snapshot(path, u: ComplexField2D, a: float, omega: float) -> None:
    g = u.grid
    vals = u.values.ravel()
    lines = [f"{g.N} {g.L!r} {a!r} {omega!r}"]
    lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in vals)
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path) -> tuple[ComplexField2D, float, float]:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise ConfigurationError(f"{path}: malformed snapshot header")
        n = int(header[0])
        L, a, omega = (float(s) for s in header[1:])
        data = np.loadtxt(fh, dtype=float, ndmin=2)
    if data.shape != (n * n, 2):
        raise ConfigurationError(f"{path}: expected {n * n} rows of 're im', got {data.shape[0]}")
    vals = (data[:, 0] + 1j * data[:, 1]).reshape(n, n)
    return ComplexField2D(Grid2D(L, n), vals), a, omega
