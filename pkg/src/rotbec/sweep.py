"""Parameter sweeps toward a*: per-point minimization, blow-up analysis, expansion and vortex checks, reports."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field, fields
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InsufficientDataError, OutputError, RotbecError
from .expansion import build_expansion, expansion_residuals, ExpansionSet
from .gpe import MinimizeOptions, TrapSpec, minimize
from .grid import Grid2D, crop, write_snapshot
from .rescale import COMPARISON_GRID, blowup_record, rescale, rescaled_nu, unrescale
from .townes import default_constants, default_profile, lift_to_grid
from .vortex import DEFAULT_THRESHOLD, scan_vortices

log = logging.getLogger(__name__)

# Psi/Phi are solved on a box twice the comparison window (same spacing) and cropped
EXPANSION_GRID = Grid2D(20.0, 512)
EXPANSION_PROFILE_RMAX = 30.0
VORTEX_SCAN_RADIUS = 2.0


@dataclass
class SweepConfig:
    c0: float = 1.0
    beta: float = 0.0
    fractions: tuple[float, ...] = (0.80, 0.85, 0.90, 0.94)
    L: float = 4.0
    N: tuple[int, ...] | int = 256
    tol: float = 1e-8
    outdir: str = "sweep_out"
    seed: int = 0
    warm_start: bool = True
    max_iter: int = 4000
    restarts: int = 1
    threshold: float = DEFAULT_THRESHOLD
    expansion: bool = True

    def __post_init__(self):
        self.fractions = tuple(float(f) for f in self.fractions)
        if any(not 0.0 < f < 1.0 for f in self.fractions):
            raise ConfigurationError(f"a/a* fractions must lie in (0, 1), got {self.fractions}")
        if any(b <= a for a, b in zip(self.fractions, self.fractions[1:])):
            raise ConfigurationError(f"a/a* fractions must be strictly increasing, got {self.fractions}")
        if not 0.0 <= self.beta < 0.5:
            raise ConfigurationError(f"beta must lie in [0, 1/2), got {self.beta}")
        if self.c0 <= 0:
            raise ConfigurationError(f"c0 must be positive, got {self.c0}")
        if self.tol <= 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if isinstance(self.N, (list, tuple)):
            ns = tuple(int(n) for n in self.N)
            if len(ns) == 1:
                ns = ns * len(self.fractions)
            if len(ns) != len(self.fractions):
                raise ConfigurationError(f"grid.N lists {len(ns)} sizes for {len(self.fractions)} fractions")
            self.N = ns
        else:
            self.N = (int(self.N),) * len(self.fractions)
        for n in set(self.N):
            Grid2D(self.L, n)
        if self.beta >= 1.0 / 6.0:
            warnings.warn(
                f"beta={self.beta} >= 1/6: the vortex-free region result assumes beta in [0, 1/6)",
                UserWarning,
                stacklevel=3,
            )

    def grid(self, k: int) -> Grid2D:
        return Grid2D(self.L, self.N[k])

    def options(self) -> MinimizeOptions:
        return MinimizeOptions(tol=self.tol, max_iter=self.max_iter, restarts=self.restarts, seed=self.seed)


_KEYS = {
    "c0": ("c0", float),
    "beta": ("beta", float),
    "fractions": ("fractions", lambda s: tuple(float(x) for x in s.replace(",", " ").split())),
    "grid.l": ("L", float),
    "grid.n": ("N", lambda s: tuple(int(x) for x in s.replace(",", " ").split())),
    "tol": ("tol", float),
    "outdir": ("outdir", str),
    "seed": ("seed", int),
    "warm_start": ("warm_start", lambda s: s.strip().lower() in ("1", "true", "yes", "on")),
    "max_iter": ("max_iter", int),
    "restarts": ("restarts", int),
    "threshold": ("threshold", float),
    "expansion": ("expansion", lambda s: s.strip().lower() in ("1", "true", "yes", "on")),
}


def parse_config(text: str) -> SweepConfig:
    """Flat ``key = value`` text; ``#`` starts a comment."""
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip().lower()
        if key not in _KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        name, conv = _KEYS[key]
        try:
            kwargs[name] = conv(val.strip())
        except ValueError as exc:
            raise ConfigurationError(f"line {lineno}: bad value for {key}: {exc}") from None
    return SweepConfig(**kwargs)


def load_config(path) -> SweepConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OutputError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


@dataclass
class SweepRecord:
    fraction: float
    a: float
    beta: float
    C0: float
    Omega: float
    I: float = math.nan
    mu: float = math.nan
    eps_a: float = math.nan
    eps_bar: float = math.nan
    abs_x_a: float = math.nan
    theta: float = math.nan
    sup_dist: float = math.nan
    l2_dist: float = math.nan
    n_vortices: int = -1
    vortex_free_radius: float = math.nan
    min_modulus_ratio: float = math.nan
    status: str = "ok"
    converged: int = 0
    iterations: int = 0
    residual: float = math.nan
    covariant_kinetic: float = math.nan
    trap_energy: float = math.nan
    interaction: float = math.nan
    x_a1: float = math.nan
    x_a2: float = math.nan
    eps_theory: float = math.nan
    eps_ratio: float = math.nan
    mu_eps2: float = math.nan
    max_point_ratio: float = math.nan
    strict_radius: float = math.nan
    r0: float = math.nan
    r1: float = math.nan
    r2: float = math.nan
    r_im: float = math.nan
    im_ratio: float = math.nan
    diamagnetic_margin: float = math.nan
    grid_N: int = 0
    grid_L: float = math.nan
    result: object = field(default=None, repr=False, compare=False)

    @property
    def gap(self) -> float:
        return self.a / self.fraction - self.a if self.fraction else math.nan

    @property
    def ok(self) -> bool:
        return self.status == "ok"


CSV_COLUMNS = tuple(f.name for f in fields(SweepRecord) if f.name != "result")


@lru_cache(maxsize=2)
def _expansion_profile():
    return default_profile(r_max=EXPANSION_PROFILE_RMAX)


def expansion_on_comparison_grid(x0, constants=None) -> ExpansionSet:
    """Psi1, Psi2, PhiI for direction x0, solved on the large box and cropped to the comparison grid."""
    constants = constants or default_constants()
    full = build_expansion(constants, _expansion_profile(), EXPANSION_GRID, x0)
    cut = lambda v: np.ascontiguousarray(crop(v, EXPANSION_GRID, COMPARISON_GRID))  # noqa: E731
    return ExpansionSet(
        grid=COMPARISON_GRID,
        x0=full.x0,
        c_tilde=full.c_tilde,
        psi1=cut(full.psi1),
        psi2=cut(full.psi2),
        phi_I=cut(full.phi_I),
        solvability=full.solvability,
        grad_psi1_origin=full.grad_psi1_origin,
        grad_psi2_origin=full.grad_psi2_origin,
        q_phi_product=full.q_phi_product,
    )


def _warm_start(prev, trap: TrapSpec, grid: Grid2D, constants):
    """Previous minimizer carried through the blow-up rescaling to the predicted width at the new a."""
    res = prev
    eps_old = res.eps_a
    ratio = (trap.gap / res.trap.gap) ** ((1 + 2 * trap.beta) / 4)
    eps_new = eps_old * ratio
    w = rescale(res.field, res.x_a, eps_old, res.trap.Omega, eps_old, COMPARISON_GRID)
    u = unrescale(w, res.x_a, eps_new, trap.Omega, eps_new, grid)
    if u.mass == 0:
        return None
    return u.normalized()


def _analyse(rec: SweepRecord, res, constants, profile, cfg: SweepConfig) -> None:
    e = res.energy
    rec.converged = int(res.converged)
    rec.iterations = res.iterations
    rec.residual = res.residual
    rec.I = e.total
    rec.covariant_kinetic = e.covariant_kinetic
    rec.trap_energy = e.trap
    rec.interaction = e.interaction
    rec.mu = res.mu
    rec.x_a1, rec.x_a2 = res.x_a
    rec.abs_x_a = math.hypot(*res.x_a)
    rec.eps_a = res.eps_a
    rec.eps_bar = res.eps_bar
    rec.diamagnetic_margin = res.diamagnetic_margin

    vr = scan_vortices(res.field, VORTEX_SCAN_RADIUS, cfg.threshold)
    rec.n_vortices = vr.n_vortices
    rec.vortex_free_radius = vr.vortex_free_radius
    rec.strict_radius = vr.strict_radius
    rec.min_modulus_ratio = vr.min_modulus_ratio

    br, _ = blowup_record(res, constants, profile)
    rec.theta = br.theta
    rec.sup_dist = br.sup_dist
    rec.l2_dist = br.l2_dist
    rec.eps_theory = br.eps_theory
    rec.eps_ratio = br.eps_ratio
    rec.mu_eps2 = br.mu_eps2
    rec.max_point_ratio = br.max_point_ratio

    if cfg.expansion:
        x0 = np.array(res.x_a) / rec.abs_x_a
        eset = expansion_on_comparison_grid(x0, constants)
        _, nu = rescaled_nu(res, profile)
        q = lift_to_grid(profile, COMPARISON_GRID)
        er = expansion_residuals(nu, q, eset, res.trap.Omega, res.eps_bar)
        rec.r0, rec.r1, rec.r2, rec.r_im, rec.im_ratio = er.r0, er.r1, er.r2, er.r_im, er.im_ratio
    if not res.converged:
        rec.status = f"unconverged: residual {res.residual:.3e}"


def run_sweep(cfg: SweepConfig, constants=None, profile=None, progress=None) -> list[SweepRecord]:
    """One record per a/a* fraction, in order. Stage failures are stored in ``status``; the sweep continues."""
    constants = constants or default_constants()
    profile = profile or default_profile()
    records = []
    prev = None
    for k, frac in enumerate(cfg.fractions):
        trap = TrapSpec.from_fraction(frac, cfg.c0, cfg.beta, constants.a_star)
        grid = cfg.grid(k)
        rec = SweepRecord(fraction=frac, a=trap.a, beta=trap.beta, C0=trap.C0, Omega=trap.Omega,
                          grid_N=grid.N, grid_L=grid.L)
        try:
            init = _warm_start(prev, trap, grid, constants) if (cfg.warm_start and prev is not None) else None
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                res = minimize(trap, grid, init=init, opts=cfg.options())
            rec.result = res
            _analyse(rec, res, constants, profile, cfg)
            prev = res
        except RotbecError as exc:
            rec.status = f"error: {type(exc).__name__}: {exc}"
            log.warning("a/a*=%.4f failed: %s", frac, exc)
        records.append(rec)
        if progress is not None:
            progress(rec)
    return records


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    prefactor: float
    r_squared: float
    expected_slope: float
    expected_prefactor: float
    n_points: int


def fit_power_law(gaps, energies, a_star: float, lam: float, C0: float = 1.0, beta: float = 0.0) -> PowerLawFit:
    """Least-squares line through (log(a*-a), log I); prefactor from the point closest to a*."""
    gaps = np.asarray(gaps, dtype=float)
    energies = np.asarray(energies, dtype=float)
    mask = np.isfinite(gaps) & np.isfinite(energies) & (gaps > 0) & (energies > 0)
    gaps, energies = gaps[mask], energies[mask]
    if gaps.size < 3:
        raise InsufficientDataError(f"power-law fit needs at least 3 usable points, got {gaps.size}")
    x, y = np.log(gaps), np.log(energies)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    last = int(np.argmin(gaps))
    expo = 0.5 - beta
    return PowerLawFit(
        slope=float(slope),
        intercept=float(intercept),
        prefactor=float(energies[last] / gaps[last] ** expo),
        r_squared=r2,
        expected_slope=expo,
        expected_prefactor=2.0 * C0 * lam**2 / a_star,
        n_points=int(gaps.size),
    )


def fit_records(records, constants=None) -> PowerLawFit:
    constants = constants or default_constants()
    good = [r for r in records if r.ok]
    if not good:
        raise InsufficientDataError("no converged records")
    beta, c0 = good[0].beta, good[0].C0
    return fit_power_law(
        [constants.a_star - r.a for r in good], [r.I for r in good], constants.a_star, constants.lam, c0, beta
    )


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def read_csv(path) -> list[SweepRecord]:
    types = {f.name: f.type for f in fields(SweepRecord)}
    out = []
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != CSV_COLUMNS:
            raise ConfigurationError(f"{path}: header does not match the sweep schema")
        for row in rd:
            kw = {}
            for k, v in row.items():
                t = types[k]
                kw[k] = v if t == "str" else (int(v) if t == "int" else float(v))
            out.append(SweepRecord(**kw))
    return out


PLOT_FILES = {
    "energy_loglog.dat": ("log(a*-a) log(I)", lambda r, c: (math.log(c.a_star - r.a), math.log(r.I))),
    "profile_distance.dat": ("a/a* sup|w_a - Q/sqrt(a*)|", lambda r, c: (r.fraction, r.sup_dist)),
    "max_point.dat": ("a/a* (|x_a|^2-1)/eps_bar^2", lambda r, c: (r.fraction, r.max_point_ratio)),
    "vortex_radius.dat": ("a/a* vortex_free_radius", lambda r, c: (r.fraction, r.vortex_free_radius)),
}


def emit_report(records, outdir, constants=None, snapshots: bool = True) -> list[Path]:
    """Write sweep.csv, per-run field snapshots, plot-data files and the power-law fit summary."""
    constants = constants or default_constants()
    outdir = Path(outdir)
    written = []
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        p = outdir / "sweep.csv"
        write_csv(p, records)
        written.append(p)
        if snapshots:
            for r in records:
                res = r.result
                if res is None:
                    continue
                p = outdir / f"field_{r.fraction:.4f}.txt"
                write_snapshot(p, res.field, r.a, r.Omega)
                written.append(p)
        for name, (header, fn) in PLOT_FILES.items():
            rows = [fn(r, constants) if r.ok else (math.nan, math.nan) for r in records]
            p = outdir / name
            with open(p, "w") as fh:
                fh.write(f"# {header}\n")
                for x, y in rows:
                    fh.write(f"{x!r} {y!r}\n")
            written.append(p)
        try:
            fit = fit_records(records, constants)
        except InsufficientDataError:
            fit = None
        if fit is not None:
            p = outdir / "fit.txt"
            p.write_text("".join(f"{k} = {getattr(fit, k)!r}\n" for k in fit.__dataclass_fields__))
            written.append(p)
    except OSError as exc:
        raise OutputError(f"cannot write report to {exc.filename or outdir}: {exc.strerror}") from None
    return written
