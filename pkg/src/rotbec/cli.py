"""Command line entry point: ``rotbec <townes|minimize|sweep|expand|vortex|report> ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericalError, OutputError, RotbecError
from .expansion import expansion_residuals
from .gpe import (
    MinimizeOptions,
    MinimizerResult,
    TrapSpec,
    chemical_potential,
    energy,
    minimize,
    modulus_kinetic,
    result_scalars,
    write_result_record,
)
from .grid import Grid2D, read_snapshot, write_snapshot
from .rescale import COMPARISON_GRID, locate_max, rescaled_nu
from .sweep import emit_report, expansion_on_comparison_grid, fit_records, load_config, read_csv, run_sweep
from .townes import default_constants, default_profile, lift_to_grid, shoot_townes, townes_constants, write_constants
from .vortex import DEFAULT_THRESHOLD, scan_vortices

log = logging.getLogger("rotbec")


def _print_kv(items: dict) -> None:
    for k, v in items.items():
        if isinstance(v, (float, np.floating)):
            v = repr(float(v))
        print(f"{k} = {v}")


def cmd_townes(args) -> int:
    prof = shoot_townes(r_max=args.r_max, tol=args.tol)
    c = townes_constants(prof)
    _print_kv(c.as_dict())
    if args.out:
        write_constants(args.out, c)
    return 0


def cmd_minimize(args) -> int:
    c = default_constants()
    trap = TrapSpec.from_fraction(args.fraction, args.c0, args.beta, c.a_star)
    grid = Grid2D(args.L, args.N)
    opts = MinimizeOptions(tol=args.tol, max_iter=args.max_iter, restarts=args.restarts, seed=args.seed)
    res = minimize(trap, grid, opts=opts)
    _print_kv(result_scalars(res))
    if args.out:
        write_snapshot(args.out, res.field, trap.a, trap.Omega)
    if args.record:
        write_result_record(args.record, res)
    return 0 if res.converged else 3


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    outdir = args.outdir or cfg.outdir

    def show(r):
        print(f"a/a*={r.fraction:.4f}  status={r.status}  I={r.I:.10g}  mu={r.mu:.6g}  |x_a|={r.abs_x_a:.6f}", flush=True)

    records = run_sweep(cfg, progress=show)
    emit_report(records, outdir)
    if len([r for r in records if r.ok]) >= 3:
        fit = fit_records(records)
        print(f"slope = {fit.slope:.6f} (expected {fit.expected_slope:.6f})")
        print(f"prefactor = {fit.prefactor:.6f} (limit {fit.expected_prefactor:.6f})")
    return 0


def _snapshot_result(path):
    """Field, trap and blow-up scalars recovered from a stored lab-frame snapshot."""
    u, a, omega = read_snapshot(path)
    c = default_constants()
    # Omega is stored directly; C0 = Omega with beta = 0 reproduces it
    trap = TrapSpec(a=a, a_star=c.a_star, C0=omega, beta=0.0)
    return u, trap


def cmd_expand(args) -> int:
    c = default_constants()
    x0 = tuple(float(s) for s in args.x0.split(","))
    if len(x0) != 2:
        raise ConfigurationError("--x0 expects two comma-separated numbers")
    if args.snapshot:
        u, trap = _snapshot_result(args.snapshot)
        x_a = locate_max(u)
        x0 = np.array(x_a) / math.hypot(*x_a)
    eset = expansion_on_comparison_grid(x0, c)
    report = dict(eset.solvability)
    report["grad_psi1_origin"] = max(abs(v) for v in eset.grad_psi1_origin)
    report["grad_psi2_origin"] = max(abs(v) for v in eset.grad_psi2_origin)
    report["q_phi_product"] = eset.q_phi_product
    if args.snapshot:
        parts = energy(u, trap)
        mu = chemical_potential(u, trap, parts.total)
        if not mu < 0:
            raise NumericalError(f"mu={mu:.4g} >= 0: not in the blow-up regime")
        res = MinimizerResult(
            field=u, trap=trap, energy=parts, mu=mu, iterations=0, residual=math.nan, converged=True,
            x_a=x_a, eps_a=1.0 / math.sqrt(modulus_kinetic(u)), eps_bar=math.sqrt(-1.0 / mu),
            energy_history=np.array([parts.total]),
        )
        _, nu = rescaled_nu(res, default_profile())
        q = lift_to_grid(default_profile(), COMPARISON_GRID)
        report.update(expansion_residuals(nu, q, eset, trap.Omega, res.eps_bar).as_dict())
    _print_kv(report)
    if args.outdir:
        out = Path(args.outdir)
        eset.write(out)
        (out / "residuals.txt").write_text("".join(f"{k} = {float(v)!r}\n" for k, v in report.items()))
    return 0


def cmd_vortex(args) -> int:
    u, _, _ = read_snapshot(args.snapshot)
    rep = scan_vortices(u, args.radius, args.threshold)
    _print_kv(
        {
            "n_vortices": rep.n_vortices,
            "vortex_free_radius": rep.vortex_free_radius,
            "strict_radius": rep.strict_radius,
            "min_modulus_ratio": rep.min_modulus_ratio,
            "threshold": rep.threshold,
        }
    )
    for (cx, cy), w in rep.vortices:
        print(f"vortex {cx!r} {cy!r} {w}")
    return 0


def cmd_report(args) -> int:
    try:
        records = read_csv(args.csv)
    except OSError as exc:
        raise OutputError(f"cannot read {args.csv}: {exc.strerror}") from None
    emit_report(records, args.outdir, snapshots=False)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rotbec", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("townes", help="solve the radial ground state and print its constants")
    s.add_argument("--r-max", type=float, default=20.0)
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--out", help="write constants as key = value lines")
    s.set_defaults(func=cmd_townes)

    s = sub.add_parser("minimize", help="minimize the energy for one trap")
    s.add_argument("--fraction", type=float, required=True, help="a / a*")
    s.add_argument("--c0", type=float, default=1.0)
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--L", type=float, default=4.0)
    s.add_argument("--N", type=int, default=256)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=4000)
    s.add_argument("--restarts", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="field snapshot path")
    s.add_argument("--record", help="scalar record path")
    s.set_defaults(func=cmd_minimize)

    s = sub.add_parser("sweep", help="run a sweep from a config file")
    s.add_argument("config")
    s.add_argument("--outdir")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("expand", help="solve the correction problems, optionally against a snapshot")
    s.add_argument("--x0", default="1,0")
    s.add_argument("--snapshot")
    s.add_argument("--outdir")
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("vortex", help="scan a snapshot for phase singularities")
    s.add_argument("snapshot")
    s.add_argument("--radius", type=float, default=2.0)
    s.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    s.set_defaults(func=cmd_vortex)

    s = sub.add_parser("report", help="re-emit plot data and fit from a stored sweep.csv")
    s.add_argument("csv")
    s.add_argument("--outdir", required=True)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except RotbecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
