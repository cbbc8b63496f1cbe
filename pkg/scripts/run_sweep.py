"""Run a sweep from a config file, write the report files and print the power-law fit.

Usage:  python3 scripts/run_sweep.py [scripts/acceptance.cfg] [--outdir DIR]
"""

import argparse
import logging
import warnings

from rotbec.sweep import emit_report, fit_records, load_config, run_sweep
from rotbec.townes import default_constants


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config", nargs="?", default="scripts/acceptance.cfg")
    p.add_argument("--outdir")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    warnings.simplefilter("ignore", RuntimeWarning)
    cfg = load_config(args.config)
    c = default_constants()

    def show(r):
        print(
            f"a/a*={r.fraction:.4f} {r.status} I={r.I:.8f} -mu eps^2={r.mu_eps2:.4f} eps ratio={r.eps_ratio:.4f} "
            f"sup={r.sup_dist:.4f} maxpt={r.max_point_ratio:.4f} vortices={r.n_vortices} "
            f"radius={r.vortex_free_radius:.4f} r1={r.r1:.4f} im={r.im_ratio:.4f}",
            flush=True,
        )

    records = run_sweep(cfg, progress=show)
    paths = emit_report(records, args.outdir or cfg.outdir)
    fit = fit_records(records, c)
    print(f"slope {fit.slope:.4f} (expected {fit.expected_slope:.4f})")
    print(f"prefactor {fit.prefactor:.4f} (limit {fit.expected_prefactor:.4f})")
    print(f"wrote {len(paths)} files to {paths[0].parent}")


if __name__ == "__main__":
    main()
