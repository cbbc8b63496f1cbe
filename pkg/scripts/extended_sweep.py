"""Continue the beta = 0 sweep past a/a* = 0.94 to see where the blow-up diagnostics settle.

Prints -mu eps_a^2, the relative error of (|x_a|^2 - 1)/eps_bar^2 against C~ = -2 M2/a*,
and the running prefactor I/(a*-a)^{1/2} against 2 lambda^2/a*. The last two points use
N = 512 because the condensate width drops below a dozen cells at N = 256.

Usage:  python3 scripts/extended_sweep.py        (about 10 minutes)
"""

import warnings

from rotbec.sweep import SweepConfig, run_sweep
from rotbec.townes import default_constants

FRACTIONS = (0.80, 0.85, 0.90, 0.94, 0.97, 0.98, 0.99, 0.995)
SIZES = (256, 256, 256, 256, 256, 256, 512, 512)


def main():
    warnings.simplefilter("ignore", RuntimeWarning)
    c = default_constants()
    limit = 2 * c.lam**2 / c.a_star
    cfg = SweepConfig(fractions=FRACTIONS, N=SIZES, expansion=False)
    print(f"{'a/a*':>6} {'N':>4} {'-mu eps^2':>10} {'maxpt':>9} {'err vs C~':>9} {'prefactor':>9} {'vs limit':>8}")

    def show(r):
        if not r.ok:
            print(f"{r.fraction:6.3f} {r.grid_N:4d} {r.status}")
            return
        pref = r.I / r.gap**0.5
        print(
            f"{r.fraction:6.3f} {r.grid_N:4d} {r.mu_eps2:10.4f} {r.max_point_ratio:9.4f} "
            f"{abs(r.max_point_ratio / c.C_tilde - 1):9.1%} {pref:9.4f} {abs(pref / limit - 1):8.1%}",
            flush=True,
        )

    run_sweep(cfg, progress=show)


if __name__ == "__main__":
    main()
