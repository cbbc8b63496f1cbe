"""Compute reference values with methods independent of the package and freeze them in tests/data/oracles.json.

Oracles:
  * radial ground state via adaptive DOP853 shooting (scipy.integrate.solve_ivp)
    with the tail past the matching radius taken from the K0 asymptote;
  * the same shooting at half the step bound, to bound the discretization error;
  * the discrete linear ground state (a = 0, Omega = 1) by dense Hermitian
    diagonalization of an independently assembled Fourier-collocation matrix.

Run:  python3 scripts/compute_oracles.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.linalg import eigh
from scipy.special import k0

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def shoot(q0: float, r_end: float, max_step: float, dense: bool = False):
    r0 = 1e-5
    c = (q0 - q0**3) / 2

    def rhs(r, y):
        return [y[1], y[0] - y[0] ** 3 - y[1] / r]

    def crossed(r, y):
        return y[0]

    def turned(r, y):
        return y[1]

    crossed.terminal = turned.terminal = True
    crossed.direction = -1
    turned.direction = 1
    return solve_ivp(
        rhs,
        (r0, r_end),
        [q0 + c * r0**2 / 2, c * r0],
        method="DOP853",
        rtol=1e-13,
        atol=1e-15,
        max_step=max_step,
        events=None if dense else (crossed, turned),
        dense_output=dense,
    )


def ground_state(max_step: float):
    lo, hi = 2.0, 2.5
    for _ in range(70):
        mid = 0.5 * (lo + hi)
        sol = shoot(mid, 14.0, max_step)
        if sol.t_events[0].size:
            hi = mid
        elif sol.t_events[1].size:
            lo = mid
        else:
            break
    q0 = 0.5 * (lo + hi)
    rm = 7.0
    sol = shoot(q0, rm, max_step, dense=True)
    f = sol.sol
    cq = f(rm)[0] / k0(rm)
    # nonlinear term is ~Q^3 ~ 1e-9 relative past r = 7; the K0 tail is accurate to that order
    a_in = 2 * np.pi * quad(lambda r: f(r)[0] ** 2 * r, 1e-5, rm, limit=400, epsabs=1e-14)[0]
    a_out = 2 * np.pi * quad(lambda r: (cq * k0(r)) ** 2 * r, rm, 60, limit=400, epsabs=1e-16)[0]
    m_in = 2 * np.pi * quad(lambda r: f(r)[0] ** 2 * r**3, 1e-5, rm, limit=400, epsabs=1e-14)[0]
    m_out = 2 * np.pi * quad(lambda r: (cq * k0(r)) ** 2 * r**3, rm, 60, limit=400, epsabs=1e-16)[0]
    return q0, a_in + a_out, m_in + m_out, f


def linear_ground_energy(L: float, N: int, omega: float) -> float:
    h = 2 * L / N
    x = -L + h * np.arange(N)
    k = 2 * np.pi * np.fft.fftfreq(N, d=h)
    F = np.fft.fft(np.eye(N), axis=0)
    Finv = np.fft.ifft(np.eye(N), axis=0)
    D2 = np.real(Finv @ np.diag(-(k**2)) @ F)
    kd = k.copy()
    kd[N // 2] = 0.0
    D1 = Finv @ np.diag(1j * kd) @ F
    eye = np.eye(N)
    X1 = np.kron(np.diag(x), eye)
    X2 = np.kron(eye, np.diag(x))
    lap = np.kron(D2, eye) + np.kron(eye, D2)
    d1 = np.kron(D1, eye)
    d2 = np.kron(eye, D1)
    r2 = np.diag(X1) ** 2 + np.diag(X2) ** 2
    H = -lap + np.diag(omega**2 * r2 + omega**2 / 8 * (r2 - 1) ** 2) + 2j * omega * (-X2 @ d1 + X1 @ d2)
    H = 0.5 * (H + H.conj().T)
    return float(eigh(H, eigvals_only=True, subset_by_index=[0, 0])[0])


def main():
    q0, a_star, m2, f = ground_state(max_step=1e-2)
    q0_half, a_half, _, _ = ground_state(max_step=5e-3)
    lam = (5 * m2 / 4) ** 0.25
    data = {
        "q0": q0,
        "q0_half_step": q0_half,
        "a_star": a_star,
        "a_star_half_step": a_half,
        "M2": m2,
        "lambda": lam,
        "C_tilde": -2 * m2 / a_star,
        "q_at_5": float(f(5.0)[0]),
        "linear_ground_energy_L4_N64_omega1": linear_ground_energy(4.0, 64, 1.0),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=2) + "\n")
    for key, val in data.items():
        print(f"{key} = {val!r}")


if __name__ == "__main__":
    main()
