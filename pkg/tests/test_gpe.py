import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import smooth_field
from rotbec.errors import ConfigurationError, ResolutionError
from rotbec.gpe import (
    MinimizeOptions,
    TrapSpec,
    chemical_potential,
    default_tau,
    el_residual,
    energy,
    init_trial,
    minimize,
    modulus_kinetic,
    operator_for,
    rayleigh_quotient,
    write_result_record,
)
from rotbec.grid import ComplexField2D, Grid2D


def rot90(u: ComplexField2D) -> ComplexField2D:
    # v(x1, x2) = u(x2, -x1); node x_n maps to x_{(N-n) mod N}
    n = u.grid.N
    idx = (n - np.arange(n)) % n
    return ComplexField2D(u.grid, u.values.T[:, idx])


@pytest.fixture(scope="module")
def minimizer_half(lab_grid):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return minimize(TrapSpec.from_fraction(0.5, 1.0, 0.0), lab_grid)


# -- TrapSpec ----------------------------------------------------------------


def test_trap_schedule(constants):
    t = TrapSpec.from_fraction(0.9, C0=2.0, beta=0.25)
    assert t.a == pytest.approx(0.9 * constants.a_star)
    assert t.Omega == pytest.approx(2.0 * (0.1 * constants.a_star) ** -0.25)


@pytest.mark.parametrize(
    "kw",
    [dict(a=12.0), dict(a=11.7009), dict(a=-1.0), dict(a=1.0, beta=0.5), dict(a=1.0, beta=-0.1), dict(a=1.0, C0=-1.0)],
)
def test_trap_rejects_invalid(kw, constants):
    with pytest.raises(ConfigurationError):
        TrapSpec(a_star=constants.a_star, **kw)


# -- energy ------------------------------------------------------------------


def test_energy_of_zero_field(lab_grid, constants):
    z = ComplexField2D(lab_grid, np.zeros((lab_grid.N, lab_grid.N)))
    e = energy(z, TrapSpec(a=5.0, a_star=constants.a_star))
    assert e.covariant_kinetic == 0 and e.trap == 0 and e.interaction == 0 and e.total == 0


def test_gaussian_kinetic_energy(grid12, constants):
    sigma = 1.0
    u = np.exp(-grid12.r2 / (2 * sigma**2)) / (sigma * math.sqrt(math.pi))
    e = energy(ComplexField2D(grid12, u), TrapSpec(a=0.0, a_star=constants.a_star, C0=0.0))
    assert abs(e.covariant_kinetic - 1 / sigma**2) < 1e-8
    assert e.trap == 0 and e.interaction == 0


@pytest.mark.parametrize("omega", [1.0, 2.0])
@pytest.mark.parametrize("tau", [8.0, 12.0])
def test_trial_energy_asymptotics(omega, tau, lab_grid, constants):
    trap = TrapSpec(a=0.5 * constants.a_star, a_star=constants.a_star, C0=omega)
    u = init_trial(lab_grid, trap, tau=tau)
    predicted = tau**2 * trap.gap / constants.a_star + omega**2 * constants.lam**4 / (constants.a_star * tau**2)
    assert abs(energy(u, trap).total / predicted - 1) < 0.02


def test_expanded_energy_matches_operator_form(lab_grid, constants, rng):
    trap = TrapSpec(a=4.0, a_star=constants.a_star, C0=1.5, beta=0.1)
    u = ComplexField2D(lab_grid, smooth_field(lab_grid, rng)).normalized()
    e1 = energy(u, trap)
    e2 = operator_for(lab_grid, trap).parts(u.values)
    assert e1.covariant_kinetic == pytest.approx(e2.covariant_kinetic, rel=1e-12)
    assert e1.total == pytest.approx(e2.total, rel=1e-12)


@given(seed=st.integers(0, 10_000), theta=st.floats(0, 2 * math.pi))
def test_energy_gauge_invariance(seed, theta):
    g = Grid2D(4.0, 64)
    trap = TrapSpec(a=3.0, a_star=11.7, C0=1.3)
    u = ComplexField2D(g, smooth_field(g, np.random.default_rng(seed))).normalized()
    e1 = energy(u, trap).total
    e2 = energy(ComplexField2D(g, np.exp(1j * theta) * u.values), trap).total
    assert abs(e1 - e2) <= 1e-12 * max(1.0, abs(e1))


@given(seed=st.integers(0, 10_000))
def test_energy_rotation_invariance(seed):
    g = Grid2D(4.0, 64)
    trap = TrapSpec(a=3.0, a_star=11.7, C0=1.3)
    # the node x = -L has no mirror image, so the field must vanish at the edge
    u = ComplexField2D(g, smooth_field(g, np.random.default_rng(seed), width=0.6)).normalized()
    e1 = energy(u, trap)
    e2 = energy(rot90(u), trap)
    assert abs(e1.total - e2.total) <= 1e-11 * max(1.0, abs(e1.total))
    assert abs(e1.trap - e2.trap) <= 1e-12 * max(1.0, e1.trap)


@given(seed=st.integers(0, 10_000))
def test_energy_gradient_matches_finite_differences(seed):
    g = Grid2D(4.0, 64)
    trap = TrapSpec(a=5.0, a_star=11.7, C0=1.0)
    rng = np.random.default_rng(seed)
    u = smooth_field(g, rng)
    d = smooth_field(g, rng)
    op = operator_for(g, trap)
    grad = op.apply(u) - trap.a * np.abs(u) ** 2 * u
    analytic = 2 * float(np.real(g.inner(grad, d)))

    def E(t):
        return energy(ComplexField2D(g, u + t * d), trap).total

    t = 1e-4
    fd = (-E(2 * t) + 8 * E(t) - 8 * E(-t) + E(-2 * t)) / (12 * t)
    assert abs(fd - analytic) <= 1e-5 * max(abs(analytic), 1e-8)


def test_diamagnetic_inequality_random(lab_grid, constants, rng):
    trap = TrapSpec(a=5.0, a_star=constants.a_star, C0=2.0)
    for _ in range(5):
        u = ComplexField2D(lab_grid, smooth_field(lab_grid, rng)).normalized()
        assert energy(u, trap).covariant_kinetic >= modulus_kinetic(u) - 1e-9


# -- init_trial --------------------------------------------------------------


def test_trial_real_centered_unit_mass(lab_grid, constants):
    trap = TrapSpec(a=5.0, a_star=constants.a_star, C0=0.0)
    u = init_trial(lab_grid, trap, y0=(1.0, 0.0), tau=1.0)
    assert abs(u.mass - 1) < 1e-10
    assert np.abs(u.values.imag).max() == 0 and u.values.real.min() >= 0
    i, j = np.unravel_index(np.argmax(np.abs(u.values)), u.values.shape)
    X, Y = lab_grid.mesh
    assert math.hypot(X[i, j] - 1, Y[i, j]) <= lab_grid.h


def test_trial_carries_rotation_phase(lab_grid, constants):
    trap = TrapSpec(a=5.0, a_star=constants.a_star, C0=1.0)
    u = init_trial(lab_grid, trap, y0=(0.0, 1.0), tau=3.0)
    X, Y = lab_grid.mesh
    phase = np.exp(1j * trap.Omega * (-X * 1.0 + Y * 0.0))
    mod = np.abs(u.values)
    assert np.abs(u.values - mod * phase).max() < 1e-12


def test_trial_tau_scan_matches_scalar_minimizer(lab_grid, constants):
    trap = TrapSpec(a=0.5 * constants.a_star, a_star=constants.a_star, C0=16.0)
    four = [energy(init_trial(lab_grid, trap, tau=t), trap).total for t in (4, 6, 8, 12)]
    # convex shape in tau^2: the second divided differences are positive
    s = np.array([16, 36, 64, 144], float)
    d1 = np.diff(four) / np.diff(s)
    assert np.all(np.diff(d1) > 0)
    taus = np.linspace(3, 12, 37)
    scan = [energy(init_trial(lab_grid, trap, tau=t), trap).total for t in taus]
    tau_star = math.sqrt(trap.Omega * constants.lam**2) / trap.gap**0.25
    assert abs(taus[int(np.argmin(scan))] / tau_star - 1) < 0.15


def test_trial_rejects_unresolved_tau_and_bad_y0(lab_grid, constants):
    trap = TrapSpec(a=5.0, a_star=constants.a_star)
    with pytest.raises(ResolutionError):
        init_trial(lab_grid, trap, tau=0.6 / lab_grid.h)
    with pytest.raises(ConfigurationError):
        init_trial(lab_grid, trap, y0=(1.0, 1.0))
    with pytest.raises(ConfigurationError):
        init_trial(lab_grid, trap, tau=-1.0)


def test_default_tau_schedule(constants):
    t = TrapSpec.from_fraction(0.9, 1.0, 0.1)
    assert default_tau(t) == pytest.approx(constants.lam * t.gap ** (-(1 + 0.2) / 4))


# -- Euler-Lagrange residual and multiplier -----------------------------------


def test_el_residual_of_free_eigenstate(constants):
    g = Grid2D(3.0, 32)
    trap = TrapSpec(a=0.0, a_star=constants.a_star, C0=0.0)
    u = ComplexField2D(g, np.ones((32, 32))).normalized()
    assert g.norm(el_residual(u, trap, 0.0).values) < 1e-8


def test_el_residual_of_dense_linear_eigenstate(constants):
    g = Grid2D(4.0, 32)
    trap = TrapSpec(a=0.0, a_star=constants.a_star, C0=1.0)
    op = operator_for(g, trap)
    n = g.N * g.N
    H = np.empty((n, n), complex)
    for k in range(n):
        e = np.zeros(n, complex)
        e[k] = 1
        H[:, k] = op.apply(e.reshape(g.N, g.N)).ravel()
    w, v = np.linalg.eigh(0.5 * (H + H.conj().T))
    u = ComplexField2D(g, v[:, 0].reshape(g.N, g.N)).normalized()
    assert g.norm(el_residual(u, trap, w[0]).values) < 1e-8


@given(theta=st.floats(0, 2 * math.pi), seed=st.integers(0, 1000))
def test_el_residual_phase_equivariance(theta, seed):
    g = Grid2D(4.0, 64)
    trap = TrapSpec(a=4.0, a_star=11.7, C0=1.0)
    u = ComplexField2D(g, smooth_field(g, np.random.default_rng(seed))).normalized()
    r1 = el_residual(u, trap, -2.0).values
    r2 = el_residual(ComplexField2D(g, np.exp(1j * theta) * u.values), trap, -2.0).values
    assert np.abs(r2 - np.exp(1j * theta) * r1).max() <= 1e-12 * max(1.0, np.abs(r1).max())


def test_chemical_potential_small_a(lab_grid, constants):
    trap = TrapSpec(a=1e-9, a_star=constants.a_star, C0=1.0)
    u = init_trial(lab_grid, trap, tau=2.0)
    I = energy(u, trap).total
    assert chemical_potential(u, trap, I) == pytest.approx(I, rel=1e-8)


# -- minimize ----------------------------------------------------------------


def test_minimizer_half_a_star(minimizer_half, lab_grid):
    res = minimizer_half
    assert res.converged
    assert abs(res.field.mass - 1) < 1e-12
    assert lab_grid.norm(el_residual(res.field, res.trap, res.mu).values) < 1e-6
    assert abs(rayleigh_quotient(res.field, res.trap) - res.mu) < 1e-6
    trial = init_trial(lab_grid, res.trap, tau=min(default_tau(res.trap), 0.5 / lab_grid.h))
    assert res.I <= energy(trial, res.trap).total
    # the multiplier drops the quartic term once more
    assert res.mu < res.I


def test_minimizer_flow_invariants(minimizer_half):
    res = minimizer_half
    hist = res.energy_history
    assert np.all(np.diff(hist) <= 1e-12 * max(1.0, abs(hist[0])))
    assert res.diamagnetic_margin >= -1e-9
    assert res.I == min(res.candidate_energies)
    assert len(res.candidate_energies) == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_linear_ground_state_matches_dense_oracle(oracles, constants):
    trap = TrapSpec(a=0.0, a_star=constants.a_star, C0=1.0)
    res = minimize(trap, Grid2D(4.0, 64), opts=MinimizeOptions(tol=1e-10))
    assert res.converged
    assert abs(res.I - oracles["linear_ground_energy_L4_N64_omega1"]) < 1e-6


def test_minimize_rejects_supercritical(lab_grid, constants):
    with pytest.raises(ConfigurationError):
        minimize(TrapSpec(a=constants.a_star, a_star=constants.a_star), lab_grid)


def test_minimize_detects_width_collapse(constants):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(ResolutionError):
            minimize(TrapSpec.from_fraction(0.94), Grid2D(4.0, 32))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_minimize_is_deterministic(constants):
    g = Grid2D(4.0, 64)
    trap = TrapSpec.from_fraction(0.5)
    a = minimize(trap, g)
    b = minimize(trap, g)
    assert np.array_equal(a.field.values, b.field.values)


def test_result_record(tmp_path, minimizer_half):
    p = tmp_path / "rec.txt"
    write_result_record(p, minimizer_half)
    keys = [line.split(" = ")[0] for line in p.read_text().splitlines()]
    assert {"I", "mu", "eps_a", "eps_bar", "x_a1", "x_a2", "residual"} <= set(keys)
