import math
import os

import numpy as np
import pytest

from rotbec import cli
from rotbec.errors import ConfigurationError, InsufficientDataError, OutputError
from rotbec.grid import read_snapshot
from rotbec.sweep import (
    CSV_COLUMNS,
    PLOT_FILES,
    SweepConfig,
    SweepRecord,
    emit_report,
    fit_power_law,
    fit_records,
    load_config,
    parse_config,
    read_csv,
    run_sweep,
    write_csv,
)

TINY = dict(fractions=(0.8, 0.85, 0.9), N=64, expansion=False, restarts=0)

GOLDEN_HEADER = (
    "fraction,a,beta,C0,Omega,I,mu,eps_a,eps_bar,abs_x_a,theta,sup_dist,l2_dist,"
    "n_vortices,vortex_free_radius,min_modulus_ratio,status,converged,iterations,residual,"
    "covariant_kinetic,trap_energy,interaction,x_a1,x_a2,eps_theory,eps_ratio,mu_eps2,"
    "max_point_ratio,strict_radius,r0,r1,r2,r_im,im_ratio,diamagnetic_margin,grid_N,grid_L"
)


@pytest.fixture(scope="module")
def tiny_records():
    return run_sweep(SweepConfig(**TINY))


# -- configuration -----------------------------------------------------------


def test_parse_config_keys():
    cfg = parse_config(
        """
        # sweep toward a*
        c0 = 2.0
        beta = 0.1
        fractions = 0.8, 0.9 0.95
        grid.L = 5
        grid.N = 128 256 256
        tol = 1e-9
        outdir = out   # trailing comment
        seed = 3
        warm_start = no
        expansion = false
        """
    )
    assert cfg.c0 == 2.0 and cfg.beta == 0.1
    assert cfg.fractions == (0.8, 0.9, 0.95)
    assert cfg.L == 5.0 and cfg.N == (128, 256, 256)
    assert cfg.tol == 1e-9 and cfg.outdir == "out" and cfg.seed == 3
    assert cfg.warm_start is False and cfg.expansion is False


def test_single_grid_size_is_broadcast():
    assert SweepConfig(fractions=(0.5, 0.6), N=64).N == (64, 64)
    assert parse_config("fractions = 0.5 0.6\ngrid.N = 64").N == (64, 64)


@pytest.mark.parametrize(
    "text",
    [
        "fractions = 0.5 1.0",
        "fractions = 0.9 0.8",
        "fractions = 0 0.5",
        "beta = 0.5",
        "c0 = 0",
        "tol = -1",
        "grid.N = 100",
        "fractions = 0.5 0.6\ngrid.N = 64 64 64",
        "colour = blue",
        "just words",
        "seed = x",
    ],
)
def test_invalid_config_is_rejected(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_empty_fraction_list_runs_nothing():
    cfg = SweepConfig(fractions=())
    assert run_sweep(cfg) == []


def test_large_beta_warns():
    with pytest.warns(UserWarning, match="1/6"):
        SweepConfig(beta=0.2)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(OutputError):
        load_config(tmp_path / "absent.cfg")


def test_example_config_parses():
    here = os.path.dirname(__file__)
    cfg = load_config(os.path.join(here, "..", "scripts", "acceptance.cfg"))
    assert cfg.fractions == (0.80, 0.85, 0.90, 0.94)
    assert cfg.L == 4.0 and cfg.N == (256,) * 4


# -- power-law fit -----------------------------------------------------------


@pytest.mark.parametrize("beta", [0.0, 0.1])
def test_fit_recovers_synthetic_power_law(beta, constants):
    gaps = constants.a_star * np.array([0.2, 0.15, 0.1, 0.06])
    pref = 0.7
    energies = pref * gaps ** (0.5 - beta)
    fit = fit_power_law(gaps, energies, constants.a_star, constants.lam, 1.0, beta)
    assert abs(fit.slope - (0.5 - beta)) < 1e-12
    assert abs(fit.prefactor - pref) < 1e-12
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.expected_prefactor == pytest.approx(2 * constants.lam**2 / constants.a_star)


def test_fit_needs_three_points(constants):
    with pytest.raises(InsufficientDataError):
        fit_power_law([1.0, 2.0], [1.0, 1.5], constants.a_star, constants.lam)
    with pytest.raises(InsufficientDataError):
        fit_power_law([1.0, 2.0, math.nan], [1.0, 1.5, 2.0], constants.a_star, constants.lam)
    with pytest.raises(InsufficientDataError):
        fit_records([])


# -- sweep runs and reports --------------------------------------------------


def test_tiny_sweep_records(tiny_records, constants):
    assert [r.fraction for r in tiny_records] == [0.8, 0.85, 0.9]
    for r in tiny_records:
        assert r.ok and r.converged == 1 and r.grid_N == 64
        assert r.a == pytest.approx(r.fraction * constants.a_star)
        assert r.I == pytest.approx(r.covariant_kinetic + r.trap_energy + r.interaction, rel=1e-12)
        assert math.isnan(r.r1)
    energies = [r.I for r in tiny_records]
    assert energies == sorted(energies, reverse=True)


def test_failed_stage_is_recorded_and_sweep_continues(constants):
    # a/a* = 0.5 has mu > 0, so the blow-up analysis raises; the next point still runs
    recs = run_sweep(SweepConfig(fractions=(0.5, 0.8), N=64, expansion=False, restarts=0))
    assert recs[0].status.startswith("error: NumericalError")
    assert recs[1].ok


def test_header_matches_golden(tmp_path, tiny_records):
    assert ",".join(CSV_COLUMNS) == GOLDEN_HEADER
    p = tmp_path / "s.csv"
    write_csv(p, tiny_records)
    assert p.read_text().splitlines()[0] == GOLDEN_HEADER


def test_csv_roundtrip(tmp_path, tiny_records):
    p = tmp_path / "s.csv"
    write_csv(p, tiny_records)
    back = read_csv(p)
    for a, b in zip(tiny_records, back):
        for col in CSV_COLUMNS:
            x, y = getattr(a, col), getattr(b, col)
            assert (x == y) or (isinstance(x, float) and math.isnan(x) and math.isnan(y)), col
    q = tmp_path / "bad.csv"
    q.write_text("fraction,a\n0.5,1\n")
    with pytest.raises(ConfigurationError):
        read_csv(q)


def test_emit_report_files(tmp_path, tiny_records):
    paths = emit_report(tiny_records, tmp_path)
    names = {p.name for p in paths}
    assert {"sweep.csv", "fit.txt", *PLOT_FILES} <= names
    assert {f"field_{f:.4f}.txt" for f in (0.8, 0.85, 0.9)} <= names
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 1 + 3
    for name in PLOT_FILES:
        lines = (tmp_path / name).read_text().splitlines()
        assert lines[0].startswith("# ") and len(lines) == 1 + 3
    u, a, omega = read_snapshot(tmp_path / "field_0.8000.txt")
    assert a == tiny_records[0].a and omega == tiny_records[0].Omega
    assert np.array_equal(u.values, tiny_records[0].result.field.values)


def test_emit_report_unwritable_directory(tmp_path, tiny_records):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputError):
        emit_report(tiny_records, blocker / "sub")


def test_sweep_is_deterministic(tmp_path, tiny_records):
    again = run_sweep(SweepConfig(**TINY))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(a, tiny_records)
    write_csv(b, again)
    assert a.read_bytes() == b.read_bytes()


# -- command line ------------------------------------------------------------


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_townes(capsys, tmp_path, constants):
    code, out, _ = run_cli(["townes", "--out", str(tmp_path / "c.txt")], capsys)
    assert code == 0
    vals = dict(line.split(" = ") for line in out.splitlines())
    assert float(vals["a_star"]) == pytest.approx(constants.a_star, rel=1e-12)
    assert (tmp_path / "c.txt").exists()


def test_cli_configuration_errors(capsys, tmp_path):
    assert run_cli(["minimize", "--fraction", "1.2"], capsys)[0] == 2
    assert run_cli(["minimize", "--fraction", "0.5", "--N", "100"], capsys)[0] == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("fractions = 0.9 0.8\n")
    code, _, err = run_cli(["sweep", str(bad)], capsys)
    assert code == 2 and "increasing" in err
    assert run_cli(["expand", "--x0", "1,2,3"], capsys)[0] == 2


def test_cli_io_errors(capsys, tmp_path):
    assert run_cli(["report", str(tmp_path / "absent.csv"), "--outdir", str(tmp_path)], capsys)[0] == 4
    assert run_cli(["sweep", str(tmp_path / "absent.cfg")], capsys)[0] == 4
    assert run_cli(["vortex", str(tmp_path / "absent.txt")], capsys)[0] == 4


def test_cli_numerical_error(capsys, tmp_path):
    # a/a* = 0.94 on a 32-point grid collapses below the resolvable width
    assert run_cli(["minimize", "--fraction", "0.94", "--N", "32"], capsys)[0] == 3


def test_cli_sweep_report_vortex(capsys, tmp_path):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text("fractions = 0.8 0.85 0.9\ngrid.N = 64\nexpansion = no\nrestarts = 0\n")
    out1 = tmp_path / "run"
    code, out, _ = run_cli(["sweep", str(cfg), "--outdir", str(out1)], capsys)
    assert code == 0 and "slope" in out
    assert len(out.splitlines()) == 3 + 2
    out2 = tmp_path / "again"
    assert run_cli(["report", str(out1 / "sweep.csv"), "--outdir", str(out2)], capsys)[0] == 0
    for name in PLOT_FILES:
        assert (out2 / name).read_text() == (out1 / name).read_text()
    code, out, _ = run_cli(["vortex", str(out1 / "field_0.9000.txt")], capsys)
    assert code == 0 and "n_vortices = 0" in out


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_cli_minimize_writes_outputs(capsys, tmp_path):
    snap, rec = tmp_path / "u.txt", tmp_path / "r.txt"
    code, out, _ = run_cli(
        ["minimize", "--fraction", "0.8", "--N", "64", "--restarts", "0", "--out", str(snap), "--record", str(rec)],
        capsys,
    )
    assert code == 0
    assert "np.float64" not in out and "I = " in out
    u, a, _ = read_snapshot(snap)
    assert u.grid.N == 64
    code, out, _ = run_cli(["expand", "--snapshot", str(snap), "--outdir", str(tmp_path / "exp")], capsys)
    assert code == 0 and "r1 = " in out
    assert (tmp_path / "exp" / "psi1.txt").exists() and (tmp_path / "exp" / "residuals.txt").exists()


def test_records_default_to_nan():
    r = SweepRecord(fraction=0.5, a=1.0, beta=0.0, C0=1.0, Omega=1.0)
    assert math.isnan(r.I) and r.ok and r.result is None
    assert r.gap == 1.0
