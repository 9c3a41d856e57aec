"""Acceptance criteria 1-10 at their stated tolerances.

Each test records its outcome through the ``criterion`` fixture, which prints
one pass/fail line per criterion at the end of the session.
"""
import filecmp
import json
import math
import os
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import integrate

from levywave.levy_noise import TruncationSpec, exceedance_rate, make_stable_measure, sample_noise
from levywave.sobolev import (BumpWindow, atom_jump_agreement, delta_membership_scan,
                              kernel_path_profile, path_increment_stats)
from levywave.solver import Grid, make_initial_data, make_sigma, picard_solve
from levywave.verification import (BoxIntegrand, MomentSetup, effective_iterations,
                                   moment_bound_scan, moment_table, picard_convergence_check,
                                   rosenthal_check, stopping_time_check, unit_box)
from levywave.wave_kernel import (CONV_BOUND_DEFAULTS, SLACK, BetaChain, beta_chain, beta_chain_mc,
                                  check_conv_bound_family, check_key_inequality, check_subsemigroup_d1,
                                  eval_kernel, fourier_dft_check, kernel_p_mass, kernel_p_mass_quad)

M15 = make_stable_measure(1.5)
SEED = 2024


# ----------------------------------------------------------------- 1

def test_c1_kernel_identities(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for d, ps in ((1, (0.5, 1, 2, 4)), (2, (0.5, 1, 1.5, 1.9))):
        for p in ps:
            for t in (0.25, 1.0, 4.0):
                q, _ = kernel_p_mass_quad(d, p, t)
                worst = max(worst, abs(kernel_p_mass(d, p, t) - q) / q)
    mass = 0.0
    for t in (0.25, 1.0, 4.0):
        m1 = integrate.quad(lambda x: eval_kernel(1, t, x), -t, t)[0]
        m2 = integrate.quad(lambda r: r * (t + r) ** -0.5, 0, t, weight="alg", wvar=(0, -0.5))[0]
        mass = max(mass, abs(m1 - t) / t, abs(m2 - t) / t)
    dft = fourier_dft_check(1.0, 20.0, tol=1e-3)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and mass <= 1e-6 and dft.passed and dt <= 60
    criterion(1, "kernel identities", ok,
              f"p-mass rel {worst:.1e}, mass rel {mass:.1e}, DFT abs {dft.lhs:.1e}, {dt:.1f}s")
    assert ok


# ----------------------------------------------------------------- 2

def _nested(chain):
    t, b = chain.t, chain.betas
    if len(b) == 1:
        return integrate.quad(lambda s: 1.0, 0, t, weight="alg", wvar=(0, b[0]), epsabs=1e-16, epsrel=1e-12)[0]
    b1, b2 = b
    inner = lambda t1: integrate.quad(lambda t2: 1.0, t1, t, weight="alg", wvar=(b1, b2),
                                      epsabs=1e-16, epsrel=1e-12)[0]
    # the outer integrand behaves like (t - t1)^(b1 + b2 + 1), bounded for b > -1/2
    return integrate.quad(lambda t1: inner(t1) if t1 < t else 0.0, 0, t, epsabs=1e-16,
                          epsrel=1e-11, limit=200)[0]


def test_c2_beta_chain(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    q_err, mc_err = 0.0, 0.0
    for i in range(20):
        n = int(rng.integers(1, 5))
        chain = BetaChain(tuple(rng.uniform(-0.4, 2.0, n)), float(rng.uniform(0.5, 3.0)))
        exact = beta_chain(chain)
        if n <= 2:
            q_err = max(q_err, abs(_nested(chain) - exact) / exact)
        else:
            est, _ = beta_chain_mc(chain, 2_000_000, rng)
            mc_err = max(mc_err, abs(est - exact) / exact)
    dt = time.perf_counter() - t0
    ok = q_err <= 1e-8 and mc_err <= 0.01 and dt <= 120
    criterion(2, "beta chains", ok, f"quadrature rel {q_err:.1e}, MC rel {mc_err:.2%}, {dt:.1f}s")
    assert ok


# ----------------------------------------------------------------- 3

def test_c3_inequality_sweeps(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    n = 10_000
    r = rng.uniform(0, 2, n)
    s = r + rng.uniform(1e-3, 2, n)
    t = s + rng.uniform(1e-3, 2, n)
    x = rng.uniform(-1.2, 1.2, n) * (t - r)
    v_semi = int(np.sum(~check_subsemigroup_d1(r, s, t, x)[2]))
    tt = rng.uniform(1e-4, 20, 100_000)
    xi = rng.uniform(0, 1e3, 100_000)
    v_key = int(np.sum(~check_key_inequality(tt, xi)[2]))
    v_pq = 0
    for tp in (0.5, 1.0, 2.0):
        rho = tp * rng.uniform(0, 1 - 1e-9, 1000)
        p = rng.uniform(0.05, 1.9, 1000)
        q = p + rng.uniform(0, 1.9, 1000)
        g = eval_kernel(2, tp, rho)
        v_pq += int(np.sum(g ** p > (2 * math.pi * tp) ** (q - p) * g ** q * (1 + SLACK) + SLACK))
    bounds = [check_conv_bound_family(kind, q_, v) for kind, lst in CONV_BOUND_DEFAULTS.items() for q_, v in lst]
    bad = [f"{b.check}{b.params}" for b in bounds if not b.passed]
    drift = max(b.mesh["drift"] for b in bounds)
    dt = time.perf_counter() - t0
    ok = v_semi == 0 and v_key == 0 and v_pq == 0 and not bad and dt <= 600
    criterion(3, "inequality sweeps", ok,
              f"violations {v_semi}/{v_key}/{v_pq}, {len(bounds)} convolution-bound cases max drift {drift:.1e}, {dt:.1f}s")
    assert ok, bad


# ----------------------------------------------------------------- 4

def test_c4_stopping_time_law(criterion):
    lam4 = exceedance_rate(M15, TruncationSpec(4, 1.0), None, 1)
    reps = stopping_time_check(M15, (2, 4, 8), 1.0, 1, 1.0, 2.0, 10_000, SEED)
    ok = abs(lam4 - 2 / 3) <= 1e-12 and all(r.passed for r in reps)
    z = ", ".join(f"N={r.params['N']}: {(r.lhs - r.rhs) / r.lhs_se:+.2f} SE" for r in reps)
    criterion(4, "stopping-time law", ok, f"Lambda_4 = {lam4:.15f}; {z}")
    assert ok


# ----------------------------------------------------------------- 5

def test_c5_isometry(criterion):
    boxes = [unit_box(1, 1.0, 0), unit_box(1, 1.0, 1),
             BoxIntegrand(((0.0, 0.5, (0.0, 1.0)), (0.5, 1.0, (-1.0, 0.5))), (2.0, -1.0))]
    reps = [rosenthal_check(H, 2, M15, 10_000, seed=SEED) for H in boxes]
    ok = all(r.passed for r in reps)
    z = ", ".join(f"{r.extra['isometry_z']:.2f}" for r in reps)
    criterion(5, "compensated isometry", ok, f"|z| = {z}")
    assert ok


# ------------------------------------------------------------ 6, 7, 9

def _setup(sigma=None):
    return MomentSetup(M15, TruncationSpec(4, 1.0), sigma or make_sigma({"kind": "linear", "a": 1.0}),
                       make_initial_data({}, 1), d=1, T=1.0, A=1.0, R=2.0, epsilon=1e-2, p=2.0)


@pytest.fixture(scope="module")
def coarse_table():
    return moment_table(_setup(), 1 / 64, 1000, SEED, keep_logs=True)


def test_c6_moment_bound(criterion, coarse_table):
    t0 = time.perf_counter()
    fine = moment_table(_setup(), 1 / 128, 2000, SEED)
    rep = moment_bound_scan([coarse_table, fine], drift_tol=0.10)
    dt = time.perf_counter() - t0
    ok = rep.passed
    criterion(6, "moment bound", ok,
              f"sup E|u|^2: {coarse_table.sup:.3f} +- {coarse_table.sup_se:.3f} (64) vs "
              f"{fine.sup:.3f} +- {fine.sup_se:.3f} (128), drift {rep.extra['drifts'][0]:.1%}, "
              f"failed {rep.extra['failed']}, fine mesh {dt:.0f}s")
    assert ok


def test_c7_picard(criterion, coarse_table):
    rep = picard_convergence_check(coarse_table.logs, frac=0.99, tol=1e-6)
    add = moment_table(_setup(make_sigma({"kind": "constant", "c": 1.0})), 1 / 64, 100, SEED,
                       keep_logs=True)
    eff = {effective_iterations(lg) for lg in add.logs}
    ok = rep.passed and eff == {1}
    criterion(7, "Picard convergence", ok,
              f"Cauchy share {rep.lhs:.3f} of {len(coarse_table.logs)}, max sweeps "
              f"{rep.extra['max_iterations']}, additive effective iterations {sorted(eff)}")
    assert ok


def test_c9_finite_speed(criterion):
    g1 = Grid(1, 1 / 64, 1 / 64, 1.0, 1.0, 2.0)
    g2 = g1.with_radius(4.0)
    init, sig = make_initial_data({}, 1), make_sigma({"kind": "linear", "a": 1.0})
    tr = TruncationSpec(4, 1.0)
    worst = 0.0
    for rep in range(20):
        a, b = (picard_solve(init, sig, sample_noise(M15, g.window(), tr, SEED, g.lattice(), 1e-2,
                                                     replicate=rep), g) for g in (g1, g2))
        worst = max(worst, float(np.max(np.abs(a.region() - b.region()))))
    ok = worst == 0.0
    criterion(9, "finite speed", ok, f"max |u_R - u_2R| on |x|<=A over 20 replicates = {worst}")
    assert ok


# ----------------------------------------------------------------- 8

HS = [2.0 ** -k for k in range(1, 11)]


def test_c8_kernel_paths_d1(criterion):
    profs = [kernel_path_profile(1, r, HS) for r in (0.0, 0.2)]
    ok = all(p.right_continuous for p in profs)
    criterion(8, "d=1 kernel right-continuity (r = 0, 0.2)", ok,
              ", ".join(f"slope {p.extra['tail_slope']:.2f}" for p in profs))
    assert ok


def test_c8_kernel_path_d2(criterion):
    p = kernel_path_profile(2, -1.5, HS, at_start="point-mass", band=200.0)
    criterion(8, "d=2 kernel right-continuity (r = -1.5, G_0 = delta)", p.right_continuous,
              f"right increment at h={HS[-1]:.1e} is {p.right[-1]:.4f}, tail slope "
              f"{p.extra['tail_slope']:.3f}")
    assert p.right_continuous


def test_c8_left_jump(criterion):
    p = kernel_path_profile(2, -1.5, HS, at_start="point-mass", band=200.0)
    ok = abs(p.jump - 2 * math.pi) <= 0.02 * 2 * math.pi
    criterion(8, "d=2 left jump = 2 pi within 2%", ok, f"{p.jump:.4f}")
    assert ok


def test_c8_delta_membership(criterion):
    a, b = delta_membership_scan(2, -1.5), delta_membership_scan(2, -1.0)
    ok = a.converges and not b.converges
    criterion(8, "delta membership scan", ok,
              f"r=-1.5 converges to {a.limit:.4f}; r=-1 last ratio {b.ratios[-1]:.3f}")
    assert ok


@pytest.fixture(scope="module")
def d2_paths():
    grid = Grid(2, 1 / 32, 1 / 32, 1.0, 0.5, 1.5)
    init, sig = make_initial_data({}, 2), make_sigma({"kind": "constant", "c": 1.0})
    tr = TruncationSpec(4, 1.0)
    win = BumpWindow((0.0, 0.0), 0.5)
    small, agree = [], []
    for rep in range(100):
        nz = sample_noise(M15, grid.window(), tr, SEED, grid.lattice(), 1e-2, replicate=rep)
        path = picard_solve(init, sig, nz, grid, engine="spectral")
        small.append(path.u1)
        big = nz.large
        agree.append(atom_jump_agreement(path.u2, grid.dx, grid.times, big.t, big.x, -1.5, win)["agree"])
    return grid, win, small, agree


def test_c8_atom_jump_times(criterion, d2_paths):
    _, _, _, agree = d2_paths
    share = float(np.mean(agree))
    ok = share == 1.0
    criterion(8, "compound-Poisson jump times match atoms", ok,
              f"{share:.0%} of {len(agree)} replicates")
    assert ok


def test_c8_increment_exponent(criterion, d2_paths):
    grid, win, small, _ = d2_paths
    fit = path_increment_stats(small, grid.dx, grid.dt, -1.5, [1, 2, 4, 8], grid.nt // 2, win,
                               seed=SEED)
    ok = not fit.degenerate and fit.ci[0] >= 2.0
    criterion(8, "small-jump increment exponent >= 2", ok,
              f"slope {fit.slope:.2f}, 95% CI ({fit.ci[0]:.2f}, {fit.ci[1]:.2f})")
    assert ok


# ----------------------------------------------------------------- 10

SMALL = {
    "noise": {"N": [2, 4, 8], "epsilon": 0.05, "p": 1.8, "q": 1.2},
    "grid": {"T": 0.5, "A": 0.5, "R": 1.0, "dt": 0.0625, "dx": 0.0625},
    "analysis": {"windows": [{"radius": 0.5}], "lags": [1, 2]},
    "run": {"replicates": 500, "p4_replicates": 500, "moment_replicates": 10, "path_replicates": 100,
            "kernel_sweep_scale": 0.1},
}


def _cli():
    exe = shutil.which("levywave")
    return [exe] if exe else [sys.executable, "-c", "import sys; from levywave.cli_io import main; "
                                                    "sys.exit(main())"]


def test_c10_end_to_end_determinism(criterion, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SMALL))
    outs = [tmp_path / "run1", tmp_path / "run2"]
    codes = [subprocess.run(_cli() + ["all", "--config", str(cfg), "--seed", "11", "--out", str(o)],
                            capture_output=True, text=True).returncode for o in outs]
    files = sorted(os.path.relpath(os.path.join(dp, f), outs[0])
                   for dp, _, fs in os.walk(outs[0]) for f in fs)
    other = sorted(os.path.relpath(os.path.join(dp, f), outs[1])
                   for dp, _, fs in os.walk(outs[1]) for f in fs)
    _, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], files, shallow=False)
    ok = codes[0] == codes[1] and codes[0] in (0, 1) and files == other and not mismatch and not errors
    criterion(10, "levywave all is byte-reproducible", ok,
              f"{len(files)} files, {len(mismatch)} differ, exit codes {codes}")
    assert ok
