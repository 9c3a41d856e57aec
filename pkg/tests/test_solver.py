import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from levywave.errors import CoverageError, ParameterError
from levywave.levy_noise import (JumpSet, NoiseRealization, TruncationSpec, Window,
                                 make_stable_measure, moment_functionals, sample_noise)
from levywave.solver import (Grid, cell_weights_d1, cell_weights_d2, homogeneous_wave,
                             lattice_convolution, make_initial_data, make_sigma, patch_solution,
                             picard_solve)
from levywave.wave_kernel import eval_kernel

M15 = make_stable_measure(1.5)


def _noise(grid, seed=0, rep=0, N=4, eps=0.05, p=1.8, q=1.2, base=None):
    a = moment_functionals(M15, p, q, grid.d)
    return sample_noise(M15, grid.window(), TruncationSpec(N, 1.0), seed, lattice=grid.lattice(),
                        epsilon=eps, assumption=a, replicate=rep, base_level=base)


def test_grid_needs_the_light_cone():
    with pytest.raises(ParameterError, match="finite speed of propagation"):
        Grid(1, 0.1, 0.1, 1.0, 1.0, 1.5)
    with pytest.raises(ParameterError):
        Grid(1, 0.3, 0.1, 1.0, 0.0, 2.0)
    g = Grid(2, 0.25, 0.25, 1.0, 0.5, 1.5)
    assert g.shape == (5, 13, 13)


@settings(max_examples=40, deadline=None)
@given(k=st.integers(1, 60), m=st.integers(1, 4))
def test_d1_weights_sum_to_tau(k, m):
    dx = 1 / 16
    tau = k * dx / m
    _, w = cell_weights_d1(tau, dx)
    assert w.sum() * dx == pytest.approx(tau, rel=1e-13)


@pytest.mark.parametrize("k", [1, 2, 5, 11])
def test_d2_weights_sum_to_tau_and_stay_in_the_disk(k):
    dx = 1 / 8
    kern = cell_weights_d2(k * dx, dx)
    assert kern.sum() * dx * dx == pytest.approx(k * dx, rel=1e-12)
    w = (kern.shape[0] - 1) // 2
    o = np.arange(-w, w + 1)
    outside = o[:, None] ** 2 + o[None, :] ** 2 > k * k
    assert not np.any(kern[outside])


def test_homogeneous_wave_d1_closed_forms():
    init = make_initial_data({"u0": {"kind": "sin", "k": 2.0}, "v0": {"kind": "constant", "value": 0.5}}, 1)
    x = np.linspace(-2, 2, 9)
    for t in (0.0, 0.3, 1.7):
        assert np.allclose(homogeneous_wave(init, t, x), np.sin(2 * x) * np.cos(2 * t) + 0.5 * t, atol=1e-13)
    c = make_initial_data({}, 1)
    assert np.all(homogeneous_wave(c, 0.8, x) == 1.0)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
def test_homogeneous_wave_d2_gaussian_against_radial_integral(t):
    init = make_initial_data({"u0": {"kind": "gaussian"}, "v0": {"kind": "zero"}}, 2)
    exact = integrate.quad(lambda r: math.cos(t * r) * math.exp(-r * r / 2) * r, 0, 40, limit=400)[0]
    got = float(homogeneous_wave(init, t, np.zeros((1, 2)), n_quad=64)[0])
    assert got == pytest.approx(exact, abs=1e-9)


def test_d2_initial_data_need_q0():
    init = make_initial_data({"u0": {"kind": "gaussian"}}, 2)
    assert init.q0 > 2
    with pytest.raises(ParameterError):
        make_initial_data({"u0": {"kind": "sin"}}, 2)


def test_sigma_factory():
    rng = np.random.default_rng(0)
    for spec in ("zero", {"kind": "constant", "c": 2.0}, {"kind": "linear", "a": -0.7, "c": 1},
                 {"kind": "sin", "a": 3.0}, {"kind": "bounded-saturating", "a": 2.0}):
        assert make_sigma(spec).check_lipschitz(rng)
    assert make_sigma({"kind": "linear", "a": 0.0, "c": 3.0}).constant == 3.0
    with pytest.raises(ParameterError):
        make_sigma("cubic")


def test_cone_engine_matches_stencil():
    grid = Grid(1, 1 / 16, 1 / 16, 1.0, 0.5, 1.5)
    V = np.random.default_rng(1).normal(size=(grid.nt, grid.n))
    a = lattice_convolution(V, grid, "cone")
    b = lattice_convolution(V, grid, "stencil")
    assert np.max(np.abs(a - b)) < 1e-13 * np.max(np.abs(a))


def test_unit_source_spreads_mass_tau():
    grid = Grid(1, 1 / 16, 1 / 16, 1.0, 0.5, 2.0)
    V = np.zeros((grid.nt, grid.n))
    V[3, grid.half] = 1.0
    out = lattice_convolution(V, grid)
    for k in range(4, grid.nt + 1):
        assert out[k].sum() * grid.dx == pytest.approx((k - 3) * grid.dt, rel=1e-12)
    assert not np.any(out[:4])


def test_spectral_engine_is_close_to_stencil_for_smooth_sources():
    grid = Grid(1, 1 / 32, 1 / 32, 0.5, 0.5, 1.5)
    x = grid.nodes
    V = np.exp(-8 * x ** 2)[None, :] * np.ones((grid.nt, 1)) * grid.dt * grid.dx
    a = lattice_convolution(V, grid, "spectral")
    b = lattice_convolution(V, grid, "stencil")
    m = grid.eval_mask()
    assert np.max(np.abs(a[:, m] - b[:, m])) < 0.02 * np.max(np.abs(b))


def test_single_atom_adds_a_scaled_kernel():
    grid = Grid(1, 1 / 16, 1 / 16, 1.0, 1.0, 2.0)
    win = grid.window()
    tr = TruncationSpec(10, 1.0)
    stream = JumpSet(win, [0.3], [0.2], [2.5], "all")
    nz = NoiseRealization(win, tr, "with-drift", 0.0, 1.0, None, stream, None, 0)
    sol = picard_solve(make_initial_data({}, 1), make_sigma({"kind": "constant", "c": 1.0}), nz, grid)
    t = grid.times[:, None]
    expect = 1.0 + np.where(t > 0.3, 2.5 * eval_kernel(1, np.maximum(t - 0.3, 1e-300), grid.nodes[None] - 0.2), 0)
    assert np.max(np.abs(sol.u - expect)) < 1e-14
    assert sol.converged


def test_picard_reaches_the_discrete_fixed_point():
    grid = Grid(1, 1 / 32, 1 / 32, 0.5, 0.5, 1.0)
    nz = _noise(grid, seed=3)
    sig = make_sigma({"kind": "linear", "a": 1.0})
    init = make_initial_data({}, 1)
    sol = picard_solve(init, sig, nz, grid)
    assert sol.converged and sol.log[-1] == 0.0
    assert sol.iterations <= grid.nt + 1
    assert sol.decomposition_residual() == 0.0
    # one more sweep from the fixed point changes nothing
    again = picard_solve(init, sig, nz, grid, max_iters=1, w=sol.w)
    assert again.iterations == 1


def test_additive_noise_needs_two_sweeps():
    grid = Grid(1, 1 / 32, 1 / 32, 0.5, 0.5, 1.0)
    sol = picard_solve(make_initial_data({}, 1), make_sigma({"kind": "constant", "c": 1.0}),
                       _noise(grid, seed=4), grid)
    assert sol.log[1] == 0.0 and sol.iterations == 2


@pytest.mark.parametrize("d,dx", [(1, 1 / 16), (2, 1 / 4)])
def test_doubling_the_box_leaves_the_region_unchanged(d, dx):
    g1 = Grid(d, dx, dx, 0.5, 0.5, 1.0)
    g2 = g1.with_radius(2.0)
    sig = make_sigma({"kind": "sin", "a": 1.0})
    init = make_initial_data({}, d)
    for rep in range(3):
        a = picard_solve(init, sig, _noise(g1, seed=5, rep=rep), g1)
        b = picard_solve(init, sig, _noise(g2, seed=5, rep=rep), g2)
        assert np.array_equal(a.region(), b.region())


def test_patch_solution_and_coverage():
    grid = Grid(1, 1 / 16, 1 / 16, 1.0, 0.5, 1.5)
    nz = _noise(grid, seed=2, N=2, base=2)
    init, sig = make_initial_data({}, 1), make_sigma("sin")
    paths = [picard_solve(init, sig, nz.at_level(n), grid) for n in (2, 4, 8)]
    paths[0].tau, paths[1].tau, paths[2].tau = 0.25, 0.5, math.inf
    sol = patch_solution(paths)
    k = grid.times
    assert np.all(sol.served_by[k <= 0.25] == 2)
    assert np.all(sol.served_by[(k > 0.25) & (k <= 0.5)] == 4)
    assert np.array_equal(sol.u[-1], paths[2].u[-1])
    with pytest.raises(CoverageError):
        patch_solution(paths[:2], [0.25, 0.5])


def test_solution_write(tmp_path):
    grid = Grid(1, 1 / 8, 1 / 8, 0.5, 0.5, 1.0)
    sol = picard_solve(make_initial_data({}, 1), make_sigma("sin"), _noise(grid), grid)
    man = sol.write(tmp_path, "npy")
    assert np.array_equal(np.load(tmp_path / man["files"][0]), sol.u)
    man = sol.write(tmp_path / "csv", "csv")
    assert len(man["files"]) == grid.nt + 1
    assert np.allclose(np.loadtxt(tmp_path / "csv" / man["files"][2], delimiter=","), sol.u[2], rtol=0, atol=0)
