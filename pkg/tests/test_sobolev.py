import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from levywave.errors import ParameterError, StatisticsError
from levywave.sobolev import (BumpWindow, atom_jump_agreement, cover_windows, delta_membership_scan,
                              delta_norm_sq, detect_jumps, hr_norm, kernel_increment_sq,
                              kernel_path_profile, lattice_coords, path_increment_stats,
                              spectral_tail_bound)


def _gauss(n, dx, d):
    x = lattice_coords(n, dx)
    if d == 1:
        return np.exp(-x ** 2 / 2)
    return np.exp(-(x[:, None] ** 2 + x[None, :] ** 2) / 2)


@pytest.mark.parametrize("r,exact", [(0.0, 2 * math.pi * math.sqrt(math.pi)),
                                     (1.0, 2 * math.pi * 1.5 * math.sqrt(math.pi)),
                                     (-1.0, 2 * math.pi * math.pi * math.e * special.erfc(1.0))])
def test_gaussian_norm_d1(r, exact):
    v = hr_norm(_gauss(401, 1 / 16, 1), 1 / 16, r)
    assert v.squared == pytest.approx(exact, rel=1e-10)


def test_gaussian_norm_d2_and_conventions():
    f = _gauss(129, 1 / 8, 2)
    s = hr_norm(f, 1 / 8, 0.0)
    assert s.squared == pytest.approx(4 * math.pi ** 3, rel=1e-10)
    l2 = hr_norm(f, 1 / 8, 0.0, convention="l2")
    assert l2.squared == pytest.approx(math.pi, rel=1e-10)
    with pytest.raises(ParameterError):
        hr_norm(f, 1 / 8, 0.0, convention="unitary")


def test_kernel_l2_norm_in_both_conventions():
    dx = 1 / 256
    x = lattice_coords(1025, dx)
    g = np.where(np.abs(x) < 1, 0.5, 0.0) + np.where(np.isclose(np.abs(x), 1), 0.25, 0.0)
    l2 = hr_norm(g, dx, 0.0, convention="l2").squared
    assert l2 == pytest.approx(np.sum(g ** 2) * dx, rel=1e-12)   # discrete Parseval
    assert l2 == pytest.approx(0.5, abs=dx)
    assert hr_norm(g, dx, 0.0).squared == pytest.approx(2 * math.pi * l2, rel=1e-12)


def test_point_mass_in_d2():
    dx = 1 / 64
    f = np.zeros((257, 257))
    f[128, 128] = 1 / dx ** 2
    v = hr_norm(f, dx, -1.5, band=200.0)
    assert v.squared == pytest.approx(delta_norm_sq(2, -1.5, 200.0), rel=2e-3)
    assert v.squared == pytest.approx(2 * math.pi, rel=0.02)
    assert v.tail_bound == pytest.approx(spectral_tail_bound(2, -1.5, 200.0), rel=1e-9)
    assert math.isinf(hr_norm(f, dx, -1.0, band=200.0).tail_bound)


def test_band_above_nyquist_rejected():
    with pytest.raises(ParameterError):
        hr_norm(np.ones(16), 0.1, 0.0, band=100.0)


@settings(max_examples=30, deadline=None)
@given(r1=st.floats(-2, 1), dr=st.floats(0, 1), c=st.floats(0.1, 10), seed=st.integers(0, 1000))
def test_norm_monotone_in_r_and_quadratic(r1, dr, c, seed):
    f = np.random.default_rng(seed).normal(size=64)
    a = hr_norm(f, 0.1, r1).squared
    assert hr_norm(f, 0.1, r1 + dr).squared >= a * (1 - 1e-12)
    assert hr_norm(c * f, 0.1, r1).squared == pytest.approx(c * c * a, rel=1e-10)


def test_window_localises_the_norm():
    dx = 1 / 32
    x = lattice_coords(257, dx)
    w = BumpWindow((0.5,), 1.0)
    f = np.sin(3 * x)
    g = np.where(np.abs(x - 0.5) >= 1, 100.0 * np.cos(x), f)
    assert hr_norm(f, dx, -0.5, w).squared == hr_norm(g, dx, -0.5, w).squared
    with pytest.raises(ParameterError):
        hr_norm(f, dx, 0.0, BumpWindow((3.5,), 1.0))


def test_bump_window_shape():
    w = BumpWindow((0.0, 0.0), 2.0)
    assert w(np.zeros(2)) == 1.0
    assert w(np.array([2.0, 0.0])) == 0.0
    v, d1, d2 = w.edge_derivatives(1e-3)
    assert max(v, d1, d2) < 1e-30
    ws = cover_windows(1, 2.0, 0.5)
    x = np.linspace(-2, 2, 101)
    assert np.all(np.max([wi(x) for wi in ws], axis=0) > 0.1)


@pytest.mark.parametrize("d,r,limit", [(2, -1.5, 2 * math.pi),
                                       (1, -0.75, special.beta(0.5, 0.25))])
def test_membership_scan_converges(d, r, limit):
    v = delta_membership_scan(d, r)
    assert v.converges
    assert v.limit == pytest.approx(limit, rel=1e-3)


@pytest.mark.parametrize("d,r", [(2, -1.0), (1, -0.5), (2, -0.5)])
def test_membership_scan_diverges(d, r):
    v = delta_membership_scan(d, r)
    assert not v.converges and v.limit is None


@pytest.mark.parametrize("h", [0.5, 0.1, 0.01])
def test_kernel_increment_from_start_d1(h):
    assert kernel_increment_sq(1, 0.0, 0.0, h) == pytest.approx(math.pi * h, rel=1e-4)


def test_kernel_increment_between_positive_times_d1():
    # ||G_t - G_s||^2 in L2 (standard convention) = 2 pi (t - s) / 4 * 2
    assert kernel_increment_sq(1, 0.0, 0.5, 0.25) == pytest.approx(math.pi * 0.25, rel=1e-4)


HS = [2.0 ** -k for k in range(1, 11)]


def test_kernel_paths_d1_are_right_continuous():
    for r in (0.0, 0.2):
        p = kernel_path_profile(1, r, HS)
        assert p.right_continuous and p.jump == 0.0


def test_kernel_path_d2_depends_on_the_start_convention():
    lim = kernel_path_profile(2, -1.5, HS, at_start="limit")
    assert lim.right_continuous and lim.jump == 0.0
    pm = kernel_path_profile(2, -1.5, HS, at_start="point-mass")
    assert not pm.right_continuous
    assert pm.right[-1] == pytest.approx(2 * math.pi, rel=0.02)
    assert pm.jump == pytest.approx(2 * math.pi, rel=0.02)


def test_kernel_path_rejects_rough_r():
    with pytest.raises(ParameterError):
        kernel_path_profile(2, -1.0, HS)
    with pytest.raises(ParameterError):
        kernel_path_profile(1, 0.5, HS)


def test_detect_jumps():
    inc = np.ones(20)
    inc[7] = 9.0
    assert detect_jumps(inc).tolist() == [7]
    assert detect_jumps(np.zeros(10)).size == 0


def _brownian_stacks(n_rep, nt, seed, n=64):
    rng = np.random.default_rng(seed)
    g = np.exp(-lattice_coords(n, 0.1) ** 2)
    out = []
    for _ in range(n_rep):
        b = np.concatenate([[0.0], np.cumsum(rng.normal(0, math.sqrt(1 / nt), nt))])
        out.append(b[:, None] * g[None, :])
    return out


def test_increment_fit_recovers_brownian_exponent():
    nt = 64
    fit = path_increment_stats(_brownian_stacks(400, nt, 1), 0.1, 1 / nt, 0.0, [1, 2, 4, 8], 32, seed=0)
    assert fit.ci[0] <= 2.0 <= fit.ci[1]
    assert fit.forward_to_zero and not fit.degenerate


def test_increment_fit_guards():
    with pytest.raises(StatisticsError):
        path_increment_stats(_brownian_stacks(50, 16, 1), 0.1, 1 / 16, 0.0, [1, 2], 8)
    zeros = [np.zeros((17, 8))] * 100
    fit = path_increment_stats(zeros, 0.1, 1 / 16, 0.0, [1, 2], 8)
    assert fit.degenerate and math.isnan(fit.slope)


def test_atom_jump_agreement_on_a_step():
    dx, dt = 1 / 16, 1 / 16
    x = lattice_coords(65, dx)
    times = np.arange(17) * dt
    bump = np.exp(-x ** 2 * 4)
    stack = np.array([0.01 * t * np.ones_like(x) + (t >= 0.3) * bump for t in times])
    w = BumpWindow((0.0,), 1.0)
    res = atom_jump_agreement(stack, dx, times, [0.3], [[0.0]], 0.0, w)
    assert res["agree"] and res["expected"] == [4] and res["detected"] == [4]
    res = atom_jump_agreement(stack, dx, times, [0.3, 0.7], [[0.0], [0.2]], 0.0, w)
    assert not res["agree"]
