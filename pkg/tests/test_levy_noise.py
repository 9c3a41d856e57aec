import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special, stats

from levywave.errors import CoverageError, DivergenceError, ParameterError
from levywave.levy_noise import (JumpSet, Lattice, TruncationSpec, Window, exceedance_rate,
                                 make_stable_measure, moment_functionals, sample_jump_stream,
                                 sample_noise, sample_overflow, sample_small_jump_increments,
                                 stopping_time, substream, user_density_measure)

M15 = make_stable_measure(1.5)


def test_substream_is_deterministic_and_keyed():
    a = substream(7, 0, "noise", -3).random(5)
    b = substream(7, 0, "noise", -3).random(5)
    c = substream(7, 0, "noise", 3).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 1.9])
def test_band_mass_and_moments_match_quadrature(alpha):
    m = make_stable_measure(alpha, 1.0, 0.5)
    pdf = lambda z: float(m.pdf(z))
    for lo, hi in ((0.1, 1.0), (1.0, 4.0), (1.0, math.inf)):
        q = integrate.quad(pdf, lo, hi)[0] + integrate.quad(pdf, -hi, -lo)[0]
        assert m.band_mass(lo, hi) == pytest.approx(q, rel=1e-8)
    q2 = integrate.quad(lambda z: z * z * pdf(z), 0, 1)[0] + integrate.quad(lambda z: z * z * pdf(z), -1, 0)[0]
    assert m.abs_moment(2.0, 0.0, 1.0) == pytest.approx(q2, rel=1e-7)
    s = integrate.quad(lambda z: z * pdf(z), 0.1, 1)[0] + integrate.quad(lambda z: z * pdf(z), -1, -0.1)[0]
    assert m.signed_moment(0.1, 1.0) == pytest.approx(s, rel=1e-8)


def test_divergent_moments_are_infinite():
    assert math.isinf(M15.abs_moment(1.5, 0.0, 1.0))
    assert math.isinf(M15.abs_moment(1.5, 1.0, math.inf))
    assert math.isfinite(M15.abs_moment(1.2, 1.0, math.inf))


def test_invalid_alpha_rejected():
    for a in (0.0, 2.0, -1.0):
        with pytest.raises(ParameterError):
            make_stable_measure(a)


def test_user_density_must_be_levy():
    with pytest.raises(DivergenceError):
        user_density_measure(lambda z: abs(z) ** -3.5)
    m = user_density_measure(lambda z: math.exp(-abs(z)) * abs(z) ** -1.5, 0.5, math.inf)
    assert m.band_mass(1.0, 2.0) > 0


def test_sampled_marks_follow_the_band_law():
    rng = np.random.default_rng(3)
    z = M15.sample_marks(rng, 20000, 1.0, 4.0)
    a = np.abs(z)
    cdf = lambda u: (1 - u ** -1.5) / (1 - 4.0 ** -1.5)
    assert stats.kstest(a, cdf).pvalue > 1e-3
    assert a.min() > 1.0 and a.max() <= 4.0
    assert abs(np.mean(z > 0) - 0.5) < 0.02


def test_moment_functionals_name_the_divergent_functional():
    with pytest.raises(DivergenceError, match="gamma1"):
        moment_functionals(M15, 1.2, 1.0)
    with pytest.raises(DivergenceError, match="gamma2"):
        moment_functionals(M15, 1.8, 1.6)
    a = moment_functionals(M15, 1.8, 1.2)
    assert a.mode == "with-drift"
    assert a.gamma1 == pytest.approx(2 / 0.3)


def test_no_drift_mode_requires_matching_drift():
    m = make_stable_measure(0.5, 1.0, 0.2)
    a = moment_functionals(m, 0.8, 0.3)
    assert a.mode == "no-drift"
    assert a.b == pytest.approx(m.signed_moment(0.0, 1.0))
    with pytest.raises(ParameterError):
        moment_functionals(m, 0.8, 0.3, b=a.b + 1.0)


def test_exceedance_rate_anchor_and_quadrature():
    lam = exceedance_rate(M15, TruncationSpec(4, 1.0), None, 1)
    assert lam == pytest.approx(2 / 3, rel=1e-12)
    # closed form against radial quadrature for d=2
    tr = TruncationSpec(3, 1.5)
    q = integrate.quad(lambda r: 2 * math.pi * r * float(M15.tail(3 * (1 + r ** 1.5))), 0, math.inf)[0]
    assert exceedance_rate(M15, tr, None, 2) == pytest.approx(q, rel=1e-7)
    with pytest.raises(DivergenceError):
        exceedance_rate(M15, TruncationSpec(4, 0.5), None, 1)


@settings(max_examples=15, deadline=None)
@given(R1=st.floats(0.5, 2.0), extra=st.floats(0.1, 2.0), seed=st.integers(0, 2 ** 16))
def test_jump_stream_nests_across_boxes(R1, extra, seed):
    small = sample_jump_stream(M15, Window(1.0, R1, 1), seed)
    big = sample_jump_stream(M15, Window(1.0, R1 + extra, 1), seed)
    inner = big.restrict(R1)
    assert np.array_equal(small.t, inner.t)
    assert np.array_equal(small.z, inner.z)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 16), n1=st.integers(1, 6), dn=st.integers(1, 6))
def test_raising_n_moves_atoms_from_overflow_to_large(seed, n1, dn):
    s = sample_jump_stream(M15, Window(1.0, 3.0, 1), seed)
    l1, o1 = s.split(TruncationSpec(n1, 1.0))
    l2, o2 = s.split(TruncationSpec(n1 + dn, 1.0))
    assert len(l1) + len(o1) == len(s)
    assert set(l1.t) <= set(l2.t)
    assert set(o2.t) <= set(o1.t)


def test_jumpset_csv_round_trip(tmp_path):
    s = sample_jump_stream(M15, Window(1.0, 2.0, 2), 11)
    p = tmp_path / "a.csv"
    s.to_csv(p)
    back = JumpSet.from_csv(p, s.window)
    assert np.array_equal(back.t, s.t) and np.array_equal(back.x, s.x) and np.array_equal(back.z, s.z)


def test_jumpset_validation():
    w = Window(1.0, 1.0, 1)
    with pytest.raises(ParameterError):
        JumpSet(w, [0.5, 0.2], [0.0, 0.0], [2.0, 2.0], "all")
    with pytest.raises(CoverageError):
        JumpSet(w, [0.5], [1.5], [2.0], "all")
    with pytest.raises(ParameterError):
        JumpSet(w, [0.5], [0.0], [9.0], "large", trunc=TruncationSpec(2, 1.0))


def test_small_jump_increments_moments():
    lat = Lattice(1, 40, 0.05, 0.05, 200)
    f = sample_small_jump_increments(M15, None, lat, 0.05, seed=2)
    v = f.increments.ravel()
    var = M15.abs_moment(2.0, 0.05, 1.0) * lat.cell_volume
    se_mean = math.sqrt(var / v.size)
    assert abs(v.mean()) < 4 * se_mean
    assert v.var() == pytest.approx(var, rel=0.05)


def test_epsilon_one_gives_zero_field():
    lat = Lattice(1, 4, 0.25, 0.25, 8)
    f = sample_small_jump_increments(M15, None, lat, 1.0, seed=2)
    assert not np.any(f.increments)
    with pytest.raises(ParameterError):
        sample_small_jump_increments(M15, None, lat, 0.0, seed=2)


def test_whole_space_overflow_count_matches_rate():
    tr = TruncationSpec(2, 1.0)
    counts = [len(sample_overflow(M15, Window(1.0, 1.0, 1), tr, seed=5, replicate=r))
              for r in range(3000)]
    lam = exceedance_rate(M15, tr, None, 1)
    se = math.sqrt(lam / len(counts))
    assert abs(np.mean(counts) - lam) < 4 * se


def test_stopping_time_monotone_in_n():
    win = Window(1.0, 2.0, 1)
    for rep in range(50):
        nz = sample_noise(M15, win, TruncationSpec(2, 1.0), 9, replicate=rep, base_level=2)
        taus = [nz.at_level(n).tau(1.0) for n in (2, 4, 8)]
        assert taus[0] <= taus[1] <= taus[2]
        assert stopping_time(nz.overflow, 1.0) == taus[0]


def test_noise_write_manifest(tmp_path):
    lat = Lattice(1, 8, 0.125, 0.125, 16)
    nz = sample_noise(M15, Window(1.0, 2.0, 1), TruncationSpec(4, 1.0), 1, lattice=lat)
    man = nz.write(tmp_path)
    assert set(man["files"]) == {"large", "overflow", "small"}
    assert (tmp_path / "noise_small.npy").exists()
