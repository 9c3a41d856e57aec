"""Levy measures, Poisson random measure sampling and truncation stopping times.

The noise on a bounded window is assembled from three independent parts:

* small jumps ``eps < |z| <= 1`` aggregated into lattice-cell increments,
  compensated in the with-drift mode and left raw in the no-drift mode;
* large jumps ``1 < |z| <= N h(x)`` kept as individual atoms;
* overflow atoms ``|z| > N h(x)``, used only for the stopping time ``tau_N``.

Large and overflow atoms come from one stream of all atoms with ``|z| > 1``,
so raising ``N`` only moves atoms from the overflow set into the large set.
"""
from __future__ import annotations

import csv
import json
import math
import os
import warnings
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import CoverageError, DivergenceError, ParameterError

BANDS = ("small", "large", "overflow", "all")
TILE = 1.0          # side of the spatial tiles keying the large-jump streams
BLOCK = 16          # lattice nodes per axis keying the small-jump streams


# ---------------------------------------------------------------- rng streams

def _key(k) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode())
    k = int(k)
    return 2 * k if k >= 0 else -2 * k - 1


def substream(seed: int, *keys) -> np.random.Generator:
    """Generator for the sub-stream ``(seed, *keys)``.

    Strings are hashed with crc32 and signed integers zig-zag encoded, so tile
    indices like ``-3`` are valid keys.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


# --------------------------------------------------------------- Levy measure

def _unit_ball_volume(d: int) -> float:
    return 2.0 if d == 1 else math.pi


@dataclass(frozen=True, eq=False)
class LevyMeasure:
    """Jump-size measure with a density.

    ``kind`` is ``"stable"`` (density ``c_plus z**(-alpha-1)`` on ``z > 0`` and
    ``c_minus |z|**(-alpha-1)`` on ``z < 0``) or ``"user-density"``.  For user
    densities, ``small_exponent`` and ``large_exponent`` declare the
    integrability range: ``int_{|z|<=1} |z|^p`` is finite iff
    ``p > small_exponent`` and ``int_{|z|>1} |z|^q`` is finite iff
    ``q < large_exponent``.
    """

    kind: str
    alpha: float | None = None
    c_plus: float = 0.0
    c_minus: float = 0.0
    density: Callable | None = None
    small_exponent: float | None = None
    large_exponent: float | None = None

    def __post_init__(self):
        if self.kind == "stable":
            a = self.alpha
            if a is None or not (0.0 < a < 2.0):
                raise ParameterError(f"alpha must lie in (0, 2), got {a}")
            if self.c_plus < 0 or self.c_minus < 0 or self.c_plus + self.c_minus <= 0:
                raise ParameterError("need c_plus, c_minus >= 0 with c_plus + c_minus > 0")
        elif self.kind == "user-density":
            if not callable(self.density):
                raise ParameterError("user-density measure needs a callable density")
        else:
            raise ParameterError(f"unknown measure kind {self.kind!r}")
        self._validate_levy()

    # -- density and one-sided quadrature
    def pdf(self, z):
        z = np.asarray(z, float)
        if self.kind == "stable":
            az = np.abs(z)
            with np.errstate(divide="ignore"):
                base = np.where(az > 0, az ** (-self.alpha - 1.0), 0.0)
            return np.where(z > 0, self.c_plus, self.c_minus) * base * (z != 0)
        return np.where(z != 0, np.vectorize(self.density, otypes=[float])(z), 0.0)

    def _quad_side(self, fn, lo, hi, sign):
        """One-sided quadrature; ``inf`` when QUADPACK flags divergence."""
        g = lambda u: fn(u) * float(self.pdf(sign * u))
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(g, lo, hi, limit=200)
            except integrate.IntegrationWarning:
                return math.inf
        return val

    def quad_band(self, fn, lo: float, hi: float) -> float:
        """Quadrature of ``fn(|z|)`` against ``nu`` on ``lo < |z| <= hi``."""
        return self._quad_side(fn, lo, hi, 1.0) + self._quad_side(fn, lo, hi, -1.0)

    def _validate_levy(self):
        small = self.quad_band(lambda u: u * u, 0.0, 1.0)
        big = self.quad_band(lambda u: 1.0, 1.0, math.inf)
        if not (np.isfinite(small) and np.isfinite(big)):
            raise DivergenceError("int (|z|^2 ^ 1) nu(dz) is not finite")
        if self.kind == "stable":
            c = self.c_plus + self.c_minus
            for got, want in ((small, c / (2.0 - self.alpha)), (big, c / self.alpha)):
                if abs(got - want) > 1e-8 * abs(want):
                    raise DivergenceError("quadrature of the stable density disagrees with its closed form")

    # -- tail and moment functionals
    @property
    def total(self) -> float:
        return self.c_plus + self.c_minus

    def tail(self, u):
        """``nu(|z| > u)`` for ``u > 0``."""
        u = np.asarray(u, float)
        if self.kind == "stable":
            with np.errstate(divide="ignore"):
                return self.total * u ** (-self.alpha) / self.alpha
        f = np.vectorize(lambda v: self.quad_band(lambda s: 1.0, v, math.inf), otypes=[float])
        return f(u)

    def band_mass(self, lo: float, hi: float = math.inf) -> float:
        """``nu(lo < |z| <= hi)``."""
        if hi <= lo:
            return 0.0
        if self.kind == "stable":
            top = 0.0 if math.isinf(hi) else hi ** (-self.alpha)
            return self.total * (lo ** (-self.alpha) - top) / self.alpha
        return self.quad_band(lambda s: 1.0, lo, hi)

    def abs_moment(self, p: float, lo: float = 0.0, hi: float = math.inf) -> float:
        """``int_{lo<|z|<=hi} |z|^p nu(dz)``; ``inf`` when divergent."""
        if hi <= lo:
            return 0.0
        if self.kind == "stable":
            a = self.alpha
            if lo == 0.0 and p <= a:
                return math.inf
            if math.isinf(hi) and p >= a:
                return math.inf
            if p == a:
                return self.total * math.log(hi / lo)
            top = 0.0 if math.isinf(hi) else hi ** (p - a)
            bot = 0.0 if lo == 0.0 else lo ** (p - a)
            return self.total * (top - bot) / (p - a)
        if lo == 0.0 and self.small_exponent is not None and p <= self.small_exponent:
            return math.inf
        if math.isinf(hi) and self.large_exponent is not None and p >= self.large_exponent:
            return math.inf
        return self.quad_band(lambda s: s ** p, lo, hi)

    def signed_moment(self, lo: float = 0.0, hi: float = 1.0) -> float:
        """``int_{lo<|z|<=hi} z nu(dz)``."""
        if hi <= lo:
            return 0.0
        if self.kind == "stable":
            a = self.alpha
            if lo == 0.0 and a >= 1.0 and self.c_plus != self.c_minus:
                return math.inf
            if lo == 0.0 and a >= 1.0:
                return 0.0
            if a == 1.0:
                one_side = math.log(hi / lo)
            else:
                top = 0.0 if math.isinf(hi) else hi ** (1.0 - a)
                bot = 0.0 if lo == 0.0 else lo ** (1.0 - a)
                one_side = (top - bot) / (1.0 - a)
            return (self.c_plus - self.c_minus) * one_side
        return (self._quad_side(lambda s: s, lo, hi, 1.0)
                - self._quad_side(lambda s: s, lo, hi, -1.0))

    # -- mark sampling
    def sample_marks(self, rng: np.random.Generator, n: int, lo: float, hi: float = math.inf):
        """Draw ``n`` marks from ``nu`` restricted to ``lo < |z| <= hi``, normalised."""
        n = int(n)
        if n == 0:
            return np.empty(0)
        u = rng.random(n)
        s = rng.random(n)
        if self.kind == "stable":
            a = self.alpha
            top = 0.0 if math.isinf(hi) else hi ** (-a)
            mag = (lo ** (-a) - u * (lo ** (-a) - top)) ** (-1.0 / a)
            sign = np.where(s < self.c_plus / self.total, 1.0, -1.0)
            return sign * mag
        grid, cdf_pos, cdf_neg, w_pos = _user_tables(self, lo, hi)
        sign = np.where(s < w_pos, 1.0, -1.0)
        mag = np.where(sign > 0, np.exp(np.interp(u, cdf_pos, np.log(grid))),
                       np.exp(np.interp(u, cdf_neg, np.log(grid))))
        return sign * mag


_TABLES: dict = {}


def _user_tables(m: LevyMeasure, lo: float, hi: float):
    key = (id(m), lo, hi)
    if key in _TABLES:
        return _TABLES[key]
    mass = m.band_mass(lo, hi)
    if math.isinf(hi):
        hi_eff = lo * 2.0
        while m.band_mass(hi_eff, math.inf) > 1e-12 * mass and hi_eff < 1e12:
            hi_eff *= 2.0
    else:
        hi_eff = hi
    grid = np.geomspace(lo, hi_eff, 1025)
    pos = np.array([m._quad_side(lambda v: 1.0, a, b, 1.0) for a, b in zip(grid[:-1], grid[1:])])
    neg = np.array([m._quad_side(lambda v: 1.0, a, b, -1.0) for a, b in zip(grid[:-1], grid[1:])])
    cp = np.concatenate([[0.0], np.cumsum(pos)])
    cn = np.concatenate([[0.0], np.cumsum(neg)])
    w_pos = cp[-1] / (cp[-1] + cn[-1])
    cp = cp / cp[-1] if cp[-1] > 0 else np.linspace(0, 1, cp.size)
    cn = cn / cn[-1] if cn[-1] > 0 else np.linspace(0, 1, cn.size)
    _TABLES[key] = (grid, cp, cn, w_pos)
    return _TABLES[key]


def make_stable_measure(alpha: float, c_plus: float = 1.0, c_minus: float = 1.0) -> LevyMeasure:
    """Alpha-stable Levy measure with density ``c_pm |z|**(-alpha-1)``."""
    return LevyMeasure("stable", alpha=float(alpha), c_plus=float(c_plus), c_minus=float(c_minus))


def user_density_measure(density, small_exponent=None, large_exponent=None) -> LevyMeasure:
    return LevyMeasure("user-density", density=density,
                       small_exponent=small_exponent, large_exponent=large_exponent)


# --------------------------------------------------------- moment conditions

@dataclass(frozen=True)
class AssumptionA:
    """Moment exponents and functionals of the noise.

    ``gamma1 = int_{|z|<=1} |z|^p nu`` and ``gamma2 = int_{|z|>1} |z|^q nu``.
    """

    p: float
    q: float
    gamma1: float
    gamma2: float
    b: float
    d: int = 1

    @property
    def mode(self) -> str:
        return "no-drift" if self.p < 1.0 else "with-drift"


def moment_functionals(measure: LevyMeasure, p: float, q: float, d: int = 1,
                       b: float | None = None, tol: float = 1e-8) -> AssumptionA:
    """Compute ``gamma1``, ``gamma2`` and the drift, enforcing the moment conditions.

    Raises
    ------
    DivergenceError
        If ``gamma1`` or ``gamma2`` is infinite (the message names which).
    ParameterError
        For ``p <= 0``, ``q`` outside ``(0, p]``, ``d = 2`` with ``p >= 2``, or a
        drift inconsistent with the no-drift decomposition when ``p < 1``.
    """
    if not p > 0:
        raise ParameterError(f"p must be positive, got {p}")
    if not (0 < q <= p):
        raise ParameterError(f"q must lie in (0, p], got q={q}, p={p}")
    if d not in (1, 2):
        raise ParameterError(f"dimension must be 1 or 2, got {d}")
    if d == 2 and p >= 2:
        raise ParameterError("d = 2 requires p < 2")
    g1 = measure.abs_moment(p, 0.0, 1.0)
    if not np.isfinite(g1):
        raise DivergenceError(f"gamma1 = int_{{|z|<=1}} |z|^{p} nu(dz) diverges")
    g2 = measure.abs_moment(q, 1.0, math.inf)
    if not np.isfinite(g2):
        raise DivergenceError(f"gamma2 = int_{{|z|>1}} |z|^{q} nu(dz) diverges")
    if p < 1.0:
        drift = measure.signed_moment(0.0, 1.0)
        check = measure._quad_side(lambda s: s, 0.0, 1.0, 1.0) - measure._quad_side(lambda s: s, 0.0, 1.0, -1.0)
        if abs(check - drift) > 1e-6 * max(1.0, abs(drift)):
            raise DivergenceError("small-jump first moment: quadrature and closed form disagree")
        if b is not None and abs(b - drift) > tol * max(1.0, abs(drift)):
            raise ParameterError(f"for p < 1 the drift must equal int_{{|z|<=1}} z nu = {drift}, got {b}")
        b = drift
    elif b is None:
        b = 0.0
    return AssumptionA(float(p), float(q), float(g1), float(g2), float(b), int(d))


# ----------------------------------------------------------------- truncation

@dataclass(frozen=True)
class TruncationSpec:
    """Truncation level ``N`` and spatial weight ``h(x) = 1 + |x|**eta``."""

    N: int
    eta: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be an integer >= 1, got {self.N}")
        if not self.eta > 0:
            raise ParameterError(f"eta must be positive, got {self.eta}")

    def h(self, rho):
        """Weight as a function of the radius ``|x|``."""
        return 1.0 + np.abs(np.asarray(rho, float)) ** self.eta

    def cap(self, x, level: float | None = None):
        """``level * h(x)`` for points ``x`` of shape ``(n, d)``."""
        level = self.N if level is None else level
        x = np.asarray(x, float)
        rho = np.abs(x) if x.ndim == 1 else np.linalg.norm(x, axis=-1)
        return level * self.h(rho)


@dataclass(frozen=True)
class Window:
    """Space-time window ``[0, T] x [-R, R]^d``; ``R = inf`` means all space."""

    T: float
    R: float
    d: int

    def __post_init__(self):
        if not self.T > 0 or not self.R > 0 or self.d not in (1, 2):
            raise ParameterError(f"invalid window {self}")


@dataclass(frozen=True)
class Lattice:
    """Space-time cells of size ``dt x dx^d`` centred on ``x_j = j dx``, ``|j| <= half``."""

    d: int
    nt: int
    dt: float
    dx: float
    half: int

    @property
    def n(self) -> int:
        return 2 * self.half + 1

    @property
    def shape(self):
        return (self.nt,) + (self.n,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.dt * self.dx ** self.d

    def nodes(self):
        return np.arange(-self.half, self.half + 1) * self.dx

    def covers(self, window: Window) -> bool:
        return (self.nt * self.dt >= window.T * (1 - 1e-12)
                and (self.half + 0.5) * self.dx >= window.R * (1 - 1e-12))


# ------------------------------------------------------------------- JumpSet

@dataclass(eq=False)
class JumpSet:
    """Atoms ``(T_i, X_i, Z_i)`` of the Poisson random measure, sorted by time."""

    window: Window
    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    band: str
    seed: dict = field(default_factory=dict)
    trunc: TruncationSpec | None = None

    def __post_init__(self):
        d = self.window.d
        self.t = np.asarray(self.t, float).reshape(-1)
        self.x = np.asarray(self.x, float).reshape(-1, d)
        self.z = np.asarray(self.z, float).reshape(-1)
        if not (self.t.size == self.x.shape[0] == self.z.size):
            raise ParameterError("atom arrays have inconsistent lengths")
        if self.band not in BANDS:
            raise ParameterError(f"unknown band {self.band!r}")
        if self.t.size:
            if np.any(np.diff(self.t) < 0):
                raise ParameterError("atoms must be sorted by time")
            if self.t[0] < 0 or self.t[-1] > self.window.T:
                raise CoverageError("atom time outside the window")
            if np.isfinite(self.window.R) and np.any(np.abs(self.x) > self.window.R):
                raise CoverageError("atom position outside the window")
            if self.trunc is not None:
                cap = self.trunc.cap(self.x if d == 2 else self.x[:, 0])
                az = np.abs(self.z)
                if self.band == "large" and np.any((az <= 1) | (az > cap)):
                    raise ParameterError("large-band atom outside 1 < |z| <= N h(x)")
                if self.band == "overflow" and np.any(az <= cap):
                    raise ParameterError("overflow atom with |z| <= N h(x)")
        for a in (self.t, self.x, self.z):
            a.setflags(write=False)

    def __len__(self):
        return int(self.t.size)

    def _subset(self, mask, band=None, trunc=None, window=None):
        return JumpSet(window or self.window, self.t[mask], self.x[mask], self.z[mask],
                       band or self.band, dict(self.seed), trunc if trunc is not None else self.trunc)

    def caps(self, trunc: TruncationSpec, level=None):
        return trunc.cap(self.x if self.window.d == 2 else self.x[:, 0], level)

    def split(self, trunc: TruncationSpec):
        """Split an ``|z| > 1`` stream into its large and overflow parts."""
        big = np.abs(self.z) > self.caps(trunc)
        return (self._subset(~big, "large", trunc), self._subset(big, "overflow", trunc))

    def thin(self, level: int):
        """Overflow atoms for a higher level on the same stream."""
        if self.trunc is None or level < self.trunc.N:
            raise ParameterError("thinning needs a truncation spec with N <= level")
        keep = np.abs(self.z) > self.caps(self.trunc, level)
        return self._subset(keep, trunc=replace(self.trunc, N=int(level)))

    def restrict(self, R: float):
        """Atoms with all coordinates in ``[-R, R]``."""
        keep = np.all(np.abs(self.x) <= R, axis=1)
        return self._subset(keep, window=replace(self.window, R=R))

    @staticmethod
    def merge(a: "JumpSet", b: "JumpSet", window: Window, band: str) -> "JumpSet":
        t = np.concatenate([a.t, b.t])
        order = np.argsort(t, kind="stable")
        return JumpSet(window, t[order], np.concatenate([a.x, b.x])[order],
                       np.concatenate([a.z, b.z])[order], band,
                       {**a.seed, **b.seed}, a.trunc or b.trunc)

    # -- serialisation
    def header(self):
        return ["t"] + [f"x{i + 1}" for i in range(self.window.d)] + ["z", "band"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for i in range(len(self)):
                w.writerow([repr(float(self.t[i]))] + [repr(float(v)) for v in self.x[i]]
                           + [repr(float(self.z[i])), self.band])

    @classmethod
    def from_csv(cls, path, window: Window, seed=None, trunc=None) -> "JumpSet":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        head, body = rows[0], rows[1:]
        d = len(head) - 3
        if d != window.d:
            raise ParameterError("CSV dimension does not match the window")
        bands = {r[-1] for r in body}
        if len(bands) > 1:
            raise ParameterError("CSV mixes several bands")
        band = bands.pop() if bands else "all"
        arr = np.array([[float(v) for v in r[:-1]] for r in body]).reshape(-1, d + 2)
        return cls(window, arr[:, 0], arr[:, 1:1 + d], arr[:, -1], band, seed or {}, trunc)


# ------------------------------------------------------------------ sampling

def _tile_range(R: float):
    return range(int(math.floor(-R / TILE)), int(math.ceil(R / TILE)))


def sample_jump_stream(measure: LevyMeasure, window: Window, seed: int,
                       replicate: int = 0, lo: float = 1.0) -> JumpSet:
    """All atoms with ``|z| > lo`` in ``window``.

    Space is tiled by unit cells with independent keyed streams, so a larger
    box reproduces the atoms of a smaller one exactly.
    """
    if not np.isfinite(window.R):
        raise CoverageError("the |z| > 1 stream needs a bounded box")
    rate = measure.band_mass(lo, math.inf) * window.T * TILE ** window.d
    ts, xs, zs = [], [], []
    tiles = _tile_range(window.R)
    grid = [(i,) for i in tiles] if window.d == 1 else [(i, j) for i in tiles for j in tiles]
    for tile in grid:
        rng = substream(seed, replicate, "noise", "jumps", *tile)
        n = rng.poisson(rate)
        t = rng.random(n) * window.T
        x = (np.asarray(tile, float) + rng.random((n, window.d))) * TILE
        z = measure.sample_marks(rng, n, lo)
        keep = np.all(np.abs(x) <= window.R, axis=1)
        ts.append(t[keep]); xs.append(x[keep]); zs.append(z[keep])
    t = np.concatenate(ts) if ts else np.empty(0)
    x = np.concatenate(xs) if xs else np.empty((0, window.d))
    z = np.concatenate(zs) if zs else np.empty(0)
    order = np.argsort(t, kind="stable")
    return JumpSet(window, t[order], x[order], z[order], "all",
                   {"seed": int(seed), "replicate": int(replicate), "stream": "jumps"})


def sample_large_jumps(measure: LevyMeasure, window: Window, trunc: TruncationSpec,
                       seed: int, replicate: int = 0) -> JumpSet:
    """Atoms with ``1 < |z| <= N h(x)``: Poisson count, exact inverse-CDF marks."""
    return sample_jump_stream(measure, window, seed, replicate).split(trunc)[0]


def exceedance_rate(measure: LevyMeasure, trunc: TruncationSpec, domain: float | None = None,
                    d: int = 1) -> float:
    """``Lambda_N = int nu(|z| > N h(x)) dx`` over ``[-R, R]^d`` or all of space.

    Raises
    ------
    DivergenceError
        On all of space when the integral is infinite (``eta * alpha <= d`` for
        stable measures).
    """
    N, eta = trunc.N, trunc.eta
    if domain is None:
        if measure.kind == "stable":
            a = measure.alpha
            if eta * a <= d:
                raise DivergenceError(f"overflow rate diverges: eta*alpha = {eta * a} <= d = {d}")
            k = d / eta
            return float(measure.total / a * N ** (-a) * k * _unit_ball_volume(d)
                         * special.beta(k, a - k))
        f = lambda r: float(measure.tail(N * (1 + r ** eta))) * (2.0 if d == 1 else 2 * math.pi * r)
        val, err = integrate.quad(f, 0, math.inf, limit=400)
        if not np.isfinite(val) or err > 1e-3 * max(abs(val), 1e-300):
            raise DivergenceError("overflow rate did not converge on all of space")
        return float(val)
    R = float(domain)
    tail = lambda r: float(measure.tail(N * (1.0 + r ** eta)))
    if d == 1:
        return 2.0 * integrate.quad(tail, 0.0, R, limit=200)[0]
    g = lambda y, x: tail(math.hypot(x, y))
    return 4.0 * integrate.dblquad(g, 0.0, R, 0.0, R, epsabs=1e-12, epsrel=1e-10)[0]


def _whole_space_overflow(measure: LevyMeasure, T: float, d: int, trunc: TruncationSpec,
                          rng: np.random.Generator):
    """Exact overflow atoms on all of space for a stable measure.

    With ``y = |z| / N`` the overflow intensity has ``|z|``-marginal
    proportional to ``y**(-alpha-1) (y-1)**(d/eta)``, i.e. ``1/y`` is
    Beta(alpha - d/eta, d/eta + 1); given ``|z|`` the position is uniform in the
    ball ``|x| < (y-1)**(1/eta)``.
    """
    a, k = measure.alpha, d / trunc.eta
    lam = exceedance_rate(measure, trunc, None, d) * T
    n = rng.poisson(lam)
    t = rng.random(n) * T
    w = rng.beta(a - k, k + 1.0, size=n)
    y = 1.0 / w
    rho = (y - 1.0) ** (1.0 / trunc.eta)
    if d == 1:
        x = (2.0 * rng.random(n) - 1.0)[:, None] * rho[:, None]
    else:
        r = rho * np.sqrt(rng.random(n))
        ph = 2 * math.pi * rng.random(n)
        x = np.stack([r * np.cos(ph), r * np.sin(ph)], axis=1)
    sign = np.where(rng.random(n) < measure.c_plus / measure.total, 1.0, -1.0)
    return t, x, sign * trunc.N * y


def sample_overflow(measure: LevyMeasure, window: Window, trunc: TruncationSpec, seed: int,
                    replicate: int = 0, stream: JumpSet | None = None,
                    whole_space: bool = True) -> JumpSet:
    """Overflow atoms ``|z| > N h(x)`` on ``[0, T]``.

    Inside the box they are taken from the shared ``|z| > 1`` stream; outside
    it (when ``whole_space``) they are sampled exactly for stable measures.
    """
    if stream is None:
        stream = sample_jump_stream(measure, window, seed, replicate)
    inside = stream.split(trunc)[1]
    out_window = Window(window.T, math.inf, window.d)
    inside = JumpSet(out_window, inside.t, inside.x, inside.z, "overflow", inside.seed, trunc)
    if not whole_space:
        return inside
    if measure.kind != "stable":
        raise ParameterError("whole-space overflow sampling is available for stable measures only")
    rng = substream(seed, replicate, "noise", "overflow-outside")
    t, x, z = _whole_space_overflow(measure, window.T, window.d, trunc, rng)
    keep = np.any(np.abs(x) > window.R, axis=1)
    order = np.argsort(t[keep], kind="stable")
    outside = JumpSet(out_window, t[keep][order], x[keep][order], z[keep][order], "overflow",
                      {"seed": int(seed), "replicate": int(replicate), "stream": "overflow-outside"},
                      trunc)
    return JumpSet.merge(inside, outside, out_window, "overflow")


def stopping_time(overflow: JumpSet, T: float, level: int | None = None) -> float:
    """Earliest overflow atom time in ``[0, T]``, or ``inf`` if there is none.

    ``level`` thins a coupled overflow stream to a higher truncation level.
    """
    if level is not None:
        overflow = overflow.thin(level)
    hit = overflow.t[overflow.t <= T]
    return float(hit[0]) if hit.size else math.inf


# --------------------------------------------------------------- small jumps

@dataclass(eq=False)
class SmallJumpField:
    """Per-cell small-jump increments on a lattice.

    ``increments[m, j...]`` is the (compensated, in the with-drift mode) sum of
    marks with ``eps < |z| <= 1`` in cell ``[t_m, t_m+dt) x (x_j +- dx/2)``.
    """

    lattice: Lattice
    increments: np.ndarray
    epsilon: float
    compensated: bool
    compensator: float
    rate: float
    seed: dict = field(default_factory=dict)


def sample_small_jump_increments(measure: LevyMeasure, window: Window | None, lattice: Lattice,
                                 epsilon: float, seed: int, replicate: int = 0,
                                 compensate: bool = True,
                                 gaussian_correction: bool = False) -> SmallJumpField:
    """Compound-Poisson cell sums of marks in ``eps < |z| <= 1``.

    Jumps below ``eps`` are dropped unless ``gaussian_correction`` adds a
    centred normal with variance ``|cell| int_{|z|<=eps} z^2 nu``.
    ``epsilon = 1`` gives the zero field.
    """
    if not (0.0 < epsilon <= 1.0):
        raise ParameterError(f"epsilon must lie in (0, 1], got {epsilon}")
    if window is not None and not lattice.covers(window):
        raise CoverageError("lattice does not cover the window")
    rate = measure.band_mass(epsilon, 1.0) * lattice.cell_volume
    comp = measure.signed_moment(epsilon, 1.0) * lattice.cell_volume if compensate else 0.0
    gvar = measure.abs_moment(2.0, 0.0, epsilon) * lattice.cell_volume if gaussian_correction else 0.0
    out = np.zeros(lattice.shape)
    nt, half, d = lattice.nt, lattice.half, lattice.d
    blocks = range(math.floor(-half / BLOCK), math.floor(half / BLOCK) + 1)
    grid = [(b,) for b in blocks] if d == 1 else [(b, c) for b in blocks for c in blocks]
    bshape = (nt,) + (BLOCK,) * d
    for blk in grid:
        rng = substream(seed, replicate, "noise", "small", *blk)
        counts = rng.poisson(rate, size=bshape) if rate > 0 else np.zeros(bshape, int)
        marks = measure.sample_marks(rng, counts.sum(), epsilon, 1.0)
        cells = np.repeat(np.arange(counts.size), counts.ravel())
        sums = np.bincount(cells, weights=marks, minlength=counts.size).reshape(bshape) - comp
        if gvar > 0:
            sums = sums + rng.normal(0.0, math.sqrt(gvar), size=bshape)
        # place the block, cropping to the lattice
        src, dst = [slice(None)], [slice(None)]
        for b in blk:
            j0 = b * BLOCK
            lo, hi = max(j0, -half), min(j0 + BLOCK - 1, half)
            src.append(slice(lo - j0, hi - j0 + 1))
            dst.append(slice(lo + half, hi + half + 1))
        out[tuple(dst)] = sums[tuple(src)]
    return SmallJumpField(lattice, out, float(epsilon), bool(compensate), float(comp), float(rate),
                          {"seed": int(seed), "replicate": int(replicate), "stream": "small"})


# ------------------------------------------------------------ realisations

@dataclass(eq=False)
class NoiseRealization:
    """One draw of the truncated noise on a window.

    ``stream`` holds every ``|z| > 1`` atom in the box; the large and overflow
    sets for any level follow from it, which couples all levels.
    """

    window: Window
    trunc: TruncationSpec
    mode: str
    b: float
    epsilon: float
    small: SmallJumpField | None
    stream: JumpSet
    outside: JumpSet | None
    seed: int
    replicate: int = 0

    @property
    def large(self) -> JumpSet:
        return self.stream.split(self.trunc)[0]

    @property
    def overflow(self) -> JumpSet:
        ow = Window(self.window.T, math.inf, self.window.d)
        inside = self.stream.split(self.trunc)[1]
        inside = JumpSet(ow, inside.t, inside.x, inside.z, "overflow", inside.seed, self.trunc)
        if self.outside is None:
            return inside
        return JumpSet.merge(inside, self.outside.thin(self.trunc.N), ow, "overflow")

    def tau(self, T: float | None = None) -> float:
        return stopping_time(self.overflow, self.window.T if T is None else T)

    def at_level(self, N: int) -> "NoiseRealization":
        if self.outside is not None and N < self.outside.trunc.N:
            raise ParameterError("coupled overflow stream was sampled at a higher base level")
        return replace(self, trunc=replace(self.trunc, N=int(N)))

    def restrict(self, R: float) -> "NoiseRealization":
        """Same atoms, box shrunk to radius ``R`` (small-jump cells are not cropped)."""
        w = replace(self.window, R=R)
        return replace(self, window=w, stream=self.stream.restrict(R))

    def write(self, directory, prefix: str = "noise") -> dict:
        """Write atom CSVs, small-jump increments and a JSON manifest."""
        os.makedirs(directory, exist_ok=True)
        files = {}
        for name, js in (("large", self.large), ("overflow", self.overflow)):
            fn = f"{prefix}_{name}.csv"
            js.to_csv(os.path.join(directory, fn))
            files[name] = fn
        if self.small is not None:
            fn = f"{prefix}_small.npy"
            np.save(os.path.join(directory, fn), self.small.increments)
            files["small"] = fn
        manifest = {
            "seed": int(self.seed), "replicate": int(self.replicate), "epsilon": self.epsilon,
            "N": int(self.trunc.N), "eta": self.trunc.eta, "mode": self.mode, "b": self.b,
            "window": {"T": self.window.T, "R": self.window.R, "d": self.window.d},
            "files": files,
        }
        with open(os.path.join(directory, f"{prefix}_manifest.json"), "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=1)
        return manifest


def sample_noise(measure: LevyMeasure, window: Window, trunc: TruncationSpec, seed: int,
                 lattice: Lattice | None = None, epsilon: float = 1e-2,
                 assumption: AssumptionA | None = None, replicate: int = 0,
                 base_level: int | None = None, whole_space: bool = True,
                 gaussian_correction: bool = False) -> NoiseRealization:
    """Assemble a :class:`NoiseRealization`.

    The mode is no-drift exactly when ``assumption.p < 1``; then small-jump
    increments are not compensated and no drift term is carried.
    """
    mode = assumption.mode if assumption is not None else "with-drift"
    b = assumption.b if (assumption is not None and mode == "with-drift") else 0.0
    small = None
    if lattice is not None:
        small = sample_small_jump_increments(measure, window, lattice, epsilon, seed, replicate,
                                             compensate=(mode == "with-drift"),
                                             gaussian_correction=gaussian_correction)
    stream = sample_jump_stream(measure, window, seed, replicate)
    outside = None
    if whole_space and measure.kind == "stable" and window.d * 1.0 < trunc.eta * measure.alpha:
        base = replace(trunc, N=int(base_level or trunc.N))
        rng = substream(seed, replicate, "noise", "overflow-outside")
        t, x, z = _whole_space_overflow(measure, window.T, window.d, base, rng)
        keep = np.any(np.abs(x) > window.R, axis=1)
        order = np.argsort(t[keep], kind="stable")
        outside = JumpSet(Window(window.T, math.inf, window.d), t[keep][order], x[keep][order],
                          z[keep][order], "overflow",
                          {"seed": int(seed), "replicate": int(replicate), "stream": "overflow-outside"},
                          base)
    return NoiseRealization(window, trunc, mode, float(b), float(epsilon), small, stream, outside,
                            int(seed), int(replicate))
