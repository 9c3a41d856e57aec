"""Mild solutions of the truncated stochastic wave equation on a space-time grid.

Discretisation
--------------
* Nodes ``t_k = k dt`` (``0 <= k <= nt``) and ``x_j = j dx`` (``|j| <= half``),
  ``half = ceil(R / dx)``.
* The small-jump and drift integrals use the noise cell ``[t_m, t_m + dt)
  x (x_j +- dx/2)`` with integrand frozen at ``(t_m, x_j)``; the kernel is
  averaged exactly over the spatial cell, on cells whose centre lies in the
  closed light cone (rescaled to the exact mass).
* Large atoms are summed exactly with the closed-form kernel; the integrand
  ``sigma(u(T_i-, X_i))`` is interpolated (linear / bilinear) from a slice at
  least ``sqrt(d) dx`` before ``T_i``.

Both rules keep every dependence inside the backward light cone, so values on
``|x| <= A`` do not change when the box grows beyond ``A + T``.

Every term at time ``t_k`` only reads slices ``m < k``, so Picard iteration on
a fixed realisation reaches its fixed point after at most ``nt + 1`` sweeps.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import ndimage

from ._quad import de_integrate, gauss_legendre
from .errors import CoverageError, ParameterError
from .levy_noise import Lattice, NoiseRealization, Window
from .wave_kernel import eval_kernel, kernel_fourier, kernel_radial

ENGINES = ("auto", "cone", "stencil", "spectral")


# ----------------------------------------------------------------------- grid

@dataclass(frozen=True)
class Grid:
    """Space-time grid; ``R >= A + T`` so that ``|x| <= A`` is exact."""

    d: int
    dt: float
    dx: float
    T: float
    A: float
    R: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ParameterError(f"dimension must be 1 or 2, got {self.d}")
        if not (self.dt > 0 and self.dx > 0 and self.T > 0 and self.A >= 0):
            raise ParameterError(f"invalid grid {self}")
        if self.R < self.A + self.T - 1e-12:
            raise ParameterError(
                f"R = {self.R} < A + T = {self.A + self.T}: finite speed of propagation "
                "needs the simulation box to contain the backward light cone of |x| <= A")
        nt = self.T / self.dt
        if abs(nt - round(nt)) > 1e-9 * max(1.0, nt):
            raise ParameterError(f"T / dt = {nt} is not an integer")

    @property
    def nt(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def half(self) -> int:
        return int(math.ceil(self.R / self.dx - 1e-12))

    @property
    def n(self) -> int:
        return 2 * self.half + 1

    @property
    def shape(self):
        return (self.nt + 1,) + (self.n,) * self.d

    @property
    def times(self):
        return np.arange(self.nt + 1) * self.dt

    @property
    def nodes(self):
        return np.arange(-self.half, self.half + 1) * self.dx

    def points(self):
        """Node coordinates: shape ``(n,)`` for d=1, ``(n, n, 2)`` for d=2."""
        x = self.nodes
        if self.d == 1:
            return x
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def radius(self):
        x = self.nodes
        if self.d == 1:
            return np.abs(x)
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.hypot(X, Y)

    def eval_mask(self):
        """Nodes with ``|x| <= A``."""
        return self.radius() <= self.A + 1e-12

    def lattice(self) -> Lattice:
        return Lattice(self.d, self.nt, self.dt, self.dx, self.half)

    def window(self) -> Window:
        return Window(self.T, self.R, self.d)

    def with_radius(self, R: float) -> "Grid":
        return Grid(self.d, self.dt, self.dx, self.T, self.A, R)


# --------------------------------------------------------------- initial data

@dataclass(frozen=True, eq=False)
class InitialData:
    """Initial position ``u0`` and velocity ``v0``.

    ``const_u0`` / ``const_v0`` mark constant data (closed-form shortcut).
    ``V0`` is an antiderivative of ``v0`` (d=1) and ``grad_u0`` the gradient of
    ``u0`` (d=2, needed for the time derivative of ``G_t * u0``).
    """

    d: int
    u0: Callable
    v0: Callable
    name: str = "custom"
    params: dict = field(default_factory=dict)
    const_u0: float | None = None
    const_v0: float | None = None
    V0: Callable | None = None
    grad_u0: Callable | None = None
    q0: float = math.inf
    l1: bool = False
    fourier_c: float | None = None

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ParameterError(f"dimension must be 1 or 2, got {self.d}")
        if self.d == 2 and not (self.q0 > 2):
            raise ParameterError(f"d=2 data need an integrability exponent q0 > 2, got {self.q0}")


def _gauss(x, d):
    r2 = x ** 2 if d == 1 else np.sum(x ** 2, axis=-1)
    return np.exp(-0.5 * r2)


def make_initial_data(spec: dict, d: int) -> InitialData:
    """Build initial data from ``{"u0": {...}, "v0": {...}}``.

    Supported kinds: ``constant`` (``value``), ``zero``, ``sin`` (d=1,
    ``u0 = sin(k x)``), ``gaussian`` (``amp exp(-|x|^2/2)``).
    """
    spec = dict(spec or {})
    u = dict(spec.get("u0", {"kind": "constant", "value": 1.0}))
    v = dict(spec.get("v0", {"kind": "zero"}))

    def one(s, role):
        kind = s.get("kind", "constant")
        if kind in ("zero", "constant"):
            c = 0.0 if kind == "zero" else float(s.get("value", s.get("c", 1.0)))
            f = lambda x, c=c: np.full(np.shape(x)[:(np.ndim(x) - (d == 2))], c)
            anti = lambda x, c=c: c * np.asarray(x, float)
            grad = lambda x: np.zeros(np.shape(x))
            return f, c, anti, grad
        if kind == "sin":
            if d != 1:
                raise ParameterError("sin initial data are one-dimensional")
            k = float(s.get("k", 1.0))
            return (lambda x: np.sin(k * np.asarray(x, float)), None,
                    lambda x: -np.cos(k * np.asarray(x, float)) / k, None)
        if kind == "gaussian":
            a = float(s.get("amp", 1.0))
            f = lambda x: a * _gauss(np.asarray(x, float), d)
            grad = lambda x: -a * np.asarray(x, float) * _gauss(np.asarray(x, float), d)[..., None]
            return f, None, None, grad
        raise ParameterError(f"unknown {role} kind {kind!r}")

    fu, cu, _, gu = one(u, "u0")
    fv, cv, Vv, _ = one(v, "v0")
    return InitialData(d, fu, fv, name=f"{u.get('kind')}/{v.get('kind')}",
                       params={"u0": u, "v0": v}, const_u0=cu, const_v0=cv,
                       V0=Vv if d == 1 else None, grad_u0=gu if d == 2 else None)


def homogeneous_wave(init: InitialData, t, x, n_quad: int = 32):
    """``w(t,x) = (G_t * v0)(x) + d/dt (G_t * u0)(x)``.

    d=1 uses d'Alembert's formula (Gauss-Legendre for the velocity integral
    when no antiderivative is known).  d=2 substitutes ``|y| = t sin(theta)``,
    which removes the edge singularity; the time derivative is taken under
    the integral and uses ``grad_u0``.  ``t`` is a scalar.
    """
    t = float(t)
    x = np.asarray(x, float)
    out_shape = x.shape if init.d == 1 else x.shape[:-1]
    if init.const_u0 is not None and init.const_v0 is not None:
        return np.full(out_shape, init.const_u0 + t * init.const_v0)
    if t == 0.0:
        return np.asarray(init.u0(x), float) * np.ones(out_shape)
    if init.d == 1:
        w = 0.5 * (init.u0(x + t) + init.u0(x - t))
        if init.V0 is not None:
            vel = 0.5 * (init.V0(x + t) - init.V0(x - t))
        else:
            gx, gw = gauss_legendre(n_quad)
            ys = x[..., None] + t * gx
            vel = 0.5 * t * np.sum(init.v0(ys) * gw, axis=-1)
        return w + vel
    # d = 2: (G_t*f)(x) = t/(2 pi) int_0^{pi/2} int_0^{2pi} f(x - t sin(th) e_phi) sin(th) dphi dth
    gx, gw = gauss_legendre(n_quad)
    th = 0.25 * math.pi * (gx + 1.0)
    wth = 0.25 * math.pi * gw
    nphi = 2 * n_quad
    phi = 2 * math.pi * np.arange(nphi) / nphi
    e = np.stack([np.cos(phi), np.sin(phi)], axis=-1)                 # (nphi, 2)
    disp = (np.sin(th)[:, None, None] * e[None]) * t                  # (nth, nphi, 2)
    pts = x[..., None, None, :] - disp
    wts = (np.sin(th) * wth)[:, None] * np.full(nphi, 2 * math.pi / nphi)  # (nth, nphi)

    def mean(vals):
        return np.sum(vals * wts, axis=(-2, -1)) / (2 * math.pi)

    out = np.zeros(out_shape)
    if init.const_v0 is not None:
        out = out + t * init.const_v0
    else:
        out = out + t * mean(init.v0(pts))
    if init.const_u0 is not None:
        out = out + init.const_u0
    else:
        if init.grad_u0 is None:
            raise ParameterError("d=2 initial position needs grad_u0 for the time derivative")
        m0 = mean(init.u0(pts))
        g = init.grad_u0(pts)
        radial = np.sum(g * (np.sin(th)[:, None, None] * e[None]), axis=-1)
        out = out + m0 - t * mean(radial)
    return out


def homogeneous_wave_grid(init: InitialData, grid: Grid):
    if init.d != grid.d:
        raise ParameterError("initial data and grid dimensions differ")
    pts = grid.points()
    return np.stack([homogeneous_wave(init, t, pts) for t in grid.times])


# ---------------------------------------------------------------------- sigma

@dataclass(frozen=True, eq=False)
class SigmaFn:
    """Lipschitz coefficient ``sigma``; ``constant`` is set for ``sigma = c``."""

    fn: Callable
    lip: float
    bounded: bool
    bound: float = math.inf
    name: str = "custom"
    constant: float | None = None

    def __call__(self, u):
        return self.fn(u)

    def check_lipschitz(self, rng: np.random.Generator, n: int = 1000, scale: float = 10.0) -> bool:
        a = rng.normal(0, scale, n)
        b = rng.normal(0, scale, n)
        return bool(np.all(np.abs(self.fn(a) - self.fn(b)) <= self.lip * np.abs(a - b) * (1 + 1e-12) + 1e-12))


def make_sigma(spec) -> SigmaFn:
    """``zero``, ``constant`` (``c``), ``linear`` (``a u + c``), ``sin`` (``a sin u``),
    ``tanh`` / ``bounded-saturating`` (``a tanh u``)."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    spec = dict(spec)
    kind = spec.get("kind", "linear")
    if kind == "zero":
        return SigmaFn(lambda u: np.zeros_like(np.asarray(u, float)), 0.0, True, 0.0, "zero", 0.0)
    if kind == "constant":
        c = float(spec.get("c", 1.0))
        return SigmaFn(lambda u: np.full_like(np.asarray(u, float), c), 0.0, True, abs(c),
                       f"constant({c})", c)
    if kind in ("linear", "identity"):
        a, c = float(spec.get("a", 1.0)), float(spec.get("c", 0.0))
        if a == 0:
            return make_sigma({"kind": "constant", "c": c})
        return SigmaFn(lambda u: a * np.asarray(u, float) + c, abs(a), False, math.inf,
                       f"linear({a},{c})")
    if kind == "sin":
        a = float(spec.get("a", 1.0))
        return SigmaFn(lambda u: a * np.sin(u), abs(a), True, abs(a), f"sin({a})")
    if kind in ("tanh", "bounded-saturating"):
        a = float(spec.get("a", 1.0))
        return SigmaFn(lambda u: a * np.tanh(u), abs(a), True, abs(a), f"tanh({a})")
    raise ParameterError(f"unknown sigma kind {kind!r}")


# ------------------------------------------------------------- kernel weights

def cell_weights_d1(tau: float, dx: float):
    """Kernel weights for cells ``(o dx +- dx/2)``; returns (offsets, weights).

    Cells whose centre lies in the closed cone ``|o dx| <= tau`` get the cell
    average of ``G_tau``, rescaled so that ``sum(weights) dx = tau``.  Keeping
    the support inside the cone makes the scheme exactly local.
    """
    w = int(math.floor(tau / dx + 1e-9))
    o = np.arange(-w, w + 1)
    r = tau / dx
    ov = 0.5 * np.clip(np.minimum(o + 0.5, r) - np.maximum(o - 0.5, -r), 0.0, None)
    return o, ov * (r / ov.sum())


@lru_cache(maxsize=512)
def _cell_weights_d2_cached(r: float):
    """Averages of ``G_r`` (unit cell) over cells centred at integer offsets."""
    w = int(math.ceil(r + 0.5))
    a = np.arange(0, w + 1, dtype=float)
    A, B = np.meshgrid(a, a, indexing="ij")
    x0, x1 = A - 0.5, A + 0.5
    y0, y1 = B - 0.5, B + 0.5
    lo = np.maximum(x0, -r)
    hi = np.minimum(x1, r)
    # kinks where the y-limits leave the disk
    k0 = np.sqrt(np.clip(r * r - y0 * y0, 0, None))
    k1 = np.sqrt(np.clip(r * r - y1 * y1, 0, None))
    cand = np.stack([lo, hi, np.clip(k0, lo, hi), np.clip(-k0, lo, hi),
                     np.clip(k1, lo, hi), np.clip(-k1, lo, hi)], axis=-1)
    cand = np.sort(cand, axis=-1)
    ya, yb = y0[..., None], y1[..., None]

    def f(xs, dl, dr, lo_, hi_):
        s = np.sqrt(np.clip(r * r - xs * xs, 0, None))
        top = np.arcsin(np.clip(yb[..., None] / s, -1, 1))
        bot = np.arcsin(np.clip(ya[..., None] / s, -1, 1))
        return np.where(s > 0, top - bot, 0.0)

    mass = de_integrate(f, cand[..., :-1], cand[..., 1:], level=5).sum(axis=-1) / (2 * math.pi)
    full = np.zeros((2 * w + 1, 2 * w + 1))
    full[w:, w:] = mass
    full[:w + 1, w:] = mass[::-1, :]
    full[w:, :w + 1] = mass[:, ::-1]
    full[:w + 1, :w + 1] = mass[::-1, ::-1]
    full.setflags(write=False)
    return full


def cell_weights_d2(tau: float, dx: float):
    """Square stencil of kernel weights for d=2 on a grid of step ``dx``.

    Cell averages of ``G_tau`` (inner integral an arcsine, outer one tanh-sinh
    split at every kink) on cells whose centre lies in the closed disk of
    radius ``tau``, rescaled so the stencil sums to ``tau / dx^2``.
    """
    r = round(tau / dx, 12)
    full = _cell_weights_d2_cached(r)
    w = (full.shape[0] - 1) // 2
    o = np.arange(-w, w + 1)
    inside = (o[:, None] ** 2 + o[None, :] ** 2) <= r * r * (1 + 1e-12)
    kern = np.where(inside, full, 0.0)
    kern = kern * (r / kern.sum())
    lim = int(math.floor(r + 1e-9))
    return kern[w - lim:w + lim + 1, w - lim:w + lim + 1] / dx


# ------------------------------------------------------------ lattice engines

def _cone_d1(V: np.ndarray):
    """Exact cone sums for d=1, ``dx == dt``.

    ``out[k, i] = sum_m sum_j W(k-m, i-j) V[m, j]`` with weight 1/2 strictly
    inside the cone, 1/4 on its edge.  Rotated coordinates ``p = m + j`` and
    ``q = m - j + n - 1`` turn the cone into a quadrant, so one 2-d cumulative
    sum serves every output point.
    """
    nt, n = V.shape
    P = nt + n - 1
    Z = np.zeros((P, P))
    m, j = np.meshgrid(np.arange(nt), np.arange(n), indexing="ij")
    Z[m + j, m - j + n - 1] = V
    C0 = np.cumsum(Z, axis=0)
    C1 = np.cumsum(Z, axis=1)
    C = np.cumsum(C0, axis=1)

    def take(M, p, q):
        ok = (p >= 0) & (q >= 0)
        return np.where(ok, M[np.clip(p, 0, P - 1), np.clip(q, 0, P - 1)], 0.0)

    k, i = np.meshgrid(np.arange(nt + 1), np.arange(n), indexing="ij")
    inner = take(C, k + i - 1, k - i + n - 2)
    e1 = np.where(k + i <= P - 1, take(C1, k + i, k - i + n - 2), 0.0)
    e2 = np.where(k - i + n - 1 <= P - 1, take(C0, k + i - 1, k - i + n - 1), 0.0)
    out = 0.5 * inner + 0.25 * (e1 + e2)
    out[0] = 0.0
    return out


def _stencil(V: np.ndarray, grid: Grid):
    """Per-lag direct correlation with cell-averaged kernel stencils."""
    nt = V.shape[0]
    out = np.zeros((nt + 1,) + V.shape[1:])
    for L in range(1, nt + 1):
        tau = L * grid.dt
        if grid.d == 1:
            _, w = cell_weights_d1(tau, grid.dx)
            kern = w[None, :]
        else:
            kern = cell_weights_d2(tau, grid.dx)[None]
        out[L:] += ndimage.correlate(V[:nt - L + 1], kern, mode="constant", cval=0.0)
    return out


def _spectral(V: np.ndarray, grid: Grid):
    """Band-limited convolution with ``sin(tau|xi|)/|xi|`` via FFT.

    Uses ``sin(t_k - t_m) = sin t_k cos t_m - cos t_k sin t_m`` so the time
    sum is a running accumulation; the box is zero-padded by ``T``.
    """
    nt, n, d = V.shape[0], V.shape[1], grid.d
    pad = int(math.ceil(grid.T / grid.dx)) + 2
    M = int(2 ** math.ceil(math.log2(n + 2 * pad)))
    f = np.fft.fftfreq(M, d=grid.dx) * 2 * math.pi
    if d == 1:
        xi = np.abs(f)
        sl = (slice(0, n),)
    else:
        xi = np.hypot(f[:, None], f[None, :])
        sl = (slice(0, n), slice(0, n))
    acc_c = np.zeros(xi.shape, complex)
    acc_s = np.zeros(xi.shape, complex)
    out = np.zeros((nt + 1,) + V.shape[1:])
    buf = np.zeros((M,) * d)
    scale = 1.0 / grid.dx ** d
    for k in range(1, nt + 1):
        m = k - 1
        buf[...] = 0.0
        buf[sl] = V[m]
        vh = np.fft.fftn(buf) * scale
        tm = m * grid.dt
        acc_c += np.cos(tm * xi) * vh
        acc_s += kernel_fourier(tm, xi) * vh
        tk = k * grid.dt
        uh = kernel_fourier(tk, xi) * acc_c - np.cos(tk * xi) * acc_s
        out[k] = np.real(np.fft.ifftn(uh))[sl]
    return out


def lattice_convolution(V: np.ndarray, grid: Grid, engine: str = "auto"):
    """``out[k] = sum_{m<k} sum_j Gbar_{(k-m)dt}(x - x_j) V[m, j]`` for all k."""
    if engine == "auto":
        engine = "cone" if (grid.d == 1 and abs(grid.dx - grid.dt) <= 1e-15 * grid.dt) else "stencil"
    if engine == "cone":
        if grid.d != 1 or abs(grid.dx - grid.dt) > 1e-15 * grid.dt:
            raise ParameterError("the cone engine needs d=1 and dx == dt")
        return _cone_d1(V)
    if engine == "stencil":
        return _stencil(V, grid)
    if engine == "spectral":
        return _spectral(V, grid)
    raise ParameterError(f"unknown engine {engine!r}")


# ---------------------------------------------------------------- atoms

def _interp(field_: np.ndarray, grid: Grid, X: np.ndarray):
    """Linear (d=1) / bilinear (d=2) interpolation of one slice at points X."""
    # weights from X/dx alone, so they do not depend on the box size
    f = X / grid.dx
    j0 = np.clip(np.floor(f).astype(int), -grid.half, grid.half - 1)
    w = np.clip(f - j0, 0.0, 1.0)
    i0 = j0 + grid.half
    if grid.d == 1:
        return field_[i0[:, 0]] * (1 - w[:, 0]) + field_[i0[:, 0] + 1] * w[:, 0]
    a, b = i0[:, 0], i0[:, 1]
    wa, wb = w[:, 0], w[:, 1]
    return (field_[a, b] * (1 - wa) * (1 - wb) + field_[a + 1, b] * wa * (1 - wb)
            + field_[a, b + 1] * (1 - wa) * wb + field_[a + 1, b + 1] * wa * wb)


def atom_slices(T: np.ndarray, dt: float, nt: int, lag: float = 0.0):
    """Slice used for ``u(T_i-, .)``: the last ``m`` with ``t_m <= T_i - lag`` and ``t_m < T_i``.

    A lag of ``sqrt(d) dx`` keeps the interpolation nodes inside the backward
    light cone of the atom.
    """
    m = np.floor((T - lag) / dt + 1e-12).astype(int)
    m = np.minimum(m, np.ceil(T / dt - 1e-12).astype(int) - 1)
    return np.clip(m, 0, nt)


def atom_sum(grid: Grid, t, x, z, coef):
    """``sum_i G_{t_k - T_i}(x - X_i) coef_i z_i`` on the grid, added in time order."""
    out = np.zeros(grid.shape)
    times = grid.times
    nodes = grid.nodes
    for ti, xi, zi, ci in zip(t, x, z, coef):
        k0 = int(np.searchsorted(times, ti, side="right"))
        if k0 > grid.nt:
            continue
        reach = grid.T - ti
        lo = int(np.searchsorted(nodes, xi[0] - reach, side="left"))
        hi = int(np.searchsorted(nodes, xi[0] + reach, side="right"))
        tau = (times[k0:] - ti)[:, None]
        amp = ci * zi
        if grid.d == 1:
            g = eval_kernel(1, tau, nodes[lo:hi][None, :] - xi[0])
            out[k0:, lo:hi] += np.where(g > 0, g * amp, 0.0)
        else:
            lo2 = int(np.searchsorted(nodes, xi[1] - reach, side="left"))
            hi2 = int(np.searchsorted(nodes, xi[1] + reach, side="right"))
            dx_ = nodes[lo:hi][:, None] - xi[0]
            dy_ = nodes[lo2:hi2][None, :] - xi[1]
            rho = np.hypot(dx_, dy_)[None]
            g = kernel_radial(2, tau[..., None], rho)
            out[k0:, lo:hi, lo2:hi2] += np.where(g > 0, g * amp, 0.0)
    return out


def stochastic_convolution(sigma_vals: np.ndarray, noise: NoiseRealization, grid: Grid,
                           engine: str = "auto", atom_coef=None):
    """Three parts of ``int G sigma(u) dL_N`` on the grid.

    ``sigma_vals`` holds ``sigma(u)`` on slices ``0..nt-1`` (lattice cells);
    ``atom_coef`` holds ``sigma(u(T_i-, X_i))`` for the large atoms (defaults
    to ones).  Returns ``(u1, u2, u3)``; ``u3`` is ``None`` in the no-drift
    mode.
    """
    _check_cover(noise, grid)
    large = noise.large
    u1 = np.zeros(grid.shape)
    u3 = None
    if noise.small is not None:
        u1 = lattice_convolution(sigma_vals * noise.small.increments, grid, engine)
    if noise.mode == "with-drift":
        if noise.b != 0.0:
            u3 = lattice_convolution(sigma_vals * (noise.b * grid.dt * grid.dx ** grid.d), grid, engine)
        else:
            u3 = np.zeros(grid.shape)
    coef = np.ones(len(large)) if atom_coef is None else np.asarray(atom_coef, float)
    u2 = atom_sum(grid, large.t, large.x, large.z, coef)
    return u1, u2, u3


def _check_cover(noise: NoiseRealization, grid: Grid):
    w = noise.window
    if w.d != grid.d or w.T < grid.T - 1e-12 or abs(w.R - grid.R) > 1e-12:
        raise CoverageError(f"noise window {w} does not match grid (T={grid.T}, R={grid.R})")
    if noise.small is not None and noise.small.lattice.shape != (grid.nt,) + (grid.n,) * grid.d:
        raise CoverageError("small-jump lattice does not match the grid")


# ------------------------------------------------------------------ solution

@dataclass(eq=False)
class SolutionPath:
    """Grid snapshots of ``u = ((w + u1) + u2) + u3`` and its parts."""

    grid: Grid
    u: np.ndarray
    w: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    u3: np.ndarray | None
    N: int | None
    tau: float
    log: list
    converged: bool
    engine: str
    seed: dict = field(default_factory=dict)
    served_by: np.ndarray | None = None

    @property
    def iterations(self) -> int:
        return len(self.log)

    def decomposition_residual(self) -> float:
        s = (self.w + self.u1) + self.u2
        if self.u3 is not None:
            s = s + self.u3
        return float(np.max(np.abs(s - self.u)))

    def region(self, arr=None):
        """Values on ``|x| <= A``: shape ``(nt+1, n_A)``."""
        arr = self.u if arr is None else arr
        return arr[:, self.grid.eval_mask()]

    def manifest(self) -> dict:
        g = self.grid
        return {"grid": {"d": g.d, "dt": g.dt, "dx": g.dx, "T": g.T, "A": g.A, "R": g.R},
                "N": self.N, "tau": self.tau if math.isfinite(self.tau) else "inf",
                "seed": self.seed, "engine": self.engine, "converged": self.converged,
                "iteration_log": [float(v) for v in self.log]}

    def write(self, directory, fmt: str = "npy", prefix: str = "u") -> dict:
        """Write snapshots (one ``.npy`` array or one CSV per time step) plus a manifest."""
        os.makedirs(directory, exist_ok=True)
        files = []
        if fmt == "npy":
            fn = f"{prefix}.npy"
            np.save(os.path.join(directory, fn), self.u)
            files.append(fn)
        elif fmt == "csv":
            for k in range(self.u.shape[0]):
                fn = f"{prefix}_{k:05d}.csv"
                arr = np.atleast_2d(self.u[k])
                np.savetxt(os.path.join(directory, fn), arr, delimiter=",", fmt="%.17g")
                files.append(fn)
        else:
            raise ParameterError(f"unknown snapshot format {fmt!r}")
        man = self.manifest()
        man["files"] = files
        with open(os.path.join(directory, f"{prefix}_manifest.json"), "w") as fh:
            json.dump(man, fh, sort_keys=True, indent=1)
        return man


def _assemble(w, u1, u2, u3):
    u = (w + u1) + u2
    return u + u3 if u3 is not None else u


def picard_solve(init: InitialData, sigma: SigmaFn, noise: NoiseRealization, grid: Grid,
                 max_iters: int | None = None, tol: float = 0.0, engine: str = "auto",
                 w: np.ndarray | None = None) -> SolutionPath:
    """Picard iteration ``u^(n+1) = w + I(sigma(u^(n)))`` on one realisation.

    Stops when the grid sup-distance between successive iterates is at most
    ``tol``; otherwise returns after ``max_iters`` sweeps (default ``nt + 5``)
    with ``converged = False``.  The scheme is causal, so with the default
    ``tol = 0`` the loop ends at the exact discrete fixed point within
    ``nt + 1`` sweeps and the result does not depend on the box radius.
    The spectral engine needs constant ``sigma``.
    """
    if engine == "spectral" and sigma.constant is None:
        raise ParameterError("the spectral engine handles constant sigma only")
    if max_iters is None:
        max_iters = grid.nt + 5
    if w is None:
        w = homogeneous_wave_grid(init, grid)
    large = noise.large
    m_atoms = atom_slices(large.t, grid.dt, grid.nt, math.sqrt(grid.d) * grid.dx)
    u = w.copy()
    log, converged = [], False
    u1 = np.zeros(grid.shape); u2 = np.zeros(grid.shape); u3 = None
    for _ in range(max_iters):
        sv = sigma(u[:grid.nt])
        if large.x.shape[0]:
            at = np.array([_interp(u[m], grid, large.x[i:i + 1])[0] for i, m in enumerate(m_atoms)])
            coef = sigma(at)
        else:
            coef = np.empty(0)
        u1, u2, u3 = stochastic_convolution(sv, noise, grid, engine, coef)
        new = _assemble(w, u1, u2, u3)
        with np.errstate(invalid="ignore", over="ignore"):
            dist = float(np.max(np.abs(new - u)))
        log.append(dist)
        u = new
        if not np.isfinite(dist):
            break
        if dist <= tol:
            converged = True
            break
    return SolutionPath(grid, u, w, u1, u2, u3, noise.trunc.N, noise.tau(grid.T), log,
                        converged, engine, {"seed": noise.seed, "replicate": noise.replicate})


def patch_solution(paths: list, taus: list | None = None) -> SolutionPath:
    """Glue solutions across levels: slice ``k`` comes from the smallest ``N`` with ``t_k <= tau_N``.

    Raises
    ------
    CoverageError
        If every ``tau_N`` precedes some grid time; increase the largest ``N``.
    """
    if not paths:
        raise ParameterError("nothing to patch")
    order = sorted(range(len(paths)), key=lambda i: paths[i].N)
    paths = [paths[i] for i in order]
    taus = [p.tau for p in paths] if taus is None else [taus[i] for i in order]
    grid = paths[0].grid
    times = grid.times
    served = np.full(times.size, -1)
    for k, t in enumerate(times):
        for p, tau in zip(paths, taus):
            if t <= tau:
                served[k] = p.N
                break
    if np.any(served < 0):
        k = int(np.argmax(served < 0))
        raise CoverageError(f"no truncation level covers t = {times[k]}; increase N_max")
    by_n = {p.N: p for p in paths}

    def pick(name):
        if any(getattr(p, name) is None for p in paths):
            return None
        out = np.empty(getattr(paths[0], name).shape)
        for k, n_ in enumerate(served):
            out[k] = getattr(by_n[n_], name)[k]
        return out

    log = [v for p in paths for v in p.log]
    return SolutionPath(grid, pick("u"), pick("w"), pick("u1"), pick("u2"), pick("u3"), None,
                        math.inf, log, all(p.converged for p in paths), paths[0].engine,
                        paths[0].seed, served)
