"""Experiment configuration, orchestration, persistence and plot-data emission.

Usage::

    levywave <command> --config <path> [--seed S] [--out DIR]

with ``command`` one of ``simulate``, ``verify-kernels``, ``verify-moments``,
``sobolev`` or ``all``.  Numeric outputs are a pure function of the config
(minus its output block) and the seed; every run writes ``manifest.json``
with the config hash, the seed and the sha256 of each file.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigError, LevyWaveError
from .levy_noise import TruncationSpec, make_stable_measure, moment_functionals, sample_noise
from .reports import CheckReport, summary_csv, to_jsonl
from .solver import Grid, make_initial_data, make_sigma, patch_solution, picard_solve
from .sobolev import (BumpWindow, atom_jump_agreement, delta_membership_scan,
                      kernel_path_profile, path_increment_stats, sobolev_profile)
from .verification import (BoxIntegrand, MomentSetup, convolution_moment_check,
                           cos_average_bound_check, effective_iterations, moment_bound_scan,
                           moment_table, picard_convergence_check, poisson_moment_check,
                           rosenthal_check, stopping_time_check, unit_box)
from .wave_kernel import kernel_suite

COMMANDS = ("simulate", "verify-kernels", "verify-moments", "sobolev", "all")
SIGMA_KINDS = ("zero", "constant", "linear", "identity", "bounded-saturating", "tanh", "sin")


class ArtifactError(LevyWaveError, LookupError):
    """A requested artifact does not exist."""


# ------------------------------------------------------------------ config

@dataclass
class NoiseBlock:
    kind: str = "stable"
    alpha: float = 1.5
    c_plus: float = 1.0
    c_minus: float = 1.0
    epsilon: float = 1e-2
    N: list = field(default_factory=lambda: [4])
    eta: float = 1.0
    p: float = 2.0
    q: float = 1.0
    b: float | None = None


@dataclass
class EquationBlock:
    d: int = 1
    sigma: dict = field(default_factory=lambda: {"kind": "linear", "a": 1.0})
    initial: dict = field(default_factory=lambda: {"u0": {"kind": "constant", "value": 1.0},
                                                   "v0": {"kind": "zero"}})
    engine: str = "auto"


@dataclass
class GridBlock:
    T: float = 1.0
    A: float = 1.0
    R: float = 2.0
    dt: float = 1.0 / 64
    dx: float = 1.0 / 64


@dataclass
class AnalysisBlock:
    r: list = field(default_factory=lambda: [-1.5])
    h: list = field(default_factory=lambda: [2.0 ** -k for k in range(1, 11)])
    windows: list = field(default_factory=lambda: [{"radius": 1.0}])
    lags: list = field(default_factory=lambda: [1, 2, 4, 8])
    profile_cases: list = field(default_factory=lambda: [[1, 0.0], [1, 0.2], [2, -1.5]])
    delta_r: list = field(default_factory=lambda: [-1.5, -1.0])
    stopping_N: list = field(default_factory=lambda: [2, 4, 8])
    moment_p: float = 2.0
    band: float = 200.0


@dataclass
class RunBlock:
    seed: int = 0
    replicates: int = 10_000
    p4_replicates: int = 100_000
    moment_replicates: int = 1000
    path_replicates: int = 100
    paths: int = 1
    tolerance: float = 0.0
    kernel_sweep_scale: float = 1.0


@dataclass
class OutputBlock:
    directory: str = "levywave_out"
    formats: list = field(default_factory=lambda: ["npy", "csv", "json"])


BLOCKS = {"noise": NoiseBlock, "equation": EquationBlock, "grid": GridBlock,
          "analysis": AnalysisBlock, "run": RunBlock, "output": OutputBlock}


@dataclass
class ExperimentConfig:
    noise: NoiseBlock = field(default_factory=NoiseBlock)
    equation: EquationBlock = field(default_factory=EquationBlock)
    grid: GridBlock = field(default_factory=GridBlock)
    analysis: AnalysisBlock = field(default_factory=AnalysisBlock)
    run: RunBlock = field(default_factory=RunBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def hash(self) -> str:
        """sha256 of the canonical JSON without the output block."""
        d = self.to_dict()
        d.pop("output")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    # -- derived objects
    def measure(self):
        return make_stable_measure(self.noise.alpha, self.noise.c_plus, self.noise.c_minus)

    def trunc(self, N: int | None = None) -> TruncationSpec:
        return TruncationSpec(int(N if N is not None else min(self.noise.N)), self.noise.eta)

    def grid_obj(self, dx: float | None = None, dt: float | None = None) -> Grid:
        g = self.grid
        return Grid(self.equation.d, dt or g.dt, dx or g.dx, g.T, g.A, g.R)

    def windows(self) -> list[BumpWindow]:
        out = []
        for w in self.analysis.windows:
            c = w.get("center", [0.0] * self.equation.d)
            out.append(BumpWindow(tuple(float(v) for v in c), float(w.get("radius", self.grid.A)),
                                  float(w.get("s", 1.0))))
        return out


def _coerce(block_cls, name: str, raw) -> object:
    if not isinstance(raw, dict):
        raise ConfigError(name, "must be an object")
    known = {f.name: f for f in fields(block_cls)}
    for k in raw:
        if k not in known:
            raise ConfigError(f"{name}.{k}", "unknown field")
    out = block_cls()
    for k, v in raw.items():
        default = getattr(out, k)
        path = f"{name}.{k}"
        if isinstance(default, bool):
            if not isinstance(v, bool):
                raise ConfigError(path, "must be true or false")
        elif isinstance(default, int) and not isinstance(default, bool):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
                raise ConfigError(path, "must be an integer")
            v = int(v)
        elif isinstance(default, float):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(path, "must be a number")
            v = float(v)
        elif isinstance(default, list):
            if not isinstance(v, list):
                raise ConfigError(path, "must be a list")
        elif isinstance(default, dict):
            if not isinstance(v, dict):
                raise ConfigError(path, "must be an object")
        elif isinstance(default, str):
            if not isinstance(v, str):
                raise ConfigError(path, "must be a string")
        elif k == "b" and v is not None and not isinstance(v, (int, float)):
            raise ConfigError(path, "must be a number or null")
        setattr(out, k, v)
    return out


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Cross-field checks; raises :class:`ConfigError` naming the field."""
    n, e, g, a, r = cfg.noise, cfg.equation, cfg.grid, cfg.analysis, cfg.run
    if n.kind != "stable":
        raise ConfigError("noise.kind", "only 'stable' measures are configurable")
    if not 0 < n.alpha < 2:
        raise ConfigError("noise.alpha", "must lie in (0, 2)")
    if n.c_plus < 0 or n.c_minus < 0 or n.c_plus + n.c_minus <= 0:
        raise ConfigError("noise.c_plus", "weights must be non-negative and not both zero")
    if not 0 < n.epsilon <= 1:
        raise ConfigError("noise.epsilon", "must lie in (0, 1]")
    if not n.N or any((not isinstance(v, int)) or v < 1 for v in n.N):
        raise ConfigError("noise.N", "must be a non-empty list of integers >= 1")
    if not n.eta > 0:
        raise ConfigError("noise.eta", "must be positive")
    if e.d not in (1, 2):
        raise ConfigError("equation.d", "must be 1 or 2")
    if e.sigma.get("kind") not in SIGMA_KINDS:
        raise ConfigError("equation.sigma.kind", f"must be one of {SIGMA_KINDS}")
    if e.engine not in ("auto", "cone", "stencil", "spectral"):
        raise ConfigError("equation.engine", "unknown engine")
    for k in ("T", "A", "dt", "dx"):
        if not getattr(g, k) > 0:
            raise ConfigError(f"grid.{k}", "must be positive")
    if g.R < g.A + g.T - 1e-12:
        raise ConfigError("grid.R", f"R = {g.R} < A + T = {g.A + g.T}: by finite speed of "
                                    "propagation the box must reach A + T")
    if abs(g.T / g.dt - round(g.T / g.dt)) > 1e-9:
        raise ConfigError("grid.dt", "T must be an integer multiple of dt")
    if r.replicates < 1 or r.moment_replicates < 1 or r.path_replicates < 1 or r.paths < 1:
        raise ConfigError("run.replicates", "replicate counts must be positive")
    for w in a.windows:
        if not isinstance(w, dict) or float(w.get("radius", g.A)) <= 0:
            raise ConfigError("analysis.windows", "each window needs a positive radius")
        if len(w.get("center", [0.0] * e.d)) != e.d:
            raise ConfigError("analysis.windows", "window centre dimension must equal d")
    for f_ in cfg.output.formats:
        if f_ not in ("npy", "csv", "json"):
            raise ConfigError("output.formats", f"unknown format {f_!r}")
    try:
        make_sigma(e.sigma)
        make_initial_data(e.initial, e.d)
    except LevyWaveError as exc:
        raise ConfigError("equation", str(exc)) from None
    try:
        moment_functionals(cfg.measure(), n.p, n.q, e.d, n.b)
    except LevyWaveError as exc:
        raise ConfigError("noise.p", f"moment conditions fail: {exc}") from None
    return cfg


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    for k in raw:
        if k not in BLOCKS:
            raise ConfigError(k, "unknown block")
    cfg = ExperimentConfig(**{k: _coerce(BLOCKS[k], k, v) for k, v in raw.items()})
    return validate(cfg)


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config; missing fields take their defaults."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"not valid JSON: {exc}") from None
    return config_from_dict(raw)


def dump_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(cfg.dumps() + "\n")


# --------------------------------------------------------------- artifacts

class Store:
    """Output directory that records every file it writes."""

    def __init__(self, root: str):
        self.root = root
        self.files: list[str] = []
        os.makedirs(root, exist_ok=True)

    def path(self, rel: str) -> str:
        p = os.path.join(self.root, rel)
        os.makedirs(os.path.dirname(p) or ".", exist_ok=True)
        return p

    def add(self, rel: str) -> str:
        if rel not in self.files:
            self.files.append(rel)
        return self.path(rel)

    def text(self, rel: str, s: str) -> None:
        with open(self.add(rel), "w") as fh:
            fh.write(s)

    def json(self, rel: str, obj) -> None:
        self.text(rel, json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n")

    def npy(self, rel: str, arr) -> None:
        np.save(self.add(rel), np.asarray(arr))

    def reports(self, rel_dir: str, reps: list[CheckReport]) -> None:
        self.text(f"{rel_dir}/reports.jsonl", to_jsonl(reps))
        self.text(f"{rel_dir}/summary.csv", summary_csv(reps))

    def manifest(self, cfg: ExperimentConfig, command: str, status: int) -> dict:
        files = {}
        for rel in sorted(self.files):
            with open(os.path.join(self.root, rel), "rb") as fh:
                files[rel] = hashlib.sha256(fh.read()).hexdigest()
        man = {"command": command, "config_hash": cfg.hash(), "seed": cfg.run.seed,
               "exit_status": status, "files": files}
        with open(os.path.join(self.root, "manifest.json"), "w") as fh:
            json.dump(man, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return man


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg: ExperimentConfig, store: Store) -> list[CheckReport]:
    """Solve on every truncation level, patch, and store paths and noise."""
    grid = cfg.grid_obj()
    init = make_initial_data(cfg.equation.initial, cfg.equation.d)
    sigma = make_sigma(cfg.equation.sigma)
    meas = cfg.measure()
    Ns = sorted(cfg.noise.N)
    reps = []
    for rep in range(cfg.run.paths):
        nz = sample_noise(meas, grid.window(), cfg.trunc(Ns[0]), cfg.run.seed, grid.lattice(),
                          cfg.noise.epsilon, replicate=rep, base_level=Ns[0])
        paths = [picard_solve(init, sigma, nz.at_level(N), grid, tol=cfg.run.tolerance,
                              engine=cfg.equation.engine) for N in Ns]
        sub = f"simulate/rep_{rep:04d}"
        for p in paths:
            if "npy" in cfg.output.formats:
                for part in ("u", "w", "u1", "u2", "u3"):
                    arr = getattr(p, part)
                    if arr is not None:
                        store.npy(f"{sub}/N{p.N}_{part}.npy", arr)
            store.json(f"{sub}/N{p.N}_manifest.json", p.manifest())
        nz.large.to_csv(store.add(f"{sub}/atoms_large.csv"))
        nz.overflow.to_csv(store.add(f"{sub}/atoms_overflow.csv"))
        try:
            patched = patch_solution(paths)
            if "npy" in cfg.output.formats:
                store.npy(f"{sub}/patched_u.npy", patched.u)
            covered = True
        except LevyWaveError:
            covered = False
        conv = all(p.converged for p in paths)
        resid = max(p.decomposition_residual() for p in paths)
        reps.append(CheckReport("simulate_path", {"replicate": rep, "N": Ns}, resid, 0.0, resid,
                                conv, mesh={"dt": grid.dt, "dx": grid.dx}, seeds=[cfg.run.seed],
                                tag="run", extra={"iterations": [p.iterations for p in paths],
                                                  "tau": [p.tau for p in paths],
                                                  "patched": covered}))
    store.reports("simulate", reps)
    return reps


def cmd_verify_kernels(cfg: ExperimentConfig, store: Store) -> list[CheckReport]:
    reps = kernel_suite(cfg.run.seed, cfg.run.kernel_sweep_scale)
    store.reports("verify_kernels", reps)
    return reps


def _moment_setup(cfg, sigma=None) -> MomentSetup:
    g = cfg.grid
    return MomentSetup(cfg.measure(), cfg.trunc(), sigma or make_sigma(cfg.equation.sigma),
                       make_initial_data(cfg.equation.initial, cfg.equation.d), cfg.equation.d,
                       g.T, g.A, g.R, cfg.noise.epsilon, cfg.analysis.moment_p, cfg.equation.engine)


def cmd_verify_moments(cfg: ExperimentConfig, store: Store) -> list[CheckReport]:
    meas, seed, n = cfg.measure(), cfg.run.seed, cfg.run.replicates
    d = cfg.equation.d
    integrands = [unit_box(d, 1.0, 0), unit_box(d, 1.0, 1),
                  BoxIntegrand(((0.0, 0.5) + ((0.0, 1.0),) * d, (0.5, 1.0) + ((-1.0, 0.5),) * d),
                               (2.0, -1.0))]
    reps = [rosenthal_check(H, 2.0, meas, n, seed=seed) for H in integrands]
    reps.append(rosenthal_check(unit_box(d), 4.0, meas, cfg.run.p4_replicates, seed=seed))
    reps.append(poisson_moment_check(unit_box(d), 2.0, meas, n, band=(1.0, float(min(cfg.noise.N))),
                                     seed=seed))
    reps.append(convolution_moment_check(meas, d, cfg.noise.p, cfg.noise.q, cfg.trunc(),
                                         cfg.grid.T, 0.0, cfg.noise.epsilon,
                                         cfg.noise.b or 0.0, n, seed))
    reps.extend(stopping_time_check(meas, cfg.analysis.stopping_N, cfg.grid.T, d, cfg.noise.eta,
                                    cfg.grid.R, n, seed))
    setup = _moment_setup(cfg)
    m = cfg.run.moment_replicates
    coarse = moment_table(setup, cfg.grid.dx, m, seed, cfg.grid.dt, keep_logs=True)
    fine = moment_table(setup, cfg.grid.dx / 2, 2 * m, seed, cfg.grid.dt / 2)
    reps.append(moment_bound_scan([coarse, fine]))
    reps.append(picard_convergence_check(coarse.logs))
    add = moment_table(_moment_setup(cfg, make_sigma({"kind": "constant", "c": 1.0})),
                       cfg.grid.dx, min(m, 20), seed, cfg.grid.dt, keep_logs=True)
    eff = [effective_iterations(lg) for lg in add.logs]
    reps.append(CheckReport("picard_additive", {"replicates": len(eff)}, float(max(eff)), 1.0,
                            float(max(eff)), all(v <= 1 for v in eff), tag="property",
                            extra={"effective_iterations": eff}))
    reps.append(cos_average_bound_check(cfg.grid.T))
    for name, tb in (("coarse", coarse), ("fine", fine)):
        store.npy(f"verify_moments/moments_{name}.npy", np.stack([tb.mean, tb.se]))
        store.json(f"verify_moments/moments_{name}_meta.json",
                   {"dx": tb.dx, "dt": tb.dt, "replicates": tb.replicates, "used": tb.used,
                    "failed": tb.failed, "p": setup.p, "A": cfg.grid.A, "T": cfg.grid.T})
    store.reports("verify_moments", reps)
    return reps


def cmd_sobolev(cfg: ExperimentConfig, store: Store) -> list[CheckReport]:
    a, seed = cfg.analysis, cfg.run.seed
    reps, kprof, scans, profiles, fits = [], [], [], [], []
    for d, r in a.profile_cases:
        pr = kernel_path_profile(int(d), float(r), a.h, band=a.band)
        kprof.append({"d": d, "r": r, "h": pr.hs, "right": pr.right, "left": pr.left,
                      "jump": pr.jump, "right_continuous": pr.right_continuous})
        reps.append(CheckReport("kernel_path_right_continuity", {"d": d, "r": r,
                                "at_start": pr.at_start}, float(pr.right[-1]), 0.0,
                                float(pr.extra["tail_slope"]), pr.right_continuous, tag="property",
                                extra={"monotone": pr.monotone}))
        if int(d) == 2:
            target = 2 * math.pi
            reps.append(CheckReport("kernel_path_left_jump", {"d": d, "r": r, "band": a.band},
                                    pr.jump, target, pr.jump / target,
                                    abs(pr.jump - target) <= 0.02 * target, tag="anchor"))
    for r in a.delta_r:
        v = delta_membership_scan(2, float(r))
        scans.append(asdict(v))
        reps.append(CheckReport("delta_membership", {"d": 2, "r": r}, float(v.partial[-1]),
                                float(v.limit) if v.limit is not None else math.inf,
                                float(v.ratios[-1]), True, tag="scan",
                                extra={"converges": v.converges}))
    # solution-level diagnostics
    grid = cfg.grid_obj()
    init = make_initial_data(cfg.equation.initial, cfg.equation.d)
    sigma = make_sigma(cfg.equation.sigma)
    meas, r0 = cfg.measure(), float(a.r[0])
    win = cfg.windows()[0]
    stacks, agree = [], []
    for rep in range(cfg.run.path_replicates):
        nz = sample_noise(meas, grid.window(), cfg.trunc(), seed, grid.lattice(), cfg.noise.epsilon,
                          replicate=rep)
        path = picard_solve(init, sigma, nz, grid, tol=cfg.run.tolerance, engine=cfg.equation.engine)
        stacks.append(path.u1)
        big = nz.large
        res = atom_jump_agreement(path.u2, grid.dx, grid.times, big.t, big.x, r0, win)
        agree.append(res["agree"])
        if rep < 5:
            prof = sobolev_profile(path.u, grid.dx, grid.times, r0, win)
            profiles.append({"replicate": rep, "r": r0, "window": 0, "t": prof.times,
                             "value": prof.values, "jumps": prof.jumps})
    share = float(np.mean(agree))
    reps.append(CheckReport("atom_jump_times", {"r": r0, "replicates": len(agree)}, share, 1.0,
                            share, share == 1.0, tag="property"))
    k_c = grid.nt // 2
    lags = [int(v) for v in a.lags if k_c - int(v) >= 0 and k_c + int(v) <= grid.nt]
    try:
        fit = path_increment_stats(stacks, grid.dx, grid.dt, r0, lags, k_c, win, seed=seed)
        fits.append({"r": r0, "slope": fit.slope, "ci": list(fit.ci), "h_range": [min(fit.hs), max(fit.hs)],
                     "h": fit.hs, "product_mean": fit.product_mean, "product_se": fit.product_se,
                     "forward_mean": fit.forward_mean, "degenerate": fit.degenerate})
        ok = bool(not fit.degenerate and fit.ci[0] >= 2.0)
        reps.append(CheckReport("increment_exponent", {"r": r0, "lags": lags}, fit.slope, 2.0,
                                fit.slope / 2.0, ok, replicates=fit.replicates, seeds=[seed],
                                tag="property", extra={"ci": list(fit.ci)}))
    except LevyWaveError as exc:
        reps.append(CheckReport("increment_exponent", {"r": r0}, math.nan, 2.0, math.nan, False,
                                tag="property", note=str(exc)))
    store.json("sobolev/kernel_profiles.json", kprof)
    store.json("sobolev/delta_scans.json", scans)
    store.json("sobolev/profiles.json", profiles)
    store.json("sobolev/fits.json", fits)
    store.reports("sobolev", reps)
    return reps


def emit_plot_data(root: str, selection) -> list[str]:
    """Write tidy long-format plot tables from stored artifacts under ``root/plot``.

    ``selection`` may contain ``profiles``, ``increments``, ``fits`` and
    ``moments``.  Raises :class:`ArtifactError` when a source is missing.
    """
    written = []
    out = os.path.join(root, "plot")

    def src(rel):
        p = os.path.join(root, rel)
        if not os.path.exists(p):
            raise ArtifactError(f"missing artifact {rel}")
        return p

    def table(name, header, rows):
        os.makedirs(out, exist_ok=True)
        p = os.path.join(out, name)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        written.append(os.path.relpath(p, root))

    for sel in selection:
        if sel == "profiles":
            with open(src("sobolev/profiles.json")) as fh:
                data = json.load(fh)
            rows = [(float(t), float(p["r"]), int(p["window"]), float(v))
                    for p in data for t, v in zip(p["t"], p["value"])]
            table("profiles.csv", ["t", "r", "window", "value"], rows)
        elif sel == "increments":
            with open(src("sobolev/kernel_profiles.json")) as fh:
                data = json.load(fh)
            rows = []
            for p in data:
                for h, vr, vl in zip(p["h"], p["right"], p["left"]):
                    rows.append((int(p["d"]), float(p["r"]), float(h), "right", float(vr)))
                    rows.append((int(p["d"]), float(p["r"]), float(h), "left", float(vl)))
            table("increments.csv", ["d", "r", "h", "side", "value"], rows)
        elif sel == "fits":
            with open(src("sobolev/fits.json")) as fh:
                data = json.load(fh)
            os.makedirs(out, exist_ok=True)
            p = os.path.join(out, "fits.json")
            with open(p, "w") as fh:
                json.dump([{"r": f["r"], "slope": f["slope"], "ci": f["ci"], "h_range": f["h_range"]}
                           for f in data], fh, sort_keys=True, indent=1)
                fh.write("\n")
            written.append(os.path.relpath(p, root))
        elif sel == "moments":
            arr = np.load(src("verify_moments/moments_coarse.npy"))
            with open(src("verify_moments/moments_coarse_meta.json")) as fh:
                meta = json.load(fh)
            mean = arr[0]
            nt = mean.shape[0] - 1
            ts = np.arange(nt + 1) * meta["dt"]
            nx = mean.shape[1]
            xs = (np.arange(nx) - (nx - 1) / 2) * meta["dx"]
            rows = [(float(ts[k]), float(xs[j]), float(meta["p"]), float(mean[k, j]))
                    for k in range(nt + 1) for j in range(nx)] if mean.ndim == 2 else []
            table("moments.csv", ["t", "x", "p", "value"], rows)
        else:
            raise ArtifactError(f"unknown selection {sel!r}")
    return written


RUNNERS = {"simulate": cmd_simulate, "verify-kernels": cmd_verify_kernels,
           "verify-moments": cmd_verify_moments, "sobolev": cmd_sobolev}
PLOTS = {"verify-moments": ["moments"], "sobolev": ["profiles", "increments", "fits"]}


def run_command(command: str, cfg: ExperimentConfig) -> tuple[int, list[CheckReport]]:
    """Run ``command``; returns ``(exit status, reports)``.  Status is 0 iff every check passed."""
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}; choose from {COMMANDS}")
    store = Store(cfg.output.directory)
    todo = list(RUNNERS) if command == "all" else [command]
    reps = []
    for c in todo:
        reps.extend(RUNNERS[c](cfg, store))
        for rel in emit_plot_data(store.root, PLOTS.get(c, [])):
            store.add(rel)
    if command == "all":
        store.reports("all", reps)
    status = 0 if all(r.passed for r in reps) else 1
    cfg_rec = cfg.to_dict()
    cfg_rec.pop("output")               # keeps outputs independent of the directory name
    store.json("config.json", cfg_rec)
    store.manifest(cfg, command, status)
    return status, reps


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="levywave", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--seed", type=int, default=None, help="override run.seed")
    ap.add_argument("--out", default=None, help="override output.directory")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = copy.deepcopy(cfg)
        if args.seed is not None:
            cfg.run.seed = args.seed
        if args.out is not None:
            cfg.output.directory = args.out
        status, reps = run_command(args.command, cfg)
    except ConfigError as exc:
        print(f"levywave: config error: {exc}", file=sys.stderr)
        return 2
    failed = [r.check for r in reps if not r.passed]
    print(f"{len(reps) - len(failed)}/{len(reps)} checks passed; artifacts in {cfg.output.directory}")
    for name in sorted(set(failed)):
        print(f"FAILED: {name}")
    return status


if __name__ == "__main__":
    sys.exit(main())
