"""Alternating optimization of all AP positions, orientations and the combiner.

One outer iteration sweeps every AP's position and then every AP's
orientation; after each single-AP update the channel, MMSE combiner and
auxiliary variables are refreshed. The offline (statistical CSI) variant runs
the same loop on a set of channel realizations, averaging the per-AP
objectives and keeping one combiner per realization.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from . import receiver as rx
from .aom_opt import optimize_orientation
from .apv_opt import optimize_position
from .io import pose_to_dict
from .channel import AntennaPose, ap_arrays, ap_channel, ap_rows, assemble, fixed_pose
from .scene import ConfigError, LinkPaths, Scenario

log = logging.getLogger(__name__)

SCHEMES = ("6dma", "6dma-position", "6dma-orientation", "fa", "es", "offline-6dma")
MONOTONE_TOL = 1e-9


class MonotonicityError(RuntimeError):
    """The weighted sum rate decreased during alternating optimization."""


@dataclass(frozen=True)
class SolverConfig:
    eps1: float = 1e-3
    eps2: float = 1e-3
    eps3: float = 1e-2
    max_outer: int = 200
    max_position_iters: int = 200
    max_orientation_iters: int = 100
    mode: str = "uni"
    scheme: str = "6dma"
    offline_samples: int = 20
    es_positions: int = 13 ** 3
    es_orientations: int = 12 ** 3
    es_max_sweeps: int = 20
    prv_error: float = 0.0
    fd_step: float = 1e-6

    def __post_init__(self):
        if min(self.eps1, self.eps2, self.eps3) <= 0:
            raise ConfigError("convergence thresholds must be positive")
        if self.max_outer < 1 or self.max_position_iters < 1 or self.max_orientation_iters < 1:
            raise ConfigError("iteration caps must be >= 1")
        if self.mode not in ("uni", "dual"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.offline_samples < 1:
            raise ConfigError("offline_samples must be >= 1")
        for n in (self.es_positions, self.es_orientations):
            if n < 1 or round(n ** (1 / 3)) ** 3 != n:
                raise ConfigError("ES grid sizes must be perfect cubes >= 1")
        if self.prv_error < 0:
            raise ConfigError("prv_error must be >= 0")

    @property
    def dual(self):
        return self.mode == "dual"

    def replace(self, **changes):
        from dataclasses import replace
        return replace(self, **changes)


@dataclass
class SolveTrace:
    wsr: list = field(default_factory=list)            # index 0 = initialization
    rates: list = field(default_factory=list)
    block_wsr: list = field(default_factory=list)      # after every single-AP update
    poses: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    beta: list = field(default_factory=list)
    inner: list = field(default_factory=list)
    timing: dict = field(default_factory=lambda: {"position": 0.0, "orientation": 0.0,
                                                  "combiner": 0.0})
    converged: bool = False

    @property
    def outer_iterations(self):
        return len(self.wsr) - 1

    def to_dict(self):
        return {
            "wsr": list(self.wsr),
            "rates": [list(map(float, r)) for r in self.rates],
            "block_wsr": list(self.block_wsr),
            "poses": [[pose_to_dict(p) for p in snap] for snap in self.poses],
            "alpha": [list(map(float, a)) for a in self.alpha],
            "beta": [[[float(b.real), float(b.imag)] for b in bb] for bb in self.beta],
            "inner": self.inner,
            "timing": dict(self.timing),
            "converged": self.converged,
            "outer_iterations": self.outer_iterations,
        }


class _Realization:
    """Channel, combiner and auxiliary variables for one set of link paths."""

    def __init__(self, paths: LinkPaths, poses, lam, noise, weights):
        self.paths = paths
        self.lam = lam
        self.noise = noise
        self.weights = weights
        self.H = assemble(poses, paths, lam)
        self.refresh()

    def refresh(self):
        self.W = rx.mmse_combiner(self.H, self.noise)
        self.alpha = rx.update_alpha(self.H, self.W, self.noise)
        self.beta = rx.update_beta(self.H, self.W, self.alpha, self.weights, self.noise)

    def set_pose(self, m, pose: AntennaPose):
        M = len(self.paths.distance)
        self.H[ap_rows(m, M, pose.num_pols)] = ap_channel(self.paths, m, pose, self.lam).T
        self.refresh()

    def wsr(self):
        return rx.wsr(self.H, self.W, self.weights, self.noise)

    def local(self, m, num_pols, scale):
        rows = ap_rows(m, self.H.shape[0] // num_pols, num_pols)
        c, P = rx.ap_coefficients(rows, self.H, self.W, self.alpha, self.beta, self.weights)
        return rx.LocalProblem.from_coefficients(ap_arrays(self.paths, m), c, P, self.lam, scale)


def initialize(scenario: Scenario, paths: LinkPaths, rng, dual=False):
    """Random positions; normals toward a random UT, polarization along its LoS field."""
    poses = []
    for m in range(scenario.num_aps):
        q = scenario.regions[m].sample(rng)
        for _ in range(100):
            k = int(rng.integers(scenario.num_uts))
            u = scenario.ut_positions[k] - scenario.ap_positions[m]
            u = u / np.linalg.norm(u)
            e = paths.fields[m, k, 0]
            v = e - (u @ e) * u
            if np.linalg.norm(v) > 1e-9:
                break
        else:
            raise RuntimeError("could not build an initial polarization vector")
        v = v / np.linalg.norm(v)
        cols = [u, v, np.cross(u, v)] if dual else [u, v]
        poses.append(AntennaPose(q, np.stack(cols, axis=1)))
    return poses


def _check_monotone(prev, new, where):
    if new < prev - MONOTONE_TOL:
        raise MonotonicityError(f"WSR dropped from {prev!r} to {new!r} at {where}")


def alternate(scenario: Scenario, realizations, poses, cfg: SolverConfig,
              positions=True, orientations=True):
    """Core alternating loop shared by online, offline and single-block schemes.

    ``realizations`` is a list of :class:`LinkPaths`; objectives are averaged
    over them with equal weights. Returns (poses, per-realization combiners,
    trace).
    """
    sc = scenario.config
    lam, noise, omega = sc.wavelength, sc.noise_power, sc.weight_vector
    poses = list(poses)
    R = poses[0].num_pols
    reals = [_Realization(p, poses, lam, noise, omega) for p in realizations]
    scale = 1.0 / len(reals)
    trace = SolveTrace()

    def avg_wsr():
        return float(np.mean([r.wsr() for r in reals]))

    def snapshot():
        trace.rates.append(np.mean([rx.rates(r.H, r.W, noise) for r in reals], axis=0))
        trace.poses.append(list(poses))
        trace.alpha.append(reals[0].alpha.copy())
        trace.beta.append(reals[0].beta.copy())

    current = avg_wsr()
    trace.wsr.append(current)
    trace.block_wsr.append(current)
    snapshot()

    def commit(m, pose, where):
        nonlocal current
        poses[m] = pose
        t0 = time.perf_counter()
        for r in reals:
            r.set_pose(m, pose)
        trace.timing["combiner"] += time.perf_counter() - t0
        new = avg_wsr()
        _check_monotone(current, new, where)
        current = new
        trace.block_wsr.append(new)

    for t in range(cfg.max_outer):
        start = current
        if positions:
            for m in range(len(poses)):
                t0 = time.perf_counter()
                prob = rx.LocalProblem.stack([r.local(m, R, scale) for r in reals])
                q, ptr = optimize_position(prob, poses[m].position, poses[m].orientation,
                                           scenario.regions[m], cfg.eps1, cfg.max_position_iters)
                trace.timing["position"] += time.perf_counter() - t0
                trace.inner.append({"kind": "position", "outer": t, "ap": m,
                                    "objective": ptr.objective,
                                    "surrogate_gain": ptr.surrogate_gain,
                                    "stop": ptr.stop_reason})
                commit(m, poses[m].replace(position=q), f"outer {t} position AP {m}")
        if orientations:
            for m in range(len(poses)):
                t0 = time.perf_counter()
                prob = rx.LocalProblem.stack([r.local(m, R, scale) for r in reals])
                q = poses[m].position
                A, otr = optimize_orientation(
                    lambda X: prob.value(q, X), poses[m].orientation, cfg.eps2,
                    cfg.max_orientation_iters,
                    gradient=lambda X: prob.orientation_gradient(q, X, cfg.fd_step))
                trace.timing["orientation"] += time.perf_counter() - t0
                trace.inner.append({"kind": "orientation", "outer": t, "ap": m,
                                    "objective": otr.objective,
                                    "orthonormality": otr.orthonormality,
                                    "stop": otr.stop_reason})
                commit(m, poses[m].replace(orientation=A), f"outer {t} orientation AP {m}")
        trace.wsr.append(current)
        snapshot()
        log.debug("outer %d: wsr %.6f", t, current)
        if current - start < cfg.eps3:
            trace.converged = True
            break
    return poses, [r.W for r in reals], trace


def ao_solve(scenario: Scenario, paths: LinkPaths, cfg: SolverConfig, rng=None, poses=None):
    """Online design from instantaneous CSI; returns (poses, W, trace)."""
    if poses is None:
        rng = np.random.default_rng() if rng is None else rng
        poses = initialize(scenario, paths, rng, cfg.dual)
    poses, Ws, trace = alternate(scenario, [paths], poses, cfg)
    return poses, Ws[0], trace


def offline_solve(scenario: Scenario, realizations, cfg: SolverConfig, rng=None, poses=None):
    """Statistical-CSI design over Monte Carlo ``realizations`` (list of LinkPaths)."""
    realizations = list(realizations)
    if not realizations:
        raise ConfigError("offline design needs at least one channel realization")
    if poses is None:
        rng = np.random.default_rng() if rng is None else rng
        poses = initialize(scenario, realizations[0], rng, cfg.dual)
    return alternate(scenario, realizations, poses, cfg)


def evaluate(scenario: Scenario, poses, paths: LinkPaths):
    """WSR and per-UT rates of fixed poses with a perfect-CSI MMSE combiner."""
    sc = scenario.config
    H = assemble(poses, paths, sc.wavelength)
    W = rx.mmse_combiner(H, sc.noise_power)
    r = rx.rates(H, W, sc.noise_power)
    return float(np.dot(sc.weight_vector, r)), r


def fa_poses(scenario: Scenario, dual=False):
    return [fixed_pose(dual) for _ in range(scenario.num_aps)]


# ---------------------------------------------------------------------------
# benchmark schemes


def euler_zyz(a, b, g):
    """Rotation matrix Rz(a) Ry(b) Rz(g)."""
    def rz(t):
        c, s = np.cos(t), np.sin(t)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    c, s = np.cos(b), np.sin(b)
    ry = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return rz(a) @ ry @ rz(g)


def orientation_grid(per_axis, dual=False):
    """Frames from a uniform Z-Y-Z Euler grid, shape (per_axis**3, 3, 2 or 3).

    A single point per axis gives the identity frame.
    """
    if per_axis == 1:
        ang = [np.zeros(1)] * 3
    else:
        turn = np.linspace(0.0, 2 * np.pi, per_axis, endpoint=False)
        ang = [turn, np.linspace(0.0, np.pi, per_axis), turn]
    cols = 3 if dual else 2
    frames = [euler_zyz(a, b, g)[:, :cols] for a in ang[0] for b in ang[1] for g in ang[2]]
    return np.array(frames)


def _grid_size(n):
    return int(round(n ** (1 / 3)))


def _batch_wsr(H, rows, cand, noise, weights):
    """WSR for each candidate block ``cand`` (N, K, R) placed into ``rows`` of H."""
    Hb = np.repeat(H[None], cand.shape[0], axis=0)
    Hb[:, rows, :] = np.swapaxes(cand, 1, 2)
    return np.log2(1.0 + rx.mmse_sinrs(Hb, noise)) @ weights


def es_baseline(scenario: Scenario, paths: LinkPaths, cfg: SolverConfig, poses=None):
    """Alternating per-AP selection over position and orientation grids.

    Starts from the fixed-antenna pose (or ``poses``); an AP moves only when a
    grid point strictly beats its incumbent. Returns (poses, sweep WSR list).
    """
    sc = scenario.config
    lam, noise, omega = sc.wavelength, sc.noise_power, sc.weight_vector
    poses = list(fa_poses(scenario, cfg.dual) if poses is None else poses)
    M, R = len(poses), poses[0].num_pols
    frames = orientation_grid(_grid_size(cfg.es_orientations), cfg.dual)
    H = assemble(poses, paths, lam)
    history = [float(np.log2(1.0 + rx.mmse_sinrs(H, noise)) @ omega)]
    for _ in range(cfg.es_max_sweeps):
        changed = False
        for m in range(M):
            rows = ap_rows(m, M, R)
            arrays = ap_arrays(paths, m)
            grid = scenario.regions[m].grid(_grid_size(cfg.es_positions))
            for block in ("position", "orientation"):
                if block == "position":
                    cand = kernels.ap_channel_positions(*arrays, grid, poses[m].orientation, lam)
                else:
                    cand = kernels.ap_channel_orientations(*arrays, poses[m].position, frames, lam)
                vals = _batch_wsr(H, rows, cand, noise, omega)
                best = int(np.argmax(vals))
                if vals[best] > history[-1] + 1e-12 * max(1.0, abs(history[-1])):
                    if block == "position":
                        poses[m] = poses[m].replace(position=grid[best])
                    else:
                        poses[m] = poses[m].replace(orientation=frames[best])
                    H[rows] = cand[best].T
                    history.append(float(vals[best]))
                    changed = True
        if not changed:
            break
    return poses, history


@dataclass
class SchemeResult:
    scheme: str
    wsr: float
    rates: np.ndarray
    outer_iters: int
    wall_ms: float
    poses: list
    trace: SolveTrace | None = None


def run_scheme(scheme, scenario: Scenario, paths: LinkPaths, cfg: SolverConfig, seed=None):
    """Design poses with ``scheme`` and score them on ``paths`` with perfect CSI.

    With ``cfg.prv_error > 0`` the design sees PRVs corrupted by CN(0, xi)
    errors while the score uses the true ones. ``seed`` (default: the
    scenario seed) drives initialization, offline sampling and PRV errors.
    """
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}")
    from .scene import perturb_prv, sample_realization
    seed = scenario.config.seed if seed is None else seed
    cfg = cfg.replace(scheme=scheme)
    design = paths
    if cfg.prv_error > 0:
        design = perturb_prv(paths, cfg.prv_error, np.random.default_rng([seed, 4]))
    init_rng = np.random.default_rng([seed, 2])
    t0 = time.perf_counter()
    trace = None
    iters = 0
    if scheme == "fa":
        poses = fa_poses(scenario, cfg.dual)
    elif scheme == "6dma":
        poses, _, trace = ao_solve(scenario, design, cfg, init_rng)
    elif scheme == "6dma-position":
        poses, _, trace = alternate(scenario, [design], fa_poses(scenario, cfg.dual), cfg,
                                    orientations=False)
    elif scheme == "6dma-orientation":
        start = [p.replace(position=np.zeros(3))
                 for p in initialize(scenario, design, init_rng, cfg.dual)]
        poses, _, trace = alternate(scenario, [design], start, cfg, positions=False)
    elif scheme == "offline-6dma":
        off_rng = np.random.default_rng([seed, 3])
        train = [sample_realization(scenario, off_rng) for _ in range(cfg.offline_samples)]
        if cfg.prv_error > 0:
            err_rng = np.random.default_rng([seed, 4])
            train = [perturb_prv(p, cfg.prv_error, err_rng) for p in train]
        poses, _, trace = offline_solve(scenario, train, cfg, init_rng)
    else:
        poses, history = es_baseline(scenario, design, cfg)
        iters = len(history) - 1
    wall = (time.perf_counter() - t0) * 1e3
    if trace is not None:
        iters = trace.outer_iterations
    value, r = evaluate(scenario, poses, paths)
    return SchemeResult(scheme, value, r, iters, wall, poses, trace)
