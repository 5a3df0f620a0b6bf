"""Random deployments and per-link multipath descriptions.

All positions are in meters in a global frame whose axes are shared by every
AP's local frame. Each AP's moving region is the cube ``[0, A*lambda]^3``
expressed relative to the AP reference point (a vertex of the cube).
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np


class ConfigError(ValueError):
    """Raised for an inconsistent scenario or solver configuration."""


def wave_vector(theta, phi):
    """Unit propagation-direction vector for elevation ``theta`` and azimuth ``phi``.

    Broadcasts over array inputs; the trailing axis of the result has length 3.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct = np.cos(theta)
    return np.stack([ct * np.cos(phi), ct * np.sin(phi), np.sin(theta)], axis=-1)


def direction_angles(vec):
    """Inverse of :func:`wave_vector` for (unnormalized) direction vectors."""
    vec = np.asarray(vec, dtype=float)
    vec = vec / np.linalg.norm(vec, axis=-1, keepdims=True)
    theta = np.arcsin(np.clip(vec[..., 2], -1.0, 1.0))
    phi = np.arctan2(vec[..., 1], vec[..., 0])
    return theta, phi


def orthonormal_complement(d):
    """Two unit vectors spanning the plane orthogonal to unit vector ``d``."""
    d = np.asarray(d, dtype=float)
    # pick the coordinate axis least aligned with d
    axis = np.zeros(3)
    axis[np.argmin(np.abs(d))] = 1.0
    b1 = np.cross(d, axis)
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(d, b1)
    b2 /= np.linalg.norm(b2)
    return b1, b2


@dataclass(frozen=True)
class BoxRegion:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ConfigError("box bounds must be 3-vectors")
        if np.any(lo >= hi):
            raise ConfigError("box region needs min < max on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, side):
        return cls(np.zeros(3), np.full(3, float(side)))

    def contains(self, q, tol=0.0):
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower - tol) and np.all(q <= self.upper + tol))

    def sample(self, rng):
        return rng.uniform(self.lower, self.upper)

    def grid(self, per_axis):
        """Uniform ``per_axis**3`` grid including both faces (the lower corner if 1)."""
        axes = []
        for lo, hi in zip(self.lower, self.upper):
            axes.append(np.array([lo]) if per_axis == 1 else np.linspace(lo, hi, per_axis))
        xx, yy, zz = np.meshgrid(*axes, indexing="ij")
        return np.stack([xx.ravel(), yy.ravel(), zz.ravel()], axis=1)


@dataclass(frozen=True)
class ScenarioConfig:
    """Deployment and link-budget parameters.

    Defaults follow the 2.4 GHz setting with 8 APs, 6 UTs, 5 paths per link,
    Rician factor 10, -80 dBm noise and 10 dBm transmit power. Geometry
    (AP ring, hotspot discs, area) is not given numerically by the model and
    is exposed here as configuration.
    """

    num_aps: int = 8
    num_uts: int = 6
    paths_per_link: int = 5
    wavelength: float = 0.125
    rician_factor: float = 10.0
    region_side: float = 2.0          # multiples of the wavelength
    noise_dbm: float = -80.0
    power_dbm: float = 10.0
    weights: tuple | None = None
    area: tuple = (-50.0, 50.0, -50.0, 50.0)
    ut_height: float = 1.5
    ap_radius: float = 35.0
    ap_height: float = 6.0
    hotspot_centers: tuple = ((-20.0, -15.0), (20.0, 15.0))
    hotspot_radius: float = 10.0
    hotspot_fraction: float = 0.8
    scatterer_volume: tuple = ((-50.0, 50.0), (-50.0, 50.0), (0.0, 20.0))
    seed: int = 0

    def __post_init__(self):
        if self.num_aps < 1 or self.num_uts < 1 or self.paths_per_link < 1:
            raise ConfigError("num_aps, num_uts and paths_per_link must be >= 1")
        if self.wavelength <= 0 or self.rician_factor <= 0 or self.region_side <= 0:
            raise ConfigError("wavelength, rician_factor and region_side must be > 0")
        if not 0.0 <= self.hotspot_fraction <= 1.0:
            raise ConfigError("hotspot_fraction must lie in [0, 1]")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != self.num_uts or min(w) <= 0:
                raise ConfigError("weights must be positive, one per UT")
            object.__setattr__(self, "weights", w)
        centers = np.asarray(self.hotspot_centers, dtype=float)
        if centers.shape != (2, 2):
            raise ConfigError("exactly two hotspot centers (x, y) are required")
        if np.linalg.norm(centers[0] - centers[1]) <= 2 * self.hotspot_radius:
            raise ConfigError("hotspot sub-regions overlap")
        x0, x1, y0, y1 = self.area
        for cx, cy in centers:
            r = self.hotspot_radius
            if cx - r < x0 or cx + r > x1 or cy - r < y0 or cy + r > y1:
                raise ConfigError("hotspot disc leaves the deployment area")

    @property
    def noise_power(self):
        """Normalized noise power sigma^2 / p (linear)."""
        return 10.0 ** ((self.noise_dbm - self.power_dbm) / 10.0)

    @property
    def weight_vector(self):
        if self.weights is None:
            return np.ones(self.num_uts)
        return np.asarray(self.weights, dtype=float)

    @property
    def region(self):
        return BoxRegion.cube(self.region_side * self.wavelength)

    def replace(self, **changes):
        data = asdict(self)
        data.update(changes)
        if "num_uts" in changes and "weights" not in changes:
            data["weights"] = None
        return ScenarioConfig(**data)


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    ap_positions: np.ndarray      # (M, 3)
    ut_positions: np.ndarray      # (K, 3)
    scatterers: np.ndarray        # (K, L-1, 3), one cluster per UT
    regions: tuple                # M BoxRegions, local coordinates

    @property
    def num_aps(self):
        return self.ap_positions.shape[0]

    @property
    def num_uts(self):
        return self.ut_positions.shape[0]

    def in_hotspot(self, points=None):
        pts = self.ut_positions if points is None else np.asarray(points)
        centers = np.asarray(self.config.hotspot_centers)
        dist = np.linalg.norm(pts[:, None, :2] - centers[None], axis=-1)
        return np.any(dist <= self.config.hotspot_radius, axis=1)


def _disc_point(rng, center, radius):
    r = radius * np.sqrt(rng.uniform())
    t = rng.uniform(0.0, 2 * np.pi)
    return center[0] + r * np.cos(t), center[1] + r * np.sin(t)


def sample_scatterers(cfg: ScenarioConfig, rng, num_uts=None):
    (x0, x1), (y0, y1), (z0, z1) = cfg.scatterer_volume
    k = cfg.num_uts if num_uts is None else num_uts
    n = max(cfg.paths_per_link - 1, 0)
    lo = np.array([x0, y0, z0])
    hi = np.array([x1, y1, z1])
    return rng.uniform(lo, hi, size=(k, n, 3))


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    """Build a deployment for ``cfg``; identical configs give identical scenarios."""
    rng = np.random.default_rng(cfg.seed)
    m = cfg.num_aps
    angles = 2 * np.pi * np.arange(m) / m
    aps = np.stack([cfg.ap_radius * np.cos(angles),
                    cfg.ap_radius * np.sin(angles),
                    np.full(m, cfg.ap_height)], axis=1)

    centers = np.asarray(cfg.hotspot_centers, dtype=float)
    x0, x1, y0, y1 = cfg.area
    uts = np.empty((cfg.num_uts, 3))
    in_hot = rng.uniform(size=cfg.num_uts) < cfg.hotspot_fraction
    for k in range(cfg.num_uts):
        if in_hot[k]:
            x, y = _disc_point(rng, centers[rng.integers(2)], cfg.hotspot_radius)
        else:
            # uniform over the area outside both hotspots
            while True:
                x, y = rng.uniform(x0, x1), rng.uniform(y0, y1)
                if np.all(np.hypot(x - centers[:, 0], y - centers[:, 1]) > cfg.hotspot_radius):
                    break
        uts[k] = (x, y, cfg.ut_height)

    scat = sample_scatterers(cfg, rng)
    regions = tuple(cfg.region for _ in range(m))
    return Scenario(cfg, aps, uts, scat, regions)


@dataclass(frozen=True)
class PathSet:
    """Multipath description of one (UT, AP) link."""

    elevation: np.ndarray   # (L,)
    azimuth: np.ndarray     # (L,)
    prv: np.ndarray         # (L,) complex
    fields: np.ndarray      # (L, 3) unit, orthogonal to each wave vector
    distance: float

    @property
    def num_paths(self):
        return self.prv.shape[0]

    @property
    def directions(self):
        return wave_vector(self.elevation, self.azimuth)

    def with_prv(self, prv):
        return PathSet(self.elevation, self.azimuth, np.asarray(prv, dtype=complex),
                       self.fields, self.distance)


def _prv_variances(cfg):
    L = cfg.paths_per_link
    chi = cfg.rician_factor
    var = np.empty(L)
    var[0] = chi / (1.0 + chi)
    if L > 1:
        var[1:] = 1.0 / ((L - 1) * (chi + 1.0))
    return var


def sample_paths(scenario: Scenario, k: int, m: int, rng) -> PathSet:
    """Draw the Rician multipath description of link (UT ``k``, AP ``m``).

    Path 0 is the LoS path toward the UT; paths 1.. point toward the UT's
    scatterer cluster.
    """
    cfg = scenario.config
    ap = scenario.ap_positions[m]
    src = np.vstack([scenario.ut_positions[k][None], scenario.scatterers[k]])
    theta, phi = direction_angles(src - ap)
    dirs = wave_vector(theta, phi)

    L = cfg.paths_per_link
    std = np.sqrt(_prv_variances(cfg) / 2.0)
    prv = std * (rng.standard_normal(L) + 1j * rng.standard_normal(L))

    fields = np.empty((L, 3))
    for l in range(L):
        b1, b2 = orthonormal_complement(dirs[l])
        t = rng.uniform(0.0, 2 * np.pi)
        e = np.cos(t) * b1 + np.sin(t) * b2
        # remove the residual component along d left by rounding
        e -= (dirs[l] @ e) * dirs[l]
        fields[l] = e / np.linalg.norm(e)
    dist = float(np.linalg.norm(scenario.ut_positions[k] - ap))
    return PathSet(theta, phi, prv, fields, dist)


class LinkPaths:
    """Stacked path data for all M x K links (uniform L).

    Arrays are indexed ``[m, k, l]``; ``dirs`` and ``fields`` carry a trailing
    axis of length 3.
    """

    def __init__(self, elevation, azimuth, prv, fields, distance):
        self.elevation = np.ascontiguousarray(elevation, dtype=float)
        self.azimuth = np.ascontiguousarray(azimuth, dtype=float)
        self.prv = np.ascontiguousarray(prv, dtype=complex)
        self.fields = np.ascontiguousarray(fields, dtype=float)
        self.distance = np.ascontiguousarray(distance, dtype=float)
        self.dirs = np.ascontiguousarray(wave_vector(self.elevation, self.azimuth))

    @property
    def shape(self):
        return self.prv.shape   # (M, K, L)

    @classmethod
    def from_pathsets(cls, grid: Sequence[Sequence[PathSet]]):
        """``grid[m][k]`` is the PathSet of link (UT k, AP m)."""
        el = np.array([[p.elevation for p in row] for row in grid])
        az = np.array([[p.azimuth for p in row] for row in grid])
        prv = np.array([[p.prv for p in row] for row in grid])
        fields = np.array([[p.fields for p in row] for row in grid])
        dist = np.array([[p.distance for p in row] for row in grid])
        return cls(el, az, prv, fields, dist)

    def link(self, k, m) -> PathSet:
        return PathSet(self.elevation[m, k], self.azimuth[m, k], self.prv[m, k],
                       self.fields[m, k], float(self.distance[m, k]))

    def pathsets(self):
        m_, k_, _ = self.shape
        return [[self.link(k, m) for k in range(k_)] for m in range(m_)]

    def with_prv(self, prv):
        return LinkPaths(self.elevation, self.azimuth, prv, self.fields, self.distance)

    def select_uts(self, idx):
        idx = np.asarray(idx)
        return LinkPaths(self.elevation[:, idx], self.azimuth[:, idx], self.prv[:, idx],
                         self.fields[:, idx], self.distance[:, idx])

    def __eq__(self, other):
        if not isinstance(other, LinkPaths):
            return NotImplemented
        return all(np.array_equal(getattr(self, a), getattr(other, a))
                   for a in ("elevation", "azimuth", "prv", "fields", "distance"))


def sample_link_paths(scenario: Scenario, rng) -> LinkPaths:
    """Sample every link in (m, k) order from one RNG stream."""
    grid = [[sample_paths(scenario, k, m, rng) for k in range(scenario.num_uts)]
            for m in range(scenario.num_aps)]
    return LinkPaths.from_pathsets(grid)


def sample_realization(scenario: Scenario, rng) -> LinkPaths:
    """Fresh small-scale realization: new scatterers, PRVs and field vectors.

    UT and AP locations, and hence the LoS directions, stay fixed.
    """
    scat = sample_scatterers(scenario.config, rng, scenario.num_uts)
    fresh = Scenario(scenario.config, scenario.ap_positions, scenario.ut_positions,
                     scat, scenario.regions)
    return sample_link_paths(fresh, rng)


def perturb_prv(paths: LinkPaths, xi, rng) -> LinkPaths:
    """Estimated PRVs ``a - n`` with i.i.d. ``n ~ CN(0, xi)``."""
    if xi <= 0:
        return paths
    shape = paths.prv.shape
    n = np.sqrt(xi / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return paths.with_prv(paths.prv - n)
