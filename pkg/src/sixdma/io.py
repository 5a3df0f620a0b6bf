"""JSON layout for scenarios, link paths and poses.

Floats are written with ``repr`` precision, so loading and re-dumping a
document reproduces it byte for byte. Complex path responses are stored as
``[re, im]`` pairs; all angles are radians, all lengths meters.

Layout::

    {"config": {...ScenarioConfig fields...},
     "ap_positions": [[x, y, z], ...], "ut_positions": [...],
     "scatterers": [[[x, y, z], ...], ...],
     "regions": [{"lower": [...], "upper": [...]}, ...]}

    {"elevation": [m][k][l], "azimuth": [m][k][l],
     "prv": [m][k][l][re, im], "fields": [m][k][l][3], "distance": [m][k]}
"""
from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .channel import AntennaPose
from .scene import BoxRegion, LinkPaths, Scenario, ScenarioConfig


def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    return x


def config_to_dict(cfg: ScenarioConfig):
    return asdict(cfg)


def config_from_dict(data) -> ScenarioConfig:
    return ScenarioConfig(**{k: _tuplify(v) for k, v in data.items()})


def scenario_to_dict(s: Scenario):
    return {
        "config": config_to_dict(s.config),
        "ap_positions": s.ap_positions.tolist(),
        "ut_positions": s.ut_positions.tolist(),
        "scatterers": s.scatterers.tolist(),
        "regions": [{"lower": r.lower.tolist(), "upper": r.upper.tolist()} for r in s.regions],
    }


def scenario_from_dict(data) -> Scenario:
    cfg = config_from_dict(data["config"])
    scat = np.asarray(data["scatterers"], dtype=float)
    if scat.size == 0:
        scat = scat.reshape(cfg.num_uts, 0, 3)
    regions = tuple(BoxRegion(np.asarray(r["lower"], float), np.asarray(r["upper"], float))
                    for r in data["regions"])
    return Scenario(cfg, np.asarray(data["ap_positions"], float),
                    np.asarray(data["ut_positions"], float), scat, regions)


def paths_to_dict(p: LinkPaths):
    return {
        "elevation": p.elevation.tolist(),
        "azimuth": p.azimuth.tolist(),
        "prv": np.stack([p.prv.real, p.prv.imag], axis=-1).tolist(),
        "fields": p.fields.tolist(),
        "distance": p.distance.tolist(),
    }


def paths_from_dict(data) -> LinkPaths:
    ri = np.asarray(data["prv"], dtype=float)
    return LinkPaths(data["elevation"], data["azimuth"], ri[..., 0] + 1j * ri[..., 1],
                     data["fields"], data["distance"])


def pose_to_dict(pose: AntennaPose):
    return {"position": pose.position.tolist(), "orientation": pose.orientation.tolist()}


def pose_from_dict(data) -> AntennaPose:
    return AntennaPose(np.asarray(data["position"], float), np.asarray(data["orientation"], float))


def dumps(obj) -> str:
    """Canonical JSON text (sorted keys, two-space indent, trailing newline)."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def save(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
