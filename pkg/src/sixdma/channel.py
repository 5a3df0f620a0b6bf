"""Channel coefficients as functions of antenna position and orientation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .scene import LinkPaths, PathSet, wave_vector


@dataclass(frozen=True)
class AntennaPose:
    """Position ``q`` (local frame) and orientation ``A = [u, v]`` or ``[u, v1, v2]``."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        q = np.array(self.position, dtype=float)
        A = np.array(self.orientation, dtype=float)
        if q.shape != (3,) or A.ndim != 2 or A.shape[0] != 3 or A.shape[1] not in (2, 3):
            raise ValueError("pose needs a 3-vector position and a 3x2 or 3x3 orientation")
        object.__setattr__(self, "position", q)
        object.__setattr__(self, "orientation", A)

    @property
    def normal(self):
        return self.orientation[:, 0]

    @property
    def num_pols(self):
        return self.orientation.shape[1] - 1

    def orthonormality_error(self):
        A = self.orientation
        return float(np.linalg.norm(A.T @ A - np.eye(A.shape[1])))

    def replace(self, position=None, orientation=None):
        return AntennaPose(self.position if position is None else position,
                           self.orientation if orientation is None else orientation)


def fixed_pose(dual=False):
    """Reference pose q = 0, u = x-axis, v = y-axis (v2 = z-axis when dual)."""
    A = np.eye(3) if dual else np.eye(3)[:, :2]
    return AntennaPose(np.zeros(3), A)


def frv(q, paths: PathSet, lam):
    """Field-response vector exp(j 2 pi d_l^T q / lam) over the link's paths."""
    return np.exp(2j * np.pi / lam * (paths.directions @ np.asarray(q, dtype=float)))


def aperture_loss(u, d):
    return max(float(np.dot(d, u)), 0.0)


def polarization_loss(v, e):
    return float(np.dot(e, v)) ** 2


def gain_matrix(A, paths: PathSet, lam, pol=1):
    """Diagonal per-path antenna gain matrix using columns ``u`` and ``A[:, pol]``."""
    A = np.asarray(A, dtype=float)
    u, v = A[:, 0], A[:, pol]
    dirs = paths.directions
    g = np.empty(paths.num_paths)
    for l in range(paths.num_paths):
        prod = aperture_loss(u, dirs[l]) * polarization_loss(v, paths.fields[l])
        g[l] = np.sqrt(prod) if prod > 0 else 0.0
    return np.diag(lam / (4 * np.pi * paths.distance) * g)


def channel_coeff(pose: AntennaPose, paths: PathSet, lam, pol=1):
    f = frv(pose.position, paths, lam)
    G = gain_matrix(pose.orientation, paths, lam, pol)
    return complex(f.conj() @ G @ paths.prv)


def ap_arrays(paths: LinkPaths, m):
    """Contiguous kernel inputs for AP ``m``: (dirs, fields, prv, dist)."""
    return paths.dirs[m], paths.fields[m], paths.prv[m], paths.distance[m]


def ap_channel(paths: LinkPaths, m, pose: AntennaPose, lam):
    """Channel of AP ``m`` to all UTs as a (K, R) array, R = number of polarizations."""
    return kernels.ap_channel(*ap_arrays(paths, m), pose.position, pose.orientation, lam)


def ap_rows(m, num_aps, num_pols):
    """Rows of the collective channel fed by AP ``m`` (``m`` and ``m + M`` when dual)."""
    return [m + r * num_aps for r in range(num_pols)]


def assemble(poses, paths, lam, mode=None):
    """Collective channel matrix, shape (M, K) or (2M, K) stacked as [H1; H2].

    ``paths`` is a :class:`LinkPaths` or a nested ``[m][k]`` list of PathSets.
    """
    if not isinstance(paths, LinkPaths):
        paths = LinkPaths.from_pathsets(paths)
    M, K, _ = paths.shape
    if len(poses) != M:
        raise ValueError(f"{len(poses)} poses for {M} APs")
    pols = {p.num_pols for p in poses}
    if len(pols) != 1:
        raise ValueError("all poses must share the same polarization mode")
    R = pols.pop()
    if mode is not None and (mode == "dual") != (R == 2):
        raise ValueError(f"mode {mode!r} does not match {R}-polarization poses")
    H = np.empty((R * M, K), dtype=complex)
    for m, pose in enumerate(poses):
        H[ap_rows(m, M, R)] = ap_channel(paths, m, pose, lam).T
    return H


__all__ = ["AntennaPose", "fixed_pose", "frv", "aperture_loss", "polarization_loss",
           "gain_matrix", "channel_coeff", "assemble", "ap_channel", "ap_rows",
           "ap_arrays", "wave_vector"]
