"""MMSE combining, SINR/rate evaluation and the fractional-programming reformulation.

Rates are in bits (base-2 logarithm) throughout, including the Lagrangian
dual term of the transformed objective, so that the transformed objective at
its closed-form auxiliary point equals the weighted sum rate exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


def mmse_combiner(H, noise):
    """W = (H H^H + noise I)^{-1} H."""
    H = np.asarray(H)
    if noise <= 0:
        raise ValueError("normalized noise power must be positive")
    if not np.all(np.isfinite(H)):
        raise ValueError("channel matrix has non-finite entries")
    gram = H @ H.conj().T
    gram[np.diag_indices_from(gram)] += noise
    return np.linalg.solve(gram, H)


def _cross_gains(H, W):
    # G[k, j] = w_k^H h_j
    return W.conj().T @ H


def sinrs(H, W, noise):
    G = _cross_gains(H, W)
    sig = np.abs(np.diag(G)) ** 2
    total = np.sum(np.abs(G) ** 2, axis=1)
    den = total - sig + np.sum(np.abs(W) ** 2, axis=0) * noise
    out = np.zeros_like(sig)
    ok = den > 0
    out[ok] = sig[ok] / den[ok]
    return out


def sinr(H, w, k, noise):
    """SINR of UT ``k`` with combining vector ``w`` (0 for a zero combiner)."""
    H = np.asarray(H)
    w = np.asarray(w)
    wn = float(np.vdot(w, w).real)
    if wn == 0.0:
        return 0.0
    sig = abs(np.vdot(w, H[:, k])) ** 2
    interf = sum(abs(np.vdot(w, H[:, j])) ** 2 for j in range(H.shape[1]) if j != k)
    return sig / (interf + wn * noise)


def rates(H, W, noise):
    return np.log2(1.0 + sinrs(H, W, noise))


def wsr(H, W, weights, noise):
    return float(np.dot(weights, rates(H, W, noise)))


def mmse_sinrs(H, noise):
    """Per-UT SINR under MMSE combining, batched over leading axes of ``H``.

    Uses h_k^H (sum_{j != k} h_j h_j^H + noise I)^{-1} h_k, computed from the
    full regularized Gram matrix.
    """
    H = np.asarray(H)
    n = H.shape[-2]
    gram = H @ np.swapaxes(H.conj(), -1, -2) + noise * np.eye(n)
    X = np.linalg.solve(gram, H)
    t = np.einsum("...ik,...ik->...k", H.conj(), X).real
    t = np.clip(t, 0.0, 1.0 - 1e-15)
    return t / (1.0 - t)


def update_alpha(H, W, noise):
    return sinrs(H, W, noise)


def update_beta(H, W, alpha, weights, noise):
    G = _cross_gains(H, W)
    den = np.sum(np.abs(G) ** 2, axis=1) + np.sum(np.abs(W) ** 2, axis=0) * noise
    num = np.sqrt(weights * (1.0 + alpha)) * np.diag(G)
    out = np.zeros(len(alpha), dtype=complex)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def quadratic_objective(H, W, alpha, beta, weights, noise, log=np.log2):
    """Transformed objective R(H, W, alpha, beta).

    ``log`` selects the base of the Lagrangian dual term; pass ``np.log`` for
    the natural-log form whose joint maximizer is the closed-form update.
    """
    G = _cross_gains(H, W)
    A = np.diag(G)
    B = np.sum(np.abs(W) ** 2, axis=0) * noise + np.sum(np.abs(G) ** 2, axis=1)
    first = np.sum(weights * (log(1.0 + alpha) - alpha))
    second = np.sum(2 * np.sqrt(weights * (1.0 + alpha)) * (beta.conj() * A).real
                    - np.abs(beta) ** 2 * B)
    return float(first + second)


def ap_coefficients(rows, H, W, alpha, beta, weights):
    """Linear and quadratic coefficients of the rows fed by one AP.

    Returns ``c`` (K, R) and the Hermitian ``P`` (R, R) such that the part of
    the transformed objective depending on those rows is
    ``sum_k 2 Re{c_k . h_k} - h_k^H P h_k`` with ``h_k = H[rows, k]``.
    """
    rows = list(rows)
    others = np.ones(H.shape[0], dtype=bool)
    others[rows] = False
    b2 = np.abs(beta) ** 2
    Wr = W[rows]                                    # (R, K')
    # s[k', k] = sum_{m' not in rows} w_{k',m'} h*_{k,m'}
    s = W[others].T @ H[others].conj()
    lin = (np.sqrt(weights * (1.0 + alpha)) * beta.conj())[None, :] * Wr.conj()
    cross = np.einsum("j,rj,jk->rk", b2, Wr.conj(), s)
    c = (lin - cross).T
    P = np.einsum("j,rj,sj->rs", b2, Wr, Wr.conj())
    return c, P


def coeffs_cv(m, H, W, alpha, beta, weights):
    """Single-polarization coefficients (c_{k,m} for all k, v_m)."""
    c, P = ap_coefficients([m], H, W, alpha, beta, weights)
    return c[:, 0], float(P[0, 0].real)


@dataclass
class LocalProblem:
    """Objective of one AP's pose with everything else held fixed.

    Rows index (realization, UT) pairs, so an average over channel
    realizations is represented by stacking rows with scaled ``c`` and ``P``.
    """

    dirs: np.ndarray      # (J, L, 3)
    fields: np.ndarray    # (J, L, 3)
    prv: np.ndarray       # (J, L)
    dist: np.ndarray      # (J,)
    c: np.ndarray         # (J, R)
    P: np.ndarray         # (J, R, R)
    wavelength: float

    @classmethod
    def from_coefficients(cls, arrays, c, P, lam, scale=1.0):
        dirs, fields, prv, dist = arrays
        K = c.shape[0]
        Pk = np.broadcast_to(P, (K,) + P.shape)
        return cls(dirs, fields, prv, dist, np.ascontiguousarray(scale * c),
                   np.ascontiguousarray(scale * Pk), lam)

    @classmethod
    def stack(cls, parts):
        if len(parts) == 1:
            return parts[0]
        cat = lambda name: np.ascontiguousarray(np.concatenate([getattr(p, name) for p in parts]))
        return cls(cat("dirs"), cat("fields"), cat("prv"), cat("dist"), cat("c"), cat("P"),
                   parts[0].wavelength)

    @property
    def args(self):
        return self.dirs, self.fields, self.prv, self.dist

    def channel(self, q, A):
        return kernels.ap_channel(*self.args, q, A, self.wavelength)

    def value(self, q, A):
        return kernels.local_objective(*self.args, self.c, self.P, q, A, self.wavelength)

    def orientation_gradient(self, q, A, step):
        return kernels.fd_gradient(*self.args, self.c, self.P, q, A, self.wavelength, step)

    def is_trivial(self):
        return not (np.any(self.c) or np.any(self.P))
