"""Pure-numpy implementations of the per-AP hot kernels.

These mirror ``_kernels.pyx`` argument for argument and serve as the
fallback when the compiled extension is unavailable.

Shapes for one AP: ``dirs``/``fields`` (K, L, 3), ``prv`` (K, L) complex,
``dist`` (K,), ``A`` (3, 1 + R) with R receive polarizations,
``c`` (K, R) complex, ``P`` (K, R, R) complex Hermitian.
"""
import numpy as np


def _amplitudes(dirs, fields, dist, A, lam):
    ghat = np.maximum(dirs @ A[:, 0], 0.0)                    # (K, L)
    gbar = (fields @ A[:, 1:]) ** 2                           # (K, L, R)
    scale = lam / (4 * np.pi * dist)
    return scale[:, None, None] * np.sqrt(ghat[..., None] * gbar)


def ap_channel(dirs, fields, prv, dist, q, A, lam):
    """Channel coefficients h[k, r] of one AP at position ``q``, orientation ``A``."""
    phase = np.exp(-2j * np.pi / lam * (dirs @ q))             # conj of the FRV
    amp = _amplitudes(dirs, fields, dist, A, lam)
    return np.einsum("kl,klr->kr", phase * prv, amp)


def ap_channel_positions(dirs, fields, prv, dist, Q, A, lam):
    """``ap_channel`` for a batch of positions ``Q`` (N, 3) -> (N, K, R)."""
    amp = _amplitudes(dirs, fields, dist, A, lam)
    phase = np.exp(-2j * np.pi / lam * np.einsum("klx,nx->nkl", dirs, Q))
    return np.einsum("nkl,klr->nkr", phase * prv[None], amp)


def ap_channel_orientations(dirs, fields, prv, dist, q, As, lam):
    """``ap_channel`` for a batch of orientations ``As`` (N, 3, 1 + R) -> (N, K, R)."""
    phase = np.exp(-2j * np.pi / lam * (dirs @ q)) * prv
    ghat = np.maximum(np.einsum("klx,nx->nkl", dirs, As[:, :, 0]), 0.0)
    gbar = np.einsum("klx,nxr->nklr", fields, As[:, :, 1:]) ** 2
    scale = lam / (4 * np.pi * dist)
    amp = scale[None, :, None, None] * np.sqrt(ghat[..., None] * gbar)
    return np.einsum("kl,nklr->nkr", phase, amp)


def local_objective(dirs, fields, prv, dist, c, P, q, A, lam):
    """sum_k 2 Re{c_k . h_k} - h_k^H P_k h_k for this AP's rows."""
    h = ap_channel(dirs, fields, prv, dist, q, A, lam)
    lin = 2.0 * np.sum((c * h).real)
    quad = np.einsum("kr,krs,ks->", h.conj(), P, h).real
    return float(lin - quad)


def fd_gradient(dirs, fields, prv, dist, c, P, q, A, lam, step):
    """Forward-difference gradient of ``local_objective`` w.r.t. the entries of A."""
    base = local_objective(dirs, fields, prv, dist, c, P, q, A, lam)
    grad = np.empty_like(A)
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            Ap = A.copy()
            Ap[i, j] += step
            grad[i, j] = (local_objective(dirs, fields, prv, dist, c, P, q, Ap, lam) - base) / step
    return grad


def surrogate_eval(dirs, amp, ang, q, lam):
    """Value and gradient of sum 2|b| cos(2 pi d.q / lam - angle(b))."""
    ups = 2 * np.pi / lam * (dirs @ q) - ang
    val = 2.0 * np.sum(amp * np.cos(ups))
    grad = -(4 * np.pi / lam) * np.einsum("kl,klx->x", amp * np.sin(ups), dirs)
    return float(val), grad
