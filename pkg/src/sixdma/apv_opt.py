"""Per-AP position optimization by successive minorization.

At an anchor ``q_i`` the interference quadratic ``f^H C f`` of every row is
replaced by its max-eigenvalue majorizer, leaving a sum of cosines in ``q``
(the surrogate ``F_bar``). One projected step with the closed-form curvature
bound maximizes the resulting quadratic minorant over the box.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .receiver import LocalProblem
from .scene import BoxRegion


@dataclass(frozen=True)
class SurrogateTerms:
    anchor: np.ndarray    # (3,)
    b: np.ndarray         # (J, L) complex
    varpi: np.ndarray     # (J,) max eigenvalue of each C matrix
    dirs: np.ndarray      # (J, L, 3)
    wavelength: float
    offset: float = 0.0   # F(q) >= F_bar(q) + offset, equality at the anchor

    @property
    def amp(self):
        return np.abs(self.b)

    @property
    def phase(self):
        return np.angle(self.b)


def path_gains(problem: LocalProblem, A):
    """g[j, l, r]: per-path amplitude gain times PRV, so that h = f^H g."""
    A = np.asarray(A, dtype=float)
    ghat = np.maximum(problem.dirs @ A[:, 0], 0.0)
    gbar = (problem.fields @ A[:, 1:]) ** 2
    scale = problem.wavelength / (4 * np.pi * problem.dist)
    amp = scale[:, None, None] * np.sqrt(ghat[..., None] * gbar)
    return amp * problem.prv[..., None]


def _frv(dirs, q, lam):
    return np.exp(2j * np.pi / lam * (dirs @ q))


def interference_matrices(problem: LocalProblem, A):
    """C_j = G_j conj(P_j) G_j^H, with G_j the (L, R) matrix of path gains."""
    g = path_gains(problem, A)
    return np.einsum("jlr,jrs,jms->jlm", g, problem.P.conj(), g.conj())


def max_eigenvalues(problem: LocalProblem, A):
    g = path_gains(problem, A)
    if g.shape[2] == 1:
        # rank-one: C = v g g^H
        return problem.P[:, 0, 0].real * np.sum(np.abs(g[..., 0]) ** 2, axis=1)
    return np.linalg.eigvalsh(interference_matrices(problem, A))[:, -1]


def build_surrogate(q_anchor, problem: LocalProblem, A) -> SurrogateTerms:
    """Cosine-sum surrogate of the AP position objective at ``q_anchor``."""
    q_anchor = np.asarray(q_anchor, dtype=float)
    lam = problem.wavelength
    g = path_gains(problem, A)
    C = interference_matrices(problem, A)
    if g.shape[2] == 1:
        varpi = problem.P[:, 0, 0].real * np.sum(np.abs(g[..., 0]) ** 2, axis=1)
    else:
        varpi = np.linalg.eigvalsh(C)[:, -1]
    varpi = np.maximum(varpi, 0.0)
    f0 = _frv(problem.dirs, q_anchor, lam)                              # (J, L)
    Cf = np.einsum("jlm,jm->jl", C, f0)
    b = varpi[:, None] * f0 - Cf + np.einsum("jlr,jr->jl", g, problem.c)
    L = f0.shape[1]
    # constant: -varpi L - f0^H (varpi I - C) f0
    quad0 = varpi * L - np.einsum("jl,jl->j", f0.conj(), Cf).real
    offset = float(-np.sum(varpi * L + quad0))
    return SurrogateTerms(q_anchor, b, varpi, problem.dirs, lam, offset)


def f_bar(q, terms: SurrogateTerms):
    return kernels.surrogate_eval(terms.dirs, np.ascontiguousarray(terms.amp),
                                  np.ascontiguousarray(terms.phase), np.asarray(q, float),
                                  terms.wavelength)[0]


def grad_f_bar(q, terms: SurrogateTerms):
    return kernels.surrogate_eval(terms.dirs, np.ascontiguousarray(terms.amp),
                                  np.ascontiguousarray(terms.phase), np.asarray(q, float),
                                  terms.wavelength)[1]


def hess_f_bar(q, terms: SurrogateTerms):
    lam = terms.wavelength
    ups = 2 * np.pi / lam * (terms.dirs @ np.asarray(q, float)) - terms.phase
    w = terms.amp * np.cos(ups)
    return -(8 * np.pi ** 2 / lam ** 2) * np.einsum("jl,jlx,jly->xy", w, terms.dirs, terms.dirs)


def delta_bound(terms: SurrogateTerms):
    """Curvature constant with delta I >= Hessian of F_bar everywhere."""
    return float(24 * np.pi ** 2 / terms.wavelength ** 2 * np.sum(terms.amp))


def mm_upper_bound(q, q_anchor, problem: LocalProblem, A):
    """Per-row majorizer of the interference quadratic f^H C f at ``q``."""
    lam = problem.wavelength
    C = interference_matrices(problem, A)
    varpi = np.maximum(max_eigenvalues(problem, A), 0.0)
    f = _frv(problem.dirs, np.asarray(q, float), lam)
    fi = _frv(problem.dirs, np.asarray(q_anchor, float), lam)
    D = varpi[:, None, None] * np.eye(f.shape[1]) - C
    Df = np.einsum("jlm,jm->jl", D, fi)
    t1 = varpi * np.sum(np.abs(f) ** 2, axis=1)
    t2 = -2 * np.einsum("jl,jl->j", f.conj(), Df).real
    t3 = np.einsum("jl,jl->j", fi.conj(), Df).real
    return t1 + t2 + t3


def interference_quadratic(q, problem: LocalProblem, A):
    """f^H C f per row, equal to h^H P h."""
    h = problem.channel(np.asarray(q, float), A)
    return np.einsum("jr,jrs,js->j", h.conj(), problem.P, h).real


def project_box(q, region: BoxRegion):
    return np.minimum(np.maximum(np.asarray(q, dtype=float), region.lower), region.upper)


@dataclass
class PositionTrace:
    objective: list = field(default_factory=list)       # F(q^i), true objective
    surrogate_gain: list = field(default_factory=list)  # F_bar_i(q^{i+1}) - F_bar_i(q^i)
    positions: list = field(default_factory=list)
    stop_reason: str = ""

    @property
    def iterations(self):
        return len(self.surrogate_gain)


def optimize_position(problem: LocalProblem, q0, A, region: BoxRegion, eps=1e-3,
                      max_iters=200):
    """Projected SCA ascent of the AP position objective.

    Returns the final position and a :class:`PositionTrace`. The surrogate is
    rebuilt at every iterate; a step is kept only if the true objective does
    not decrease.
    """
    q = project_box(q0, region)
    A = np.asarray(A, dtype=float)
    trace = PositionTrace()
    val = problem.value(q, A)
    trace.objective.append(val)
    trace.positions.append(q.copy())
    if problem.is_trivial():
        trace.stop_reason = "constant"
        return q, trace
    for _ in range(max_iters):
        terms = build_surrogate(q, problem, A)
        delta = delta_bound(terms)
        if delta <= 0.0:
            trace.stop_reason = "constant"
            break
        amp = np.ascontiguousarray(terms.amp)
        ph = np.ascontiguousarray(terms.phase)
        fb0, grad = kernels.surrogate_eval(terms.dirs, amp, ph, q, terms.wavelength)
        q_new = project_box(q + grad / delta, region)
        fb1, _ = kernels.surrogate_eval(terms.dirs, amp, ph, q_new, terms.wavelength)
        new_val = problem.value(q_new, A)
        if new_val < val:
            trace.stop_reason = "no-ascent"
            break
        trace.surrogate_gain.append(fb1 - fb0)
        gain = new_val - val
        q, val = q_new, new_val
        trace.objective.append(val)
        trace.positions.append(q.copy())
        if gain < eps:
            trace.stop_reason = "converged"
            break
    else:
        trace.stop_reason = "max-iters"
    return q, trace
