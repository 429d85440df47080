"""Concave relaxation max sum_i alpha_i ln <Q_i, X> over the spectahedron.

The feasible set is {X PSD, trace(X) = 1}. The objective is concave (ln of
a positive linear functional), finite everywhere on the feasible set because
the forms are positive definite, and its exact differential is

    grad(X) = sum_i (alpha_i / <Q_i, X>) Q_i ,

a positive definite matrix. The solver is Frank-Wolfe: the linear
maximization oracle over the spectahedron is a top eigenvector v of the
gradient (argmax of <G, .> is v (x) v), the duality gap <G, v v' - X> upper
bounds the suboptimality by concavity, and the step size comes from an exact
one-dimensional line search (bisection on the derivative of the concave
function gamma -> f((1 - gamma) X + gamma v v')).

Plain Frank-Wolfe alternates between near-parallel vertices when the
maximizer is rank deficient and its gap then decays like 1/t, which is far
too slow for the 1e-6 termination threshold. Each iteration therefore ends
with a polish phase: writing X = Y Y' with ||Y||_F = 1 turns the feasible
set into the Frobenius unit sphere, on which the objective has Riemannian
gradient 2 (G Y - Y); monotone backtracking ascent steps in Y converge to
the same KKT points (G Y = Y) without any feasibility boundary, and the
combined iteration reaches the threshold in a handful of outer steps. The
polish never decreases the objective and preserves feasibility exactly, so
the per-iteration monotonicity and the gap certificate are unaffected.

The optimum is generally not attained at an iterate exactly; the returned
gap is a true suboptimality certificate (value >= optimum - fw_gap) and is
reported alongside all downstream distance bounds rather than folded into
their constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS
from .linalg import SymMatrix, _eigh_checked
from .quadmap import QuadraticMap, SimplexVector, SpectahedronPoint


@dataclass
class SdpSolution:
    """Solver output: the point, its value, and the optimality certificate.

    rescale holds tau_i = 1 / <Q_i, X_star>, the positive factors that make
    the rescaled forms satisfy <tau_i Q_i, X_star> = 1. converged is False
    when the iteration cap was reached with the gap still above tolerance.
    objective_trace records the objective at every outer iteration.
    """

    X_star: SpectahedronPoint
    value: float
    fw_gap: float
    iterations: int
    rescale: np.ndarray
    converged: bool
    objective_trace: list = field(default_factory=list)


def _inner_values(Qstack: np.ndarray, X: np.ndarray) -> np.ndarray:
    vals = np.einsum("kij,ij->k", Qstack, X)
    if np.any(vals <= 0.0):
        raise AssertionError(
            "some <Q_i, X> <= 0 on the spectahedron; the positive "
            "definiteness invariant was breached upstream")
    return vals


def objective(qmap: QuadraticMap, alpha: SimplexVector, X: SpectahedronPoint) -> float:
    """sum_i alpha_i ln <Q_i, X>; finite by positive definiteness."""
    if alpha.k != qmap.k:
        raise ValueError("weight vector length must match the number of forms")
    vals = _inner_values(qmap.Q, X.mat)
    return float(np.sum(alpha.values * np.log(vals)))


def gradient(qmap: QuadraticMap, alpha: SimplexVector, X: SpectahedronPoint) -> SymMatrix:
    """Exact differential sum_i (alpha_i / <Q_i, X>) Q_i; positive definite."""
    if alpha.k != qmap.k:
        raise ValueError("weight vector length must match the number of forms")
    vals = _inner_values(qmap.Q, X.mat)
    G = np.einsum("k,kij->ij", alpha.values / vals, qmap.Q)
    return SymMatrix(G)


def _line_search(alpha: np.ndarray, c: np.ndarray, d: np.ndarray,
                 width_tol: float) -> float:
    """Maximize gamma -> sum alpha ln((1-gamma) c + gamma d) over [0, 1].

    The function is concave; bisect on its derivative. c and d are the
    per-form inner products at the current point and at the vertex.
    """
    diff = d - c

    def deriv(g: float) -> float:
        return float(np.sum(alpha * diff / (c + g * diff)))

    if deriv(1.0) >= 0.0:
        return 1.0
    if deriv(0.0) <= 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > width_tol:
        mid = 0.5 * (lo + hi)
        if deriv(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sphere_polish(Qstack: np.ndarray, alpha: np.ndarray, X: np.ndarray,
                   max_steps: int = 200) -> np.ndarray:
    """Monotone ascent of f(Y Y') over ||Y||_F = 1 starting at Y = X^(1/2).

    Backtracking (Armijo) projected gradient ascent; the Riemannian gradient
    at Y is 2 (G Y - Y) because <2 G Y, Y> = 2 <G, X> = 2. Returns a feasible
    X whose objective is at least the input's.
    """
    w, V = np.linalg.eigh(X)
    Y = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    nrm = float(np.linalg.norm(Y))
    if nrm == 0.0:
        return X
    Y = Y / nrm

    def f_of(Ym: np.ndarray):
        Xm = Ym @ Ym.T
        vals = np.einsum("kij,ij->k", Qstack, Xm)
        return float(np.sum(alpha * np.log(vals))), vals, Xm

    val, vals, Xcur = f_of(Y)
    step = 1.0
    for _ in range(max_steps):
        G = np.einsum("k,kij->ij", alpha / vals, Qstack)
        R = 2.0 * (G @ Y - Y)
        rn = float(np.linalg.norm(R))
        if rn < 1e-14:
            break
        improved = False
        for _ in range(40):
            Yt = Y + step * R
            Yt = Yt / np.linalg.norm(Yt)
            vt, valst, Xt = f_of(Yt)
            if vt > val + 1e-4 * step * rn * rn:
                Y, val, vals, Xcur = Yt, vt, valst, Xt
                improved = True
                step *= 1.3
                break
            step *= 0.5
        if not improved:
            break
    return 0.5 * (Xcur + Xcur.T)


def solve(qmap: QuadraticMap, alpha: SimplexVector,
          tol: float = DEFAULTS.fw_gap,
          max_iters: int = DEFAULTS.fw_max_iters,
          line_search_tol: float = DEFAULTS.line_search) -> SdpSolution:
    """Frank-Wolfe with exact line search and sphere polish; X_0 = I / n.

    Terminates when the gap <G, v v' - X> drops to tol or after max_iters
    outer iterations (then converged=False; the result is still feasible and
    certified by its gap). The objective is nondecreasing across iterations,
    asserted per step.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if alpha.k != qmap.k:
        raise ValueError("weight vector length must match the number of forms")
    n = qmap.n
    Qstack = qmap.Q
    al = alpha.values
    X = np.eye(n) / n
    trace_log: list[float] = []
    gap = np.inf
    iterations = 0
    converged = False
    prev_val = -np.inf
    for it in range(max_iters + 1):
        c = _inner_values(Qstack, X)
        val = float(np.sum(al * np.log(c)))
        if val < prev_val - 1e-12:
            raise AssertionError(
                f"objective decreased from {prev_val!r} to {val!r} at iteration {it}")
        prev_val = val
        trace_log.append(val)
        G = np.einsum("k,kij->ij", al / c, Qstack)
        wG, VG = _eigh_checked(G, DEFAULTS.eigen_residual)
        v = VG[:, -1]
        gap = float(wG[-1] - np.sum(G * X))
        iterations = it
        if gap <= tol:
            converged = True
            break
        if it == max_iters:
            break
        d = np.einsum("kij,i,j->k", Qstack, v, v)
        gamma = _line_search(al, c, d, line_search_tol)
        X = (1.0 - gamma) * X + gamma * np.outer(v, v)
        X = 0.5 * (X + X.T)
        X = _sphere_polish(Qstack, al, X)

    point = SpectahedronPoint(X)
    vals = _inner_values(Qstack, point.mat)
    value = float(np.sum(al * np.log(vals)))
    return SdpSolution(
        X_star=point,
        value=value,
        fw_gap=gap,
        iterations=iterations,
        rescale=1.0 / vals,
        converged=converged,
        objective_trace=trace_log,
    )


def rescale_to_unit(qmap: QuadraticMap, sol: SdpSolution) -> QuadraticMap:
    """Rescale the forms Q_i -> tau_i Q_i so that <Q_i', X_star> = 1 for all i.

    At the solution the rescaled objective is 0. tau comes from the solution
    record (tau_i = 1 / <Q_i, X_star>).
    """
    if sol.rescale.size != qmap.k:
        raise ValueError("solution does not match this map")
    return QuadraticMap(list(qmap.Q * sol.rescale[:, None, None]))
