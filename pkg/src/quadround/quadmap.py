"""Quadratic maps, preconditioning, hull-point certificates, and KL distance.

A quadratic map psi sends x in R^n to (q_1(x), ..., q_k(x)) where each
q_i(x) = x' Q_i x is a positive definite form. The preconditioning step
replaces Q_i by T^-1 Q_i T^-1 with T = (sum_i Q_i)^(1/2), which normalizes
sum_i Q_i = I without changing the image of the map: the new map evaluated
at T x equals the old map at x.

A point a of the convex hull of the image, scaled so its coordinates sum
to 1, is always carried together with a witness: a PSD matrix X with
a_i = <Q_i, X>. For a preconditioned map trace(X) = sum_i a_i = 1, so the
witness lives on the spectahedron. The rounding procedures consume the
witness, not just a, so the certificate is an explicit input here.

Distances between hull points and image points are measured by relative
entropy D(a||b) = sum_i a_i ln(a_i / b_i), natural logarithm throughout.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .config import DEFAULTS
from .linalg import (SymMatrix, as_sym, cholesky, inverse_spd, sqrt_psd,
                     sym_eigen)


class SimplexVector:
    """Nonnegative k-vector summing to 1 (probability vector).

    Construction renormalizes by the sum, but rejects input whose sum
    deviates from 1 by more than ``sum_tol`` and input with genuinely
    negative entries (values above -1e-12 are clamped to zero first).
    """

    __slots__ = ("values",)

    def __init__(self, values, sum_tol: float = DEFAULTS.simplex_sum):
        v = np.array(values, dtype=float).reshape(-1)
        if v.size < 1:
            raise ValueError("simplex vector must have at least one entry")
        if not np.all(np.isfinite(v)):
            raise ValueError("simplex vector entries must be finite")
        if np.any(v < -1e-12):
            raise ValueError(f"negative entry {v.min():.3e} in simplex vector")
        v = np.clip(v, 0.0, None)
        s = float(v.sum())
        if abs(s - 1.0) > sum_tol:
            raise ValueError(f"entries sum to {s!r}, more than {sum_tol} from 1")
        self.values = v / s

    @property
    def k(self) -> int:
        return self.values.size

    def __repr__(self):
        return f"SimplexVector({np.array2string(self.values, precision=4)})"


class SpectahedronPoint:
    """PSD matrix with unit trace (a point of the spectahedron)."""

    __slots__ = ("X",)

    def __init__(self, mat, psd_tol: float = DEFAULTS.psd_check,
                 trace_tol: float = DEFAULTS.trace_check):
        X = as_sym(mat)
        w, _ = sym_eigen(X)
        scale = max(float(np.linalg.norm(X.mat)), 1e-300)
        if w[0] < -psd_tol * scale:
            raise ValueError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
        tr = float(np.trace(X.mat))
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace is {tr!r}, more than {trace_tol} from 1")
        self.X = X

    @property
    def mat(self) -> np.ndarray:
        return self.X.mat

    @property
    def n(self) -> int:
        return self.X.n

    def __repr__(self):
        return f"SpectahedronPoint(n={self.n})"


class QuadraticMap:
    """k positive definite quadratic forms on R^n.

    Each form is validated positive definite by Cholesky on construction.
    The stacked array of form matrices is exposed as ``Q`` (shape k x n x n)
    for vectorized evaluation.
    """

    __slots__ = ("Q",)

    def __init__(self, forms):
        mats = [as_sym(f) for f in forms]
        if len(mats) < 1:
            raise ValueError("a quadratic map needs at least one form")
        n = mats[0].n
        for i, m in enumerate(mats):
            if m.n != n:
                raise ValueError(f"form {i} has dimension {m.n}, expected {n}")
            try:
                cholesky(m)
            except Exception as exc:
                raise type(exc)(f"form {i} is not positive definite: {exc}") from exc
        self.Q = np.stack([m.mat for m in mats])

    @property
    def n(self) -> int:
        return self.Q.shape[1]

    @property
    def k(self) -> int:
        return self.Q.shape[0]

    def form(self, i: int) -> SymMatrix:
        return SymMatrix(self.Q[i])

    def __repr__(self):
        return f"QuadraticMap(n={self.n}, k={self.k})"


class PreconditionedMap:
    """A map together with its normalized version and the change of variables.

    ``hat`` holds the forms T^-1 Q_i T^-1 where T is the symmetric square
    root of S = sum_i Q_i, so the hat forms sum to the identity. The two
    maps have the same image; hat evaluated at T x equals the original at x.
    """

    __slots__ = ("original", "hat", "T", "T_inv")

    def __init__(self, original: QuadraticMap, hat: QuadraticMap,
                 T: SymMatrix, T_inv: SymMatrix,
                 resid_tol: float = DEFAULTS.precondition_residual):
        resid = float(np.linalg.norm(hat.Q.sum(axis=0) - np.eye(hat.n)))
        if resid > resid_tol:
            raise ValueError(f"sum of normalized forms is {resid:.3e} from I")
        self.original = original
        self.hat = hat
        self.T = T
        self.T_inv = T_inv

    def push_point(self, x) -> np.ndarray:
        """Map a point of the original variables to the normalized ones."""
        return self.T.mat @ np.asarray(x, dtype=float).reshape(-1)

    def pull_point(self, y) -> np.ndarray:
        """Map a point of the normalized variables back to the original ones."""
        return self.T_inv.mat @ np.asarray(y, dtype=float).reshape(-1)

    def push_witness(self, X) -> SpectahedronPoint:
        """Transport a hull witness by the congruence X -> T X T.

        Preserves the hull point: <T^-1 Q_i T^-1, T X T> = <Q_i, X>. The
        input must be PSD with sum_i <Q_i, X> = 1, so the image has unit
        trace and lands on the spectahedron.
        """
        Xm = as_sym(X).mat
        out = self.T.mat @ Xm @ self.T.mat
        return SpectahedronPoint(out)


def evaluate(qmap: QuadraticMap, x) -> np.ndarray:
    """Evaluate the map: component i is x' Q_i x (nonnegative, > 0 for x != 0)."""
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size != qmap.n:
        raise ValueError(f"point has dimension {v.size}, expected {qmap.n}")
    return np.einsum("kij,i,j->k", qmap.Q, v, v)


def evaluate_batch(Qstack: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Row-wise map evaluation: pts is (b, n), result is (b, k)."""
    return np.einsum("kij,bi,bj->bk", Qstack, pts, pts)


def precondition(qmap: QuadraticMap) -> PreconditionedMap:
    """Normalize the forms so they sum to the identity.

    S = sum_i Q_i is positive definite; with T = S^(1/2) the normalized
    forms are T^-1 Q_i T^-1. The identity hat(T x) = original(x) is exact up
    to rounding, hence both maps have the same image.
    """
    S = SymMatrix(qmap.Q.sum(axis=0))
    T = sqrt_psd(S)
    T_inv = inverse_spd(T)
    hat_forms = []
    for i in range(qmap.k):
        M = T_inv.mat @ qmap.Q[i] @ T_inv.mat
        hat_forms.append(SymMatrix(M))
    hat = QuadraticMap(hat_forms)
    return PreconditionedMap(qmap, hat, T, T_inv)


def hull_point_from_witness(qmap: QuadraticMap, witness: SpectahedronPoint,
                            sum_tol: float = DEFAULTS.hull_sum) -> SimplexVector:
    """Hull point a with a_i = <Q_i, X> for a spectahedron witness X.

    Requires a preconditioned map (forms summing to I) so that
    sum_i a_i = trace(X) = 1; deviations beyond sum_tol raise.
    """
    a = np.einsum("kij,ij->k", qmap.Q, witness.mat)
    s = float(a.sum())
    if abs(s - 1.0) > sum_tol:
        raise ValueError(
            f"hull coordinates sum to {s!r}; map is not preconditioned")
    return SimplexVector(a, sum_tol=sum_tol)


def hull_point_from_combination(qmap: QuadraticMap, points, weights: SimplexVector):
    """Hull point from an explicit convex combination of image points.

    Scales the points by a common factor so the combined value sums to 1
    (possible because the forms are homogeneous of degree 2), and returns
    both the hull point a = sum_t w_t psi(x_t / sqrt(s)) and the spectahedron
    witness X = sum_t w_t (x_t x_t') / s that reproduces it.

    Requires a preconditioned map and at least one nonzero point.
    """
    pts = np.array([np.asarray(p, dtype=float).reshape(-1) for p in points])
    if pts.ndim != 2 or pts.shape[1] != qmap.n:
        raise ValueError(f"points must be {qmap.n}-vectors")
    w = weights.values
    if w.size != pts.shape[0]:
        raise ValueError("one weight per point required")
    # For forms summing to I, sum_i q_i(x) = ||x||^2, so the normalizer is
    # the weighted mean squared norm.
    s = float(np.sum(w * np.einsum("ti,ti->t", pts, pts)))
    if s <= 0.0:
        raise ValueError("all points are zero")
    X = np.einsum("t,ti,tj->ij", w / s, pts, pts)
    witness = SpectahedronPoint(X)
    a = hull_point_from_witness(qmap, witness)
    return a, witness


def kl_divergence(a: SimplexVector, b: SimplexVector) -> float:
    """Relative entropy D(a||b) = sum_i a_i ln(a_i / b_i), natural log.

    Conventions: 0 ln 0 = 0; a_i > 0 with b_i = 0 yields +inf. The result is
    clamped at zero when rounding produces a tiny negative value for a ~ b.
    """
    if a.k != b.k:
        raise ValueError(f"dimension mismatch: {a.k} vs {b.k}")
    av, bv = a.values, b.values
    mask = av > 0.0
    if np.any(bv[mask] == 0.0):
        return math.inf
    terms = av[mask] * (np.log(av[mask]) - np.log(bv[mask]))
    val = float(terms.sum())
    if val < 0.0:
        if val < -1e-9:
            raise AssertionError(f"KL came out {val!r}; inputs are corrupt")
        val = 0.0
    return val


def pinsker_lower_bound(a: SimplexVector, b: SimplexVector) -> float:
    """Lower bound on D(a||b) from the l1 distance: (sum_i |a_i - b_i|)^2 / 2.

    The constant 1/2 is the sharp one for natural-log relative entropy
    (base-2 entropy would allow 1/(2 ln 2), which is invalid here), so the
    bound never exceeds kl_divergence(a, b).
    """
    if a.k != b.k:
        raise ValueError(f"dimension mismatch: {a.k} vs {b.k}")
    l1 = float(np.abs(a.values - b.values).sum())
    return 0.5 * l1 * l1


# ---------------------------------------------------------------------------
# Instance file schema
# ---------------------------------------------------------------------------
# {"n": int, "k": int, "Q": [k matrices, each an n x n row-major array of
#  arrays], "witness": optional, either {"X": n x n matrix} or
#  {"points": [n-vectors], "weights": [floats]}}
#
# Matrices are symmetrized and validated positive definite on load. A matrix
# witness is stored in the original coordinates, normalized so that
# sum_i <Q_i, X> = 1; it is validated PSD here and transported onto the
# spectahedron by PreconditionedMap.push_witness.


class InstanceFormatError(ValueError):
    """The instance JSON is malformed or has inconsistent shapes."""


def instance_to_json(qmap: QuadraticMap, witness=None,
                     points=None, weights=None) -> dict:
    """Serialize a map (and optional witness) to the instance schema."""
    doc = {
        "n": qmap.n,
        "k": qmap.k,
        "Q": [qmap.Q[i].tolist() for i in range(qmap.k)],
    }
    if witness is not None:
        doc["witness"] = {"X": np.asarray(witness, dtype=float).tolist()}
    elif points is not None:
        doc["witness"] = {
            "points": [np.asarray(p, dtype=float).tolist() for p in points],
            "weights": list(map(float, weights)),
        }
    return doc


def instance_from_json(doc: dict):
    """Parse and validate an instance document.

    Returns (map, witness_spec) where witness_spec is None,
    ("X", ndarray) for a matrix witness, or ("points", pts, weights) for an
    explicit combination. Raises InstanceFormatError on malformed input and
    NotPositiveDefinite on forms that fail the definiteness gate.
    """
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    try:
        n = int(doc["n"])
        k = int(doc["k"])
        qlist = doc["Q"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"missing or malformed field: {exc}") from exc
    if not isinstance(qlist, list) or len(qlist) != k:
        raise InstanceFormatError(f"expected {k} matrices in Q")
    mats = []
    for i, m in enumerate(qlist):
        arr = np.asarray(m, dtype=float)
        if arr.shape != (n, n):
            raise InstanceFormatError(f"Q[{i}] has shape {arr.shape}, expected ({n}, {n})")
        mats.append(arr)
    qmap = QuadraticMap(mats)

    wit = doc.get("witness")
    if wit is None:
        return qmap, None
    if not isinstance(wit, dict):
        raise InstanceFormatError("witness must be an object")
    if "X" in wit:
        X = np.asarray(wit["X"], dtype=float)
        if X.shape != (n, n):
            raise InstanceFormatError(f"witness X has shape {X.shape}")
        # Validate PSD and the unit-sum normalization against the map.
        w, _ = sym_eigen(as_sym(X))
        if w[0] < -DEFAULTS.psd_check * max(float(np.linalg.norm(X)), 1e-300):
            raise InstanceFormatError(f"witness X is not PSD (min eig {w[0]:.3e})")
        total = float(np.einsum("kij,ij->", qmap.Q, 0.5 * (X + X.T)))
        if abs(total - 1.0) > DEFAULTS.hull_sum:
            raise InstanceFormatError(
                f"witness is normalized to sum {total!r}, expected 1")
        return qmap, ("X", 0.5 * (X + X.T) / total)
    if "points" in wit:
        try:
            pts = [np.asarray(p, dtype=float).reshape(-1) for p in wit["points"]]
            wts = np.asarray(wit["weights"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceFormatError(f"malformed combination witness: {exc}") from exc
        if any(p.size != n for p in pts):
            raise InstanceFormatError("witness points must be n-vectors")
        if wts.size != len(pts):
            raise InstanceFormatError("one weight per witness point required")
        try:
            weights = SimplexVector(wts)
        except ValueError as exc:
            raise InstanceFormatError(f"witness weights: {exc}") from exc
        return qmap, ("points", pts, weights)
    raise InstanceFormatError("witness must contain either X or points/weights")


def load_instance(path: str):
    """Read an instance file; see instance_from_json for the return shape."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"invalid JSON: {exc}") from exc
    return instance_from_json(doc)
