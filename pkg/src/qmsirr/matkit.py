"""Dense complex linear algebra: rank decisions, subspace closures, exponentials.

Every subspace is carried as an orthonormal row basis (:class:`SubspaceBasis`).
Operator-space bases flatten ``d x d`` matrices row-major into vectors of
length ``d**2``; the Euclidean inner product of the flattened arrays is then
the Hilbert-Schmidt product ``tr(A* B)``.  Real Lie algebras are stored as
real vectors ``[Re A, Im A]`` of length ``2 d**2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field as dc_field

import numpy as np
import scipy.linalg

from .errors import DimError, EmptyInput, InternalError, InvalidMatrix

__all__ = [
    "Tolerance",
    "SubspaceBasis",
    "numeric_rank",
    "kernel_basis",
    "orthonormal_extend",
    "invariant_closure",
    "operator_algebra_closure",
    "lie_closure",
    "lie_matrices",
    "matrix_exp",
    "commutator",
    "real_to_complex",
]

DEFAULT_RANK_TOL = 1e-9
DEFAULT_ABS_FLOOR = 1e-12


@dataclass(frozen=True)
class Tolerance:
    rel_rank_tol: float = DEFAULT_RANK_TOL
    abs_floor: float = DEFAULT_ABS_FLOOR

    def __post_init__(self):
        if not (self.rel_rank_tol > 0 and self.abs_floor > 0):
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a subspace, one vector per row of ``vectors``.

    ``field`` is ``"complex"`` for complex spans and ``"real"`` for real spans
    (then ``vectors`` is real).  ``margin`` holds the smallest accepted and
    the largest rejected relative residual seen while the basis was grown,
    which is what rank-decision ambiguity checks look at.
    """

    ambient_dim: int
    vectors: np.ndarray
    tol: float = DEFAULT_RANK_TOL
    field: str = "complex"
    margin: tuple = dc_field(default=(np.inf, 0.0), compare=False)

    @classmethod
    def empty(cls, ambient_dim, tol=DEFAULT_RANK_TOL, field="complex"):
        dtype = float if field == "real" else complex
        return cls(ambient_dim, np.zeros((0, ambient_dim), dtype=dtype), tol, field)

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def is_full(self) -> bool:
        return self.count == self.ambient_dim

    def projector(self) -> np.ndarray:
        Q = self.vectors
        return Q.T @ Q.conj()

    def residual(self, v) -> float:
        """Norm of the component of ``v`` orthogonal to the subspace."""
        v = np.asarray(v)
        if self.count == 0:
            return float(np.linalg.norm(v))
        Q = self.vectors
        return float(np.linalg.norm(v - Q.T @ (Q.conj() @ v)))

    def contains(self, v, tol=None) -> bool:
        tol = self.tol if tol is None else tol
        n = np.linalg.norm(v)
        return self.residual(v) <= tol * max(n, DEFAULT_ABS_FLOOR)

    def contains_subspace(self, other: "SubspaceBasis", tol=None) -> bool:
        return all(self.contains(v, tol) for v in other.vectors)

    def orthonormality_error(self) -> float:
        if self.count == 0:
            return 0.0
        Q = self.vectors
        return float(np.max(np.abs(Q.conj() @ Q.T - np.eye(self.count))))


def _check_finite(A, name="matrix"):
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    return A


def numeric_rank(A, tol: Tolerance | None = None) -> int:
    """Number of singular values above ``rel_rank_tol * sigma_max`` and ``abs_floor``."""
    tol = tol or Tolerance()
    A = _check_finite(A)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] <= tol.abs_floor:
        return 0
    return int(np.sum(s > max(tol.rel_rank_tol * s[0], tol.abs_floor)))


def kernel_basis(A, tol: Tolerance | None = None) -> np.ndarray:
    """Orthonormal kernel basis of ``A`` as columns."""
    tol = tol or Tolerance()
    A = _check_finite(A)
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n, dtype=A.dtype)
    _, s, vh = np.linalg.svd(A)
    r = numeric_rank(A, tol) if s.size else 0
    return vh[r:].conj().T


def _grow(Q, candidates, thresholds, margin=(np.inf, 0.0)):
    """Orthonormally append candidates whose residual exceeds its threshold.

    Classical Gram-Schmidt with one re-orthogonalisation pass.  Returns the
    new basis, the list of accepted vectors and the updated margin.
    """
    lo, hi = margin
    dim = Q.shape[1]
    basis = list(Q)
    added = []
    for v, thr in zip(candidates, thresholds):
        if len(basis) == dim:
            break
        r = np.array(v, dtype=Q.dtype, copy=True)
        if basis:
            B = np.array(basis)
            for _ in range(2):
                r = r - B.T @ (B.conj() @ r)
        nr = np.linalg.norm(r)
        ratio = nr / thr if thr > 0 else np.inf
        if nr > thr and nr > DEFAULT_ABS_FLOOR * 1e-3:
            q = r / nr
            basis.append(q)
            added.append(q)
            lo = min(lo, ratio)
        else:
            hi = max(hi, ratio)
    out = np.array(basis, dtype=Q.dtype).reshape(len(basis), dim)
    return out, added, (lo, hi)


def orthonormal_extend(basis: SubspaceBasis, new_vectors) -> SubspaceBasis:
    """Extend ``basis`` by ``new_vectors``, dropping dependent ones.

    A vector is dropped when its residual after projection has norm at most
    ``basis.tol`` times its own norm.
    """
    vecs = [np.asarray(v) for v in new_vectors]
    for v in vecs:
        if v.shape != (basis.ambient_dim,):
            raise DimError(f"expected vectors of length {basis.ambient_dim}, got {v.shape}")
    if basis.field == "real":
        vecs = [v.real.astype(float) for v in vecs]
    else:
        vecs = [v.astype(complex) for v in vecs]
    thr = [basis.tol * np.linalg.norm(v) for v in vecs]
    Q = basis.vectors
    if basis.field != "real":
        Q = Q.astype(complex)
    out, _, margin = _grow(Q, vecs, thr, basis.margin)
    return SubspaceBasis(basis.ambient_dim, out, basis.tol, basis.field, margin)


def _op_norm(A):
    return float(np.linalg.norm(A, 2)) if A.size else 0.0


def invariant_closure(seeds, operators, tol: float = DEFAULT_RANK_TOL) -> SubspaceBasis:
    """Smallest subspace containing ``seeds`` and invariant under every operator.

    Operators are applied to the newly added directions only, so each pass
    costs ``O(new * len(operators))`` products; the dimension strictly grows
    until the fixed point, hence at most ``d`` passes.
    """
    seeds = [np.asarray(s, dtype=complex) for s in seeds]
    if not seeds:
        raise EmptyInput("invariant_closure needs at least one seed")
    d = seeds[0].shape[0]
    ops = [np.asarray(A, dtype=complex) for A in operators]
    for A in ops:
        if A.shape != (d, d):
            raise DimError(f"operator shape {A.shape} does not act on C^{d}")
    for s in seeds:
        if s.shape != (d,):
            raise DimError("seed dimensions differ")
    norms = [_op_norm(A) for A in ops]

    base = SubspaceBasis.empty(d, tol)
    base = orthonormal_extend(base, seeds)
    Q, margin = base.vectors, base.margin
    frontier = list(Q)
    passes = 0
    while frontier and Q.shape[0] < d:
        passes += 1
        if passes > d + 1:
            raise InternalError("invariant_closure did not stabilise")
        cands, thr = [], []
        for A, nA in zip(ops, norms):
            if nA == 0.0:
                continue
            for v in frontier:
                cands.append(A @ v)
                thr.append(tol * nA)
        Q, frontier, margin = _grow(Q, cands, thr, margin)
    return SubspaceBasis(d, Q, tol, "complex", margin)


def operator_algebra_closure(generators, include_identity: bool = True,
                             tol: float = DEFAULT_RANK_TOL, d: int | None = None) -> SubspaceBasis:
    """Hilbert-Schmidt orthonormal basis of the associative algebra generated.

    Words are built by left multiplication with the generators, starting
    from the identity (unital case) or the generators themselves.  ``d`` is
    only needed when ``generators`` is empty.
    """
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if gens:
        d = gens[0].shape[0]
    elif d is None:
        raise EmptyInput("dimension required when no generators are given")
    for g in gens:
        if g.shape != (d, d):
            raise DimError("generators must share one square shape")
    n = d * d
    Q = np.zeros((0, n), dtype=complex)
    margin = (np.inf, 0.0)
    start = []
    if include_identity:
        start.append(np.eye(d, dtype=complex).ravel())
    start.extend(g.ravel() for g in gens)
    thr0 = [tol * max(np.linalg.norm(s), DEFAULT_ABS_FLOOR) for s in start]
    Q, frontier, margin = _grow(Q, start, thr0, margin)
    norms = [_op_norm(g) for g in gens]
    passes = 0
    while frontier and Q.shape[0] < n:
        passes += 1
        if passes > n + 1:
            raise InternalError("operator_algebra_closure did not stabilise")
        cands, thr = [], []
        for g, ng in zip(gens, norms):
            if ng == 0.0:
                continue
            for b in frontier:
                cands.append((g @ b.reshape(d, d)).ravel())
                thr.append(tol * ng)
        Q, frontier, margin = _grow(Q, cands, thr, margin)
    return SubspaceBasis(n, Q, tol, "complex", margin)


def commutator(A, B):
    return A @ B - B @ A


def _to_real(M):
    return np.concatenate([M.real.ravel(), M.imag.ravel()])


def real_to_complex(v, d):
    n = d * d
    return (v[:n] + 1j * v[n:]).reshape(d, d)


def lie_matrices(basis: SubspaceBasis, d: int) -> list:
    """Matrices represented by a real Lie-algebra basis."""
    return [real_to_complex(v, d) for v in basis.vectors]


def lie_closure(generators, tol: float = DEFAULT_RANK_TOL) -> SubspaceBasis:
    """Real Lie algebra generated by the matrices under the commutator.

    The basis is orthonormal for ``Re tr(A* B)`` and lives in ``R^(2 d^2)``.
    New elements are bracketed against the whole current basis.
    """
    gens = [np.asarray(g, dtype=complex) for g in generators]
    if not gens:
        raise EmptyInput("lie_closure needs at least one generator")
    d = gens[0].shape[0]
    for g in gens:
        if g.shape != (d, d):
            raise DimError("generators must share one square shape")
    n = 2 * d * d
    Q = np.zeros((0, n))
    start = [_to_real(g) for g in gens]
    thr0 = [tol * max(np.linalg.norm(s), DEFAULT_ABS_FLOOR) for s in start]
    Q, frontier, margin = _grow(Q, start, thr0, (np.inf, 0.0))
    passes = 0
    while frontier and Q.shape[0] < n:
        passes += 1
        if passes > n + 1:
            raise InternalError("lie_closure did not stabilise")
        mats = [real_to_complex(v, d) for v in Q]
        new = [real_to_complex(v, d) for v in frontier]
        cands, thr = [], []
        for A in new:
            for B in mats:
                cands.append(_to_real(commutator(A, B)))
                thr.append(2 * tol * _op_norm(A) * _op_norm(B))
        Q, frontier, margin = _grow(Q, cands, thr, margin)
    return SubspaceBasis(n, Q, tol, "real", margin)


def matrix_exp(A, t: float = 1.0) -> np.ndarray:
    """``exp(t A)`` by scaling and squaring with Pade approximants (scipy)."""
    A = _check_finite(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimError("matrix_exp needs square matrices")
    return scipy.linalg.expm(np.multiply(t, A, dtype=np.result_type(A, complex)))
