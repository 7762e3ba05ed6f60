"""Structural analysis of a GKSL model.

Irreducibility is decided three ways: by the unital algebra generated by
``{G, L_l}``, by the algebra generated by the iterated commutators
``delta_G^n(L_l)``, and (through :mod:`qmsirr.sse`) by Monte Carlo totality.
Supports of evolved states, invariant states, fixed points, the
decoherence-free test and Lie-algebra rank diagnostics live here as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InternalError, InvalidTime, NotApplicable, ToleranceAmbiguity, ZeroVector
from .gksl import (
    SCHRODINGER,
    HEISENBERG,
    LindbladModel,
    drift,
    stratonovich_drift,
    superoperator,
    unvec,
    vec,
)
from .matkit import (
    DEFAULT_RANK_TOL,
    SubspaceBasis,
    Tolerance,
    commutator,
    invariant_closure,
    kernel_basis,
    lie_closure,
    lie_matrices,
    numeric_rank,
    operator_algebra_closure,
    orthonormal_extend,
    matrix_exp,
)

ALGEBRA_GL = "AlgebraGL"
ALGEBRA_DELTA = "AlgebraDelta"
MONTE_CARLO = "MonteCarloTotality"
METHODS = (ALGEBRA_GL, ALGEBRA_DELTA, MONTE_CARLO)

FAITHFUL_TOL = 1e-10

HOLDS = "Holds"
FAILS_AT = "FailsAt"
INCONCLUSIVE = "Inconclusive"


def _unit(xi):
    xi = np.asarray(xi, dtype=complex)
    n = np.linalg.norm(xi)
    if n == 0:
        raise ZeroVector("xi must be non-zero")
    return xi / n


# --- S(xi) ----------------------------------------------------------------------

def delta_powers(G, L, n_max: int) -> list:
    """``[L, [G, L], [G, [G, L]], ...]`` up to ``n_max`` commutators."""
    out = [np.asarray(L, dtype=complex)]
    for _ in range(n_max):
        out.append(commutator(G, out[-1]))
    return out


def delta_krylov_basis(G, L, n_max: int, tol: float = DEFAULT_RANK_TOL) -> list:
    """Orthonormal (Frobenius) basis of ``span{delta_G^n(L) : n <= n_max}``.

    Arnoldi on ``delta_G = [G, .]`` with re-orthogonalisation.  The raw powers
    grow like ``|delta_G|^n`` and become nearly parallel, so orthogonalising
    them afterwards loses the block structure of reducible models to
    roundoff; applying ``delta_G`` to the latest unit vector does not.
    Stops early once the span is ``delta_G``-invariant.
    """
    G = np.asarray(G, dtype=complex)
    L = np.asarray(L, dtype=complex)
    nL = np.linalg.norm(L)
    if nL == 0:
        return []
    scale = max(2.0 * np.linalg.norm(G, 2), np.finfo(float).tiny)
    Q = [L / nL]
    for _ in range(n_max):
        w = commutator(G, Q[-1])
        for _ in range(2):
            for q in Q:
                w = w - np.vdot(q, w) * q
        nw = np.linalg.norm(w)
        if nw <= tol * scale:
            break
        Q.append(w / nw)
    return Q


EIGVEC_COND_MAX = 1e6


def _cluster(values, atol):
    """Label complex ``values`` so that entries within ``atol`` of a cluster's first member share it."""
    labels = -np.ones(values.size, dtype=int)
    n = 0
    for i in range(values.size):
        if labels[i] >= 0:
            continue
        near = (labels < 0) & (np.abs(values - values[i]) <= atol)
        labels[near] = n
        n += 1
    return labels, n


def delta_spectral_basis(G, L, tol: float = DEFAULT_RANK_TOL):
    """Spectral components of ``L`` under ``delta_G``, or ``None`` if ``G`` is badly conditioned.

    With ``G = S diag(w) S^-1`` and ``Y = S^-1 L S``,
    ``delta_G^n(L) = S (Y o Lambda^n) S^-1`` where ``Lambda_ij = w_i - w_j``.
    By Vandermonde, the span over ``n`` is spanned by the pieces of ``Y``
    supported on each distinct value of ``Lambda``.  Unlike the raw powers,
    these pieces keep exact block structure up to roundoff.
    """
    G = np.asarray(G, dtype=complex)
    L = np.asarray(L, dtype=complex)
    w, S = np.linalg.eig(G)
    if np.linalg.cond(S) > EIGVEC_COND_MAX:
        return None
    Sinv = np.linalg.inv(S)
    Y = Sinv @ L @ S
    lam = (w[:, None] - w[None, :]).ravel()
    labels, n = _cluster(lam, 1e-8 * max(1.0, float(np.max(np.abs(w)))))
    out = []
    floor = tol * np.linalg.norm(L)
    for c in range(n):
        mask = (labels == c).reshape(Y.shape)
        piece = S @ np.where(mask, Y, 0) @ Sinv
        if np.linalg.norm(piece) > floor:
            out.append(piece)
    return out


def delta_span(G, L, n_max: int, tol: float = DEFAULT_RANK_TOL) -> list:
    """Operators spanning ``{delta_G^n(L) : n <= n_max}`` for ``n_max >= d^2 - 1``."""
    pieces = delta_spectral_basis(G, L, tol)
    if pieces is None:
        pieces = delta_krylov_basis(G, L, n_max, tol)
    return pieces


def delta_operators(model: LindbladModel, tol: float = DEFAULT_RANK_TOL) -> list:
    """Operators spanning every ``delta_G^n(L_l)``.

    Powers beyond ``d^2 - 1`` are linear combinations of the lower ones
    (``delta_G`` acts on a ``d^2``-dimensional space), so the span of
    ``n <= d^2 - 1`` is the full span.  It is represented by spectral
    components (:func:`delta_spectral_basis`), falling back to an Arnoldi
    basis when ``G`` is nearly defective.
    """
    G = drift(model)
    n_max = model.d ** 2 - 1
    ops = []
    for L in model.Ls:
        ops.extend(delta_span(G, L, n_max, tol))
    return ops


@dataclass
class SxiResult:
    xi: np.ndarray
    basis: SubspaceBasis
    dim: int
    delta_powers_used: int


def s_xi_span(model: LindbladModel, xi, tol: float = DEFAULT_RANK_TOL) -> SxiResult:
    """Span of ``xi`` and every word in the ``delta_G^n(L_l)`` applied to ``xi``."""
    xi = _unit(xi)
    basis = invariant_closure([xi], delta_operators(model, tol), tol)
    return SxiResult(xi, basis, basis.count, model.d ** 2 - 1)


# --- irreducibility -----------------------------------------------------------------

@dataclass
class IrreducibilityVerdict:
    irreducible: bool
    method: str
    tol: float
    closure_dim: Optional[int] = None
    target_dim: Optional[int] = None
    witness: Optional[np.ndarray] = None
    witness_residual: Optional[float] = None
    details: dict = field(default_factory=dict)

    def as_dict(self):
        out = {
            "irreducible": bool(self.irreducible),
            "method": self.method,
            "tol": self.tol,
            "closure_dim": self.closure_dim,
            "target_dim": self.target_dim,
        }
        if self.witness is not None:
            out["witness_dim"] = int(self.witness.shape[1])
            out["witness_basis"] = [[[float(z.real), float(z.imag)] for z in col] for col in self.witness.T]
            out["witness_residual"] = self.witness_residual
        out.update(self.details)
        return out


def invariance_residual(V, operators) -> float:
    """``max_A |(I - P_V) A V|`` for an orthonormal column basis ``V``."""
    if V.shape[1] == 0:
        return 0.0
    P = np.eye(V.shape[0]) - V @ V.conj().T
    worst = 0.0
    for A in operators:
        nA = max(np.linalg.norm(A, 2), 1e-300)
        worst = max(worst, np.linalg.norm(P @ A @ V, 2) / nA)
    return worst


def _orth_complement(rows):
    """Orthonormal columns spanning the complement of the row space."""
    d = rows.shape[1]
    if rows.shape[0] == 0:
        return np.eye(d, dtype=complex)
    return kernel_basis(rows.conj())


def find_invariant_subspace(generators, d: int, tol: float = DEFAULT_RANK_TOL, seed: int = 0,
                            algebra: SubspaceBasis | None = None):
    """Non-trivial common invariant subspace of ``generators`` (columns), or None.

    Norton's irreducibility test: for a random element ``a`` of the generated
    algebra and an eigenvalue of geometric multiplicity one, a proper
    submodule either contains the eigenvector ``v`` of ``a`` or its
    orthogonal complement contains the eigenvector ``w`` of ``a*``; closing
    ``v`` under the generators, or ``w`` under their adjoints, exposes it.
    """
    gens = [np.asarray(g, dtype=complex) for g in generators]
    adj = [g.conj().T for g in gens]
    if algebra is None:
        algebra = operator_algebra_closure(gens, True, tol, d=d)
    elems = [v.reshape(d, d) for v in algebra.vectors]
    rng = np.random.default_rng(seed)
    for _ in range(4):
        coef = rng.standard_normal(len(elems)) + 1j * rng.standard_normal(len(elems))
        a = sum(c * E for c, E in zip(coef, elems))
        lam, vecs = np.linalg.eig(a)
        lam_adj, vecs_adj = np.linalg.eig(a.conj().T)
        for i in range(d):
            V = invariant_closure([vecs[:, i]], gens, tol)
            if 0 < V.count < d:
                return V.vectors.T.copy()
            j = int(np.argmin(np.abs(lam_adj - np.conj(lam[i]))))
            W = invariant_closure([vecs_adj[:, j]], adj, tol)
            if 0 < W.count < d:
                return _orth_complement(W.vectors)
    return None


def _check_ambiguity(basis: SubspaceBasis, target: int):
    if basis.count < target - 1:
        return
    lo, hi = basis.margin
    if lo < 10.0 or hi > 0.1:
        raise ToleranceAmbiguity(
            f"closure dimension {basis.count} of {target} decided with margin "
            f"(accepted {lo:.2g}, rejected {hi:.2g}) x tolerance"
        )


def is_irreducible(model: LindbladModel, method: str = ALGEBRA_GL, tol: float = DEFAULT_RANK_TOL,
                   *, config=None, n_probes: int = 5, seed: int = 0, t: float = 1.0,
                   check_ambiguity: bool = True) -> IrreducibilityVerdict:
    """Decide irreducibility by one of :data:`METHODS`.

    The algebra routes compare the dimension of a unital operator algebra to
    ``d^2`` (Burnside) and, when it is smaller, return a common invariant
    subspace as witness.  The Monte Carlo route declares irreducibility when
    every probe vector's trajectory second moment is numerically full rank.
    """
    d = model.d
    if method in (ALGEBRA_GL, ALGEBRA_DELTA):
        if method == ALGEBRA_GL:
            gens = [drift(model), *model.Ls]
        else:
            gens = delta_operators(model, tol)
        alg = operator_algebra_closure(gens, True, tol, d=d)
        if check_ambiguity:
            _check_ambiguity(alg, d * d)
        verdict = IrreducibilityVerdict(alg.count == d * d, method, tol, alg.count, d * d)
        if not verdict.irreducible:
            W = find_invariant_subspace(gens, d, tol, seed, alg)
            if W is None:
                raise InternalError(f"{method}: algebra is proper but no invariant subspace was found")
            verdict.witness = W
            verdict.witness_residual = invariance_residual(W, gens)
        return verdict
    if method == MONTE_CARLO:
        from . import sse

        if config is None:
            config = sse.TrajectoryConfig(t_final=t, steps=200, n_traj=4000, master_seed=seed)
        rng = np.random.default_rng(seed)
        probes = [np.eye(d)[k] for k in range(d)]
        probes += [_unit(rng.standard_normal(d) + 1j * rng.standard_normal(d)) for _ in range(n_probes)]
        results = []
        for xi in probes:
            res = sse.totality_test(model, xi, config.t_final, config)
            results.append(res)
            if not res.total:
                return IrreducibilityVerdict(False, MONTE_CARLO, tol, details={
                    "probe": [[float(z.real), float(z.imag)] for z in xi],
                    "min_eigenvalue": res.min_eigenvalue,
                    "std_error": res.std_error,
                    "n_probes": len(probes),
                })
        return IrreducibilityVerdict(True, MONTE_CARLO, tol, details={
            "n_probes": len(probes),
            "smallest_min_eigenvalue": min(r.min_eigenvalue for r in results),
        })
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def irreducibility_consistent(model: LindbladModel, tol: float = DEFAULT_RANK_TOL) -> dict:
    """Run both algebra routes; raise :class:`InternalError` if they disagree."""
    gl = is_irreducible(model, ALGEBRA_GL, tol)
    de = is_irreducible(model, ALGEBRA_DELTA, tol)
    if gl.irreducible != de.irreducible:
        witness = gl.witness if gl.witness is not None else de.witness
        raise InternalError(
            f"AlgebraGL says {gl.irreducible}, AlgebraDelta says {de.irreducible}", witness=witness
        )
    return {ALGEBRA_GL: gl, ALGEBRA_DELTA: de}


# --- supports, invariant states, fixed points --------------------------------

@dataclass
class SupportResult:
    projection: np.ndarray
    rank: int
    s_xi_dim: int


def support_projection(model: LindbladModel, xi, t: float, tol: float = DEFAULT_RANK_TOL) -> SupportResult:
    """Orthogonal projection onto ``exp(tG) S(xi)``, the support of the evolved pure state."""
    if t <= 0:
        raise InvalidTime(f"t must be positive, got {t}")
    s = s_xi_span(model, xi, tol)
    M = matrix_exp(drift(model), t) @ s.basis.vectors.T
    r = numeric_rank(M, Tolerance(rel_rank_tol=tol))
    U, _, _ = np.linalg.svd(M, full_matrices=False)
    U = U[:, :r]
    return SupportResult(U @ U.conj().T, r, s.dim)


def state_rank(rho, tol: float = 1e-8) -> int:
    """Numerical rank of a density matrix relative to its largest eigenvalue."""
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    top = max(w[-1], 0.0)
    if top == 0:
        return 0
    return int(np.sum(w > tol * top))


@dataclass
class InvariantStateReport:
    kernel_dim: int
    unique: bool
    faithful: bool
    faithful_exists: bool
    state: Optional[np.ndarray]
    min_eigenvalue: Optional[float]
    residual: Optional[float]
    max_support_state: np.ndarray

    def as_dict(self):
        out = {
            "kernel_dim": self.kernel_dim,
            "unique": self.unique,
            "faithful": self.faithful,
            "faithful_invariant_state_exists": self.faithful_exists,
            "min_eigenvalue": self.min_eigenvalue,
            "residual": self.residual,
            "faithfulness_tol": FAITHFUL_TOL,
        }
        if self.state is not None:
            out["state"] = [[[float(z.real), float(z.imag)] for z in row] for row in self.state]
        return out


def invariant_states(model: LindbladModel, tol: float = DEFAULT_RANK_TOL,
                     faithful_tol: float = FAITHFUL_TOL) -> InvariantStateReport:
    """Kernel of the Schrodinger generator and the invariant state it carries.

    ``max_support_state`` is the ergodic projection of ``I/d``; every
    invariant state is dominated by a multiple of it, so a faithful invariant
    state exists iff this one is faithful.
    """
    d = model.d
    S = superoperator(model, SCHRODINGER).matrix
    tolr = Tolerance(rel_rank_tol=tol)
    K = kernel_basis(S, tolr)
    k = K.shape[1]
    if k == 0:
        raise InternalError("Schrodinger generator has trivial kernel; every QMS has an invariant state")
    Y = kernel_basis(S.conj().T, tolr)
    E = K @ np.linalg.solve(Y.conj().T @ K, Y.conj().T)
    rmax = unvec(E @ vec(np.eye(d) / d), d)
    rmax = 0.5 * (rmax + rmax.conj().T)
    rmax = rmax / np.trace(rmax).real
    faithful_exists = bool(np.linalg.eigvalsh(rmax)[0] > faithful_tol)
    if k == 1:
        rho = unvec(K[:, 0], d)
        rho = rho / np.trace(rho)
        rho = 0.5 * (rho + rho.conj().T)
        lo = float(np.linalg.eigvalsh(rho)[0])
        if lo < -1e-8:
            raise InternalError(f"invariant state has eigenvalue {lo:.3e}")
        res = float(np.linalg.norm(S @ vec(rho)))
        return InvariantStateReport(1, True, lo > faithful_tol, faithful_exists, rho, lo, res, rmax)
    return InvariantStateReport(k, False, False, faithful_exists, None, None, None, rmax)


@dataclass
class FixedPointReport:
    dim: int
    basis: list
    trivial: bool


def fixed_points(model: LindbladModel, tol: float = DEFAULT_RANK_TOL) -> FixedPointReport:
    """Kernel of the Heisenberg generator."""
    S = superoperator(model, HEISENBERG).matrix
    K = kernel_basis(S, Tolerance(rel_rank_tol=tol))
    basis = [unvec(K[:, j], model.d) for j in range(K.shape[1])]
    return FixedPointReport(K.shape[1], basis, K.shape[1] == 1)


def commutant_dim(operators, d: int, tol: float = DEFAULT_RANK_TOL) -> int:
    """Dimension of ``{x : Ax = xA for all A}``."""
    span = SubspaceBasis.empty(d * d, tol)
    span = orthonormal_extend(span, [np.asarray(A, dtype=complex).ravel() for A in operators])
    if span.count == 0:
        return d * d
    I = np.eye(d)
    # row-major flattening: vec_r(AX - XA) = (A kron I - I kron A.T) vec_r(X)
    blocks = [np.kron(A, I) - np.kron(I, A.T) for A in (v.reshape(d, d) for v in span.vectors)]
    K = kernel_basis(np.vstack(blocks), Tolerance(rel_rank_tol=tol))
    return K.shape[1]


def decoherence_free_trivial(model: LindbladModel, tol: float = DEFAULT_RANK_TOL) -> bool:
    """True iff the commutant of ``{delta_H^n(L), delta_H^n(L*)}`` is ``C I``.

    Requires a faithful invariant state; raises :class:`NotApplicable` otherwise.
    """
    if not invariant_states(model, tol).faithful_exists:
        raise NotApplicable("decoherence-free test needs a faithful invariant state")
    d = model.d
    n_max = d * d - 1
    ops = []
    for L in model.Ls:
        ops.extend(delta_span(model.H, L, n_max, tol))
        ops.extend(delta_span(model.H, L.conj().T, n_max, tol))
    return commutant_dim(ops, d, tol) == 1


# --- LARC -------------------------------------------------------------------------

@dataclass
class LarcManifold:
    xi: np.ndarray
    real: SubspaceBasis
    complex: SubspaceBasis

    @property
    def real_dim(self) -> int:
        return self.real.count

    @property
    def complex_dim(self) -> int:
        return self.complex.count


def lie_orbit_span(lie_basis: SubspaceBasis, d: int, xi, tol: float = DEFAULT_RANK_TOL) -> LarcManifold:
    """Real and complex spans of ``{A xi : A in basis}``; ``xi`` itself is not added."""
    xi = _unit(xi)
    images = [A @ xi for A in lie_matrices(lie_basis, d)]
    real = SubspaceBasis.empty(2 * d, tol, "real")
    cplx = SubspaceBasis.empty(d, tol)
    if images:
        scale = max(max(np.linalg.norm(v) for v in images), 1e-300)
        # a fixed absolute threshold keeps images that vanish up to rounding out
        keep = [v for v in images if np.linalg.norm(v) > tol * scale]
        real = orthonormal_extend(real, [np.concatenate([v.real, v.imag]) for v in keep])
        cplx = orthonormal_extend(cplx, keep)
    return LarcManifold(xi, real, cplx)


def larc_algebra(model: LindbladModel, include_drift: bool = True, tol: float = DEFAULT_RANK_TOL) -> SubspaceBasis:
    gens = list(model.Ls)
    if include_drift:
        gens = [stratonovich_drift(model)] + gens
    if not gens:
        gens = [np.zeros((model.d, model.d))]
    return lie_closure(gens, tol)


def larc_manifold(model: LindbladModel, xi, tol: float = DEFAULT_RANK_TOL, include_drift: bool = True) -> LarcManifold:
    """Evaluation at ``xi`` of the real Lie algebra generated by ``G - 1/2 sum L^2`` and the ``L``."""
    return lie_orbit_span(larc_algebra(model, include_drift, tol), model.d, xi, tol)


@dataclass
class LarcReport:
    lie_dim: int
    per_xi: list
    verdict: str
    witness: Optional[np.ndarray] = None
    caveat: Optional[str] = None
    include_drift: bool = True

    def as_dict(self):
        def cv(v):
            return [[float(z.real), float(z.imag)] for z in v]
        return {
            "lie_dim_real": self.lie_dim,
            "include_drift": self.include_drift,
            "verdict": self.verdict,
            "witness": None if self.witness is None else cv(self.witness),
            "caveat": self.caveat,
            "n_probes": len(self.per_xi),
            "min_complex_dim": min((c for _, _, c in self.per_xi), default=None),
            "min_real_dim": min((r for _, r, _ in self.per_xi), default=None),
            "probes": [{"xi": cv(x), "real_dim": r, "complex_dim": c} for x, r, c in self.per_xi],
        }


def larc_probes(model: LindbladModel, n_random: int = 50, seed: int = 0) -> list:
    """Canonical basis, eigenvectors of ``G-tilde`` and each ``L``, then random unit vectors."""
    d = model.d
    probes = [np.eye(d, dtype=complex)[k] for k in range(d)]
    for A in [stratonovich_drift(model), *model.Ls]:
        _, V = np.linalg.eig(A)
        probes.extend(V[:, k] for k in range(d))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        probes.append(_unit(rng.standard_normal(d) + 1j * rng.standard_normal(d)))
    return probes


def larc_check(model: LindbladModel, n_random: int = 50, seed: int = 0, tol: float = DEFAULT_RANK_TOL,
               include_drift: bool = True) -> LarcReport:
    """Sampled Lie-algebra rank check.

    ``FailsAt`` is a proof (the witness probe is reproducible).  Full rank at
    every probe is only reported as ``Holds`` when the associative algebra
    generated by the Lie algebra is all of ``M_d``; the report then carries
    a caveat because finitely many probes cannot cover every ``xi``.
    """
    d = model.d
    alg = larc_algebra(model, include_drift, tol)
    per_xi = []
    for xi in larc_probes(model, n_random, seed):
        man = lie_orbit_span(alg, d, xi, tol)
        per_xi.append((man.xi, man.real_dim, man.complex_dim))
        if man.complex_dim < d:
            return LarcReport(alg.count, per_xi, FAILS_AT, man.xi, include_drift=include_drift)
    mats = lie_matrices(alg, d)
    full = operator_algebra_closure(mats, True, tol, d=d).count == d * d
    if full:
        return LarcReport(alg.count, per_xi, HOLDS, None,
                          f"sampled: full rank at {len(per_xi)} probes and the generated algebra is M_{d}",
                          include_drift)
    return LarcReport(alg.count, per_xi, INCONCLUSIVE, None,
                      "full rank at every probe but the generated algebra is proper", include_drift)
