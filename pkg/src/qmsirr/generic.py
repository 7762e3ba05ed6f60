"""Generic semigroups built from classical jump rates.

The jump operators are ``sqrt(gamma[l, k]) |e_k><e_l|`` and the Hamiltonian
is diagonal.  On diagonal matrices the generator is the generator of the
continuous-time Markov chain with rates ``gamma``, and irreducibility of the
semigroup reduces to strong connectivity of the rate graph.

States are 0-based in the Python API; ``as_dict`` output labels them from 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import InternalError, InvalidRate, ParseError, ValidationError
from .gksl import HEISENBERG, SCHRODINGER, LindbladModel, apply_generator
from .matkit import DEFAULT_RANK_TOL, commutator
from .structure import ALGEBRA_GL, HOLDS, is_irreducible, larc_check

BRACKET_TOL = 1e-10
RESTRICTION_TOL = 1e-12


@dataclass(frozen=True)
class RateMatrix:
    """Nonnegative jump rates; ``gamma[l, k]`` is the rate of ``l -> k``. The diagonal is ignored."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
            raise ValidationError(f"gamma must be a non-empty square matrix, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise InvalidRate("rates must be finite")
        off = ~np.eye(g.shape[0], dtype=bool)
        bad = np.argwhere((g < 0) & off)
        if bad.size:
            l, k = bad[0]
            raise InvalidRate(f"negative rate gamma[{l}][{k}] = {g[l, k]}")
        np.fill_diagonal(g, 0.0)
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def d(self) -> int:
        return self.gamma.shape[0]

    def edges(self):
        return [tuple(e) for e in np.argwhere(self.gamma > 0)]


@dataclass(frozen=True)
class DiagonalHamiltonian:
    energies: np.ndarray

    def __post_init__(self):
        e = np.array(self.energies, dtype=float).ravel()
        if not np.all(np.isfinite(e)):
            raise ValidationError("energies must be finite")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)

    @property
    def d(self) -> int:
        return self.energies.size


def jump_operator(d: int, l: int, k: int, rate: float) -> np.ndarray:
    L = np.zeros((d, d), dtype=complex)
    L[k, l] = np.sqrt(rate)
    return L


def classical_generator(gamma: RateMatrix) -> np.ndarray:
    """``Q[l, k] = gamma[l, k]`` off the diagonal, rows summing to zero."""
    Q = np.array(gamma.gamma, dtype=float)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


def diagonal_restriction(model: LindbladModel, mode: str = SCHRODINGER) -> np.ndarray:
    """Matrix of the generator on diagonal matrix units, read off the diagonal.

    Column ``j`` holds the diagonal of the generator applied to ``|e_j><e_j|``.
    Also returns the largest off-diagonal entry produced, which must vanish.
    """
    d = model.d
    R = np.empty((d, d), dtype=complex)
    leak = 0.0
    for j in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[j, j] = 1.0
        out = apply_generator(model, E, mode)
        R[:, j] = np.diag(out)
        leak = max(leak, float(np.max(np.abs(out - np.diag(np.diag(out))))))
    return R, leak


def build_generic(gamma: RateMatrix, h: DiagonalHamiltonian | None = None) -> LindbladModel:
    """Model with one jump operator per positive rate and ``H = diag(energies)``.

    The restriction to diagonal matrices is checked against the classical
    generator; a mismatch raises :class:`InternalError`.
    """
    d = gamma.d
    if h is None:
        h = DiagonalHamiltonian(np.zeros(d))
    if h.d != d:
        raise ValidationError(f"energies have length {h.d}, rates are {d}x{d}")
    Ls = tuple(jump_operator(d, l, k, gamma.gamma[l, k]) for l, k in gamma.edges())
    model = LindbladModel(np.diag(h.energies).astype(complex), Ls)
    Q = classical_generator(gamma)
    R, leak = diagonal_restriction(model, SCHRODINGER)
    err = max(float(np.max(np.abs(R - Q.T))), leak)
    if err > RESTRICTION_TOL * max(1.0, float(np.max(np.abs(Q)))):
        raise InternalError(f"diagonal restriction differs from the chain generator by {err:.3e}")
    return model


# --- graph side ---------------------------------------------------------------------

@dataclass
class ChainCertificate:
    """``paths[(l, k)]`` is a shortest positive-rate path from ``l`` to ``k`` (when irreducible);
    otherwise ``unreachable = (l, k)`` with ``k`` not reachable from ``l``."""

    irreducible: bool
    paths: dict = field(default_factory=dict)
    unreachable: Optional[tuple] = None
    components: list = field(default_factory=list)

    def as_dict(self):
        out = {"irreducible": self.irreducible,
               "components": [[i + 1 for i in c] for c in self.components]}
        if self.irreducible:
            out["paths"] = [{"from": l + 1, "to": k + 1, "path": [i + 1 for i in p]}
                            for (l, k), p in sorted(self.paths.items())]
        else:
            out["unreachable"] = [self.unreachable[0] + 1, self.unreachable[1] + 1]
        return out


def _bfs_path(pred, start, target):
    path = [target]
    while path[-1] != start:
        p = pred[path[-1]]
        if p < 0:
            return None
        path.append(int(p))
    return path[::-1]


def chain_irreducible(gamma: RateMatrix) -> ChainCertificate:
    """Strong connectivity of the graph with an edge ``l -> k`` whenever ``gamma[l, k] > 0``."""
    d = gamma.d
    adj = csr_matrix((gamma.gamma > 0).astype(np.int8))
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    comps = [sorted(np.nonzero(labels == c)[0].tolist()) for c in range(n_comp)]
    comps.sort(key=lambda c: c[0])
    if n_comp == 1:
        paths = {}
        for l in range(d):
            _, pred = breadth_first_order(adj, l, directed=True, return_predecessors=True)
            for k in range(d):
                if k != l:
                    paths[(l, k)] = _bfs_path(pred, l, k)
        return ChainCertificate(True, paths, None, comps)
    # a sink component cannot reach anything outside it
    label_of = {i: labels[i] for i in range(d)}
    for comp in comps:
        inside = set(comp)
        leaves = any(gamma.gamma[i, j] > 0 for i in comp for j in range(d) if j not in inside)
        if not leaves:
            l = comp[0]
            k = min(j for j in range(d) if label_of[j] != label_of[l])
            return ChainCertificate(False, {}, (l, k), comps)
    raise InternalError("condensation graph without a sink component")


def path_bracket(gamma: RateMatrix, path) -> np.ndarray:
    """Iterated commutator ``[L_{j_{n-1} k}, [ ..., [L_{j_1 j_2}, L_{l j_1}]]]`` along ``path``."""
    d = gamma.d
    B = jump_operator(d, path[0], path[1], gamma.gamma[path[0], path[1]])
    for a, b in zip(path[1:], path[2:]):
        B = commutator(jump_operator(d, a, b, gamma.gamma[a, b]), B)
    return B


@dataclass
class GenericReport:
    chain: ChainCertificate
    algebra: object
    larc: object
    larc_without_drift: object
    brackets: list
    max_bracket_error: float

    @property
    def chain_irreducible(self) -> bool:
        return self.chain.irreducible

    @property
    def algebra_irreducible(self) -> bool:
        return bool(self.algebra.irreducible)

    @property
    def larc_holds(self) -> bool:
        return self.larc.verdict == HOLDS

    def as_dict(self):
        return {
            "chain_irreducible": self.chain_irreducible,
            "algebra_irreducible": self.algebra_irreducible,
            "larc_holds": self.larc_holds,
            "certificate": self.chain.as_dict(),
            "algebra": self.algebra.as_dict(),
            "larc": self.larc.as_dict(),
            "larc_without_drift": self.larc_without_drift.as_dict(),
            "brackets": self.brackets,
            "max_bracket_error": self.max_bracket_error,
        }


def verify_equivalences(gamma: RateMatrix, h: DiagonalHamiltonian | None = None, n_random: int = 50,
                        seed: int = 0, tol: float = DEFAULT_RANK_TOL) -> GenericReport:
    """Chain connectivity, algebra irreducibility and sampled LARC, cross-checked.

    For an irreducible chain the bracket along each certificate path must be
    ``sqrt(product of path rates) |e_k><e_l|``.  Disagreeing verdicts or a
    wrong bracket raise :class:`InternalError`.
    """
    model = build_generic(gamma, h)
    cert = chain_irreducible(gamma)
    alg = is_irreducible(model, ALGEBRA_GL, tol, seed=seed)
    larc = larc_check(model, n_random, seed, tol)
    larc0 = larc_check(model, n_random, seed, tol, include_drift=False)
    brackets = []
    worst = 0.0
    if cert.irreducible:
        d = gamma.d
        for (l, k), path in sorted(cert.paths.items()):
            B = path_bracket(gamma, path)
            coef = float(np.sqrt(np.prod([gamma.gamma[a, b] for a, b in zip(path, path[1:])])))
            target = np.zeros((d, d), dtype=complex)
            target[k, l] = coef
            err = float(np.linalg.norm(B - target) / coef)
            worst = max(worst, err)
            brackets.append({"from": l + 1, "to": k + 1, "path": [i + 1 for i in path],
                             "coefficient": complex(B[k, l]).real, "expected": coef, "relative_error": err})
        if worst > BRACKET_TOL:
            raise InternalError(f"bracket along a certificate path is off by {worst:.3e}")
    verdicts = (cert.irreducible, bool(alg.irreducible), larc.verdict == HOLDS)
    if len(set(verdicts)) != 1:
        raise InternalError(
            f"chain={verdicts[0]}, algebra={verdicts[1]}, larc={larc.verdict}",
            witness=alg.witness if alg.witness is not None else larc.witness,
        )
    return GenericReport(cert, alg, larc, larc0, brackets, worst)


def random_rates(d: int, rng, p: float = 0.5, low: float = 0.1, high: float = 2.0) -> RateMatrix:
    """Each off-diagonal edge present with probability ``p``, rates uniform on ``[low, high]``."""
    mask = rng.random((d, d)) < p
    np.fill_diagonal(mask, False)
    return RateMatrix(np.where(mask, rng.uniform(low, high, (d, d)), 0.0))


# --- JSON ---------------------------------------------------------------------------

RATES_SCHEMA = {
    "type": "object",
    "required": ["dim", "gamma"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "gamma": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "energies": {"type": "array", "items": {"type": "number"}},
    },
}


def rates_to_dict(gamma: RateMatrix, h: DiagonalHamiltonian | None = None) -> dict:
    e = np.zeros(gamma.d) if h is None else h.energies
    return {"dim": gamma.d, "gamma": gamma.gamma.tolist(), "energies": [float(x) for x in e]}


def rates_from_dict(data) -> tuple:
    import jsonschema

    try:
        jsonschema.validate(data, RATES_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ParseError(f"rate file invalid at {where}: {exc.message}") from None
    d = data["dim"]
    g = np.array(data["gamma"], dtype=float)
    if g.shape != (d, d):
        raise ParseError(f"gamma: expected {d}x{d}, got shape {g.shape}")
    e = data.get("energies", [0.0] * d)
    if len(e) != d:
        raise ParseError(f"energies: expected {d} entries, got {len(e)}")
    return RateMatrix(g), DiagonalHamiltonian(np.array(e, dtype=float))


def rates_from_json(text: str) -> tuple:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return rates_from_dict(data)


def is_rates_dict(data) -> bool:
    return isinstance(data, dict) and "gamma" in data
