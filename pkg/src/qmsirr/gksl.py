"""GKSL generators: drift, generator action, superoperators, exact evolution.

Vectorisation is column stacking, ``vec(X) = X.reshape(-1, order="F")``,
so that ``vec(A X B) = (B.T kron A) vec(X)``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimError, InternalError, InvalidTime, ParseError, ValidationError
from .matkit import kernel_basis, matrix_exp, numeric_rank, Tolerance

__all__ = [
    "LindbladModel",
    "Superoperator",
    "HEISENBERG",
    "SCHRODINGER",
    "vec",
    "unvec",
    "drift",
    "stratonovich_drift",
    "apply_generator",
    "apply_generator_dissipator_form",
    "superoperator",
    "evolve_state",
    "check_minimal",
    "minimalize",
    "generators_close",
    "model_to_json",
    "model_from_json",
    "fingerprint",
]

HEISENBERG = "heisenberg"
SCHRODINGER = "schrodinger"
HERMITIAN_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """GKSL data ``(H, L_1..L_m)`` on ``C^d``.

    ``H`` must be Hermitian up to ``HERMITIAN_TOL * max(1, |H|_F)``.
    """

    H: np.ndarray
    Ls: tuple = ()

    def __post_init__(self):
        H = np.array(self.H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise DimError(f"H must be square, got shape {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ValidationError("H has non-finite entries")
        d = H.shape[0]
        Ls = tuple(np.array(L, dtype=complex) for L in self.Ls)
        for i, L in enumerate(Ls):
            if L.shape != (d, d):
                raise DimError(f"L[{i}] has shape {L.shape}, expected {(d, d)}")
            if not np.all(np.isfinite(L)):
                raise ValidationError(f"L[{i}] has non-finite entries")
        dev = H - H.conj().T
        if np.linalg.norm(dev) > HERMITIAN_TOL * max(1.0, np.linalg.norm(H)):
            bad = [(int(i), int(j)) for i, j in zip(*np.nonzero(np.abs(dev) > HERMITIAN_TOL)) if i <= j]
            raise ValidationError(f"H is not Hermitian; offending entries (row, col): {bad}")
        H.setflags(write=False)
        for L in Ls:
            L.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "Ls", Ls)

    @property
    def d(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return len(self.Ls)

    def __repr__(self):
        return f"LindbladModel(d={self.d}, m={self.m})"


@dataclass(frozen=True)
class Superoperator:
    mode: str
    matrix: np.ndarray
    vec_convention: str = "column-stacking"

    @property
    def d(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))


def vec(x):
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, d=None):
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.shape[0])))
    return v.reshape(d, d, order="F")


def drift(model: LindbladModel) -> np.ndarray:
    """``G = -1/2 sum L*L - iH``."""
    G = -1j * model.H
    for L in model.Ls:
        G = G - 0.5 * (L.conj().T @ L)
    return G


def stratonovich_drift(model: LindbladModel) -> np.ndarray:
    """Drift of the Stratonovich form, ``G - 1/2 sum L^2``."""
    Gt = drift(model)
    for L in model.Ls:
        Gt = Gt - 0.5 * (L @ L)
    return Gt


def _check_square(model, x):
    x = np.asarray(x)
    if x.shape != (model.d, model.d):
        raise DimError(f"expected a {model.d}x{model.d} matrix, got {x.shape}")
    return x


def apply_generator(model: LindbladModel, x, mode: str = HEISENBERG) -> np.ndarray:
    """``L(x) = G*x + sum L*xL + xG``; Schrodinger mode gives the trace dual."""
    x = _check_square(model, x)
    G = drift(model)
    if mode == HEISENBERG:
        out = G.conj().T @ x + x @ G
        for L in model.Ls:
            out = out + L.conj().T @ x @ L
    elif mode == SCHRODINGER:
        out = G @ x + x @ G.conj().T
        for L in model.Ls:
            out = out + L @ x @ L.conj().T
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out


def apply_generator_dissipator_form(model: LindbladModel, x) -> np.ndarray:
    """Heisenberg generator written as commutator plus dissipator."""
    x = _check_square(model, x)
    out = 1j * (model.H @ x - x @ model.H)
    for L in model.Ls:
        LdL = L.conj().T @ L
        out = out + 0.5 * (-LdL @ x + 2 * L.conj().T @ x @ L - x @ LdL)
    return out


def superoperator(model: LindbladModel, mode: str = HEISENBERG) -> Superoperator:
    d = model.d
    I = np.eye(d)
    G = drift(model)
    if mode == HEISENBERG:
        S = np.kron(I, G.conj().T) + np.kron(G.T, I)
        for L in model.Ls:
            S = S + np.kron(L.T, L.conj().T)
    elif mode == SCHRODINGER:
        S = np.kron(I, G) + np.kron(G.conj(), I)
        for L in model.Ls:
            S = S + np.kron(L.conj(), L)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Superoperator(mode, S)


def evolve_state(model: LindbladModel, rho, t: float, tol: float = 1e-9) -> np.ndarray:
    """Schrodinger-picture evolution ``T_{*t}(rho)`` via the superoperator exponential.

    Raises :class:`InternalError` if the result has an eigenvalue below ``-tol``
    (relative to its trace); smaller negative parts are left in place.
    """
    if t < 0:
        raise InvalidTime(f"t must be nonnegative, got {t}")
    rho = _check_square(model, rho).astype(complex)
    if t == 0:
        return rho.copy()
    S = superoperator(model, SCHRODINGER).matrix
    out = unvec(matrix_exp(S, t) @ vec(rho), model.d)
    out = 0.5 * (out + out.conj().T)
    scale = max(abs(np.trace(out)), 1.0)
    lo = np.linalg.eigvalsh(out)[0]
    if lo < -tol * scale:
        raise InternalError(f"evolved state has eigenvalue {lo:.3e}; exponential is inaccurate")
    return out


def check_minimal(model: LindbladModel, tol: float = 1e-9):
    """Return ``(minimal, witness)``.

    ``witness`` is ``None`` when ``{I, L_1..L_m}`` is linearly independent,
    otherwise coefficients ``c`` with ``c[0] I + sum c[l] L_l = 0``.
    """
    d = model.d
    cols = [np.eye(d).ravel()] + [L.ravel() for L in model.Ls]
    A = np.array(cols, dtype=complex).T
    r = numeric_rank(A, Tolerance(rel_rank_tol=tol))
    if r == A.shape[1]:
        return True, None
    _, _, vh = np.linalg.svd(A)
    c = vh[-1].conj()
    k = int(np.argmax(np.abs(c)))
    c = c / c[k] * abs(c[k])
    return False, c


def minimalize(model: LindbladModel, tol: float = 1e-9) -> LindbladModel:
    """Equivalent GKSL data with ``{I, L_1..L_m'}`` linearly independent.

    Each ``L`` loses its identity component ``c = tr(L)/d``; the induced
    shift ``(c L'* - conj(c) L')/(2i)`` (``L' = L - c``) is absorbed into ``H``.
    The traceless family is then compressed by an SVD of its coefficient
    matrix, which is a unitary remixing followed by dropping zero members.
    """
    d = model.d
    H = model.H.copy()
    traceless = []
    for L in model.Ls:
        c = np.trace(L) / d
        Lp = L - c * np.eye(d)
        H = H + (c * Lp.conj().T - np.conj(c) * Lp) / 2j
        traceless.append(Lp)
    H = 0.5 * (H + H.conj().T)
    if not traceless:
        return LindbladModel(H, ())
    A = np.array([L.ravel() for L in traceless]).T
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    scale = max(s[0], 1.0) if s.size else 1.0
    keep = s > tol * scale
    mixed = (A @ vh.conj().T)[:, keep]
    Ls = tuple(mixed[:, j].reshape(d, d) for j in range(mixed.shape[1]))
    return LindbladModel(H, Ls)


def generators_close(a: LindbladModel, b: LindbladModel, n_samples=20, tol=1e-10, rng=None) -> float:
    """Largest relative deviation of the two Heisenberg generators on random inputs."""
    if a.d != b.d:
        return np.inf
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    for _ in range(n_samples):
        x = rng.standard_normal((a.d, a.d)) + 1j * rng.standard_normal((a.d, a.d))
        ya = apply_generator(a, x)
        yb = apply_generator(b, x)
        worst = max(worst, np.linalg.norm(ya - yb) / max(np.linalg.norm(ya), 1.0))
    return worst


def invariant_kernel(S, tol=1e-9):
    """Kernel of a superoperator matrix, as columns."""
    return kernel_basis(S, Tolerance(rel_rank_tol=tol))


# --- JSON (de)serialisation --------------------------------------------------

def _mat_to_pairs(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)]


def _pairs_to_mat(rows, where):
    try:
        arr = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: entries must be [re, im] number pairs") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ParseError(f"{where}: expected a square matrix of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def model_to_dict(model: LindbladModel) -> dict:
    return {"dim": model.d, "H": _mat_to_pairs(model.H), "L": [_mat_to_pairs(L) for L in model.Ls]}


def model_to_json(model: LindbladModel) -> str:
    """Canonical JSON: sorted keys, no whitespace, complex entries as [re, im]."""
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))


def model_from_dict(data) -> LindbladModel:
    if not isinstance(data, dict):
        raise ParseError("model JSON must be an object")
    for key in ("dim", "H"):
        if key not in data:
            raise ParseError(f"missing field {key!r}")
    d = data["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ParseError("field 'dim' must be a positive integer")
    H = _pairs_to_mat(data["H"], "field 'H'")
    Ls_raw = data.get("L", [])
    if not isinstance(Ls_raw, list):
        raise ParseError("field 'L' must be a list of matrices")
    Ls = [_pairs_to_mat(L, f"field 'L[{i}]'") for i, L in enumerate(Ls_raw)]
    for name, M in [("H", H)] + [(f"L[{i}]", L) for i, L in enumerate(Ls)]:
        if M.shape != (d, d):
            raise ParseError(f"field {name!r} has shape {M.shape}, expected {(d, d)}")
    return LindbladModel(H, tuple(Ls))


def model_from_json(text: str) -> LindbladModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return model_from_dict(data)


def fingerprint(model: LindbladModel) -> str:
    return hashlib.sha256(model_to_json(model).encode()).hexdigest()


def random_model(d: int, m: int, rng, scale: float = 1.0) -> LindbladModel:
    """Gaussian random GKSL data (used by tests and sweeps)."""
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    H = scale * 0.5 * (A + A.conj().T)
    Ls = tuple(scale * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2 * d)
               for _ in range(m))
    return LindbladModel(H, Ls)


def block_reducible_model(d: int, m: int, k: int, rng, rotate: bool = True) -> tuple:
    """Random model leaving a ``k``-dimensional subspace invariant.

    ``G`` and all ``L`` are block upper triangular in a (randomly rotated)
    basis whose first ``k`` vectors span the invariant subspace.  Returns
    ``(model, basis_of_invariant_subspace)``.
    """
    def upper(M):
        M = M.copy()
        M[k:, :k] = 0
        return M

    Ls = [upper(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2 * d) for _ in range(m)]
    # G = -1/2 sum L*L - iH must also be block upper triangular:
    # choose the lower-left block of H to cancel that of the L*L sum.
    K = sum((L.conj().T @ L for L in Ls), np.zeros((d, d), dtype=complex))
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    H = 0.5 * (A + A.conj().T)
    low = 0.5j * K[k:, :k]
    H[k:, :k] = low
    H[:k, k:] = low.conj().T
    if rotate:
        U, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    else:
        U = np.eye(d, dtype=complex)
    H = U @ H @ U.conj().T
    Ls = tuple(U @ L @ U.conj().T for L in Ls)
    return LindbladModel(0.5 * (H + H.conj().T), Ls), U[:, :k]
