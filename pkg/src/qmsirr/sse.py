"""Linear stochastic Schrodinger equations.

Simulates ``dX = G X dt + sum_l L_l X dW^l`` (Ito, real Wiener noises),
checks the representation ``T_{*t}(|xi><xi|) = E |X_t><X_t|`` against the
exact superoperator evolution, tests totality of the trajectory range,
runs the polygonal (Wong-Zakai) approximation with the Stratonovich
corrected drift, and evaluates the second-moment form of the chaos
expansion by deterministic quadrature.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from ._backend import get_kernels
from .errors import BoundTooLoose, GridError, InvalidTime, NotAntiSelfAdjoint, ZeroVector
from .gksl import LindbladModel, drift, evolve_state, stratonovich_drift, unvec, vec
from .matkit import matrix_exp

EULER_MARUYAMA = "euler_maruyama"
EXPONENTIAL_EULER = "exponential_euler"
SCHEMES = (EULER_MARUYAMA, EXPONENTIAL_EULER)

TOTALITY_K = 3.0
ROUNDOFF_FLOOR = 1e-12
_CHUNK = 4096


@dataclass(frozen=True)
class TrajectoryConfig:
    """Discretisation and sampling parameters.

    ``save_every`` thins the stored time grid (``None`` stores every step);
    the final step is always stored.  ``n_workers`` only changes how
    trajectory chunks are scheduled, never the numbers produced.
    """

    t_final: float
    steps: int
    n_traj: int
    master_seed: int = 0
    scheme: str = EXPONENTIAL_EULER
    save_every: Optional[int] = None
    n_workers: int = 1
    backend: Optional[str] = None

    def __post_init__(self):
        if not self.t_final > 0:
            raise InvalidTime(f"t_final must be positive, got {self.t_final}")
        if self.steps < 1 or self.n_traj < 1:
            raise ValueError("steps and n_traj must be at least 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.save_every is not None and self.save_every < 1:
            raise ValueError("save_every must be positive")

    @property
    def h(self) -> float:
        return self.t_final / self.steps

    def save_indices(self) -> np.ndarray:
        stride = 1 if self.save_every is None else self.save_every
        idx = np.arange(0, self.steps + 1, stride, dtype=np.int64)
        if idx[-1] != self.steps:
            idx = np.append(idx, np.int64(self.steps))
        return idx

    def replace(self, **kw) -> "TrajectoryConfig":
        return replace(self, **kw)


@dataclass
class TrajectoryEnsemble:
    model: LindbladModel
    config: TrajectoryConfig
    xi: np.ndarray
    step_indices: np.ndarray
    samples: np.ndarray  # (n_traj, n_saved, d)

    @property
    def times(self) -> np.ndarray:
        return self.step_indices * self.config.h

    def index_of_step(self, step: int) -> int:
        hits = np.nonzero(self.step_indices == step)[0]
        if not hits.size:
            raise KeyError(f"step {step} was not stored")
        return int(hits[0])


@dataclass
class MonteCarloEstimate:
    value: object
    std_error: object
    n: int

    @property
    def aggregate_std_error(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.std_error) ** 2)))


def _unit_check(xi):
    xi = np.asarray(xi, dtype=complex).ravel()
    if not np.any(xi):
        raise ZeroVector("xi must be non-zero")
    return xi


def step_matrices(model: LindbladModel, h: float, scheme: str):
    """One-step maps ``x <- A x + sum_l dW_l B_l x`` of the chosen scheme."""
    d = model.d
    G = drift(model)
    if scheme == EULER_MARUYAMA:
        A = np.eye(d) + h * G
        B = [L for L in model.Ls]
    elif scheme == EXPONENTIAL_EULER:
        A = matrix_exp(G, h)
        B = [A @ L for L in model.Ls]
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    B = np.array(B, dtype=complex).reshape(len(B), d, d)
    return np.ascontiguousarray(A, dtype=complex), np.ascontiguousarray(B)


def simulate_ito(model: LindbladModel, xi, config: TrajectoryConfig) -> TrajectoryEnsemble:
    """Sample ``config.n_traj`` trajectories of the Ito SSE from ``xi``.

    Euler-Maruyama: ``X' = X + hGX + sum L X dW``.
    Exponential Euler: ``X' = exp(hG)(X + sum L X dW)``.
    """
    xi = _unit_check(xi)
    if xi.shape[0] != model.d:
        raise ValueError("xi has the wrong dimension")
    kern = get_kernels(config.backend)
    A, B = step_matrices(model, config.h, config.scheme)
    save = config.save_indices()
    out = np.empty((config.n_traj, save.size, model.d), dtype=complex)
    sqrt_h = math.sqrt(config.h)
    seed = np.uint64(config.master_seed % (1 << 64))
    starts = list(range(0, config.n_traj, _CHUNK))

    def run(start):
        stop = min(start + _CHUNK, config.n_traj)
        kern.propagate(A, B, xi, seed, start, config.steps, sqrt_h, save, out[start:stop])

    if config.n_workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(config.n_workers) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)
    return TrajectoryEnsemble(model, config, xi, save, out)


def wiener_increments(master_seed: int, traj: int, steps: int, m: int, h: float, backend=None) -> np.ndarray:
    """The ``(steps, m)`` Wiener increments trajectory ``traj`` uses in :func:`simulate_ito`."""
    kern = get_kernels(backend)
    z = kern.stream_normals(np.uint64(master_seed % (1 << 64)), np.uint64(traj), steps * m)
    return math.sqrt(h) * np.asarray(z).reshape(steps, m)


# --- estimators -------------------------------------------------------------------

def mean_square_norm(ensemble: TrajectoryEnsemble, time_index: int = -1) -> MonteCarloEstimate:
    X = ensemble.samples[:, time_index, :]
    q = np.sum(np.abs(X) ** 2, axis=1)
    n = q.size
    se = float(np.std(q, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MonteCarloEstimate(float(q.mean()), se, n)


def estimate_density(ensemble: TrajectoryEnsemble, time_index: int = -1) -> MonteCarloEstimate:
    """Sample mean of ``|X_t><X_t|`` with entrywise standard errors.

    The error of a complex entry combines the variances of its real and
    imaginary parts.
    """
    X = ensemble.samples[:, time_index, :]
    n = X.shape[0]
    outer = X[:, :, None] * X[:, None, :].conj()
    mean = outer.mean(axis=0)
    if n > 1:
        var = outer.real.var(axis=0, ddof=1) + outer.imag.var(axis=0, ddof=1)
        se = np.sqrt(var / n)
    else:
        se = np.zeros_like(mean.real)
    return MonteCarloEstimate(mean, se, n)


def scheme_moment_map(model: LindbladModel, h: float, scheme: str) -> np.ndarray:
    """Exact one-step map of ``E|X><X|`` for the scheme (column-stacked)."""
    A, B = step_matrices(model, h, scheme)
    Phi = np.kron(A.conj(), A)
    for Bl in B:
        Phi = Phi + h * np.kron(Bl.conj(), Bl)
    return Phi


def scheme_density(model: LindbladModel, xi, t: float, steps: int, scheme: str) -> np.ndarray:
    """Expectation of ``|X_t><X_t|`` under the discrete scheme (no sampling error)."""
    xi = _unit_check(xi)
    Phi = scheme_moment_map(model, t / steps, scheme)
    v = np.linalg.matrix_power(Phi, steps) @ vec(np.outer(xi, xi.conj()))
    return unvec(v, model.d)


@dataclass
class RepresentationReport:
    distance: float
    std_error_term: float
    bias_budget: float
    bias_h: float
    bias_h2: float
    passed: bool
    t: float
    n_traj: int
    steps: int
    scheme: str
    mean_square_norm: float
    mean_square_norm_se: float

    def as_dict(self):
        return dict(self.__dict__)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} representation t={self.t:g}: |MC - exact|_F = {self.distance:.3e} "
                f"<= 5*SE {self.std_error_term:.3e} + bias {self.bias_budget:.3e}")


def representation_bias(model, xi, t, steps, scheme):
    """Scheme bias at ``h`` and ``h/2`` and the extrapolated budget ``C h``.

    ``C`` comes from the first-order Richardson relation ``b(h) - b(h/2) = C h / 2``.
    """
    xi = _unit_check(xi)
    exact = evolve_state(model, np.outer(xi, xi.conj()), t)
    b1 = float(np.linalg.norm(scheme_density(model, xi, t, steps, scheme) - exact))
    b2 = float(np.linalg.norm(scheme_density(model, xi, t, 2 * steps, scheme) - exact))
    h = t / steps
    C = 2.0 * (b1 - b2) / h
    return b1, b2, max(C * h, 0.0)


def verify_representation(model: LindbladModel, xi, t: float, config: TrajectoryConfig,
                          ensemble: TrajectoryEnsemble | None = None) -> RepresentationReport:
    """Compare the Monte Carlo density with ``exp(t L_*)(|xi><xi|)``.

    PASS iff the Frobenius distance is at most five aggregate standard
    errors plus the calibrated discretisation bias (plus a roundoff floor
    of ``ROUNDOFF_FLOOR * |xi|^2``, which only matters when both vanish).
    """
    xi = _unit_check(xi)
    config = config.replace(t_final=t)
    if ensemble is None:
        ensemble = simulate_ito(model, xi, config.replace(save_every=config.steps))
    est = estimate_density(ensemble, -1)
    exact = evolve_state(model, np.outer(xi, xi.conj()), t)
    dist = float(np.linalg.norm(est.value - exact))
    b1, b2, budget = representation_bias(model, xi, t, config.steps, config.scheme)
    se_term = 5.0 * est.aggregate_std_error
    msn = mean_square_norm(ensemble, -1)
    floor = ROUNDOFF_FLOOR * float(np.vdot(xi, xi).real)
    return RepresentationReport(dist, se_term, budget, b1, b2, dist <= se_term + budget + floor, t,
                                config.n_traj, config.steps, config.scheme, msn.value, msn.std_error)


@dataclass
class TotalityResult:
    min_eigenvalue: float
    total: bool
    exact_reference: float
    std_error: float
    threshold: float

    def as_dict(self):
        return dict(self.__dict__)


def totality_test(model: LindbladModel, xi, t: float, config: TrajectoryConfig,
                  k: float = TOTALITY_K, floor: float = 1e-10) -> TotalityResult:
    """Is the second-moment matrix ``E[X_t X_t*]`` positive definite?

    The smallest eigenvalue of the sample matrix is compared to ``k`` standard
    errors of ``|<v, X_t>|^2`` along its eigenvector ``v`` (plus a roundoff
    floor relative to the trace).
    """
    if not t > 0:
        raise InvalidTime("t must be positive")
    xi = _unit_check(xi)
    cfg = config.replace(t_final=t, save_every=config.steps)
    ens = simulate_ito(model, xi, cfg)
    X = ens.samples[:, -1, :]
    M = (X.T @ X.conj()) / X.shape[0]
    M = 0.5 * (M + M.conj().T)
    w, V = np.linalg.eigh(M)
    v = V[:, 0]
    q = np.abs(X @ v.conj()) ** 2
    se = float(np.std(q, ddof=1) / math.sqrt(q.size)) if q.size > 1 else 0.0
    threshold = k * se + floor * float(np.trace(M).real)
    exact = evolve_state(model, np.outer(xi, xi.conj()), t)
    ref = float(np.linalg.eigvalsh(exact)[0])
    return TotalityResult(float(w[0]), bool(w[0] > threshold), ref, se, threshold)


def norm_drift(samples, xi) -> float:
    """``max |(|X|^2 - |xi|^2)|`` over every stored vector."""
    n0 = float(np.vdot(xi, xi).real)
    return float(np.max(np.abs(np.sum(np.abs(samples) ** 2, axis=-1) - n0)))


def pathwise_norm_drift(ensemble: TrajectoryEnsemble, tol: float = 1e-10) -> float:
    """Largest deviation of ``|X_t|^2`` from ``|xi|^2`` over trajectories and stored times.

    Only meaningful for anti-selfadjoint noise operators, where the exact
    solution keeps its norm pathwise.
    """
    for i, L in enumerate(ensemble.model.Ls):
        if np.linalg.norm(L + L.conj().T) > tol * max(1.0, np.linalg.norm(L)):
            raise NotAntiSelfAdjoint(f"L[{i}] is not anti-selfadjoint")
    return norm_drift(ensemble.samples, ensemble.xi)


# --- Wong-Zakai ---------------------------------------------------------------------

def _coarse_layout(fine_steps: int, t_final: float, n: int) -> tuple:
    if n < 1:
        raise GridError("coarse resolution n must be >= 1")
    nc = n * t_final
    n_coarse = int(round(nc))
    if n_coarse < 1 or abs(nc - n_coarse) > 1e-9 * max(1.0, nc):
        raise GridError(f"n * t_final = {nc} is not a positive integer")
    if fine_steps % n_coarse:
        raise GridError(f"{fine_steps} fine steps do not refine {n_coarse} coarse intervals")
    return n_coarse, fine_steps // n_coarse


def simulate_wong_zakai(model: LindbladModel, xi, increments, t_final: float, n: int) -> np.ndarray:
    """Solve the ODE driven by the polygonal interpolation of the Wiener path.

    ``increments`` has shape ``(fine_steps, m)`` or ``(paths, fine_steps, m)``;
    the coarse nodes are ``k/n``.  On each coarse interval the generator
    ``G - 1/2 sum L^2 + sum_l u_l L_l`` is constant (``u`` the polygon slope),
    so the solution there is an exact matrix exponential.  Output is sampled
    on the fine grid, shape ``(..., fine_steps + 1, d)``.
    """
    xi = _unit_check(xi)
    inc = np.asarray(increments, dtype=float)
    single = inc.ndim == 2
    if single:
        inc = inc[None]
    if inc.ndim != 3 or inc.shape[2] != model.m:
        raise GridError(f"increments must have shape (..., steps, {model.m}), got {np.shape(increments)}")
    paths, fine_steps, m = inc.shape
    n_coarse, r = _coarse_layout(fine_steps, t_final, n)
    h_f = t_final / fine_steps
    d = model.d
    Gt = stratonovich_drift(model)
    Ls = np.array(model.Ls, dtype=complex).reshape(m, d, d)
    out = np.empty((paths, fine_steps + 1, d), dtype=complex)
    X = np.tile(xi, (paths, 1))
    out[:, 0] = X
    for c in range(n_coarse):
        u = n * inc[:, c * r:(c + 1) * r].sum(axis=1)  # (paths, m)
        M = Gt[None] + np.einsum("pl,lij->pij", u, Ls)
        E = scipy.linalg.expm(h_f * M)
        for j in range(r):
            X = np.einsum("pij,pj->pi", E, X)
            out[:, c * r + j + 1] = X
    return out[0] if single else out


@dataclass
class ConvergenceResult:
    resolutions: list
    median_errors: list
    errors: np.ndarray  # (len(resolutions), n_paths)
    t: float
    fine_steps: int
    reference: str

    @property
    def strictly_decreasing(self) -> bool:
        e = self.median_errors
        return all(b < a for a, b in zip(e, e[1:]))

    def as_dict(self):
        return {"resolutions": list(self.resolutions), "median_errors": list(self.median_errors),
                "t": self.t, "fine_steps": self.fine_steps, "reference": self.reference,
                "strictly_decreasing": self.strictly_decreasing}


def wong_zakai_convergence(model: LindbladModel, xi, t: float, resolutions: Sequence[int], n_paths: int,
                           fine_steps: int = 2000, seed: int = 0, reference: str = "ito") -> ConvergenceResult:
    """Median sup-norm distance between polygonal solutions and a fine reference.

    ``reference="ito"`` uses exponential-Euler trajectories on the fine grid
    (exact when ``m = 0``) driven by the same increments;
    ``reference="exact_commuting"`` uses ``exp(G~ t + sum L W_t) xi``, valid
    only when ``G - 1/2 sum L^2`` and all ``L`` commute.
    """
    xi = _unit_check(xi)
    res = list(resolutions)
    if any(b <= a for a, b in zip(res, res[1:])):
        raise ValueError("resolutions must be increasing")
    h = t / fine_steps
    m = model.m
    inc = np.array([wiener_increments(seed, j, fine_steps, m, h) for j in range(n_paths)]).reshape(
        n_paths, fine_steps, m)
    if reference == "ito":
        cfg = TrajectoryConfig(t, fine_steps, n_paths, seed, EXPONENTIAL_EULER)
        ref = simulate_ito(model, xi, cfg).samples
    elif reference == "exact_commuting":
        Gt = stratonovich_drift(model)
        mats = [Gt, *model.Ls]
        for A in mats:
            for B in mats:
                if np.linalg.norm(A @ B - B @ A) > 1e-12 * max(1.0, np.linalg.norm(A) * np.linalg.norm(B)):
                    raise ValueError("exact_commuting reference needs commuting G~ and L")
        W = np.concatenate([np.zeros((n_paths, 1, m)), np.cumsum(inc, axis=1)], axis=1)
        times = np.arange(fine_steps + 1) * h
        Ls = np.array(model.Ls, dtype=complex).reshape(m, model.d, model.d)
        gen = times[None, :, None, None] * Gt + np.einsum("ptl,lij->ptij", W, Ls)
        ref = np.einsum("ptij,j->pti", scipy.linalg.expm(gen), xi)
    else:
        raise ValueError(f"unknown reference {reference!r}")
    errors = np.empty((len(res), n_paths))
    for i, n in enumerate(res):
        wz = simulate_wong_zakai(model, xi, inc, t, n)
        errors[i] = np.max(np.linalg.norm(wz - ref, axis=2), axis=1)
    med = [float(np.median(e)) for e in errors]
    return ConvergenceResult(res, med, errors, t, fine_steps, reference)


# --- chaos expansion (second moments) ------------------------------------------

@dataclass
class ChaosResult:
    partial_sum: float
    partial_sums: list
    terms: list
    bound: float
    quadrature_error: float
    passed: bool
    inconclusive: bool
    t: float
    order: int

    def as_dict(self):
        return dict(self.__dict__)


def _propagators(G, s):
    """``exp(s G)`` for an array of times ``s`` (any shape)."""
    s = np.asarray(s, dtype=float)
    E = scipy.linalg.expm(s.reshape(-1)[:, None, None] * G[None])
    return E.reshape(s.shape + G.shape)


def _chaos_integrand(G, Ls, rho0, t, S):
    """``sum over words |P_{t-s1} L P_{s1-s2} ... L P_{sk} xi|^2`` at simplex points.

    ``S`` has shape ``(npts, k)`` with ``t >= s1 >= ... >= sk >= 0``.  The sum
    over noise labels is carried by propagating a density matrix through
    ``rho -> sum_l L rho L*``.
    """
    npts, k = S.shape
    gaps = np.empty((npts, k + 1))
    gaps[:, 0] = S[:, k - 1]
    for i in range(1, k):
        gaps[:, i] = S[:, k - 1 - i] - S[:, k - i]
    gaps[:, k] = t - S[:, 0]
    P = _propagators(G, gaps)  # (npts, k+1, d, d)
    R = np.broadcast_to(rho0, (npts,) + rho0.shape)
    for i in range(k + 1):
        Pi = P[:, i]
        R = Pi @ R @ np.conj(np.swapaxes(Pi, 1, 2))
        if i < k:
            R = sum(L @ R @ L.conj().T for L in Ls)
    return np.trace(R, axis1=1, axis2=2).real


def _gl_simplex(G, Ls, rho0, t, k, nodes):
    """Tensor Gauss-Legendre rule on the ordered simplex (collapsed coordinates)."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    grids = np.meshgrid(*([u] * k), indexing="ij")
    wgrid = np.ones_like(grids[0])
    for g in np.meshgrid(*([wu] * k), indexing="ij"):
        wgrid = wgrid * g
    U = np.stack([g.ravel() for g in grids], axis=1)
    S = np.empty_like(U)
    jac = np.full(U.shape[0], t)
    S[:, 0] = t * U[:, 0]
    for i in range(1, k):
        jac = jac * S[:, i - 1]
        S[:, i] = S[:, i - 1] * U[:, i]
    f = _chaos_integrand(G, Ls, rho0, t, S)
    return float(np.sum(wgrid.ravel() * jac * f))


def chaos_isometry_check(model: LindbladModel, xi, t: float, order: int, gl_nodes: int = 12,
                         mc_samples: int = 100_000, seed: int = 0, mc_batch: int = 20_000) -> ChaosResult:
    """Second-moment check of the chaos expansion truncated at ``order``.

    The level-``k`` term is the simplex integral of the squared norm of the
    sandwiched ``P L P ... L P xi`` summed over noise labels (Ito isometry).
    Levels ``k <= 3`` use tensor Gauss-Legendre with ``gl_nodes`` and
    ``gl_nodes + 4`` nodes per axis (their difference is the error
    estimate); levels 4 and 5 use ``mc_samples`` uniform simplex points with
    a three standard error allowance.  The check passes iff
    ``|partial_sum - |xi|^2| <= (c m t)^(order+1)/(order+1)! + quadrature error``,
    ``c`` the largest operator norm among the ``L``.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if not t > 0:
        raise InvalidTime("t must be positive")
    if order > 5:
        raise ValueError("orders above 5 are not supported")
    xi = _unit_check(xi)
    G = drift(model)
    Ls = list(model.Ls)
    rho0 = np.outer(xi, xi.conj())
    norm2 = float(np.vdot(xi, xi).real)
    c = max((np.linalg.norm(L, 2) for L in Ls), default=0.0)
    cmt = c * len(Ls) * t
    bound = float(cmt ** (order + 1) / math.factorial(order + 1))
    inconclusive = bool(bound > 0.5 * norm2)
    if inconclusive:
        warnings.warn(BoundTooLoose(f"remainder bound {bound:.3g} exceeds half of |xi|^2 at order {order}"))
    P = matrix_exp(G, t)
    terms = [float(np.linalg.norm(P @ xi) ** 2)]
    qerr = 0.0
    rng = np.random.default_rng(seed)
    for k in range(1, order + 1):
        if not Ls:
            terms.append(0.0)
            continue
        if k <= 3:
            fine = _gl_simplex(G, Ls, rho0, t, k, gl_nodes + 4)
            coarse = _gl_simplex(G, Ls, rho0, t, k, gl_nodes)
            terms.append(fine)
            qerr += abs(fine - coarse)
        else:
            vol = t ** k / math.factorial(k)
            vals = []
            left = mc_samples
            while left > 0:
                b = min(left, mc_batch)
                S = -np.sort(-rng.uniform(0.0, t, size=(b, k)), axis=1)
                vals.append(_chaos_integrand(G, Ls, rho0, t, S))
                left -= b
            f = np.concatenate(vals)
            terms.append(float(vol * f.mean()))
            qerr += 3.0 * vol * float(f.std(ddof=1)) / math.sqrt(f.size)
    partial = list(np.cumsum(terms))
    qerr += 1e-12 * norm2
    ok = abs(partial[-1] - norm2) <= bound + qerr and not inconclusive
    return ChaosResult(float(partial[-1]), [float(p) for p in partial], terms, bound, qerr, ok,
                       inconclusive, t, order)


# --- export -------------------------------------------------------------------------

def trajectory_csv_rows(ensemble: TrajectoryEnsemble, max_traj: int | None = None):
    d = ensemble.samples.shape[2]
    yield ["traj_id", "step", "t"] + [f"{p}_{i}" for i in range(d) for p in ("re", "im")]
    n = ensemble.samples.shape[0] if max_traj is None else min(max_traj, ensemble.samples.shape[0])
    times = ensemble.times
    for j in range(n):
        for s, (step, tt) in enumerate(zip(ensemble.step_indices, times)):
            x = ensemble.samples[j, s]
            row = [j, int(step), repr(float(tt))]
            for z in x:
                row.extend((repr(float(z.real)), repr(float(z.imag))))
            yield row


def write_trajectory_csv(ensemble: TrajectoryEnsemble, fh, max_traj: int | None = None) -> None:
    """Write ``traj_id, step, t, re_0, im_0, ...`` rows to an open text file."""
    writer = csv.writer(fh, lineterminator="\n")
    for row in trajectory_csv_rows(ensemble, max_traj):
        writer.writerow(row)


def read_trajectory_csv(fh):
    """Inverse of :func:`write_trajectory_csv`: returns ``(traj_ids, steps, t, X)``."""
    reader = csv.reader(fh)
    header = next(reader)
    d = (len(header) - 3) // 2
    rows = [r for r in reader]
    arr = np.array([[float(v) for v in r] for r in rows]).reshape(len(rows), 3 + 2 * d)
    X = arr[:, 3::2] + 1j * arr[:, 4::2]
    return arr[:, 0].astype(int), arr[:, 1].astype(int), arr[:, 2], X


def ensemble_summary(ensemble: TrajectoryEnsemble) -> dict:
    """JSON-ready estimates with standard errors at every stored time."""
    out = {"n_traj": ensemble.config.n_traj, "steps": ensemble.config.steps,
           "t_final": ensemble.config.t_final, "scheme": ensemble.config.scheme,
           "master_seed": ensemble.config.master_seed, "times": []}
    for s, tt in enumerate(ensemble.times):
        msn = mean_square_norm(ensemble, s)
        rho = estimate_density(ensemble, s)
        out["times"].append({
            "t": float(tt),
            "mean_square_norm": msn.value,
            "mean_square_norm_se": msn.std_error,
            "density": [[[float(z.real), float(z.imag)] for z in row] for row in rho.value],
            "density_se": [[float(v) for v in row] for row in rho.std_error],
            "density_aggregate_se": rho.aggregate_std_error,
        })
    return out
