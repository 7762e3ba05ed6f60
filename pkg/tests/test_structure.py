import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmsirr import catalog, sse
from qmsirr.errors import InternalError, InvalidTime, NotApplicable, ZeroVector
from qmsirr.gksl import LindbladModel, block_reducible_model, drift, evolve_state, random_model
from qmsirr.structure import (
    ALGEBRA_DELTA,
    ALGEBRA_GL,
    FAILS_AT,
    HOLDS,
    MONTE_CARLO,
    commutant_dim,
    decoherence_free_trivial,
    delta_powers,
    find_invariant_subspace,
    fixed_points,
    invariance_residual,
    invariant_states,
    irreducibility_consistent,
    is_irreducible,
    larc_check,
    larc_manifold,
    s_xi_span,
    state_rank,
    support_projection,
)

seeds = st.integers(0, 2 ** 32 - 1)
E = np.eye(3, dtype=complex)


def unit(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


# amplitude damping: the unique invariant state |0><0| is not faithful
DAMPING = LindbladModel(np.zeros((2, 2)), (np.array([[0, 1], [0, 0]], dtype=complex),))


class TestDelta:
    def test_first_power_is_commutator(self, rng):
        G = rng.standard_normal((3, 3))
        L = rng.standard_normal((3, 3))
        p = delta_powers(G, L, 2)
        assert np.allclose(p[0], L)
        assert np.allclose(p[1], G @ L - L @ G)

    def test_pauli_brackets(self):
        m = catalog.pauli()
        G, L = drift(m), m.Ls[0]
        dGL = G @ L - L @ G
        # proportional to sigma_1, and dGL L proportional to sigma_3
        c1 = dGL[0, 1]
        assert np.allclose(dGL, c1 * catalog.SIGMA1)
        c3 = (dGL @ L)[0, 0]
        assert np.allclose(dGL @ L, c3 * catalog.SIGMA3)
        assert abs(c1) == pytest.approx(2.0)


class TestSxi:
    def test_pauli_full(self, rng):
        for _ in range(20):
            assert s_xi_span(catalog.pauli(), unit(rng, 2)).dim == 2

    def test_pure_hamiltonian_is_one_dimensional(self, rng):
        assert s_xi_span(catalog.pure_hamiltonian(), unit(rng, 2)).dim == 1

    def test_so3_full(self):
        for k in range(3):
            assert s_xi_span(catalog.so3(), E[k]).dim == 3

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            s_xi_span(catalog.pauli(), np.zeros(2))

    @given(st.integers(2, 5), st.integers(1, 2), seeds)
    def test_inside_invariant_subspace(self, d, m, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, d))
        model, V = block_reducible_model(d, m, k, rng)
        xi = V @ (rng.standard_normal(k) + 1j * rng.standard_normal(k))
        s = s_xi_span(model, xi)
        assert s.dim <= k
        P = V @ V.conj().T
        assert all(np.linalg.norm(v - P @ v) < 1e-9 for v in s.basis.vectors)


class TestIrreducibility:
    def test_so3(self):
        for method in (ALGEBRA_GL, ALGEBRA_DELTA):
            v = is_irreducible(catalog.so3(), method)
            assert v.irreducible and v.closure_dim == 9 and v.method == method

    def test_pure_hamiltonian_witness_is_eigenvector(self):
        v = is_irreducible(catalog.pure_hamiltonian(), ALGEBRA_GL)
        assert not v.irreducible
        w = v.witness[:, 0]
        assert v.witness.shape[1] == 1
        assert min(abs(w[0]), abs(w[1])) < 1e-12
        assert v.witness_residual < 1e-12

    def test_verdict_dict(self):
        d = is_irreducible(catalog.pure_hamiltonian()).as_dict()
        assert d["irreducible"] is False and d["tol"] > 0 and d["witness_dim"] == 1

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            is_irreducible(catalog.pauli(), "astrology")

    @given(st.integers(2, 4), st.integers(1, 2), seeds)
    def test_routes_agree_on_random_models(self, d, m, seed):
        rng = np.random.default_rng(seed)
        out = irreducibility_consistent(random_model(d, m, rng))
        assert out[ALGEBRA_GL].irreducible and out[ALGEBRA_DELTA].irreducible

    @given(st.integers(2, 5), st.integers(1, 2), seeds)
    def test_constructed_reducible_models(self, d, m, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, d))
        model, V = block_reducible_model(d, m, k, rng)
        for method in (ALGEBRA_GL, ALGEBRA_DELTA):
            v = is_irreducible(model, method)
            assert not v.irreducible
            assert 0 < v.witness.shape[1] < d
            assert v.witness_residual < 1e-8

    @given(st.integers(2, 4), st.integers(1, 2), seeds)
    def test_invariant_under_unitary_change_of_basis(self, d, m, seed):
        rng = np.random.default_rng(seed)
        model, _ = block_reducible_model(d, m, 1, rng, rotate=False)
        U, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
        rot = LindbladModel(U @ model.H @ U.conj().T, tuple(U @ L @ U.conj().T for L in model.Ls))
        a = is_irreducible(model)
        b = is_irreducible(rot)
        assert a.irreducible == b.irreducible and a.closure_dim == b.closure_dim

    def test_find_invariant_subspace_none_when_irreducible(self):
        m = catalog.so3()
        assert find_invariant_subspace([drift(m), *m.Ls], 3) is None

    def test_invariance_residual(self):
        V = np.array([[1], [0]], dtype=complex)
        assert invariance_residual(V, [catalog.SIGMA3]) < 1e-15
        assert invariance_residual(V, [catalog.SIGMA1]) > 0.5

    def test_monte_carlo_route(self):
        cfg = sse.TrajectoryConfig(1.0, 100, 3000, 1)
        assert is_irreducible(catalog.pauli(), MONTE_CARLO, config=cfg).irreducible
        v = is_irreducible(catalog.pure_hamiltonian(), MONTE_CARLO, config=cfg)
        assert not v.irreducible and v.method == MONTE_CARLO


class TestSupport:
    def test_so3_full_rank(self):
        r = support_projection(catalog.so3(), E[0], 1.0)
        assert r.rank == 3 and np.allclose(r.projection, np.eye(3))

    def test_reducible_inside(self, rng):
        model, V = block_reducible_model(4, 2, 2, rng)
        xi = V @ np.array([1.0, 1j])
        r = support_projection(model, xi, 0.7)
        rho = evolve_state(model, np.outer(xi, xi.conj()), 0.7)
        assert r.rank == state_rank(rho) <= 2
        assert np.allclose(r.projection @ rho, rho, atol=1e-10)

    @given(st.integers(2, 4), st.integers(0, 2), seeds, st.floats(0.3, 2.0))
    def test_rank_matches_evolved_state(self, d, m, seed, t):
        rng = np.random.default_rng(seed)
        model = random_model(d, m, rng)
        xi = unit(rng, d)
        rho = evolve_state(model, np.outer(xi, xi.conj()), t)
        assert support_projection(model, xi, t).rank == state_rank(rho)

    def test_time_must_be_positive(self):
        with pytest.raises(InvalidTime):
            support_projection(catalog.pauli(), np.array([1, 0]), 0.0)


class TestInvariantStates:
    def test_so3_maximally_mixed(self):
        r = invariant_states(catalog.so3())
        assert r.unique and r.faithful
        assert np.allclose(r.state, np.eye(3) / 3, atol=1e-12)

    def test_pauli_maximally_mixed(self):
        r = invariant_states(catalog.pauli())
        assert np.allclose(r.state, np.eye(2) / 2, atol=1e-12)

    def test_damping_not_faithful(self):
        r = invariant_states(DAMPING)
        assert r.unique and not r.faithful and not r.faithful_exists
        assert np.allclose(r.state, np.diag([1.0, 0.0]), atol=1e-12)

    def test_pure_hamiltonian_degenerate(self):
        r = invariant_states(catalog.pure_hamiltonian())
        assert r.kernel_dim == 2 and not r.unique and r.faithful_exists
        assert np.allclose(r.max_support_state, np.eye(2) / 2)

    def test_fixed_points(self):
        assert fixed_points(catalog.so3()).dim == 1
        fp = fixed_points(catalog.pure_hamiltonian())
        assert fp.dim == 2 and not fp.trivial

    def test_decoherence_free(self):
        assert decoherence_free_trivial(catalog.so3())
        assert decoherence_free_trivial(catalog.pauli())
        assert not decoherence_free_trivial(catalog.pure_hamiltonian())
        with pytest.raises(NotApplicable):
            decoherence_free_trivial(DAMPING)

    def test_commutant(self):
        assert commutant_dim([], 3) == 9
        assert commutant_dim([catalog.SIGMA3], 2) == 2
        assert commutant_dim([catalog.SIGMA1, catalog.SIGMA3], 2) == 1


class TestLarc:
    def test_so3_fails_at_e1(self):
        r = larc_check(catalog.so3())
        assert r.verdict == FAILS_AT
        assert r.lie_dim == 3
        assert np.allclose(r.witness, E[0])
        man = larc_manifold(catalog.so3(), E[0])
        assert man.complex_dim == 2 and man.real_dim == 2

    def test_so3_all_basis_vectors(self):
        assert [larc_manifold(catalog.so3(), E[k]).complex_dim for k in range(3)] == [2, 2, 2]

    def test_pauli_holds(self):
        r = larc_check(catalog.pauli())
        assert r.verdict == HOLDS and r.caveat

    def test_pure_hamiltonian_fails(self):
        assert larc_check(catalog.pure_hamiltonian()).verdict == FAILS_AT

    def test_nonminimal_representation_satisfies_rank_off_eigenvectors(self, rng):
        nm = catalog.pure_hamiltonian_nonminimal()
        assert larc_manifold(nm, unit(rng, 2)).complex_dim == 2
        assert larc_manifold(nm, np.array([1, 0])).complex_dim == 1

    def test_report_dict(self):
        d = larc_check(catalog.so3()).as_dict()
        assert d["verdict"] == FAILS_AT and d["lie_dim_real"] == 3
