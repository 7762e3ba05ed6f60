import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmsirr import catalog
from qmsirr.errors import DimError, InvalidTime, ParseError, ValidationError
from qmsirr.gksl import (
    HEISENBERG,
    SCHRODINGER,
    LindbladModel,
    apply_generator,
    apply_generator_dissipator_form,
    block_reducible_model,
    check_minimal,
    drift,
    evolve_state,
    fingerprint,
    generators_close,
    minimalize,
    model_from_json,
    model_to_json,
    random_model,
    stratonovich_drift,
    superoperator,
    unvec,
    vec,
)

seeds = st.integers(0, 2 ** 32 - 1)
dims = st.integers(1, 4)
counts = st.integers(0, 3)


def rand_mat(rng, d):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def rand_state(rng, d):
    A = rand_mat(rng, d)
    rho = A @ A.conj().T
    return rho / np.trace(rho)


class TestModel:
    def test_rejects_non_hermitian_and_names_entries(self):
        H = np.array([[0, 1], [0, 0]], dtype=complex)
        with pytest.raises(ValidationError, match=r"\(0, 1\)"):
            LindbladModel(H)

    def test_shape_checks(self):
        with pytest.raises(DimError):
            LindbladModel(np.zeros((2, 3)))
        with pytest.raises(DimError):
            LindbladModel(np.zeros((2, 2)), (np.zeros((3, 3)),))

    def test_nonfinite(self):
        with pytest.raises(ValidationError):
            LindbladModel(np.array([[np.nan]]))

    def test_immutable(self):
        m = catalog.pauli()
        with pytest.raises(ValueError):
            m.H[0, 0] = 2

    def test_drift_of_so3_matches_display(self):
        assert np.max(np.abs(drift(catalog.so3()) - catalog.SO3_G)) <= 1e-12

    def test_stratonovich_drift(self):
        # anti-selfadjoint L: the correction cancels the dissipative part of G
        assert np.allclose(stratonovich_drift(catalog.pauli()), -1j * catalog.SIGMA3)
        assert np.allclose(stratonovich_drift(catalog.so3()), -1j * catalog.SO3_H)

    def test_m_zero_drift(self):
        m = catalog.pure_hamiltonian()
        assert np.allclose(drift(m), -1j * catalog.SIGMA3)
        assert np.allclose(stratonovich_drift(m), drift(m))


class TestGenerator:
    @given(dims, counts, seeds)
    def test_two_forms_agree(self, d, m, seed):
        rng = np.random.default_rng(seed)
        model = random_model(d, m, rng)
        x = rand_mat(rng, d)
        a = apply_generator(model, x)
        b = apply_generator_dissipator_form(model, x)
        assert np.linalg.norm(a - b) <= 1e-12 * max(1.0, np.linalg.norm(a))

    @given(dims, counts, seeds)
    def test_superoperator_matches_direct_evaluation(self, d, m, seed):
        rng = np.random.default_rng(seed)
        model = random_model(d, m, rng)
        x = rand_mat(rng, d)
        for mode in (HEISENBERG, SCHRODINGER):
            S = superoperator(model, mode).matrix
            direct = apply_generator(model, x, mode)
            assert np.linalg.norm(unvec(S @ vec(x), d) - direct) <= 1e-12 * max(1.0, np.linalg.norm(direct))

    @given(dims, counts, seeds)
    def test_duality_and_conservation(self, d, m, seed):
        rng = np.random.default_rng(seed)
        model = random_model(d, m, rng)
        x, rho = rand_mat(rng, d), rand_mat(rng, d)
        lhs = np.trace(rho @ apply_generator(model, x, HEISENBERG))
        rhs = np.trace(apply_generator(model, rho, SCHRODINGER) @ x)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))
        # unital in the Heisenberg picture, trace preserving in the Schrodinger picture
        assert np.linalg.norm(apply_generator(model, np.eye(d))) <= 1e-12 * max(1.0, np.linalg.norm(model.H))
        assert abs(np.trace(apply_generator(model, rho, SCHRODINGER))) <= 1e-10 * max(1.0, np.linalg.norm(rho))

    def test_vec_is_column_stacking(self):
        x = np.array([[1, 2], [3, 4]])
        assert list(vec(x)) == [1, 3, 2, 4]
        assert np.array_equal(unvec(vec(x)), x)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            superoperator(catalog.pauli(), "sideways")


class TestEvolve:
    @given(dims, counts, seeds, st.floats(0.0, 3.0))
    def test_state_stays_a_state(self, d, m, seed, t):
        rng = np.random.default_rng(seed)
        model = random_model(d, m, rng)
        out = evolve_state(model, rand_state(rng, d), t)
        assert abs(np.trace(out) - 1) < 1e-10
        assert np.allclose(out, out.conj().T)
        assert np.linalg.eigvalsh(out)[0] > -1e-10

    def test_time_zero_is_identity(self, rng):
        rho = rand_state(rng, 3)
        assert np.allclose(evolve_state(catalog.so3(), rho, 0.0), rho)

    def test_negative_time(self):
        with pytest.raises(InvalidTime):
            evolve_state(catalog.pauli(), np.eye(2) / 2, -1.0)

    def test_unitary_closed_form(self):
        t = 0.8
        rho = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        U = np.diag(np.exp(-1j * t * np.array([1.0, -1.0])))
        out = evolve_state(catalog.pure_hamiltonian(), rho, t)
        assert np.allclose(out, U @ rho @ U.conj().T, atol=1e-13)

    def test_dephasing_closed_form(self):
        # L = sigma_z: coherences decay as exp(-2t)
        model = LindbladModel(np.zeros((2, 2)), (catalog.SIGMA3,))
        rho = np.full((2, 2), 0.5, dtype=complex)
        for t in (0.1, 1.0, 3.0):
            out = evolve_state(model, rho, t)
            assert abs(out[0, 1] - 0.5 * np.exp(-2 * t)) < 1e-13
            assert abs(out[0, 0] - 0.5) < 1e-13


class TestMinimality:
    def test_pure_hamiltonian_is_minimal(self):
        assert check_minimal(catalog.pure_hamiltonian()) == (True, None)

    def test_redundant_identity_flagged(self):
        z = 0.5j
        model = LindbladModel(catalog.SIGMA3, (z * np.eye(2),))
        ok, c = check_minimal(model)
        assert not ok
        assert np.linalg.norm(c[0] * np.eye(2) + c[1] * model.Ls[0]) < 1e-12
        # witness is proportional to (z, -1)
        assert abs(c[0] / c[1] + z) < 1e-12

    def test_dependent_pair(self, rng):
        L = rand_mat(rng, 2)
        model = LindbladModel(np.zeros((2, 2)), (L, 2 * L))
        ok, c = check_minimal(model)
        assert not ok
        assert np.linalg.norm(c[0] * np.eye(2) + c[1] * L + c[2] * 2 * L) < 1e-12

    @given(dims, st.integers(1, 3), seeds)
    def test_minimalize_preserves_generator(self, d, m, seed):
        rng = np.random.default_rng(seed)
        base = random_model(d, m, rng)
        # add identity components and a duplicated operator
        Ls = [L + complex(*rng.standard_normal(2)) * np.eye(d) for L in base.Ls]
        Ls.append(0.3 * Ls[0] + 0.7j * np.eye(d))
        model = LindbladModel(base.H, tuple(Ls))
        mini = minimalize(model)
        assert check_minimal(mini)[0]
        assert mini.m <= min(m, d * d - 1)
        assert generators_close(model, mini) <= 1e-10
        for L in mini.Ls:
            assert abs(np.trace(L)) < 1e-10 * max(1.0, np.linalg.norm(L))

    def test_nonminimal_example_reduces_to_m0(self):
        nm = catalog.pure_hamiltonian_nonminimal()
        mini = minimalize(nm)
        assert mini.m == 0
        assert generators_close(nm, mini) <= 1e-10
        assert np.allclose(mini.H, catalog.SIGMA3)

    def test_identity_shift_sign(self):
        # L = A + c I with traceless A: H must absorb (c A* - conj(c) A)/(2i)
        A = np.array([[0, 1], [0, 0]], dtype=complex)
        c = 0.4 + 0.3j
        model = LindbladModel(np.zeros((2, 2)), (A + c * np.eye(2),))
        mini = minimalize(model)
        expected = (c * A.conj().T - np.conj(c) * A) / 2j
        assert np.allclose(mini.H, expected)
        assert generators_close(model, mini) <= 1e-12


class TestSerialisation:
    @given(dims, counts, seeds)
    def test_round_trip_exact(self, d, m, seed):
        model = random_model(d, m, np.random.default_rng(seed))
        back = model_from_json(model_to_json(model))
        assert np.array_equal(back.H, model.H)
        assert all(np.array_equal(a, b) for a, b in zip(back.Ls, model.Ls))
        assert fingerprint(back) == fingerprint(model)

    def test_canonical_form(self):
        text = model_to_json(catalog.pauli())
        assert " " not in text
        data = json.loads(text)
        assert list(data) == sorted(data)
        assert data["H"][0][0] == [1.0, 0.0]

    def test_fingerprint_distinguishes(self):
        assert fingerprint(catalog.pauli()) != fingerprint(catalog.pure_hamiltonian())

    def test_trivial_model(self):
        m = model_from_json('{"dim": 1, "H": [[[0, 0]]], "L": []}')
        assert (m.d, m.m) == (1, 0)

    def test_malformed_json_reports_position(self):
        with pytest.raises(ParseError, match="line 2"):
            model_from_json('{"dim": 1,\n "H": [[[0, 0]]],, }')

    def test_missing_field(self):
        with pytest.raises(ParseError, match="'H'"):
            model_from_json('{"dim": 1}')

    def test_bad_shape(self):
        with pytest.raises(ParseError, match="L\\[0\\]"):
            model_from_json('{"dim": 1, "H": [[[0, 0]]], "L": [[[[1, 0], [0, 0]]]]}')

    def test_non_hermitian(self):
        with pytest.raises(ValidationError):
            model_from_json('{"dim": 2, "H": [[[0,0],[1,0]],[[0,0],[0,0]]]}')


class TestReducibleConstruction:
    @given(st.integers(2, 5), st.integers(1, 3), seeds)
    def test_subspace_is_invariant(self, d, m, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, d))
        model, V = block_reducible_model(d, m, k, rng)
        P = V @ V.conj().T
        for A in [drift(model), *model.Ls]:
            assert np.linalg.norm((np.eye(d) - P) @ A @ V) < 1e-12
