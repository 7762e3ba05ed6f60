import io
import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from qmsirr import catalog
from qmsirr.errors import BoundTooLoose, GridError, InvalidTime, NotAntiSelfAdjoint, ZeroVector
from qmsirr.gksl import LindbladModel, block_reducible_model, random_model, stratonovich_drift
from qmsirr.sse import (
    EULER_MARUYAMA,
    EXPONENTIAL_EULER,
    TrajectoryConfig,
    chaos_isometry_check,
    ensemble_summary,
    estimate_density,
    mean_square_norm,
    pathwise_norm_drift,
    read_trajectory_csv,
    scheme_density,
    simulate_ito,
    simulate_wong_zakai,
    totality_test,
    verify_representation,
    wiener_increments,
    wong_zakai_convergence,
    write_trajectory_csv,
)

E0 = np.array([1, 0], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


def dephasing():
    return LindbladModel(np.zeros((2, 2)), (catalog.SIGMA3,))


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(t_final=0.0), dict(t_final=-1.0), dict(steps=0), dict(n_traj=0),
                                    dict(scheme="rk4"), dict(save_every=0)])
    def test_rejects(self, kw):
        base = dict(t_final=1.0, steps=10, n_traj=4)
        base.update(kw)
        with pytest.raises((ValueError, InvalidTime)):
            TrajectoryConfig(**base)

    def test_save_indices_include_final(self):
        cfg = TrajectoryConfig(1.0, 10, 1, save_every=3)
        assert list(cfg.save_indices()) == [0, 3, 6, 9, 10]
        assert list(TrajectoryConfig(1.0, 4, 1).save_indices()) == [0, 1, 2, 3, 4]

    def test_zero_xi(self):
        with pytest.raises(ZeroVector):
            simulate_ito(catalog.pauli(), np.zeros(2), TrajectoryConfig(1.0, 10, 2))


class TestSimulation:
    def test_first_sample_is_xi(self, rng):
        model = random_model(3, 2, rng)
        xi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        ens = simulate_ito(model, xi, TrajectoryConfig(0.5, 20, 7, save_every=5))
        assert np.array_equal(ens.samples[:, 0], np.tile(xi, (7, 1)))
        assert np.allclose(ens.times, [0, 0.125, 0.25, 0.375, 0.5])

    def test_zero_generator_is_constant(self):
        model = LindbladModel(np.zeros((2, 2)), ())
        ens = simulate_ito(model, PLUS, TrajectoryConfig(1.0, 50, 3))
        assert np.array_equal(ens.samples, np.broadcast_to(PLUS, ens.samples.shape))

    def test_no_noise_is_exact_unitary(self):
        model = catalog.pure_hamiltonian()
        ens = simulate_ito(model, PLUS, TrajectoryConfig(1.3, 100, 4))
        exact = scipy.linalg.expm(-1j * 1.3 * catalog.SIGMA3) @ PLUS
        assert np.allclose(ens.samples[:, -1], exact, atol=1e-12)
        assert mean_square_norm(ens).std_error < 1e-14

    def test_reproducible_across_workers_and_chunks(self, monkeypatch, rng):
        import qmsirr.sse as sse

        model = random_model(2, 1, rng)
        cfg = TrajectoryConfig(0.5, 40, 50, master_seed=11)
        a = simulate_ito(model, E0, cfg).samples
        monkeypatch.setattr(sse, "_CHUNK", 7)
        b = simulate_ito(model, E0, cfg.replace(n_workers=3)).samples
        c = simulate_ito(model, E0, cfg).samples
        assert np.array_equal(a, b)
        assert np.array_equal(a, c)

    def test_seed_changes_paths(self):
        cfg = TrajectoryConfig(0.5, 40, 5)
        a = simulate_ito(catalog.pauli(), E0, cfg).samples
        b = simulate_ito(catalog.pauli(), E0, cfg.replace(master_seed=1)).samples
        assert not np.allclose(a, b)

    @pytest.mark.parametrize("scheme", [EULER_MARUYAMA, EXPONENTIAL_EULER])
    def test_single_step_uses_stream(self, scheme, rng):
        model = random_model(3, 2, rng)
        cfg = TrajectoryConfig(0.1, 1, 3, master_seed=5, scheme=scheme)
        xi = np.array([1, 0, 0], dtype=complex)
        ens = simulate_ito(model, xi, cfg)
        G = -0.5 * sum(L.conj().T @ L for L in model.Ls) - 1j * model.H
        for j in range(3):
            dw = wiener_increments(5, j, 1, 2, 0.1)[0]
            noise = sum(w * L for w, L in zip(dw, model.Ls))
            if scheme == EULER_MARUYAMA:
                x = xi + 0.1 * G @ xi + noise @ xi
            else:
                x = scipy.linalg.expm(0.1 * G) @ (xi + noise @ xi)
            assert np.allclose(ens.samples[j, -1], x, atol=1e-12)


class TestEstimators:
    def test_t0_density_exact(self):
        ens = simulate_ito(catalog.pauli(), PLUS, TrajectoryConfig(1.0, 10, 20))
        est = estimate_density(ens, 0)
        assert np.allclose(est.value, np.outer(PLUS, PLUS.conj()))
        assert np.all(est.std_error == 0)

    def test_scheme_density_converges(self):
        model = dephasing()
        exact = np.array([[0.5, 0.5 * np.exp(-2.0)], [0.5 * np.exp(-2.0), 0.5]])
        errs = [np.linalg.norm(scheme_density(model, PLUS, 1.0, n, EULER_MARUYAMA) - exact) for n in (50, 100)]
        assert errs[1] < errs[0] < 1e-2
        assert 1.7 < errs[0] / errs[1] < 2.3

    def test_dephasing_representation(self):
        model = dephasing()
        rep = verify_representation(model, PLUS, 1.0, TrajectoryConfig(1.0, 200, 4000, master_seed=3))
        assert rep.passed, rep.line()
        assert rep.line().startswith("PASS representation t=1")
        d = rep.as_dict()
        assert {"distance", "std_error_term", "bias_budget"} <= set(d)

    def test_single_trajectory_plumbing(self):
        rep = verify_representation(catalog.pure_hamiltonian(), PLUS, 0.7, TrajectoryConfig(0.7, 50, 1))
        assert rep.std_error_term == 0.0
        assert rep.distance < 1e-12
        assert rep.passed

    def test_mean_square_norm_pauli(self):
        ens = simulate_ito(catalog.pauli(), E0, TrajectoryConfig(1.0, 200, 2000, master_seed=2))
        est = mean_square_norm(ens)
        assert abs(est.value - 1.0) <= 4 * est.std_error + 5e-3


class TestTotality:
    def test_irreducible_is_total(self):
        res = totality_test(catalog.pauli(), E0, 1.0, TrajectoryConfig(1.0, 100, 2000))
        assert res.total and res.exact_reference > 0.1

    def test_hamiltonian_eigenvector_not_total(self):
        res = totality_test(catalog.pure_hamiltonian(), E0, 1.0, TrajectoryConfig(1.0, 50, 200))
        assert not res.total
        assert abs(res.exact_reference) < 1e-12

    def test_inside_invariant_subspace(self):
        rng = np.random.default_rng(4)
        model, V = block_reducible_model(3, 1, 1, rng)
        res = totality_test(model, V[:, 0], 0.5, TrajectoryConfig(0.5, 100, 2000))
        assert not res.total
        assert res.exact_reference < 1e-10

    def test_time_must_be_positive(self):
        with pytest.raises(InvalidTime):
            totality_test(catalog.pauli(), E0, 0.0, TrajectoryConfig(1.0, 10, 10))


class TestNormDrift:
    def test_halving_ratio(self):
        ratios = []
        for seed in range(5):
            cfg = TrajectoryConfig(1.0, 1000, 200, seed, EULER_MARUYAMA)
            a = pathwise_norm_drift(simulate_ito(catalog.pauli(), E0, cfg))
            b = pathwise_norm_drift(simulate_ito(catalog.pauli(), E0, cfg.replace(steps=2000)))
            ratios.append(a / b)
        assert 1.2 <= np.median(ratios) <= 3.0

    def test_requires_anti_selfadjoint(self):
        ens = simulate_ito(dephasing(), E0, TrajectoryConfig(1.0, 10, 2))
        with pytest.raises(NotAntiSelfAdjoint):
            pathwise_norm_drift(ens)


class TestWongZakai:
    def test_no_noise_exact(self):
        model = catalog.pure_hamiltonian()
        inc = np.zeros((100, 0))
        X = simulate_wong_zakai(model, PLUS, inc, 1.0, 10)
        t = np.linspace(0, 1, 101)
        exact = np.array([scipy.linalg.expm(-1j * s * catalog.SIGMA3) @ PLUS for s in t])
        assert np.allclose(X, exact, atol=1e-12)

    def test_commuting_closed_form_at_nodes(self):
        model = LindbladModel(np.diag([0.3, -0.7]), (np.diag([1.0, 0.5j]),))
        inc = wiener_increments(9, 0, 400, 1, 1.0 / 400)
        n = 20
        X = simulate_wong_zakai(model, PLUS, inc, 1.0, n)
        Gt = stratonovich_drift(model)
        W = np.concatenate([[0.0], np.cumsum(inc[:, 0])])
        for k in range(n + 1):
            i = k * 20
            exact = scipy.linalg.expm(i / 400 * Gt + W[i] * model.Ls[0]) @ PLUS
            assert np.allclose(X[i], exact, atol=1e-8)

    def test_pauli_norm_preserved(self):
        inc = wiener_increments(1, 0, 1000, 1, 1e-3)
        X = simulate_wong_zakai(catalog.pauli(), E0, inc, 1.0, 10)
        assert np.max(np.abs(np.linalg.norm(X, axis=1) - 1)) < 1e-10

    def test_batched_matches_single(self, rng):
        model = random_model(2, 2, rng)
        inc = rng.standard_normal((3, 60, 2)) * 0.1
        batch = simulate_wong_zakai(model, E0, inc, 1.0, 6)
        for p in range(3):
            assert np.allclose(batch[p], simulate_wong_zakai(model, E0, inc[p], 1.0, 6))

    @pytest.mark.parametrize("steps,t,n", [(100, 1.0, 3), (100, 0.25, 2), (100, 1.0, 0)])
    def test_grid_errors(self, steps, t, n):
        with pytest.raises(GridError):
            simulate_wong_zakai(catalog.pauli(), E0, np.zeros((steps, 1)), t, n)

    def test_wrong_noise_count(self):
        with pytest.raises(GridError):
            simulate_wong_zakai(catalog.pauli(), E0, np.zeros((100, 2)), 1.0, 10)

    def test_convergence_without_noise_is_zero(self):
        res = wong_zakai_convergence(catalog.pure_hamiltonian(), PLUS, 0.5, [10, 40], 3, fine_steps=400)
        assert max(res.median_errors) < 1e-12

    def test_commuting_convergence(self):
        model = LindbladModel(np.diag([0.3, -0.7]), (np.diag([1.0, 0.5j]),))
        res = wong_zakai_convergence(model, PLUS, 0.5, [10, 40, 160], 20, fine_steps=2000,
                                     reference="exact_commuting")
        assert res.strictly_decreasing
        assert res.median_errors[-1] <= res.median_errors[0] / 3
        assert res.as_dict()["strictly_decreasing"]

    def test_exact_commuting_rejects_noncommuting(self):
        with pytest.raises(ValueError):
            wong_zakai_convergence(catalog.pauli(), E0, 0.5, [10], 2, fine_steps=100, reference="exact_commuting")


class TestChaos:
    def test_pauli_terms(self):
        t = 0.4
        res = chaos_isometry_check(catalog.pauli(), E0, t, 5, mc_samples=20_000)
        oracle = [math.exp(-t) * t ** k / math.factorial(k) for k in range(6)]
        assert np.allclose(res.terms[:4], oracle[:4], rtol=1e-10, atol=1e-14)
        for k in (4, 5):
            assert abs(res.terms[k] - oracle[k]) < 1e-10
        assert res.passed and not res.inconclusive

    def test_no_noise_order_zero(self):
        res = chaos_isometry_check(catalog.pure_hamiltonian(), PLUS, 1.0, 0)
        assert res.partial_sum == pytest.approx(1.0, abs=1e-12)
        assert res.bound == 0.0 and res.passed

    def test_bound_too_loose_warns(self):
        with pytest.warns(BoundTooLoose):
            res = chaos_isometry_check(catalog.pauli(), E0, 3.0, 1)
        assert res.inconclusive and not res.passed

    def test_order_limits(self):
        with pytest.raises(ValueError):
            chaos_isometry_check(catalog.pauli(), E0, 0.3, 6)
        with pytest.raises(ValueError):
            chaos_isometry_check(catalog.pauli(), E0, 0.3, -1)

    @given(st.integers(0, 2**31 - 1))
    def test_partial_sums_increase_to_norm(self, seed):
        rng = np.random.default_rng(seed)
        model = random_model(2, 1, rng, scale=0.5)
        xi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        res = chaos_isometry_check(model, xi, 0.2, 3)
        assert np.all(np.diff(res.partial_sums) >= -1e-14)
        assert res.partial_sums[-1] <= np.vdot(xi, xi).real * (1 + 1e-9)


class TestExport:
    def test_csv_round_trip(self, rng):
        model = random_model(3, 1, rng)
        ens = simulate_ito(model, np.array([1, 1j, 0]), TrajectoryConfig(1.0, 20, 6, save_every=5))
        buf = io.StringIO()
        write_trajectory_csv(ens, buf, max_traj=4)
        buf.seek(0)
        assert buf.readline().strip() == "traj_id,step,t,re_0,im_0,re_1,im_1,re_2,im_2"
        buf.seek(0)
        ids, steps, t, X = read_trajectory_csv(buf)
        assert ids.tolist() == sum([[j] * 5 for j in range(4)], [])
        assert steps.tolist()[:5] == [0, 5, 10, 15, 20]
        assert np.array_equal(X.reshape(4, 5, 3), ens.samples[:4])
        assert np.array_equal(t[:5], ens.times)

    def test_summary_is_json(self):
        ens = simulate_ito(catalog.pauli(), E0, TrajectoryConfig(1.0, 10, 5, save_every=5))
        s = json.loads(json.dumps(ensemble_summary(ens)))
        assert [p["t"] for p in s["times"]] == [0.0, 0.5, 1.0]
        assert s["times"][0]["mean_square_norm"] == 1.0
