import numpy as np
import pytest

from oscnav import (EmptyProtocol, Protocol, fd_gradient, fd_hessian, gradient,
                    hessian, infidelity, optimal_hessian, step_matrix,
                    step_matrix_d1, step_matrix_d2)


def random_protocol(rng, m, dt_range=(0.05, 0.5), omega_range=(0.1, 2.0)):
    return Protocol(1.0, 0.25, float(rng.uniform(*dt_range)),
                    tuple(rng.uniform(*omega_range, m)))


def rel_maxnorm_error(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


class TestStepMatrixDerivatives:
    def test_d1_matches_symbolic_zero_at_origin(self):
        # dA/domega of an even matrix function vanishes at omega = 0
        assert np.max(np.abs(step_matrix_d1(0.0, 0.5))) == 0.0

    def test_d1_frozen_entry(self):
        assert step_matrix_d1(0.5, 1.8)[1, 0] == pytest.approx(-1.3427758810710815,
                                                               abs=1e-15)

    def test_d1_odd_in_omega(self):
        for w in (1e-6, 1e-3, 0.5, 2.0):
            a, b = step_matrix_d1(w, 0.7), step_matrix_d1(-w, 0.7)
            assert np.array_equal(a, -b)

    def test_d1_vs_finite_differences(self):
        h = 1e-6
        rng = np.random.default_rng(1)
        for _ in range(40):
            w, dt = float(rng.uniform(-2, 2)), float(rng.uniform(0.05, 1.8))
            fd = (step_matrix(w + h, dt) - step_matrix(w - h, dt)) / (2 * h)
            assert np.max(np.abs(step_matrix_d1(w, dt) - fd)) < 1e-7

    def test_d2_diagonal_closed_form(self):
        assert step_matrix_d2(0.0, 0.5)[0, 0] == pytest.approx(-0.25, abs=1e-16)
        assert step_matrix_d2(0.8, 1.1)[0, 0] == pytest.approx(
            -1.21 * np.cos(0.88), abs=1e-15)

    def test_d2_even_in_omega(self):
        for w in (1e-6, 1e-3, 0.5, 2.0):
            assert np.array_equal(step_matrix_d2(w, 0.7), step_matrix_d2(-w, 0.7))

    def test_d2_vs_second_differences(self):
        h = 1e-4
        for w, dt in ((0.5, 1.8), (0.0, 0.4), (1.3, 0.2), (-0.7, 0.9)):
            fd = (step_matrix(w + h, dt) - 2 * step_matrix(w, dt)
                  + step_matrix(w - h, dt)) / (h * h)
            scale = np.max(np.abs(fd))
            assert np.max(np.abs(step_matrix_d2(w, dt) - fd)) < 1e-6 * max(scale, 1.0)

    def test_series_branch_continuity(self):
        dt = 1.0
        for builder in (step_matrix_d1, step_matrix_d2):
            below = builder(0.0099, dt)
            above = builder(0.0101, dt)
            assert np.max(np.abs(below - above)) < 5e-3  # smooth across threshold
            mid_lo = builder(0.0099999, dt)
            mid_hi = builder(0.0100001, dt)
            assert np.max(np.abs(mid_lo - mid_hi)) < 1e-6


class TestGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(100)
        for m in (8, 16, 48):
            for _ in range(4):
                p = random_protocol(rng, m)
                bundle = gradient(p)
                gi_fd, gb_fd = fd_gradient(p, 1e-6)
                assert rel_maxnorm_error(bundle.grad_infidelity, gi_fd) < 1e-6
                assert rel_maxnorm_error(bundle.grad_beta, gb_fd) < 1e-6

    def test_zero_beta_forces_zero_infidelity_gradient(self):
        p = Protocol(1.0, 1.0, 0.3, (1.0,) * 6)
        bundle = gradient(p)
        assert np.max(np.abs(bundle.grad_infidelity)) < 1e-14

    def test_sign_flip_negates_single_component(self):
        rng = np.random.default_rng(4)
        w = rng.uniform(0.2, 2, 6)
        p = Protocol(1.0, 0.25, 0.3, tuple(w))
        g0 = gradient(p).grad_beta
        k = 2
        w2 = w.copy()
        w2[k] = -w2[k]
        g1 = gradient(p.with_omegas(w2)).grad_beta
        assert abs(g0[k] + g1[k]) < 1e-13
        mask = np.arange(6) != k
        assert np.max(np.abs(g0[mask] - g1[mask])) < 1e-13

    def test_rejects_empty(self):
        with pytest.raises(EmptyProtocol):
            gradient(Protocol(1.0, 0.25, 0.6, ()))


class TestHessian:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(200)
        for m in (2, 4, 8):
            for _ in range(4):
                p = random_protocol(rng, m)
                bundle = hessian(p)
                h_fd = fd_hessian(p, 1e-4)
                assert rel_maxnorm_error(bundle.hess_infidelity, h_fd) < 1e-4

    def test_symmetry(self):
        rng = np.random.default_rng(201)
        p = random_protocol(rng, 12)
        bundle = hessian(p)
        assert np.max(np.abs(bundle.hess_infidelity - bundle.hess_infidelity.T)) < 1e-12
        assert np.max(np.abs(bundle.hess_beta - bundle.hess_beta.T)) < 1e-12

    def test_gradient_consistency(self):
        rng = np.random.default_rng(202)
        p = random_protocol(rng, 10)
        full = hessian(p)
        first = gradient(p)
        assert np.allclose(full.grad_beta, first.grad_beta, rtol=0, atol=1e-15)
        assert np.allclose(full.grad_infidelity, first.grad_infidelity,
                           rtol=0, atol=1e-15)


class TestOptimalHessian:
    def test_zero_gradient_gives_zero_matrix(self):
        assert np.all(optimal_hessian(np.zeros(5, dtype=complex)) == 0.0)

    def test_real_gradient_gives_rank_one(self):
        gb = np.array([0.3, -1.2, 0.7], dtype=complex)
        eigs = np.linalg.eigvalsh(optimal_hessian(gb))
        assert np.sum(np.abs(eigs) > 1e-12 * np.max(np.abs(eigs))) == 1

    def test_rank_at_most_two(self):
        rng = np.random.default_rng(33)
        gb = rng.normal(size=48) + 1j * rng.normal(size=48)
        eigs = np.sort(np.linalg.eigvalsh(optimal_hessian(gb)))[::-1]
        assert eigs[2] / eigs[0] < 1e-12

    def test_exactly_symmetric(self):
        rng = np.random.default_rng(34)
        gb = rng.normal(size=9) + 1j * rng.normal(size=9)
        h = optimal_hessian(gb)
        assert np.array_equal(h, h.T)


class TestFiniteDifferenceOracles:
    def test_fd_gradient_zero_at_resonance(self):
        p = Protocol(1.0, 1.0, 0.3, (1.0,) * 5)
        gi, _ = fd_gradient(p, 1e-6)
        assert np.max(np.abs(gi)) < 1e-10

    def test_fd_hessian_symmetric(self):
        rng = np.random.default_rng(55)
        p = random_protocol(rng, 4)
        h = fd_hessian(p, 1e-4)
        assert np.array_equal(h, h.T)

    def test_rejects_bad_step(self):
        p = Protocol(1.0, 0.25, 0.6, (1.0,))
        with pytest.raises(ValueError):
            fd_gradient(p, 0.0)


class TestQuarticScaling:
    def test_null_direction_quartic_and_gradient_direction_quadratic(self):
        # polished solution of the expansion task, frozen from a seeded solve
        from oscnav import DescentConfig, solve
        res = solve(DescentConfig(seed=5, grad_tolerance=1e-12), 8, (1.0, 0.25, 1.8))
        p = res.protocol
        assert infidelity(p) < 1e-20
        gb = gradient(p).grad_beta
        eigvals, eigvecs = np.linalg.eigh(optimal_hessian(gb))
        null_dir = eigvecs[:, 0]
        base = np.asarray(p.omegas)
        eps = np.array([1e-1, 1e-2, 1e-3])
        vals = np.array([infidelity(p.with_omegas(base + e * null_dir)) for e in eps])
        slope = np.polyfit(np.log(eps), np.log(vals), 1)[0]
        assert slope == pytest.approx(4.0, abs=0.3)
        grad_dir = np.real(gb) / np.linalg.norm(np.real(gb))
        vals2 = np.array([infidelity(p.with_omegas(base + e * grad_dir)) for e in eps])
        slope2 = np.polyfit(np.log(eps), np.log(vals2), 1)[0]
        assert slope2 == pytest.approx(2.0, abs=0.2)
