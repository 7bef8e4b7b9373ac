import math

import numpy as np
import pytest

from molalab import games, hrde
from molalab.errors import DivergenceError, InvalidRangeError, UnsupportedGameError
from molalab.games import GameKind, LinearGame


def scalar_bilinear(a=1.0):
    return LinearGame(GameKind.BILINEAR, 1, [[a]], 0.0, 0.0, 1.0, 0)


def symmetric_psd_bilinear(eigs=(0.7, 1.3), seed=4):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((len(eigs), len(eigs))))
    a = (q * np.array(eigs)) @ q.T
    return LinearGame(GameKind.BILINEAR, len(eigs), a, 0.0, 0.0, 0.0, seed)


class TestRhs:
    def test_equilibrium(self):
        game = games.make_bilinear(3, 1.0, 0)
        acc = hrde.la_hrde_rhs(game, np.zeros(6), np.zeros(6), 0.01, 4, 0.5)
        assert np.all(acc == 0.0)

    def test_k_one_has_no_correction(self):
        game = games.make_bilinear(3, 1.0, 1)
        rng = np.random.default_rng(0)
        z, v = rng.standard_normal(6), rng.standard_normal(6)
        acc = hrde.la_hrde_rhs(game, z, v, 0.02, 1, 0.7)
        f = games.field_array(game, z)
        assert np.allclose(acc, -(2 / 0.02) * v - (2 * 0.7 / 0.02) * f, atol=1e-12)

    def test_hand_value_scalar(self):
        # coefficients (-2 k alpha / gamma, k(k-1) alpha) = (-200, 1)
        game = scalar_bilinear()
        acc = hrde.la_hrde_rhs(game, np.array([1.0, 0.0]), np.zeros(2),
                               0.01, 2, 0.5)
        assert np.allclose(acc, [-1.0, 200.0], atol=1e-12)

    def test_coefficient_table(self):
        # matrix oracle: -(2 k a / g) F + k(k-1) a JF F, k = 2..5
        game = games.make_quadratic_rot(3, 0.5, 2)
        jf = games.jacobian(game)
        rng = np.random.default_rng(1)
        z, v = rng.standard_normal(6), rng.standard_normal(6)
        f = games.field_array(game, z)
        for k in range(2, 6):
            acc = hrde.la_hrde_rhs(game, z, v, 0.05, k, 0.3)
            expected = (-(2 / 0.05) * v - (2 * k * 0.3 / 0.05) * f
                        + k * (k - 1) * 0.3 * (jf @ f))
            assert np.allclose(acc, expected, atol=1e-10)

    def test_closure_matches_direct(self):
        game = games.make_scsc(3, 0.2, 0.4, 0.1, 0.8, 5)
        rhs = hrde.make_la_rhs(game, 0.03, 4, 0.6)
        rng = np.random.default_rng(2)
        for _ in range(10):
            z, v = rng.standard_normal(6), rng.standard_normal(6)
            assert np.allclose(rhs(z, v), hrde.la_hrde_rhs(game, z, v, 0.03, 4, 0.6),
                               atol=1e-12)


class TestIntegrate:
    def test_exponential_decay(self):
        # z'' = -z' with z(0)=1, z'(0)=-1 has the exact solution e^{-t}
        sol = hrde.integrate(lambda z, v: -v, np.array([1.0]), np.array([-1.0]),
                             dt=1e-3, t_end=1.0)
        assert abs(sol.zs[-1, 0] - math.exp(-1.0)) < 1e-8

    def test_fourth_order_convergence(self):
        def err(dt):
            sol = hrde.integrate(lambda z, v: -v, np.array([1.0]),
                                 np.array([-1.0]), dt=dt, t_end=1.0)
            return abs(sol.zs[-1, 0] - math.exp(-1.0))
        ratio = err(0.05) / err(0.025)
        assert 12.0 <= ratio <= 20.0

    def test_gd_model_diverges_on_rotation(self):
        game = scalar_bilinear(a=10.0)
        rhs = hrde.make_gd_rhs(game, 0.1)
        z0, v0 = np.array([1.0, 0.0]), np.zeros(2)
        short = hrde.integrate(rhs, z0, v0, dt=1e-3, t_end=1.0)
        assert short.final_norm() > 1.0
        with pytest.raises(DivergenceError) as info:
            hrde.integrate(rhs, z0, v0, dt=1e-3, t_end=15.0)
        assert 0.0 < info.value.time <= 15.0

    def test_record_every_keeps_final(self):
        sol = hrde.integrate(lambda z, v: -v, np.array([1.0]), np.array([-1.0]),
                             dt=1e-2, t_end=1.0, record_every=7)
        assert sol.times[0] == 0.0
        assert sol.times[-1] == pytest.approx(1.0)

    def test_bad_steps_rejected(self):
        with pytest.raises(InvalidRangeError):
            hrde.integrate(lambda z, v: -v, np.zeros(1), np.zeros(1), 0.0, 1.0)


class TestModalFrequencies:
    def test_unit_eigenvalue(self):
        game = scalar_bilinear(a=1.0)
        om = hrde.bilinear_modal_frequencies(game, 0.01, 2, 0.4)
        assert abs(om[0] - math.sqrt(10000.0 - 0.8)) < 1e-9

    def test_no_correction_at_k_one(self):
        game = scalar_bilinear(a=3.0)
        om = hrde.bilinear_modal_frequencies(game, 0.01, 1, 0.9)
        assert om[0] == 100.0 + 0.0j

    def test_negative_eigenvalue_raises_frequency(self):
        game = scalar_bilinear(a=-500.0)
        om = hrde.bilinear_modal_frequencies(game, 0.01, 2, 0.4)
        assert om[0].imag == 0.0
        assert om[0].real > 100.0

    def test_rejects_non_bilinear(self):
        game = games.make_scsc(2, 0.1, 0.1, 0.2, 0.5, 0)
        with pytest.raises(UnsupportedGameError):
            hrde.bilinear_modal_frequencies(game, 0.01, 2, 0.4)


class TestSolutionResidual:
    def test_decoupled_matches_homogeneous_term(self):
        # with the cross-coupling dropped, each eigendirection is exactly
        # the damped homogeneous solution
        game = symmetric_psd_bilinear()
        gamma, k, alpha = 0.05, 3, 0.4
        lam, u = np.linalg.eigh(game.coupling)
        a2 = (u * lam**2) @ u.T
        damping, c2 = 2.0 / gamma, alpha * k * (k - 1)

        def rhs(z, v):
            x, y = z[:2], z[2:]
            return np.concatenate([-c2 * (a2 @ x), -c2 * (a2 @ y)]) - damping * v

        rng = np.random.default_rng(7)
        z0 = rng.standard_normal(4)
        sol = hrde.integrate(rhs, z0, np.zeros(4), dt=1e-4, t_end=0.3)
        x_eig = sol.zs[:, :2] @ u
        times = sol.times
        for i in range(2):
            om = complex(np.sqrt(complex(1 / gamma**2 - c2 * lam[i] ** 2)))
            ref = hrde.homogeneous_coordinate(om, x_eig[0, i], 0.0, gamma, times).real
            assert np.abs(x_eig[:, i] - ref).max() < 1e-6

    def test_full_trajectory_residual_small(self):
        game = symmetric_psd_bilinear()
        gamma, k, alpha = 0.05, 3, 0.4
        rhs = hrde.make_la_rhs(game, gamma, k, alpha)
        z0 = games.draw_start(game, 1.0).as_array()
        sol = hrde.integrate(rhs, z0, np.zeros(4), dt=1e-4, t_end=0.2)
        res = hrde.solution_residual(game, sol, gamma, k, alpha)
        assert res < 1e-4

    def test_residual_shrinks_with_grid(self):
        game = symmetric_psd_bilinear()
        gamma, k, alpha = 0.05, 3, 0.4
        rhs = hrde.make_la_rhs(game, gamma, k, alpha)
        z0 = games.draw_start(game, 1.0).as_array()

        def res(dt):
            sol = hrde.integrate(rhs, z0, np.zeros(4), dt=dt, t_end=0.2)
            return hrde.solution_residual(game, sol, gamma, k, alpha)

        assert res(2e-4) / res(1e-4) >= 3.0

    def test_rejects_non_uniform_grid(self):
        game = symmetric_psd_bilinear()
        sol = hrde.HRDESolution(
            times=np.array([0.0, 0.1, 0.3]),
            zs=np.zeros((3, 4)), vs=np.zeros((3, 4)), dt=0.1,
        )
        with pytest.raises(InvalidRangeError):
            hrde.solution_residual(game, sol, 0.05, 3, 0.4)

    def test_rejects_asymmetric_coupling(self):
        game = games.make_bilinear(2, 1.0, 3)
        sol = hrde.HRDESolution(
            times=np.array([0.0, 0.1]),
            zs=np.zeros((2, 4)), vs=np.zeros((2, 4)), dt=0.1,
        )
        with pytest.raises(UnsupportedGameError):
            hrde.solution_residual(game, sol, 0.05, 3, 0.4)


class TestConvergenceOracles:
    def test_threshold_values(self):
        assert hrde.bg_convergence_condition(2, 0.45)
        assert not hrde.bg_convergence_condition(2, 0.5)
        assert hrde.bg_convergence_condition(5, 0.79)
        assert not hrde.bg_convergence_condition(5, 0.81)

    def test_characteristic_matches_threshold(self):
        game = scalar_bilinear(a=1.0)
        assert hrde.characteristic_stability(game, 0.01, 2, 0.4)
        assert not hrde.characteristic_stability(game, 0.01, 2, 0.6)
        for k in (2, 3, 5, 8):
            for alpha in (0.1, 0.35, 0.6, 0.85):
                if abs(alpha - (k - 1) / k) < 0.02:
                    continue
                expected = hrde.bg_convergence_condition(k, alpha)
                for gamma in (0.01, 0.1, 1.0):
                    assert hrde.characteristic_stability(game, gamma, k, alpha) \
                        == expected

    def test_gd_model_always_unstable(self):
        game = symmetric_psd_bilinear()
        for gamma in (0.001, 0.01, 0.1, 1.0):
            assert not hrde.gd_hrde_stability(game, gamma)

    def test_empirical_boundedness_agrees(self):
        # third oracle at reduced resolution: late-window growth of the
        # integrated model vs the two analytic checks
        game = scalar_bilinear(a=20.0)
        gamma = 0.05
        z0, v0 = np.array([1.0, 0.5]), np.zeros(2)
        for k in (2, 3, 4):
            for alpha in (0.3, 0.45, 0.55, 0.8):
                if abs(alpha - (k - 1) / k) < 0.02:
                    continue
                expected = hrde.bg_convergence_condition(k, alpha)
                assert hrde.characteristic_stability(game, gamma, k, alpha) \
                    == expected
                rhs = hrde.make_la_rhs(game, gamma, k, alpha)
                try:
                    sol = hrde.integrate(rhs, z0, v0, dt=1e-3, t_end=2.0,
                                         record_every=1000)
                    mid = np.linalg.norm(np.concatenate([sol.zs[1], sol.vs[1]]))
                    end = np.linalg.norm(np.concatenate([sol.zs[-1], sol.vs[-1]]))
                    bounded = end <= mid
                except DivergenceError:
                    bounded = False
                assert bounded == expected, (k, alpha)


class TestDiscreteConsistency:
    def test_cycle_matches_model_at_second_order(self):
        # one averaging cycle advances the model clock by gamma; with the
        # velocity initialized on the slow manifold the state error is
        # O(gamma^2), so halving gamma shrinks it ~4x
        game = scalar_bilinear(a=1.0)
        k, alpha = 3, 0.5

        def cycle_error(gamma):
            z = np.array([1.0, 0.0])
            zt = z.copy()
            for _ in range(k):
                zt = zt - gamma * games.field_array(game, zt)
            discrete = (1 - alpha) * z + alpha * zt
            f0 = games.field_array(game, z)
            rhs = hrde.make_la_rhs(game, gamma, k, alpha)
            sol = hrde.integrate(rhs, z, -k * alpha * f0, dt=gamma / 2000.0,
                                 t_end=gamma)
            return np.linalg.norm(sol.zs[-1] - discrete)

        ratio = cycle_error(1e-3) / cycle_error(5e-4)
        assert 3.0 <= ratio <= 5.5
