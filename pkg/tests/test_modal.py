import math
from fractions import Fraction

import numpy as np
import pytest

from molalab import games, modal, spectral
from molalab.errors import EmptyInputError, InvalidRangeError


def budget_closed_form_k2(alpha: float) -> float:
    """Root of (4a^2 - 2a) c^2 + a^2 c^4 for k = 2: sqrt((2 - 4a)/a)."""
    return math.sqrt((2.0 - 4.0 * alpha) / alpha)


class TestModeMultiplier:
    def test_stationary_mode(self):
        for alpha in (0.25, 0.4, 0.5):
            for k in (1, 3, 41):
                mu = modal.mode_multiplier(0.0, alpha, k)
                assert mu == 1.0 + 0.0j

    def test_hand_value_k2(self):
        # (1 - i)^2 = -2i, so mu = 0.5 - i with modulus sqrt(1.25)
        mu = modal.mode_multiplier(1.0, 0.5, 2)
        assert abs(mu - (0.5 - 1.0j)) < 1e-12
        assert abs(abs(mu) - math.sqrt(1.25)) < 1e-12

    def test_contraction_below_threshold(self):
        mu = modal.mode_multiplier(0.5, 0.4, 2)
        assert abs(mu - (0.9 - 0.4j)) < 1e-12
        assert abs(abs(mu) ** 2 - 0.97) < 1e-12


class TestLaMultiplier:
    def test_fixed_mode(self):
        for alpha in (0.25, 0.5):
            for k in (1, 7, 1999):
                assert modal.la_multiplier(1.0 + 0.0j, alpha, k) == 1.0 + 0.0j

    def test_antipodal_phase(self):
        # T^k = -1 gives the real value 1 - 2 alpha
        for k in (2, 5, 9):
            t = np.exp(1j * math.pi / k)
            mu = modal.la_multiplier(t, 0.3, k)
            assert abs(mu - (1.0 - 0.6)) < 1e-12

    def test_long_horizon_contracts(self):
        assert abs(modal.la_multiplier(1 - 0.01j, 0.5, 40)) < 1.0

    def test_identity_with_mode_multiplier(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            c = rng.uniform(0.0, 3.0)
            alpha = rng.uniform(0.01, 0.99)
            k = int(rng.integers(1, 500))
            lhs = modal.la_multiplier(1.0 - 1j * c, alpha, k)
            rhs = modal.mode_multiplier(c, alpha, k)
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


class TestStabilityMargin:
    def test_zero_mode(self):
        for alpha in (0.25, 0.4):
            assert abs(modal.stability_margin(0.0, alpha, 7)) <= 1e-14

    def test_contractive_value(self):
        assert abs(modal.stability_margin(0.5, 0.4, 2) - (-0.03)) < 1e-12

    def test_expansive_value(self):
        # closed form (4a^2 - 2a) c^2 + a^2 c^4 at c = 1.5, a = 0.4:
        # -0.16 * 2.25 + 0.16 * 5.0625 = 0.45 (positive: expansion)
        g = modal.stability_margin(1.5, 0.4, 2)
        assert g > 0.0
        assert abs(g - 0.45) < 1e-12

    def test_second_derivative_sign_at_origin(self):
        h = 1e-3
        for k in range(2, 11):
            boundary = 1.0 - 1.0 / k
            for alpha in (boundary - 0.05, min(boundary + 0.05, 0.99)):
                fd = 2.0 * modal.stability_margin(h, alpha, k) / h**2
                predicted = alpha**2 * k**2 - alpha * k * (k - 1)
                assert math.copysign(1.0, fd) == math.copysign(1.0, predicted)


class TestGammaBudget:
    def test_known_values(self):
        assert abs(modal.gamma_budget(0.4, 2).gamma_L_budget - 1.0) < 1e-8
        assert abs(modal.gamma_budget(0.25, 2).gamma_L_budget - 2.0) < 1e-8

    def test_boundary_alpha_gives_zero(self):
        res = modal.gamma_budget(0.5, 2)
        assert res.gamma_L_budget == 0.0
        assert res.crossing_found

    def test_closed_form_k2(self):
        for alpha in np.arange(0.05, 0.46, 0.05):
            got = modal.gamma_budget(float(alpha), 2).gamma_L_budget
            assert abs(got - budget_closed_form_k2(float(alpha))) < 1e-7

    def test_budget_is_a_true_crossing(self):
        res = modal.gamma_budget(0.3, 4)
        gam = res.gamma_L_budget
        assert res.crossing_found
        assert modal.stability_margin(gam - 1e-6, 0.3, 4) < 0
        assert modal.stability_margin(gam + 1e-6, 0.3, 4) > 0

    def test_scan_exhausted(self):
        # for k = 2 the crossing sits at sqrt((2-4a)/a) = 14 > c_max
        res = modal.gamma_budget(0.01, 2)
        assert not res.crossing_found
        assert res.gamma_L_budget == 10.0

    def test_invalid_inputs(self):
        with pytest.raises(InvalidRangeError):
            modal.gamma_budget(0.4, 2, c_max=0.0)
        with pytest.raises(InvalidRangeError):
            modal.gamma_budget(1.2, 2)

    def test_gain_grid_matches_scalar(self):
        ks = range(5, 13)
        alphas = modal.DEFAULT_ALPHA_GRID[:10]
        grid = modal.budget_gain_grid(ks, alphas)
        for i, k in enumerate(ks):
            for j, alpha in enumerate(alphas):
                assert grid[i, j] == alpha * modal.gamma_budget(alpha, k).gamma_L_budget


class TestAlphaCap:
    def test_antipodal(self):
        assert abs(modal.alpha_cap(-1.0 + 0.0j, 1) - 1.0) < 1e-12

    def test_complex_value(self):
        assert abs(modal.alpha_cap(-1.0 + 2.0j, 1) - 0.5) < 1e-12

    def test_half_plane_blocked(self):
        assert modal.alpha_cap(2.0 + 0.0j, 1) == 0.0

    def test_fixed_mode_convention(self):
        assert modal.alpha_cap(1.0 + 0.0j, 17) == 1.0

    def test_against_grid_search(self):
        rng = np.random.default_rng(42)
        alphas = np.arange(0.0, 1.0 + 1e-6, 1e-6)
        for _ in range(200):
            radius = rng.uniform(0.2, 1.5)
            theta = rng.uniform(-math.pi, math.pi)
            k = int(rng.integers(1, 51))
            t = radius * np.exp(1j * theta)
            w = modal.polar_pow(t, k)
            delta = w - 1.0
            q = 2.0 * delta.real * alphas + abs(delta) ** 2 * alphas**2
            feasible = alphas[q <= 0.0]
            scanned = feasible[-1] if feasible.size else 0.0
            assert abs(modal.alpha_cap(t, k) - scanned) <= 2e-6


class TestKCandidates:
    def test_rotational_example(self):
        t = 1.1 * np.exp(-0.1j)
        assert modal.k_candidates(t, 0.3, 2, 2000) == [31, 32]

    def test_antipodal_mode_uses_next_phase_target(self):
        # k_phase(0) = 1 falls below k_min; the tie resolves to m = 1
        assert modal.k_candidates(complex(-0.9, 0.0), 0.3, 2, 10) == [3]

    def test_degenerate_amplitude_branch(self):
        assert modal.k_candidates(0.9 + 0.0j, 0.5, 2, 100) == []

    def test_amplitude_only_candidate(self):
        # ln(0.02/0.98)/ln(0.9) = 36.94 -> nearest integer horizon
        assert modal.k_candidates(0.9 + 0.0j, 0.98, 2, 100) == [37]

    def test_expanding_real_mode_has_no_amplitude_match(self):
        assert modal.k_candidates(1.05 + 0.0j, 0.3, 2, 100) == []

    def test_unreachable_phase_returns_range_end(self):
        # theta so small that pi/theta >> k_max
        t = 0.98 * np.exp(-1e-4j)
        cands = modal.k_candidates(t, 0.9, 5, 2000)
        assert cands == [2000]


class TestChooseModalParams:
    def test_potential_spectrum_disables_averaging(self):
        sel = modal.choose_modal_params([2.0, 2.0], gamma=0.01)
        assert sel.alpha == max(modal.DEFAULT_ALPHA_GRID)
        assert sel.k > 100
        assert sel.feasible and not sel.fallback_used

    def test_rotation_shrinks_horizon(self):
        pot = games.make_quadratic_rot(20, 0.05, 3)
        rot = games.make_quadratic_rot(20, 0.95, 3)
        sel_pot = modal.choose_modal_params(
            spectral.eigenvalues(games.jacobian(pot)), gamma=0.01)
        sel_rot = modal.choose_modal_params(
            spectral.eigenvalues(games.jacobian(rot)), gamma=0.01)
        assert sel_rot.k < sel_pot.k

    def test_infeasible_spectrum_falls_back(self):
        sel = modal.choose_modal_params([-1.0, -1.0], gamma=0.01)
        assert sel.fallback_used and not sel.feasible
        assert sel.k == modal.DEFAULT_K_MIN
        assert sel.alpha == min(0.5, modal.alpha_cap(sel.dominant, sel.k))

    def test_empty_grid_rejected(self):
        with pytest.raises(EmptyInputError):
            modal.choose_modal_params([1j], alpha_grid=[])

    def test_selection_minimizes_per_step_score(self):
        # exhaustive re-scan of the visited search set
        rng = np.random.default_rng(7)
        grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
        for _ in range(25):
            lam = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            lam = np.concatenate([lam, lam.conj()])
            sel = modal.choose_modal_params(lam, k_min=2, k_max=50,
                                            alpha_grid=grid, gamma=0.05)
            if sel.fallback_used:
                continue
            t_all = 1.0 - 0.05 * lam
            t_dom = t_all[np.argmax(np.abs(t_all))]
            best = math.inf
            for alpha in grid:
                for k in modal.k_candidates(t_dom, alpha, 2, 50):
                    if alpha > modal.alpha_cap(t_dom, k):
                        continue
                    rho = abs(modal.la_multiplier(t_dom, alpha, k))
                    best = min(best, math.log(max(rho, 1e-300)) / k)
            got = math.log(max(sel.rho, 1e-300)) / sel.k
            assert got <= best + 1e-12

    def test_feasible_selection_respects_cap_and_unit_disk(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            game = games.make_bilinear(int(rng.integers(2, 10)), 1.0,
                                       int(rng.integers(0, 10_000)))
            lam = spectral.eigenvalues(games.jacobian(game))
            sel = modal.choose_modal_params(lam, gamma=0.01)
            if not sel.feasible:
                continue
            assert sel.rho <= 1.0 + 1e-12
            assert sel.alpha <= modal.alpha_cap(sel.dominant, sel.k) + 1e-12


class TestEnvelopes:
    def test_alpha_envelope_values(self):
        assert abs(modal.class_alpha_envelope(1.0, 2) - 2.0 / 3.0) < 1e-15
        assert modal.class_alpha_envelope(1e-8, 2) > 0.9999
        assert modal.class_alpha_envelope(1.0, 2) > modal.class_alpha_envelope(1.0, 4)
        assert abs(modal.class_alpha_envelope(1.0, 4) - 0.4) < 1e-15

    def test_alpha_envelope_strictly_decreasing_in_k(self):
        for gamma_l in (0.5, 1.0, 2.0):
            vals = [modal.class_alpha_envelope(gamma_l, k) for k in range(2, 41)]
            assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_gamma_envelope_values(self):
        assert abs(modal.class_gamma_envelope(2.0 / 3.0, 2) - 1.0) < 1e-12
        assert modal.class_gamma_envelope(1.0 - 1e-9, 2) < 1e-4

    def test_inverse_identity(self):
        for k in range(2, 21):
            for gamma_l in np.linspace(0.05, 3.0, 25):
                alpha = modal.class_alpha_envelope(float(gamma_l), k)
                back = modal.class_gamma_envelope(alpha, k)
                assert abs(back - gamma_l) < 1e-10

    def test_k_doubling_shrinks_budget_by_sqrt2(self):
        for alpha in (0.3, 0.5, 0.7):
            ratio = (modal.class_gamma_envelope(alpha, 64)
                     / modal.class_gamma_envelope(alpha, 128))
            assert abs(ratio - math.sqrt(2.0)) < 0.05 * math.sqrt(2.0)


class TestExclusionGeometry:
    def test_phi2_root(self):
        assert abs(modal.phi_k(1.0, 2)) < 1e-12

    def test_phi_at_zero(self):
        for k in range(2, 21):
            assert modal.phi_k(0.0, k) == 1.0

    def test_phi4_boundary(self):
        # 1 - 6c^2 + c^4 returns to height 1 exactly at c = sqrt(6), the
        # first point where the mode re-enters the blocked half-plane
        assert abs(modal.phi_k(math.sqrt(6.0), 4) - 1.0) < 1e-9
        assert modal.phi_k(math.sqrt(6.0) - 1e-3, 4) < 1.0
        assert modal.phi_k(math.sqrt(6.0) + 1e-3, 4) > 1.0

    def test_trig_matches_binomial(self):
        # exact-rational binomial oracle; tolerance scales with the
        # magnitude envelope (1 + c^2)^{k/2} since the sum cancels heavily
        for k in range(2, 21):
            for num in range(1, 31):
                c = Fraction(num, 10)
                exact = sum(
                    (-1) ** j * math.comb(k, 2 * j) * c ** (2 * j)
                    for j in range(k // 2 + 1)
                )
                envelope = (1.0 + float(c) ** 2) ** (k / 2.0)
                got = modal.phi_k(float(c), k)
                assert abs(got - float(exact)) <= 1e-9 * envelope

    def test_rotation_budget_values(self):
        assert modal.rotation_budget(2) == 10.0
        assert modal.rotation_budget(3) == 10.0
        assert abs(modal.rotation_budget(4) - math.sqrt(6.0)) < 1e-8
