"""Block coupling, polymer activities, and the certified series.

The brute oracles enumerate every joint spin configuration, so the desk
systems keep blocks small and few.  Shared geometries live in
cluster_cases: two blocks couple exactly at index distance k = 1/(2 delta*),
and the certified-series cases keep the coupling strength
beta (delta*)^2/gamma at 1/242, well under the 1/(6 e^3) ceiling.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from cluster_cases import (CONS4, ROWS4, geometry, make_system,
                           oracle_systems)
from kacfield.clusters import (BlockSystem, ConvergenceError, Polymer,
                               SizeLimitError, coupling_window,
                               lipschitz_check, pair_potential,
                               polymer_activity, s_bound, s_estimate,
                               v_direct, v_series)

# tiny hand-expanded geometry: 2-site blocks, coupling exactly at distance 2
GAMMA_TINY = 1.0 / 8.0
DSTAR_TINY = 1.0 / 4.0

# the printed bound-check scale: strength (delta*)^2/gamma = 1/(12 e^3)
DSTAR_EDGE = 1.0 / (24.0 * math.e ** 3)
GAMMA_EDGE = DSTAR_EDGE / 2.0

K4 = 484  # distance used by the n=4 unit-strength-1/242 systems at beta 1


def tiny_pair(sx, sy, d):
    return pair_potential(sx, sy, 0, d, GAMMA_TINY, DSTAR_TINY)


def build4(rows, cons, blocks, beta=1.0, theta=0.1):
    gamma, delta_star = geometry(4, K4)
    return BlockSystem(rows, cons, gamma=gamma, delta_star=delta_star,
                       beta=beta, theta=theta, blocks=blocks)


# ---------------------------------------------------------------------------
# pair coupling


class TestPairPotential:
    def test_far_pairs_vanish(self):
        sx, sy = [1.0, -1.0], [1.0, 1.0]
        for d in (1, 3, 4, 5, 9):
            assert tiny_pair(sx, sy, d) == 0.0
        assert tiny_pair(sx, sy, 2) != 0.0

    def test_hand_expanded_tiny_case(self):
        # at distance 2 only the (first site, second site) pair crosses the
        # cutoff, so the value is gamma sigma_x[0] sigma_y[1]
        assert tiny_pair([1, -1], [1, 1], 2) == pytest.approx(0.125, abs=1e-15)
        assert tiny_pair([1, 1], [1, -1], 2) == pytest.approx(-0.125, abs=1e-15)
        assert tiny_pair([-1, 1], [1, -1], 2) == pytest.approx(0.125, abs=1e-15)

    def test_strength_bound_random(self):
        rng = np.random.default_rng(3)
        for _ in range(250):
            n = int(rng.choice([2, 4, 8]))
            k = int(rng.choice([2, 5, 11]))
            gamma, delta_star = geometry(n, k)
            d = int(rng.integers(1, 3 * k))
            sx = rng.choice([-1.0, 1.0], size=n)
            sy = rng.choice([-1.0, 1.0], size=n)
            u = pair_potential(sx, sy, 0, d, gamma, delta_star)
            assert abs(u) <= delta_star ** 2 / gamma + 1e-15

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            n = int(rng.choice([2, 4, 6]))
            k = int(rng.choice([2, 3, 5, 484]))
            gamma, delta_star = geometry(n, k)
            x = int(rng.integers(-3, 4))
            y = x + int(rng.integers(1, 3)) * (k + int(rng.integers(-1, 2)))
            sx = rng.choice([-1.0, 1.0], size=n)
            sy = rng.choice([-1.0, 1.0], size=n)
            got = pair_potential(sx, sy, x, y, gamma, delta_star)
            want = oracles.pair_u_brute(tuple(sx), tuple(sy), x, y, gamma,
                                        delta_star)
            assert got == pytest.approx(want, abs=1e-14)

    def test_non_dyadic_cutoff_geometry(self):
        # half the range is not an integer multiple of the block length
        # here; the coupling still lands on a single distance
        for d in (240, 241, 242):
            got = pair_potential([1, -1], [1, 1], 0, d, GAMMA_EDGE, DSTAR_EDGE)
            want = oracles.pair_u_brute((1, -1), (1, 1), 0, d, GAMMA_EDGE,
                                        DSTAR_EDGE)
            assert got == pytest.approx(want, abs=1e-15)
        assert pair_potential([1, -1], [1, 1], 0, 241, GAMMA_EDGE,
                              DSTAR_EDGE) != 0.0

    def test_nonzero_only_inside_window(self):
        rng = np.random.default_rng(11)
        for d in range(1, 9):
            for _ in range(5):
                sx = rng.choice([-1.0, 1.0], size=2)
                sy = rng.choice([-1.0, 1.0], size=2)
                u = pair_potential(sx, sy, 0, d, GAMMA_TINY, DSTAR_TINY)
                if u != 0.0:
                    assert coupling_window(0, d, DSTAR_TINY)
        assert coupling_window(0, 2, DSTAR_TINY)
        assert not coupling_window(0, 5, DSTAR_TINY)

    def test_validation(self):
        with pytest.raises(ValueError, match="distinct"):
            pair_potential([1, -1], [1, 1], 3, 3, GAMMA_TINY, DSTAR_TINY)
        with pytest.raises(ValueError, match="sites"):
            pair_potential([1, -1, 1], [1, 1], 0, 2, GAMMA_TINY, DSTAR_TINY)
        with pytest.raises(ValueError, match="[+]1 or -1"):
            pair_potential([1, 0], [1, 1], 0, 2, GAMMA_TINY, DSTAR_TINY)

    @given(st.lists(st.sampled_from((-1.0, 1.0)), min_size=4, max_size=4),
           st.lists(st.sampled_from((-1.0, 1.0)), min_size=4, max_size=4),
           st.integers(1, 20))
    def test_strength_bound_property(self, sx, sy, d):
        gamma, delta_star = geometry(4, 5)
        u = pair_potential(sx, sy, 0, d, gamma, delta_star)
        assert abs(u) <= delta_star ** 2 / gamma + 1e-15


# ---------------------------------------------------------------------------
# block systems


class TestBlockSystem:
    def test_tables_match_decomposition(self):
        s = build4(ROWS4, CONS4, (0, K4, 2 * K4, 3 * K4))
        assert list(s.lams) == [1, -1, 0, 1]
        assert [t.d_size for t in s._tables] == [1, 1, 0, 2]
        for r, (m1, m2) in enumerate(CONS4):
            k1 = int((1 + m1) * s.half / 2)
            k2 = int((1 + m2) * s.half / 2)
            want = math.comb(s.half, k1) * math.comb(s.half, k2)
            assert s._tables[r].sigma.shape == (want, 4)
            assert s._tables[r].probs.sum() == pytest.approx(1.0, abs=1e-12)
            # every admissible configuration meets both constraints
            for cfg in s._tables[r].sigma:
                assert abs(cfg.sum() - (m1 + m2) * s.half / 2 * 2) < 1e-9

    def test_flat_field_equivalent(self):
        rows = ROWS4[:2]
        cons = CONS4[:2]
        a = build4(rows, cons, (0, K4))
        b = build4(np.ravel(rows), cons, (0, K4))
        assert v_direct(a) == v_direct(b)

    def test_shared_constraint_broadcast(self):
        a = build4(ROWS4[:2], [(0.0, 0.0), (0.0, 0.0)], (0, K4))
        b = build4(ROWS4[:2], (0.0, 0.0), (0, K4))
        assert v_direct(a) == v_direct(b)

    def test_validation(self):
        rows, cons = ROWS4[:2], CONS4[:2]
        with pytest.raises(ValueError, match="lattice"):
            build4(rows, [(0.3, 0.0), (0.0, 0.0)], (0, K4))
        with pytest.raises(ValueError, match="lattice"):
            build4(rows, [(1.5, 0.0), (0.0, 0.0)], (0, K4))
        with pytest.raises(ValueError, match="[+]1 or -1"):
            build4([[1, 2, 1, -1], rows[1]], cons, (0, K4))
        with pytest.raises(ValueError, match="one index per"):
            build4(rows, cons, (0, K4, 2 * K4))
        with pytest.raises(ValueError, match="increasing"):
            build4(rows, cons, (K4, 0))
        with pytest.raises(ValueError, match="beta"):
            BlockSystem(rows, cons, gamma=1.0 / (8 * K4),
                        delta_star=1.0 / (2 * K4), beta=0.0, theta=0.1,
                        blocks=(0, K4))
        with pytest.raises(ValueError, match="theta"):
            BlockSystem(rows, cons, gamma=1.0 / (8 * K4),
                        delta_star=1.0 / (2 * K4), beta=1.0, theta=-0.1,
                        blocks=(0, K4))
        with pytest.raises(ValueError, match="multiple"):
            build4([1, 1, -1], [(0.0, 0.0)], (0,))

    def test_coupled_pairs(self):
        chain = make_system("chain4")
        k = chain.blocks[1]
        assert chain.coupled_pairs() == [(0, k), (k, 2 * k), (2 * k, 3 * k)]
        straddle = make_system("straddle")
        k = straddle.blocks[2]
        assert straddle.coupled_pairs() == [(0, k), (1, k + 1)]
        assert make_system("decoupled").coupled_pairs() == []

    def test_flip_site(self):
        s = build4(ROWS4[:2], CONS4[:2], (0, K4))
        flipped = s.flip_site(5)
        assert flipped.rows[1, 1] == -s.rows[1, 1]
        assert s.rows[1, 1] == ROWS4[1][1]
        again = flipped.flip_site(5)
        assert np.array_equal(again.rows, s.rows)
        with pytest.raises(ValueError, match="site"):
            s.flip_site(8)


# ---------------------------------------------------------------------------
# polymer activities


class TestPolymerActivity:
    @pytest.mark.parametrize("beta,theta", [(1.0, 0.0), (1.0, 0.1),
                                            (2.0, 0.1), (1.0, 0.35)])
    def test_pair_matches_enumeration(self, beta, theta):
        s = build4(ROWS4[:2], CONS4[:2], (0, K4), beta=beta, theta=theta)
        got = polymer_activity((0, K4), s)
        want = oracles.rho_brute(ROWS4[:2], CONS4[:2], (0, K4), s.gamma,
                                 s.delta_star, beta, theta)
        assert got == pytest.approx(want, abs=1e-13)

    def test_pair_is_mean_coupling_factor_minus_one(self):
        s = build4(ROWS4[1:3], CONS4[1:3], (0, K4), beta=2.0)
        got = polymer_activity((0, K4), s)
        mean = oracles.pair_factor_expectation_brute(
            ROWS4[1:3], CONS4[1:3], (0, K4), s.gamma, s.delta_star, 2.0, 0.1,
            [(0, 1)], False)
        assert got == pytest.approx(mean - 1.0, abs=1e-13)

    @pytest.mark.parametrize("beta", [1.0, 2.0])
    def test_triple_matches_enumeration(self, beta):
        blocks = (0, K4, 2 * K4)
        s = build4(ROWS4[:3], CONS4[:3], blocks, beta=beta)
        got = polymer_activity(blocks, s)
        want = oracles.rho_brute(ROWS4[:3], CONS4[:3], blocks, s.gamma,
                                 s.delta_star, beta, 0.1)
        assert got == pytest.approx(want, abs=1e-13)

    def test_out_of_window_pair_is_zero(self):
        s = build4(ROWS4[:2], CONS4[:2], (0, 7))
        assert polymer_activity((0, 7), s) == 0.0

    def test_window_disconnected_is_zero(self):
        s = build4(ROWS4[:3], CONS4[:3], (0, K4, 9 * K4))
        assert polymer_activity((0, K4, 9 * K4), s) == 0.0

    def test_tree_graph_bound(self):
        s = make_system("chain4", n=4, beta=2.0)
        k = s.blocks[1]
        strength = s.beta * s.delta_star ** 2 / s.gamma
        for size in (2, 3, 4):
            for lo in range(5 - size):
                blocks = tuple(k * (lo + j) for j in range(size))
                rho = polymer_activity(blocks, s)
                assert abs(rho) <= 3.0 ** (size - 1) * strength ** (size - 1)

    def test_size_limits(self):
        s = make_system("chain4")
        with pytest.raises(SizeLimitError, match="cap"):
            polymer_activity((0, 1, 2, 3, 4), s)
        wide = BlockSystem([[1, -1] * 8, [1, 1] * 8], (0.0, 0.0),
                           gamma=1.0 / 64, delta_star=1.0 / 4, beta=1.0,
                           theta=0.1, blocks=(0, 2))
        with pytest.raises(SizeLimitError, match="sites"):
            polymer_activity((0, 2), wide)

    def test_argument_validation(self):
        s = make_system("pair")
        with pytest.raises(ValueError, match="at least two"):
            polymer_activity((0,), s)
        with pytest.raises(ValueError, match="distinct"):
            polymer_activity((0, 0), s)
        with pytest.raises(ValueError, match="not in the system"):
            polymer_activity((0, 5), s)

    def test_polymer_type(self):
        s = make_system("pair")
        k = s.blocks[1]
        assert polymer_activity(Polymer((0, k)), s) == \
            polymer_activity((0, k), s)
        assert len(Polymer((0, k))) == 2
        assert list(Polymer((0, k))) == [0, k]
        with pytest.raises(ValueError, match="increasing"):
            Polymer((k, 0))
        with pytest.raises(ValueError, match="at least two"):
            Polymer((0,))


# ---------------------------------------------------------------------------
# direct evaluation


class TestVDirect:
    def test_single_block_zero(self):
        s = build4(ROWS4[:1], CONS4[:1], (0,))
        assert v_direct(s) == 0.0

    def test_decoupled_zero(self):
        assert v_direct(make_system("decoupled")) == 0.0

    @pytest.mark.parametrize("kind,n,beta,theta", [
        ("pair", 4, 1.0, 0.1), ("pair", 2, 1.0, 0.1),
        ("chain3", 4, 2.0, 0.1), ("chain4", 4, 1.0, 0.35),
        ("straddle", 4, 1.0, 0.1), ("chain4", 2, 2.0, 0.1)])
    def test_matches_joint_enumeration(self, kind, n, beta, theta):
        s = make_system(kind, n=n, beta=beta, theta=theta)
        count = s.n_blocks
        rows = [list(r) for r in s.rows]
        cons = [tuple(c) for c in s.constraints]
        want = oracles.v_direct_brute(rows, cons, s.blocks, s.gamma,
                                      s.delta_star, beta, theta)
        assert v_direct(s) == pytest.approx(want, abs=1e-12)
        assert count <= 4

    def test_component_additivity(self):
        s = make_system("straddle", n=4)
        k = s.blocks[2]
        left = build4(ROWS4[:1] + ROWS4[2:3], CONS4[:1] + CONS4[2:3],
                      (0, k), beta=s.beta)
        right = build4(ROWS4[1:2] + ROWS4[3:4], CONS4[1:2] + CONS4[3:4],
                       (1, k + 1), beta=s.beta)
        assert v_direct(s) == pytest.approx(v_direct(left) + v_direct(right),
                                            abs=1e-14)

    def test_size_limits(self):
        gamma, delta_star = geometry(4, K4)
        rows = [ROWS4[i % 4] for i in range(7)]
        cons = [CONS4[i % 4] for i in range(7)]
        s = BlockSystem(rows, cons, gamma=gamma, delta_star=delta_star,
                        beta=1.0, theta=0.1, blocks=range(7))
        with pytest.raises(SizeLimitError, match="blocks"):
            v_direct(s)
        wide = BlockSystem([[1, -1] * 8, [1, 1] * 8], (0.0, 0.0),
                           gamma=1.0 / 64, delta_star=1.0 / 4, beta=1.0,
                           theta=0.1, blocks=(0, 2))
        with pytest.raises(SizeLimitError, match="sites"):
            v_direct(wide)

    @given(st.integers(0, 2 ** 32 - 1),
           st.sampled_from((0.0, 0.1, 0.35)),
           st.sampled_from((1.0, 2.0)))
    def test_flip_symmetry(self, seed, theta, beta):
        rng = np.random.default_rng(seed)
        rows = rng.choice([-1, 1], size=(3, 4))
        cons = rng.integers(0, 3, size=(3, 2)) - 1.0
        blocks = (0, K4, 2 * K4)
        a = build4(rows, cons, blocks, beta=beta, theta=theta)
        mirrored = np.stack([-cons[:, 1], -cons[:, 0]], axis=1)
        b = build4(-rows, mirrored, blocks, beta=beta, theta=theta)
        assert v_direct(a) == pytest.approx(v_direct(b), abs=1e-13)
        assert list(a.lams) == list(-b.lams)


# ---------------------------------------------------------------------------
# polymer series


class TestVSeries:
    def test_order1_pair_equals_activity(self):
        s = make_system("pair", n=4)
        k = s.blocks[1]
        value, tail = v_series(s, 1)
        assert value == polymer_activity((0, k), s) / s.beta
        assert tail > 0.0

    def test_single_pair_taylor(self):
        # one polymer repeating: the series must rebuild log(1 + rho)
        s = make_system("pair", n=4)
        rho = polymer_activity((0, s.blocks[1]), s)
        for order in range(1, 7):
            value, _ = v_series(s, order)
            taylor = sum((-1) ** (j + 1) * rho ** j / j
                         for j in range(1, order + 1)) / s.beta
            assert value == pytest.approx(taylor, abs=1e-16)

    def test_chain3_order2_hand_formula(self):
        s = make_system("chain3", n=4)
        k = s.blocks[1]
        p1 = polymer_activity((0, k), s)
        p2 = polymer_activity((k, 2 * k), s)
        p3 = polymer_activity((0, k, 2 * k), s)
        # all three polymers pairwise overlap, so every repeated or mixed
        # pair enters with coefficient -1 (halved on the diagonal)
        hand = (p1 + p2 + p3 - 0.5 * (p1 ** 2 + p2 ** 2 + p3 ** 2)
                - p1 * p2 - p1 * p3 - p2 * p3) / s.beta
        value, _ = v_series(s, 2)
        assert value == pytest.approx(hand, abs=1e-16)

    def test_within_tail_and_decreasing(self):
        for label, s in oracle_systems():
            direct = v_direct(s)
            certificate = s_estimate(s)
            errors = []
            for order in range(1, 5):
                value, tail = v_series(s, order)
                want_tail = s.n_blocks * certificate ** order \
                    / (1.0 - certificate) / s.beta
                assert tail == pytest.approx(want_tail, rel=1e-12), label
                assert abs(value - direct) <= tail, (label, order)
                errors.append(abs(value - direct))
            for lo, hi in zip(errors[1:], errors):
                assert lo <= hi + 1e-12, label

    def test_convergence_precondition(self):
        s = BlockSystem([[1, -1] * 2, [1, 1, -1, -1]], (0.0, 0.0),
                        gamma=1.0 / 16, delta_star=1.0 / 4, beta=2.0,
                        theta=0.1, blocks=(0, 2))
        with pytest.raises(ConvergenceError, match="strength"):
            v_series(s, 2)
        with pytest.raises(ConvergenceError, match="strength"):
            lipschitz_check(s, 0)

    def test_order_validation(self):
        s = make_system("pair")
        with pytest.raises(ValueError, match="order"):
            v_series(s, 0)
        with pytest.raises(ValueError, match="order"):
            v_series(s, 7)

    def test_decoupled_series_zero(self):
        assert v_series(make_system("decoupled"), 3) == (0.0, 0.0)


# ---------------------------------------------------------------------------
# series certificate


class TestSEstimate:
    def test_decoupled_zero(self):
        assert s_estimate(make_system("decoupled")) == 0.0

    def test_edge_scale_stays_below_half(self):
        # coupling strength exactly 1/(12 e^3), printed ceiling exactly 1/2
        s = BlockSystem([[1, -1], [1, 1]], [(1.0, -1.0), (1.0, 1.0)],
                        gamma=GAMMA_EDGE, delta_star=DSTAR_EDGE, beta=1.0,
                        theta=0.1, blocks=(0, 241))
        assert s.coupled_pairs() == [(0, 241)]
        value = s_estimate(s)
        assert s_bound(s) == pytest.approx(0.5, abs=1e-12)
        assert value < 0.5
        rho = polymer_activity((0, 241), s)
        assert value == pytest.approx(math.exp(2) * abs(rho), abs=1e-15)

    def test_manual_sum_on_chain(self):
        s = make_system("chain4", n=4, beta=2.0)
        k = s.blocks[1]
        sums = {}
        for size in (2, 3, 4):
            for lo in range(5 - size):
                blocks = tuple(k * (lo + j) for j in range(size))
                w = math.exp(size) * abs(polymer_activity(blocks, s))
                for b in blocks:
                    sums[b] = sums.get(b, 0.0) + w
        assert s_estimate(s) == pytest.approx(max(sums.values()), abs=1e-15)

    def test_below_ceiling_everywhere(self):
        for label, s in oracle_systems():
            value = s_estimate(s)
            assert value < s_bound(s), label
            assert value < 1.0, label

    def test_direct_value_within_series_bound(self):
        for label, s in oracle_systems():
            value = s_estimate(s)
            cap = s.n_blocks * value / (1.0 - value) / s.beta
            assert abs(v_direct(s)) <= cap, label


# ---------------------------------------------------------------------------
# field-flip response


class TestLipschitz:
    def test_decoupled_flip_is_zero(self):
        assert lipschitz_check(make_system("decoupled"), 3) == (0.0, 0.0)

    def test_spectator_flip_keeps_value(self):
        gamma, delta_star = geometry(4, K4)
        s = BlockSystem(ROWS4, CONS4, gamma=gamma, delta_star=delta_star,
                        beta=1.0, theta=0.1,
                        blocks=(0, K4, 2 * K4, 9 * K4))
        for site in (12, 13, 15):
            empirical, bound = lipschitz_check(s, site)
            assert empirical == 0.0
            assert bound > 0.0

    def test_all_flips_within_bound(self):
        s = make_system("chain4", n=4, beta=2.0)
        for site in range(s.n_blocks * s.n_sites):
            empirical, bound = lipschitz_check(s, site)
            assert empirical <= bound, site

    def test_bound_ignores_decoupled_extension(self):
        base = make_system("chain3", n=4)
        k = base.blocks[1]
        gamma, delta_star = geometry(4, K4)
        extended = BlockSystem(ROWS4, CONS4, gamma=gamma,
                               delta_star=delta_star, beta=1.0, theta=0.1,
                               blocks=(0, k, 2 * k, 9 * k))
        site = 5
        emp_a, bound_a = lipschitz_check(base, site)
        emp_b, bound_b = lipschitz_check(extended, site)
        assert bound_a == bound_b
        assert emp_a == pytest.approx(emp_b, abs=1e-15)

    def test_bound_matches_certificates(self):
        s = make_system("pair", n=4)
        site = 2
        _, bound = lipschitz_check(s, site)
        certificate = max(s_estimate(s), s_estimate(s.flip_site(site)))
        assert bound == certificate / (1.0 - certificate) / s.beta

    def test_errors(self):
        s = make_system("pair")
        with pytest.raises(ValueError, match="site"):
            lipschitz_check(s, 99)
        gamma, delta_star = geometry(4, K4)
        rows = [ROWS4[i % 4] for i in range(7)]
        cons = [CONS4[i % 4] for i in range(7)]
        big = BlockSystem(rows, cons, gamma=gamma, delta_star=delta_star,
                          beta=1.0, theta=0.1, blocks=range(7))
        with pytest.raises(SizeLimitError, match="blocks"):
            lipschitz_check(big, 0)
