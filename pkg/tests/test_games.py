import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nlgqkd.games import (
    ClassicalStrategy,
    SearchSpaceError,
    apply_depolarizing,
    best_classical_strategy,
    chsh_game,
    chsh_honest_strategy,
    classical_value,
    classical_value_tripartite,
    classical_win_prob,
    constant_game,
    game_from_dict,
    game_to_dict,
    load_game_file,
    msg_game,
    msg_honest_strategy,
    msg_win_prob_closed_form,
    qber,
    quantum_win_prob,
    random_effect,
    strategy_from_dict,
    strategy_to_dict,
    verify_pi_simplification,
)
from nlgqkd.qmath import check_measurement

MSG = msg_game()
CHSH = chsh_game()


class TestClassicalValues:
    def test_msg(self):
        v = classical_value(MSG)
        assert isinstance(v, Fraction) and v == Fraction(8, 9)

    def test_chsh(self):
        assert classical_value(CHSH) == Fraction(3, 4)

    def test_constant(self):
        assert classical_value(constant_game()) == 1

    def test_tripartite(self):
        assert classical_value_tripartite(MSG) == Fraction(8, 9)
        assert classical_value_tripartite(CHSH) == Fraction(3, 4)
        assert classical_value_tripartite(constant_game()) == 1

    def test_loop_oracle_agrees(self):
        for game in (MSG, CHSH):
            assert classical_value(game) == oracles.classical_value_loops(game.sk_a, game.sk_b)
            assert classical_value_tripartite(game) == oracles.tripartite_value_by_reduction(game.sk_a, game.sk_b)

    def test_argmax_is_first_optimum(self):
        value, strat = best_classical_strategy(CHSH)
        assert classical_win_prob(CHSH, strat) == float(value)
        assert strat == ClassicalStrategy((0, 0), (0, 0))

    def test_search_cap(self):
        big = constant_game(nx=12, ny=12, na=4, nb=4)
        with pytest.raises(SearchSpaceError):
            classical_value(big)

    def test_non_uniform_gives_float(self):
        g = game_from_dict({**game_to_dict(CHSH), "pi_x": [0.25, 0.75]})
        v = classical_value(g)
        assert isinstance(v, float) and 0.5 <= v <= 1

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(0, 3), min_size=3, max_size=3),
           st.lists(st.integers(0, 3), min_size=3, max_size=3),
           st.lists(st.integers(0, 3), min_size=3, max_size=3),
           st.lists(st.integers(0, 3), min_size=3, max_size=3),
           st.floats(0, 1))
    def test_mixture_linearity(self, a1, b1, a2, b2, w):
        s1 = ClassicalStrategy(tuple(a1), tuple(b1), w)
        s2 = ClassicalStrategy(tuple(a2), tuple(b2), 1 - w)
        mix = classical_win_prob(MSG, [s1, s2])
        parts = w * classical_win_prob(MSG, ClassicalStrategy(s1.table_a, s1.table_b)) + (
            1 - w
        ) * classical_win_prob(MSG, ClassicalStrategy(s2.table_a, s2.table_b))
        assert abs(mix - parts) <= 1e-12

    @pytest.mark.parametrize("perm", [(1, 0, 2), (2, 0, 1), (2, 1, 0)])
    def test_relabel_symmetry(self, perm):
        g = MSG.permute_x(perm)
        assert classical_value(g) == classical_value(MSG)
        s = msg_honest_strategy()
        s2 = type(s)(s.state, tuple(s.povms_a[k] for k in perm), s.povms_b, s.subsystem_dims, s.pairs)
        assert abs(quantum_win_prob(g, s2) - quantum_win_prob(MSG, s)) <= 1e-12


class TestQuantumValues:
    def test_msg_noiseless(self):
        assert abs(quantum_win_prob(MSG, msg_honest_strategy()) - 1) <= 1e-10

    def test_msg_fully_mixed(self):
        s = apply_depolarizing(msg_honest_strategy(), 0.5)
        assert quantum_win_prob(MSG, s) == pytest.approx(0.5, abs=1e-12)

    def test_msg_one_percent(self):
        s = apply_depolarizing(msg_honest_strategy(), 0.01)
        assert quantum_win_prob(MSG, s) == pytest.approx(1 - (2 / 9) * 0.01 * 6.95, abs=1e-12)
        assert qber(MSG, s) == pytest.approx(0.0154444444444, abs=1e-12)

    def test_qber_half(self):
        assert qber(MSG, apply_depolarizing(msg_honest_strategy(), 0.5)) == pytest.approx(0.5, abs=1e-12)

    def test_explicit_trace_oracle(self):
        for q in (0.0, 0.01, 0.2):
            s = apply_depolarizing(msg_honest_strategy(), q)
            ref = oracles.win_prob_explicit(s.state.density, s.povms_a, s.povms_b, MSG.sk_a, MSG.sk_b)
            assert quantum_win_prob(MSG, s) == pytest.approx(ref, abs=1e-12)

    def test_noise_grid_monotone_and_closed_form(self):
        qs = np.linspace(0, 0.5, 50)
        vals = [quantum_win_prob(MSG, apply_depolarizing(msg_honest_strategy(), q)) for q in qs]
        assert np.all(np.diff(vals) <= 1e-12)
        assert np.max(np.abs(np.array(vals) - msg_win_prob_closed_form(qs))) <= 1e-9

    def test_global_noise_flag(self):
        s = msg_honest_strategy()
        assert apply_depolarizing(s, 0.0, per_pair=False).state.density == pytest.approx(s.state.density)
        full = apply_depolarizing(s, 0.5, per_pair=False)
        assert np.allclose(full.state.density, np.eye(16) / 16)

    def test_noise_range(self):
        with pytest.raises(ValueError):
            apply_depolarizing(msg_honest_strategy(), 0.6)

    def test_chsh(self):
        assert abs(quantum_win_prob(CHSH, chsh_honest_strategy()) - (2 + math.sqrt(2)) / 4) <= 1e-10

    def test_chsh_one_shared_basis(self):
        # every party measures Z: a classical strategy in disguise
        s = chsh_honest_strategy()
        z = s.povms_a[0]
        s2 = type(s)(s.state, (z, z), (z, z), s.subsystem_dims, s.pairs)
        assert quantum_win_prob(CHSH, s2) <= 0.75 + 1e-12

    def test_chsh_swapped_outcomes(self):
        s = chsh_honest_strategy()
        flipped = tuple(m[::-1] for m in s.povms_a)
        s_all = type(s)(s.state, flipped, s.povms_b, s.subsystem_dims, s.pairs)
        assert quantum_win_prob(CHSH, s_all) == pytest.approx(1 - (2 + math.sqrt(2)) / 4, abs=1e-12)
        s_one = type(s)(s.state, (flipped[0], s.povms_a[1]), s.povms_b, s.subsystem_dims, s.pairs)
        assert quantum_win_prob(CHSH, s_one) == pytest.approx(0.5, abs=1e-12)

    def test_honest_measurements_are_projective(self):
        s = msg_honest_strategy()
        for m in s.povms_a + s.povms_b:
            check_measurement(list(m), projective=True)


class TestOperatorIdentity:
    def test_third_party_always_zero(self):
        f0s = [[np.eye(4)] * 3 for _ in range(3)]
        assert verify_pi_simplification(MSG, msg_honest_strategy(), f0s) <= 1e-10

    def test_third_party_never_zero(self):
        f0s = [[np.zeros((4, 4))] * 3 for _ in range(3)]
        assert verify_pi_simplification(MSG, msg_honest_strategy(), f0s) <= 1e-10

    def test_random_effects(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            f0s = [[random_effect(2, rng) for _ in range(3)] for _ in range(3)]
            assert verify_pi_simplification(MSG, msg_honest_strategy(), f0s) <= 1e-10

    def test_rejects_non_effect(self):
        f0s = [[2 * np.eye(2)] * 3 for _ in range(3)]
        with pytest.raises(ValueError):
            verify_pi_simplification(MSG, msg_honest_strategy(), f0s)


class TestJson:
    def test_round_trip(self, tmp_path):
        doc = {"game": game_to_dict(MSG), "strategy": strategy_to_dict(msg_honest_strategy())}
        path = tmp_path / "msg.json"
        path.write_text(json.dumps(doc))
        game, strat = load_game_file(path)
        assert classical_value(game) == Fraction(8, 9)
        assert abs(quantum_win_prob(game, strat) - 1) <= 1e-10

    def test_strategy_round_trip(self):
        s = chsh_honest_strategy()
        s2 = strategy_from_dict(json.loads(json.dumps(strategy_to_dict(s))))
        assert quantum_win_prob(CHSH, s2) == pytest.approx(quantum_win_prob(CHSH, s), abs=1e-15)

    def test_missing_field(self):
        doc = game_to_dict(CHSH)
        del doc["sk_b"]
        with pytest.raises(ValueError):
            game_from_dict(doc)

    def test_bad_key_map_values(self):
        doc = game_to_dict(CHSH)
        doc["sk_a"][0][0][0] = 2
        with pytest.raises(ValueError):
            game_from_dict(doc)

    def test_bad_distribution(self):
        with pytest.raises(ValueError):
            game_from_dict({**game_to_dict(CHSH), "pi_x": [0.5, 0.6]})
