import itertools
import json
import math

import numpy as np
import pytest

from conftest import five_sigma
from qss_sim.protocol_rules import InvalidRoundError, RoundClass, classify_round
from qss_sim.quantum_core import Basis
from qss_sim.schemes import (
    ConfigError,
    ControlKeySet,
    SchemeConfig,
    SchemeKind,
    bootstrap_control_keys,
    choose_bases_encrypted,
    choose_bases_favored,
    choose_bases_symmetric,
    derive_alice_control_entry,
    draw_bases_favored,
    draw_bases_symmetric,
    encrypted_bases_mask,
    table1_keys,
)


def enumerate_prob(n, p_y, predicate):
    """Exact probability of a basis-vector event under independent y-choices."""
    total = 0.0
    for mask in itertools.product((False, True), repeat=n):
        m = sum(mask)
        if predicate(mask):
            total += p_y**m * (1 - p_y) ** (n - m)
    return total


class TestSchemeConfig:
    def test_defaults(self):
        assert SchemeConfig("favored").epsilon == 0.05
        assert SchemeConfig("encrypted").key_length == 1000

    @pytest.mark.parametrize("eps", [0.0, -0.1, 0.51, 1.0])
    def test_bad_epsilon(self, eps):
        with pytest.raises(ConfigError):
            SchemeConfig("favored", epsilon=eps)

    def test_fields_tied_to_kind(self):
        with pytest.raises(ConfigError):
            SchemeConfig("symmetric", epsilon=0.1)
        with pytest.raises(ConfigError):
            SchemeConfig("favored", key_length=10)
        with pytest.raises(ConfigError):
            SchemeConfig("encrypted", key_length=0)

    def test_round_trip(self):
        cfg = SchemeConfig(SchemeKind.FAVORED, epsilon=0.2)
        assert SchemeConfig.from_dict(cfg.to_dict()) == cfg


class TestSymmetric:
    def test_uniform_over_vectors(self, rng):
        draws = 100_000
        mask = draw_bases_symmetric(3, rng, draws)
        counts = np.bincount(mask @ [4, 2, 1], minlength=8) / draws
        assert np.all(np.abs(counts - 1 / 8) < five_sigma(1 / 8, draws))

    def test_half_are_odd(self, rng):
        draws = 100_000
        odd = (draw_bases_symmetric(3, rng, draws).sum(axis=1) % 2).mean()
        assert abs(odd - 0.5) < five_sigma(0.5, draws)

    def test_replay(self):
        a = [choose_bases_symmetric(4, rand) for rand in [np.random.default_rng(9)] for _ in range(50)]
        b = [choose_bases_symmetric(4, rand) for rand in [np.random.default_rng(9)] for _ in range(50)]
        assert a == b
        assert all(len(v) == 4 and set(v) <= {Basis.X, Basis.Y} for v in a)


class TestFavored:
    def test_all_x_fraction(self, rng):
        draws = 100_000
        all_x = (~draw_bases_favored(3, 0.05, rng, draws).any(axis=1)).mean()
        p = enumerate_prob(3, 0.05, lambda m: not any(m))
        assert p == pytest.approx(0.95**3)
        assert abs(all_x - p) < five_sigma(p, draws)

    def test_half_matches_symmetric(self):
        a = draw_bases_favored(3, 0.5, np.random.default_rng(3), 1000)
        b = draw_bases_symmetric(3, np.random.default_rng(3), 1000)
        np.testing.assert_array_equal(a, b)

    def test_check_round_fraction(self, rng):
        draws = 200_000
        m = draw_bases_favored(3, 0.05, rng, draws).sum(axis=1)
        frac = ((m > 0) & (m % 2 == 0)).mean()
        p = enumerate_prob(3, 0.05, lambda mask: sum(mask) > 0 and sum(mask) % 2 == 0)
        assert p == pytest.approx(3 * 0.05**2 * 0.95)
        assert abs(frac - p) < five_sigma(p, draws)

    def test_bad_epsilon(self, rng):
        with pytest.raises(ConfigError):
            choose_bases_favored(3, 0.7, rng)


class TestAliceControlEntry:
    @pytest.mark.parametrize(
        "outcome,cls,expected",
        [
            (0, RoundClass.ZERO_MOD_4, Basis.X),
            (1, RoundClass.ZERO_MOD_4, Basis.Y),
            (0, RoundClass.TWO_MOD_4, Basis.Y),
            (1, RoundClass.TWO_MOD_4, Basis.X),
        ],
    )
    def test_rule(self, outcome, cls, expected):
        assert derive_alice_control_entry(outcome, cls) is expected

    def test_odd_rejected(self):
        with pytest.raises(InvalidRoundError):
            derive_alice_control_entry(0, RoundClass.ODD_Y)


class TestBootstrap:
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 7])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_every_index_even(self, n, seed):
        keys = bootstrap_control_keys(n, 1000, np.random.default_rng(seed))
        assert keys.key_length == 1000
        assert keys.invalid_indices() == []
        for j in range(keys.key_length):
            assert sum(b is Basis.Y for b in keys.column(j)) % 2 == 0

    def test_large_n_uses_direct_sampler(self):
        keys = bootstrap_control_keys(20, 200, np.random.default_rng(0))
        assert keys.invalid_indices() == []

    def test_rounds_consumed_about_twice(self):
        repeats, k = 20, 1000
        used = [bootstrap_control_keys(3, k, np.random.default_rng(s)).bootstrap_rounds for s in range(repeats)]
        # negative binomial: mean k/p, variance k(1-p)/p^2 with p = 1/2
        sd_mean = math.sqrt(k * 0.5 / 0.25 / repeats)
        assert abs(np.mean(used) - 2 * k) < 5 * sd_mean

    def test_deterministic(self):
        a = bootstrap_control_keys(4, 300, np.random.default_rng(11))
        b = bootstrap_control_keys(4, 300, np.random.default_rng(11))
        assert a == b

    def test_check_fraction_hook(self):
        keys = bootstrap_control_keys(3, 500, np.random.default_rng(4), check_fraction=0.3)
        assert keys.key_length == 500
        assert keys.bootstrap_check.samples > 0
        assert keys.bootstrap_check.rate == 0.0

    def test_bad_length(self, rng):
        with pytest.raises(ConfigError):
            bootstrap_control_keys(3, 0, rng)


class TestTable1:
    def test_column_y_counts(self):
        keys = table1_keys()
        counts = [sum(b is Basis.Y for b in keys.column(j)) for j in range(10)]
        assert counts == [0, 2, 2, 2, 0, 0, 2, 2, 0, 2]
        assert keys.invalid_indices() == []

    def test_round_two(self):
        bases = choose_bases_encrypted(table1_keys(), 1)
        assert bases == (Basis.Y, Basis.X, Basis.Y)
        assert classify_round(bases) is RoundClass.TWO_MOD_4


class TestEncrypted:
    def test_cyclic(self):
        keys = bootstrap_control_keys(3, 50, np.random.default_rng(1))
        assert choose_bases_encrypted(keys, 50) == choose_bases_encrypted(keys, 0)
        assert choose_bases_encrypted(keys, 173) == choose_bases_encrypted(keys, 23)

    def test_never_odd(self):
        keys = bootstrap_control_keys(4, 1000, np.random.default_rng(2))
        for r in range(10_000):
            assert classify_round(choose_bases_encrypted(keys, r)).valid

    def test_mask_matches_columns(self):
        keys = bootstrap_control_keys(3, 40, np.random.default_rng(3))
        mask = encrypted_bases_mask(keys, np.arange(100))
        for r in range(100):
            assert tuple(mask[r]) == tuple(b is Basis.Y for b in choose_bases_encrypted(keys, r))

    def test_negative_index(self):
        with pytest.raises(ValueError):
            choose_bases_encrypted(table1_keys(), -1)


class TestKeySetSerialization:
    def test_round_trip(self):
        keys = bootstrap_control_keys(4, 64, np.random.default_rng(8))
        assert ControlKeySet.from_json(keys.to_json()) == keys

    def test_document_shape(self):
        doc = json.loads(table1_keys().to_json())
        assert doc == {
            "version": 1,
            "n": 3,
            "key_length": 10,
            "participant_keys": ["xxyyxxyyxx", "xyyxxxxyxy"],
            "alice_key": "xyxyxxyxxy",
        }

    def test_bad_version(self):
        doc = json.loads(table1_keys().to_json())
        doc["version"] = 99
        with pytest.raises(ConfigError):
            ControlKeySet.from_json(json.dumps(doc))

    def test_ragged_keys_rejected(self):
        with pytest.raises(ConfigError):
            ControlKeySet(3, ((Basis.X,), (Basis.X, Basis.Y)), (Basis.X,))
