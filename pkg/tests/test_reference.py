import numpy as np
import pytest

from avshap import FeaturePartition, ToyGameSpec, build_toy_oracle, estimate_exact
from avshap.reference import brute_force_shapley
from conftest import FunctionOracle


def test_hand_computed_two_player_game(two_player_game):
    partition, oracle = two_player_game
    matrix = brute_force_shapley(oracle, partition)
    assert matrix.values[:, 0] == pytest.approx([1.5, 2.5], abs=1e-12)
    assert matrix.baseline.tolist() == [0.0]
    assert matrix.full.tolist() == [4.0]
    assert matrix.n_evaluations == 4


def test_additive_game_recovers_stored_weights():
    partition = FeaturePartition(n_audio=3, n_video=2)
    spec = ToyGameSpec(kind="additive", partition=partition, t_len=4, seed=17)
    oracle = build_toy_oracle(spec)
    matrix = brute_force_shapley(oracle, partition)
    assert np.abs(matrix.values - oracle.closed_form_shapley()).max() <= 1e-12


@pytest.mark.parametrize("seed", [0, 1])
def test_agrees_with_the_fast_enumeration(seed):
    partition = FeaturePartition(n_audio=5, n_video=4)
    spec = ToyGameSpec(
        kind="pairwise_interaction", partition=partition, t_len=3, seed=seed
    )
    oracle = build_toy_oracle(spec)
    slow = brute_force_shapley(oracle, partition)
    fast = estimate_exact(oracle, partition)
    assert np.abs(slow.values - fast.values).max() <= 1e-10


def test_refuses_games_over_the_cap():
    partition = FeaturePartition(n_audio=17, n_video=0)
    oracle = FunctionOracle(partition, 1, lambda c: [float(len(c))])
    with pytest.raises(ValueError, match="cap"):
        brute_force_shapley(oracle, partition)
