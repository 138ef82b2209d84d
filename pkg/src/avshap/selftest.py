"""Built-in verification suite: estimators against independent references.

Runs the same cross-checks the test suite automates, sized for a quick
console run: exact enumeration against the brute-force reference on
random interaction games, the four attribution axioms, and the
known-structure toy games (SNR monotonicity, block-diagonal alignment).
Prints one line per check.
"""

from __future__ import annotations

import math

import numpy as np

from .estimators import EstimatorConfig, Method, estimate_exact, estimate_permutation
from .game import AUDIO, CoalitionMask, FeaturePartition
from .metrics import alignment_shap, global_shap
from .reference import brute_force_shapley
from .synthetic import (
    BLOCK_DIAGONAL,
    PAIRWISE_INTERACTION,
    SNR_MIXTURE,
    ToyGameSpec,
    build_toy_oracle,
)


def _random_pairwise_game(rng: np.random.Generator):
    n_audio = int(rng.integers(1, 5))
    n_video = int(rng.integers(1, 5))
    t_len = int(rng.integers(1, 5))
    spec = ToyGameSpec(
        kind=PAIRWISE_INTERACTION,
        partition=FeaturePartition(n_audio=n_audio, n_video=n_video),
        t_len=t_len,
        seed=int(rng.integers(0, 2**31)),
    )
    return build_toy_oracle(spec), spec.partition


def check_exact_vs_brute_force(n_games: int, seed: int = 2024) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_games):
        oracle, partition = _random_pairwise_game(rng)
        fast = estimate_exact(oracle, partition)
        slow = brute_force_shapley(oracle, partition)
        worst = max(worst, float(np.abs(fast.values - slow.values).max()))
    return worst


def check_null_player() -> float:
    partition = FeaturePartition(n_audio=3, n_video=2)
    spec = ToyGameSpec(kind="additive", partition=partition, t_len=3, seed=5)
    oracle = build_toy_oracle(spec)
    weights = oracle.weights.copy()
    weights[1] = 0.0  # player 1 contributes nothing

    from .synthetic import ToyOracle

    silenced = ToyOracle(partition, weights, oracle.bias)
    config = EstimatorConfig(method=Method.PERMUTATION, budget_m=200, seed=11)
    matrix = estimate_permutation(silenced, partition, config)
    return float(np.abs(matrix.values[1]).max())


def check_snr_monotonic(seeds: int = 3) -> bool:
    partition = FeaturePartition(n_audio=4, n_video=3)
    grid = [-10.0, -5.0, 0.0, 5.0, 10.0, math.inf]
    for seed in range(seeds):
        shares = []
        for snr_db in grid:
            spec = ToyGameSpec(
                kind=SNR_MIXTURE, partition=partition, t_len=3, seed=seed, snr_db=snr_db
            )
            matrix = estimate_exact(build_toy_oracle(spec), partition)
            shares.append(global_shap(matrix).a_shap)
        if any(b < a for a, b in zip(shares, shares[1:])):
            return False
    return True


def check_block_diagonal_identity() -> float:
    partition = FeaturePartition(n_audio=6, n_video=0)
    spec = ToyGameSpec(
        kind=BLOCK_DIAGONAL, partition=partition, t_len=6, seed=3, n_blocks=6
    )
    matrix = estimate_exact(build_toy_oracle(spec), partition)
    alignment = alignment_shap(matrix, AUDIO, feature_bins=6, token_windows=6)
    off_diagonal = alignment.values - np.diag(np.diag(alignment.values))
    return float(np.abs(off_diagonal).max())


def run_selftest(fast: bool = False) -> int:
    checks = []

    worst = check_exact_vs_brute_force(n_games=4 if fast else 12)
    checks.append(("exact vs brute force (max |diff|)", worst <= 1e-10, f"{worst:.2e}"))

    partition = FeaturePartition(n_audio=3, n_video=3)
    spec = ToyGameSpec(kind=PAIRWISE_INTERACTION, partition=partition, t_len=2, seed=1)
    matrix = estimate_exact(build_toy_oracle(spec), partition)
    gap = float(
        np.abs(
            matrix.values.sum(axis=0) - (matrix.full - matrix.baseline)
        ).max()
    )
    checks.append(("efficiency (max |gap|)", gap <= 1e-9, f"{gap:.2e}"))

    null_gap = check_null_player()
    checks.append(("null player (max |value|)", null_gap == 0.0, f"{null_gap:.2e}"))

    monotone = check_snr_monotonic()
    checks.append(("audio share non-decreasing in SNR", monotone, str(monotone)))

    off_mass = check_block_diagonal_identity()
    checks.append(
        ("block-diagonal alignment off-diagonal mass", off_mass <= 1e-9, f"{off_mass:.2e}")
    )

    failures = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok:
            failures += 1
    return 0 if failures == 0 else 1
