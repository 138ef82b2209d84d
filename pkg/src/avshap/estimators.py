"""Shapley attribution estimators: exact enumeration and two sampled methods.

Every oracle call scores a whole coalition, returning the log-probability
of all T output tokens at once, so the T per-token attribution problems
share each coalition evaluation. The evaluation budget of the sampled
methods therefore counts coalition evaluations, not permutations, which
keeps cost comparable across player counts and methods.

Reproducibility: one root seed; the random stream of each permutation (or
of each player, for coalition sampling) is derived by a counter-based
split, so results do not depend on batch size or on how work is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .game import (
    CoalitionMask,
    FeaturePartition,
    ScoringOracle,
    ShapleyMatrix,
    score_coalitions,
)

EXACT_PLAYER_CAP = 20


class EstimatorError(Exception):
    """Base error for estimator configuration and execution."""


class BudgetError(EstimatorError, ValueError):
    """Evaluation budget too small for the requested method."""


class PlayerCapError(EstimatorError, ValueError):
    """Exact enumeration refused: 2^P evaluations would be intractable."""


class Method(str, Enum):
    EXACT = "exact"
    PERMUTATION = "permutation"
    SAMPLING = "sampling"


@dataclass(frozen=True)
class EstimatorConfig:
    """Method selection, evaluation budget, and reproducibility knobs.

    ``budget_m`` bounds the number of coalition evaluations the sampled
    methods may spend, excluding the empty/full endpoint pair which is
    evaluated once and cached. ``seed`` is the root of all derived random
    streams. ``batch_size`` caps how many masks are handed to the oracle
    per batched call.
    """

    method: Method
    budget_m: int = 2000
    seed: int = 0
    batch_size: int = 64

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        if self.budget_m < 1:
            raise BudgetError(f"budget_m must be positive, got {self.budget_m}")
        if self.batch_size < 1:
            raise EstimatorError(f"batch_size must be >= 1, got {self.batch_size}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise EstimatorError(f"seed must be a nonnegative integer, got {self.seed!r}")


def _mask_from_int(partition: FeaturePartition, bits: int) -> CoalitionMask:
    return CoalitionMask(
        tuple((bits >> p) & 1 for p in range(partition.n_players))
    )


def _shapley_weights(n_players: int) -> np.ndarray:
    """Weight of one coalition of each size s in the exact average:
    s! (P-1-s)! / P!."""
    fact = math.factorial
    total = fact(n_players)
    return np.array(
        [fact(s) * fact(n_players - 1 - s) / total for s in range(n_players)],
        dtype=np.float64,
    )


def _check_sampling_preconditions(partition: FeaturePartition, config: EstimatorConfig) -> None:
    needed = 2 * partition.n_players
    if config.budget_m < needed:
        raise BudgetError(
            f"budget_m={config.budget_m} is below 2*P={needed}: too small to "
            f"give every player one marginal sample plus the baseline/full pair"
        )


def _permutation_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def estimate_exact(
    oracle: ScoringOracle,
    partition: FeaturePartition,
    batch_size: int = 64,
    player_cap: int = EXACT_PLAYER_CAP,
) -> ShapleyMatrix:
    """Exact Shapley matrix by enumerating all 2^P coalitions.

    For each player the attribution is the weighted sum, over every
    coalition not containing it, of the score gain from adding it, with
    the classical size weights s!(P-1-s)!/P!. Refuses games above
    ``player_cap`` players; use the permutation or sampling estimator for
    those.
    """
    n = partition.n_players
    if n > player_cap:
        raise PlayerCapError(
            f"{n} players would need 2^{n} coalition evaluations; "
            f"cap is {player_cap}. Use the permutation or sampling method."
        )
    n_masks = 1 << n
    masks = [_mask_from_int(partition, m) for m in range(n_masks)]
    scores = np.stack(score_coalitions(oracle, masks, batch_size=batch_size))

    all_ints = np.arange(n_masks, dtype=np.uint64)
    sizes = np.bitwise_count(all_ints).astype(np.int64)
    weights = _shapley_weights(n)

    values = np.empty((n, oracle.t_len), dtype=np.float64)
    for p in range(n):
        without = all_ints[(all_ints >> np.uint64(p)) & np.uint64(1) == 0]
        with_p = without | np.uint64(1 << p)
        deltas = scores[with_p.astype(np.int64)] - scores[without.astype(np.int64)]
        values[p] = (weights[sizes[without.astype(np.int64)]][:, None] * deltas).sum(axis=0)

    return ShapleyMatrix(
        values=values,
        partition=partition,
        method=Method.EXACT.value,
        baseline=scores[0],
        full=scores[-1],
        n_evaluations=n_masks,
    )


def estimate_permutation(
    oracle: ScoringOracle,
    partition: FeaturePartition,
    config: EstimatorConfig,
) -> ShapleyMatrix:
    """Permutation-walk estimator with antithetic pairing.

    Each sampled permutation is walked from the empty coalition, adding one
    player per step; the score delta of a step is one marginal sample for
    the player added. The same permutation is then walked again in reverse
    order, which couples every player's two samples to complementary
    predecessor sets and cancels all pairwise-interaction noise.

    One antithetic pair costs 2*(P-1) coalition evaluations (the empty and
    full endpoints are evaluated once and reused by every walk). Pairs are
    drawn until the next would exceed ``budget_m`` sampled evaluations, and
    each player's attribution is the mean of its marginal samples.
    """
    n = partition.n_players
    t_len = oracle.t_len
    _check_sampling_preconditions(partition, config)

    empty = CoalitionMask.empty(partition)
    full = CoalitionMask.full(partition)
    baseline_vec, full_vec = score_coalitions(
        oracle, [empty, full], batch_size=config.batch_size
    )
    n_evaluations = 2

    if n == 1:
        values = (full_vec - baseline_vec)[None, :]
        return ShapleyMatrix(
            values=values,
            partition=partition,
            method=Method.PERMUTATION.value,
            baseline=baseline_vec,
            full=full_vec,
            n_evaluations=n_evaluations,
        )

    pair_cost = 2 * (n - 1)
    n_pairs = config.budget_m // pair_cost
    if n_pairs < 1:
        raise BudgetError(
            f"budget_m={config.budget_m} cannot fund one antithetic "
            f"permutation pair costing {pair_cost} evaluations"
        )

    sums = np.zeros((n, t_len), dtype=np.float64)
    for pair_index in range(n_pairs):
        rng = _permutation_rng(config.seed, pair_index)
        forward = rng.permutation(n)
        walks = (forward, forward[::-1])

        prefix_masks = []
        for order in walks:
            bits = 0
            for player in order[:-1]:
                bits |= 1 << int(player)
                prefix_masks.append(_mask_from_int(partition, bits))
        prefix_scores = score_coalitions(
            oracle, prefix_masks, batch_size=config.batch_size
        )
        n_evaluations += len(prefix_masks)

        for walk_index, order in enumerate(walks):
            offset = walk_index * (n - 1)
            previous = baseline_vec
            for step, player in enumerate(order[:-1]):
                current = prefix_scores[offset + step]
                sums[int(player)] += current - previous
                previous = current
            sums[int(order[-1])] += full_vec - previous

    values = sums / (2 * n_pairs)
    return ShapleyMatrix(
        values=values,
        partition=partition,
        method=Method.PERMUTATION.value,
        baseline=baseline_vec,
        full=full_vec,
        n_evaluations=n_evaluations,
    )


def estimate_sampling(
    oracle: ScoringOracle,
    partition: FeaturePartition,
    config: EstimatorConfig,
) -> ShapleyMatrix:
    """Monte Carlo coalition-sampling estimator.

    For each player, coalitions from the rest of the players are drawn with
    the exact-average weighting by taking the player's predecessor set in a
    uniformly random permutation. Each draw costs two evaluations (the
    coalition with and without the player); the attribution is the mean of
    the score deltas. The per-player draw count splits ``budget_m`` evenly,
    and the cached empty/full endpoints are reused for free when a draw
    lands on them.
    """
    n = partition.n_players
    _check_sampling_preconditions(partition, config)

    empty = CoalitionMask.empty(partition)
    full = CoalitionMask.full(partition)
    baseline_vec, full_vec = score_coalitions(
        oracle, [empty, full], batch_size=config.batch_size
    )
    n_evaluations = 2
    full_bits = (1 << n) - 1
    endpoint_cache = {0: baseline_vec, full_bits: full_vec}

    draws_per_player = config.budget_m // (2 * n)

    values = np.empty((n, oracle.t_len), dtype=np.float64)
    for p in range(n):
        rng = _permutation_rng(config.seed, p)
        draws: list[tuple[int, int]] = []
        to_evaluate: list[int] = []
        for _ in range(draws_per_player):
            order = rng.permutation(n)
            position = int(np.nonzero(order == p)[0][0])
            bits = 0
            for player in order[:position]:
                bits |= 1 << int(player)
            with_bits = bits | (1 << p)
            draws.append((with_bits, bits))
            # Endpoint scores are reused for free; duplicates among sampled
            # coalitions are re-evaluated (no general memoization).
            to_evaluate.extend(b for b in (with_bits, bits) if b not in endpoint_cache)

        fresh = iter(
            score_coalitions(
                oracle,
                [_mask_from_int(partition, b) for b in to_evaluate],
                batch_size=config.batch_size,
            )
        )
        n_evaluations += len(to_evaluate)

        total = np.zeros(oracle.t_len, dtype=np.float64)
        for with_bits, bits in draws:
            score_with = endpoint_cache.get(with_bits)
            if score_with is None:
                score_with = next(fresh)
            score_without = endpoint_cache.get(bits)
            if score_without is None:
                score_without = next(fresh)
            total += score_with - score_without
        values[p] = total / draws_per_player

    return ShapleyMatrix(
        values=values,
        partition=partition,
        method=Method.SAMPLING.value,
        baseline=baseline_vec,
        full=full_vec,
        n_evaluations=n_evaluations,
    )


def estimate(
    oracle: ScoringOracle,
    partition: FeaturePartition,
    config: EstimatorConfig,
) -> ShapleyMatrix:
    """Dispatch to the configured estimator."""
    if config.method is Method.EXACT:
        return estimate_exact(oracle, partition, batch_size=config.batch_size)
    if config.method is Method.PERMUTATION:
        return estimate_permutation(oracle, partition, config)
    if config.method is Method.SAMPLING:
        return estimate_sampling(oracle, partition, config)
    raise EstimatorError(f"unknown method {config.method!r}")
