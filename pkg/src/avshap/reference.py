"""Reference Shapley computation by direct subset enumeration.

Deliberately implemented apart from the estimators: it walks explicit
player subsets with itertools and factorial weights and shares no
coalition-walking code with them, so agreement between the two paths is a
meaningful check rather than a tautology. It trades speed for
transparency and is only intended for small games.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .game import CoalitionMask, FeaturePartition, ScoringOracle, ShapleyMatrix, checked_score

BRUTE_FORCE_PLAYER_CAP = 16


def brute_force_shapley(
    oracle: ScoringOracle, partition: FeaturePartition
) -> ShapleyMatrix:
    """Average each player's marginal contribution over all subsets.

    For every player p and every subset C of the other players, the score
    gain of adding p to C is weighted by |C|! (P-1-|C|)! / P!. Oracle
    replies are cached per coalition, so each of the 2^P coalitions is
    scored once.
    """
    n = partition.n_players
    if n > BRUTE_FORCE_PLAYER_CAP:
        raise ValueError(
            f"brute force refuses {n} players (cap {BRUTE_FORCE_PLAYER_CAP})"
        )

    cache: dict[frozenset[int], np.ndarray] = {}

    def value(players: frozenset[int]) -> np.ndarray:
        if players not in cache:
            cache[players] = checked_score(
                oracle, CoalitionMask.from_players(partition, players)
            )
        return cache[players]

    everyone = range(n)
    values = np.zeros((n, oracle.t_len), dtype=np.float64)
    for p in everyone:
        others = [q for q in everyone if q != p]
        for size in range(n):
            weight = (
                math.factorial(size) * math.factorial(n - size - 1) / math.factorial(n)
            )
            for combo in combinations(others, size):
                coalition = frozenset(combo)
                gain = value(coalition | {p}) - value(coalition)
                values[p] += weight * gain

    return ShapleyMatrix(
        values=values,
        partition=partition,
        method="brute_force",
        baseline=value(frozenset()),
        full=value(frozenset(everyone)),
        n_evaluations=len(cache),
    )
