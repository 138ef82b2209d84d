"""Shared test oracles.

These are deliberately minimal implementations of the scoring contract so
tests can build games with hand-known structure (explicit coalition
values, counted calls, linear combinations) without touching the toy-game
machinery under test.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import pytest

from avshap import CoalitionMask, FeaturePartition


class FunctionOracle:
    """Scores from an explicit function of the coalition's player set."""

    thread_safe = True

    def __init__(
        self,
        partition: FeaturePartition,
        t_len: int,
        fn: Callable[[frozenset[int]], object],
    ) -> None:
        self.partition = partition
        self.t_len = t_len
        self._fn = fn

    def score(self, mask: CoalitionMask) -> np.ndarray:
        coalition = frozenset(p for p, b in enumerate(mask.bits) if b)
        return np.asarray(self._fn(coalition), dtype=np.float64).reshape(-1)


class TabularOracle:
    """Independent random value per (coalition, token): maximally non-additive.

    The full 2^P score table is drawn once from the seed, so the game is
    deterministic, has interactions of every order, and its exact
    attribution can still be computed by enumeration.
    """

    thread_safe = True

    def __init__(self, partition: FeaturePartition, t_len: int, seed: int) -> None:
        self.partition = partition
        self.t_len = t_len
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        self._table = rng.uniform(-2.0, 2.0, size=(1 << partition.n_players, t_len))

    def score(self, mask: CoalitionMask) -> np.ndarray:
        index = 0
        for p, b in enumerate(mask.bits):
            index |= b << p
        return self._table[index].copy()


class CountingOracle:
    """Wraps an oracle and counts every coalition evaluation."""

    def __init__(self, inner) -> None:
        self._inner = inner
        self.partition = inner.partition
        self.t_len = inner.t_len
        self.thread_safe = inner.thread_safe
        self.calls = 0

    def score(self, mask: CoalitionMask) -> np.ndarray:
        self.calls += 1
        return self._inner.score(mask)


@pytest.fixture
def two_player_game():
    """The four-coalition game with hand-computed attributions (1.5, 2.5)."""
    partition = FeaturePartition(n_audio=1, n_video=1)
    values = {
        frozenset(): 0.0,
        frozenset({0}): 1.0,
        frozenset({1}): 2.0,
        frozenset({0, 1}): 4.0,
    }
    return partition, FunctionOracle(partition, 1, lambda c: [values[c]])
