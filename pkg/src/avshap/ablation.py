"""Whole-modality drop ablation: how much score is lost without a modality."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import (
    CoalitionMask,
    FeaturePartition,
    GameError,
    MODALITIES,
    ScoringOracle,
    checked_score,
)


class AblationError(GameError, ValueError):
    """Requested ablation is impossible for the partition."""


@dataclass(frozen=True)
class AblationResult:
    """Per-token score drop from removing one modality entirely.

    ``delta_logprob_per_token[t]`` = full-input score minus the score with
    the modality's players masked; positive means the modality helped
    token t.
    """

    modality: str
    delta_logprob_per_token: np.ndarray
    mean_delta: float


def ablate_modality(
    oracle: ScoringOracle, partition: FeaturePartition, modality: str
) -> AblationResult:
    if modality not in MODALITIES:
        raise AblationError(f"unknown modality {modality!r}")
    dropped = partition.players_of(modality)
    if len(dropped) == 0:
        raise AblationError(f"partition has no {modality} players to ablate")

    keep = [p for p in range(partition.n_players) if p not in dropped]
    full_score = checked_score(oracle, CoalitionMask.full(partition))
    dropped_score = checked_score(
        oracle, CoalitionMask.from_players(partition, keep)
    )
    delta = full_score - dropped_score
    delta.setflags(write=False)
    return AblationResult(
        modality=modality,
        delta_logprob_per_token=delta,
        mean_delta=float(delta.mean()),
    )
