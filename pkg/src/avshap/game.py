"""Cooperative-game primitives for two-modality feature attribution.

An utterance's input is a row of N feature slots: audio slots first
(indices 0..n_audio-1), video slots after them. Consecutive same-modality
slots are grouped into *players* (mask groups) so that masking one player
removes equal temporal coverage from each modality even when the encoders
run at different frame rates. A coalition is a subset of players; scoring
a coalition means zero-masking every slot owned by players outside it and
asking the model for the log-probability of each token of a fixed,
pre-generated output sequence (teacher forcing).

Everything in this module is immutable after construction and safe to
share across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence, runtime_checkable

import numpy as np

AUDIO = "audio"
VIDEO = "video"
MODALITIES = (AUDIO, VIDEO)


class GameError(Exception):
    """Base error for game construction and scoring contracts."""


class PartitionError(GameError, ValueError):
    """Feature counts and group sizes do not form a valid partition."""


class MaskError(GameError, ValueError):
    """Coalition mask is malformed for its partition."""


class OracleContractError(GameError):
    """A scoring oracle broke its contract (shape, finiteness, determinism)."""


@dataclass(frozen=True)
class FeaturePartition:
    """Assignment of feature slots to modalities and mask groups.

    ``n_audio`` audio slots are controlled in runs of ``audio_group_size``
    consecutive slots per player, likewise for video. Counts must divide
    evenly: a trailing partial group would give one player less temporal
    coverage than its peers, which is exactly the bias grouping exists to
    remove.
    """

    n_audio: int
    n_video: int
    audio_group_size: int = 1
    video_group_size: int = 1

    def __post_init__(self) -> None:
        for name, value in (("n_audio", self.n_audio), ("n_video", self.n_video)):
            if not isinstance(value, int) or value < 0:
                raise PartitionError(f"{name} must be a nonnegative integer, got {value!r}")
        for name, value in (
            ("audio_group_size", self.audio_group_size),
            ("video_group_size", self.video_group_size),
        ):
            if not isinstance(value, int) or value < 1:
                raise PartitionError(f"{name} must be a positive integer, got {value!r}")
        if self.n_audio + self.n_video < 1:
            raise PartitionError("empty game: need at least one feature slot")
        if self.n_audio % self.audio_group_size != 0:
            raise PartitionError(
                f"audio slot count {self.n_audio} is not divisible by "
                f"audio group size {self.audio_group_size}"
            )
        if self.n_video % self.video_group_size != 0:
            raise PartitionError(
                f"video slot count {self.n_video} is not divisible by "
                f"video group size {self.video_group_size}"
            )

    @property
    def n_slots(self) -> int:
        return self.n_audio + self.n_video

    @property
    def n_audio_players(self) -> int:
        return self.n_audio // self.audio_group_size

    @property
    def n_video_players(self) -> int:
        return self.n_video // self.video_group_size

    @property
    def n_players(self) -> int:
        return self.n_audio_players + self.n_video_players

    def players_of(self, modality: str) -> range:
        """Contiguous player indices belonging to ``modality``."""
        if modality == AUDIO:
            return range(0, self.n_audio_players)
        if modality == VIDEO:
            return range(self.n_audio_players, self.n_players)
        raise PartitionError(f"unknown modality {modality!r}, expected 'audio' or 'video'")

    def modality_of_player(self, player: int) -> str:
        self._check_player(player)
        return AUDIO if player < self.n_audio_players else VIDEO

    def slots_of_player(self, player: int) -> range:
        """Slot indices owned by ``player`` (consecutive, same modality)."""
        self._check_player(player)
        if player < self.n_audio_players:
            start = player * self.audio_group_size
            return range(start, start + self.audio_group_size)
        vplayer = player - self.n_audio_players
        start = self.n_audio + vplayer * self.video_group_size
        return range(start, start + self.video_group_size)

    def player_of_slot(self, slot: int) -> int:
        if not 0 <= slot < self.n_slots:
            raise PartitionError(f"slot {slot} out of range for {self.n_slots} slots")
        if slot < self.n_audio:
            return slot // self.audio_group_size
        return self.n_audio_players + (slot - self.n_audio) // self.video_group_size

    def _check_player(self, player: int) -> None:
        if not 0 <= player < self.n_players:
            raise PartitionError(f"player {player} out of range for {self.n_players} players")


def make_partition(
    n_audio: int,
    n_video: int,
    audio_group_size: int = 1,
    video_group_size: int = 1,
) -> FeaturePartition:
    """Build a validated :class:`FeaturePartition`."""
    return FeaturePartition(n_audio, n_video, audio_group_size, video_group_size)


@dataclass(frozen=True)
class CoalitionMask:
    """Bit vector over players: 1 keeps the player's slots, 0 zeroes them."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) < 1:
            raise MaskError("mask must cover at least one player")
        if any(b not in (0, 1) for b in self.bits):
            raise MaskError(f"mask bits must be 0 or 1, got {self.bits!r}")

    @classmethod
    def empty(cls, partition: FeaturePartition) -> "CoalitionMask":
        return cls(bits=(0,) * partition.n_players)

    @classmethod
    def full(cls, partition: FeaturePartition) -> "CoalitionMask":
        return cls(bits=(1,) * partition.n_players)

    @classmethod
    def from_players(
        cls, partition: FeaturePartition, players: Iterable[int]
    ) -> "CoalitionMask":
        bits = [0] * partition.n_players
        for p in players:
            if not 0 <= p < partition.n_players:
                raise MaskError(f"player {p} out of range for {partition.n_players} players")
            bits[p] = 1
        return cls(bits=tuple(bits))

    @property
    def n_players(self) -> int:
        return len(self.bits)

    def players(self) -> tuple[int, ...]:
        """Indices of players present in the coalition."""
        return tuple(p for p, b in enumerate(self.bits) if b)


def expand_mask(partition: FeaturePartition, mask: CoalitionMask) -> np.ndarray:
    """Expand a player-level mask to a slot-level bit vector of length N.

    Slot i is 1 iff the player owning slot i has its bit set. Monotone by
    construction: setting an extra player bit can only set slot bits.
    """
    if mask.n_players != partition.n_players:
        raise MaskError(
            f"mask has {mask.n_players} bits but partition has "
            f"{partition.n_players} players"
        )
    slots = np.zeros(partition.n_slots, dtype=np.uint8)
    for player, bit in enumerate(mask.bits):
        if bit:
            slots[partition.slots_of_player(player)] = 1
    return slots


@runtime_checkable
class ScoringOracle(Protocol):
    """Callable contract bridging the engine to any scorer.

    ``score(mask)`` returns the natural-log probability of each of the
    ``t_len`` fixed output tokens when only the coalition's feature slots
    are present. Implementations must be deterministic: identical masks
    must yield identical vectors, otherwise estimates are irreproducible.
    ``thread_safe`` declares whether concurrent ``score`` calls are
    tolerated; the engine serializes calls to oracles that say no.

    Implementations may also provide ``score_batch(masks)`` returning one
    vector per mask in request order; the engine uses it when present.
    """

    t_len: int
    thread_safe: bool

    def score(self, mask: CoalitionMask) -> np.ndarray: ...


def checked_score(oracle: ScoringOracle, mask: CoalitionMask) -> np.ndarray:
    """Score one coalition and validate the oracle's reply."""
    return _validate_vector(oracle, mask, oracle.score(mask))


def score_coalitions(
    oracle: ScoringOracle,
    masks: Sequence[CoalitionMask],
    batch_size: int = 64,
) -> list[np.ndarray]:
    """Score many coalitions, batching through ``score_batch`` when available.

    Results are returned in request order regardless of batching, so callers
    get identical numbers for any ``batch_size``.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    out: list[np.ndarray] = []
    batched = getattr(oracle, "score_batch", None)
    for start in range(0, len(masks), batch_size):
        chunk = masks[start : start + batch_size]
        if batched is not None:
            vectors = batched(chunk)
            if len(vectors) != len(chunk):
                raise OracleContractError(
                    f"score_batch returned {len(vectors)} vectors for {len(chunk)} masks"
                )
        else:
            vectors = [oracle.score(m) for m in chunk]
        out.extend(_validate_vector(oracle, m, v) for m, v in zip(chunk, vectors))
    return out


def _validate_vector(
    oracle: ScoringOracle, mask: CoalitionMask, vector: object
) -> np.ndarray:
    arr = np.asarray(vector, dtype=np.float64)
    if arr.shape != (oracle.t_len,):
        raise OracleContractError(
            f"oracle returned shape {arr.shape}, expected ({oracle.t_len},) "
            f"for mask {list(mask.bits)}"
        )
    if not np.all(np.isfinite(arr)):
        raise OracleContractError(
            f"oracle returned non-finite scores for mask {list(mask.bits)}"
        )
    return arr


@dataclass(frozen=True)
class ShapleyMatrix:
    """Per-player, per-token attribution matrix with its provenance.

    ``values[p, t]`` is player p's contribution to the log-probability of
    token t. ``baseline`` and ``full`` are the score vectors of the empty
    and full coalitions. For exactly-computed matrices the efficiency
    axiom (column sums equal ``full - baseline``) is enforced at
    construction.
    """

    values: np.ndarray
    partition: FeaturePartition
    method: str
    baseline: np.ndarray
    full: np.ndarray
    n_evaluations: int = 0

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        baseline = np.array(self.baseline, dtype=np.float64)
        full = np.array(self.full, dtype=np.float64)
        p = self.partition.n_players
        if values.ndim != 2 or values.shape[0] != p or values.shape[1] < 1:
            raise OracleContractError(
                f"attribution matrix shape {values.shape} does not match "
                f"{p} players and at least one token"
            )
        t = values.shape[1]
        if baseline.shape != (t,) or full.shape != (t,):
            raise OracleContractError(
                "baseline/full vectors must have one entry per token"
            )
        if not (
            np.all(np.isfinite(values))
            and np.all(np.isfinite(baseline))
            and np.all(np.isfinite(full))
        ):
            raise OracleContractError("attribution values must be finite")
        if self.method in ("exact", "brute_force"):
            gap = np.abs(values.sum(axis=0) - (full - baseline))
            if gap.size and float(gap.max()) > 1e-9:
                raise OracleContractError(
                    f"efficiency violated by {float(gap.max()):.3e}; "
                    "the oracle may be non-deterministic"
                )
        for arr in (values, baseline, full):
            arr.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "baseline", baseline)
        object.__setattr__(self, "full", full)

    @property
    def n_players(self) -> int:
        return self.values.shape[0]

    @property
    def t_len(self) -> int:
        return self.values.shape[1]

    def slot_values(self) -> np.ndarray:
        """N x T view dividing each player's row equally among its slots.

        For display only; every metric operates on player rows, because
        attribution is only fair at mask-group granularity.
        """
        out = np.empty((self.partition.n_slots, self.t_len), dtype=np.float64)
        for player in range(self.n_players):
            slots = self.partition.slots_of_player(player)
            out[slots.start : slots.stop] = self.values[player] / len(slots)
        return out
