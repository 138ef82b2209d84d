"""Toy scoring oracles with known structure, for verification and demos.

Four kinds are provided:

* ``additive``: each player contributes a fixed per-token weight, so the
  exact attribution is the weight matrix itself (closed form).
* ``pairwise_interaction``: additive plus a payoff for every pair of
  players that is jointly present; exercises estimators on a game whose
  attributions are not the raw weights.
* ``block_diagonal``: additive, but player bin j only affects token bin j,
  producing a perfectly diagonal temporal-alignment matrix.
* ``snr_mixture``: additive with the audio weights scaled by a reliability
  factor r = lin/(1+lin), lin = 10^(snr_db/10). Clean audio (snr_db=inf)
  gives r=1; 0 dB gives r=0.5; degrading audio hands mass to video, which
  is the qualitative behavior the estimators and metrics must surface.

Weights are sampled uniformly on [-1, 1] and biases on [-3, -1] (roughly
log-probability scale) from the spec's seed, so a serialized spec fully
reproduces its oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .game import AUDIO, VIDEO, CoalitionMask, FeaturePartition, MaskError
from .metrics import split_ranges

ADDITIVE = "additive"
PAIRWISE_INTERACTION = "pairwise_interaction"
BLOCK_DIAGONAL = "block_diagonal"
SNR_MIXTURE = "snr_mixture"
TOY_KINDS = (ADDITIVE, PAIRWISE_INTERACTION, BLOCK_DIAGONAL, SNR_MIXTURE)

SNR_DB_MIN = -10.0


class ToySpecError(ValueError):
    """Toy game specification is invalid."""


def reliability_from_snr_db(snr_db: float) -> float:
    """Map an SNR in dB to an audio reliability factor in [0, 1].

    Monotone, with -inf -> 0, 0 dB -> 0.5, +inf -> 1. The real effect of
    noise on a trained model is model-internal; a toy only needs a
    monotone knob.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return 1.0
    linear = 10.0 ** (snr_db / 10.0)
    return linear / (1.0 + linear)


@dataclass(frozen=True)
class ToyGameSpec:
    """Declarative recipe for a toy oracle.

    ``n_blocks`` applies to ``block_diagonal`` only, ``snr_db`` to
    ``snr_mixture`` only, ``interaction_scale`` to
    ``pairwise_interaction`` only; the other kinds ignore them.
    """

    kind: str
    partition: FeaturePartition
    t_len: int
    seed: int = 0
    snr_db: float = math.inf
    n_blocks: int | None = None
    interaction_scale: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in TOY_KINDS:
            raise ToySpecError(f"unknown toy kind {self.kind!r}, expected one of {TOY_KINDS}")
        if self.t_len < 1:
            raise ToySpecError(f"t_len must be >= 1, got {self.t_len}")
        if self.kind == SNR_MIXTURE:
            if math.isnan(self.snr_db) or self.snr_db < SNR_DB_MIN:
                raise ToySpecError(
                    f"snr_db must be in [{SNR_DB_MIN}, +inf], got {self.snr_db}"
                )
        if self.kind == BLOCK_DIAGONAL:
            if self.n_blocks is None or self.n_blocks < 1:
                raise ToySpecError("block_diagonal requires n_blocks >= 1")
            if self.n_blocks > self.t_len:
                raise ToySpecError(
                    f"n_blocks {self.n_blocks} exceeds token count {self.t_len}"
                )
            for modality in (AUDIO, VIDEO):
                count = len(self.partition.players_of(modality))
                if count and self.n_blocks > count:
                    raise ToySpecError(
                        f"n_blocks {self.n_blocks} exceeds {modality} player count {count}"
                    )
        if self.kind == PAIRWISE_INTERACTION and self.interaction_scale <= 0:
            raise ToySpecError("interaction_scale must be positive")


class ToyOracle:
    """Deterministic in-process scoring oracle over explicit coefficients.

    score(mask) = bias + sum of present players' weights
                       + sum of pair payoffs whose both players are present.
    """

    thread_safe = True

    def __init__(
        self,
        partition: FeaturePartition,
        weights: np.ndarray,
        bias: np.ndarray,
        pairs: Sequence[tuple[int, int]] = (),
        pair_weights: np.ndarray | None = None,
    ) -> None:
        weights = np.array(weights, dtype=np.float64)
        bias = np.array(bias, dtype=np.float64)
        if weights.ndim != 2 or weights.shape[0] != partition.n_players:
            raise ToySpecError(
                f"weights shape {weights.shape} does not match "
                f"{partition.n_players} players"
            )
        if bias.shape != (weights.shape[1],):
            raise ToySpecError("bias length must equal the token count")
        pairs = tuple((int(a), int(b)) for a, b in pairs)
        if pairs:
            pair_weights = np.array(pair_weights, dtype=np.float64)
            if pair_weights.shape != (len(pairs), weights.shape[1]):
                raise ToySpecError("pair_weights must be (n_pairs, t_len)")
            for a, b in pairs:
                if not (0 <= a < partition.n_players and 0 <= b < partition.n_players):
                    raise ToySpecError(f"pair ({a}, {b}) out of player range")
        else:
            pair_weights = np.zeros((0, weights.shape[1]), dtype=np.float64)
        for arr in (weights, bias, pair_weights):
            arr.setflags(write=False)
        self.partition = partition
        self.weights = weights
        self.bias = bias
        self.pairs = pairs
        self.pair_weights = pair_weights
        self.t_len = int(weights.shape[1])
        self._pair_index = (
            np.array([a for a, _ in pairs], dtype=np.int64),
            np.array([b for _, b in pairs], dtype=np.int64),
        )

    def score(self, mask: CoalitionMask) -> np.ndarray:
        if mask.n_players != self.partition.n_players:
            raise MaskError(
                f"mask has {mask.n_players} bits, expected {self.partition.n_players}"
            )
        on = np.array(mask.bits, dtype=np.float64)
        total = self.bias + on @ self.weights
        if self.pairs:
            both_on = on[self._pair_index[0]] * on[self._pair_index[1]]
            total = total + both_on @ self.pair_weights
        return total

    def closed_form_shapley(self) -> np.ndarray | None:
        """Exact attribution matrix, available only for purely additive games.

        Returns None when pair payoffs are present; verify those against
        the brute-force reference instead.
        """
        if self.pairs:
            return None
        return self.weights.copy()


def build_toy_oracle(spec: ToyGameSpec) -> ToyOracle:
    """Materialize a spec into an oracle by sampling its coefficients."""
    partition = spec.partition
    n = partition.n_players
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    weights = rng.uniform(-1.0, 1.0, size=(n, spec.t_len))
    bias = rng.uniform(-3.0, -1.0, size=spec.t_len)

    pairs: tuple[tuple[int, int], ...] = ()
    pair_weights = None
    if spec.kind == PAIRWISE_INTERACTION:
        pairs = tuple((a, b) for a in range(n) for b in range(a + 1, n))
        scale = spec.interaction_scale
        pair_weights = rng.uniform(-scale, scale, size=(len(pairs), spec.t_len))
    elif spec.kind == BLOCK_DIAGONAL:
        weights = _block_mask_weights(spec, weights)
    elif spec.kind == SNR_MIXTURE:
        audio = partition.players_of(AUDIO)
        weights[audio.start : audio.stop] *= reliability_from_snr_db(spec.snr_db)

    return ToyOracle(partition, weights, bias, pairs=pairs, pair_weights=pair_weights)


def _block_mask_weights(spec: ToyGameSpec, weights: np.ndarray) -> np.ndarray:
    """Zero every weight outside the matching (player bin, token bin) block."""
    assert spec.n_blocks is not None
    keep = np.zeros_like(weights, dtype=bool)
    token_bins = split_ranges(spec.t_len, spec.n_blocks)
    for modality in (AUDIO, VIDEO):
        players = spec.partition.players_of(modality)
        if not len(players):
            continue
        player_bins = split_ranges(len(players), spec.n_blocks, start=players.start)
        for pbin, tbin in zip(player_bins, token_bins):
            keep[pbin.start : pbin.stop, tbin.start : tbin.stop] = True
    out = weights.copy()
    out[~keep] = 0.0
    return out


# --- serialization -----------------------------------------------------------
#
# A toy spec round-trips through a plain table (TOML- and JSON-compatible).
# The materialized coefficients are included so that any adapter, in any
# language, can score the identical game without replicating this module's
# sampling; absent coefficients are resampled from the seed.


def toy_spec_to_table(spec: ToyGameSpec, include_coefficients: bool = True) -> dict:
    table: dict = {
        "kind": spec.kind,
        "n_audio": spec.partition.n_audio,
        "n_video": spec.partition.n_video,
        "audio_group_size": spec.partition.audio_group_size,
        "video_group_size": spec.partition.video_group_size,
        "t_len": spec.t_len,
        "seed": spec.seed,
    }
    if spec.kind == SNR_MIXTURE:
        table["snr_db"] = float(spec.snr_db)
    if spec.kind == BLOCK_DIAGONAL:
        table["n_blocks"] = spec.n_blocks
    if spec.kind == PAIRWISE_INTERACTION:
        table["interaction_scale"] = float(spec.interaction_scale)
    if include_coefficients:
        oracle = build_toy_oracle(spec)
        table["weights"] = [[float(x) for x in row] for row in oracle.weights]
        table["bias"] = [float(x) for x in oracle.bias]
        if oracle.pairs:
            table["pairs"] = [[a, b] for a, b in oracle.pairs]
            table["pair_weights"] = [
                [float(x) for x in row] for row in oracle.pair_weights
            ]
    return table


def toy_spec_from_table(table: Mapping) -> ToyGameSpec:
    try:
        partition = FeaturePartition(
            n_audio=int(table["n_audio"]),
            n_video=int(table["n_video"]),
            audio_group_size=int(table.get("audio_group_size", 1)),
            video_group_size=int(table.get("video_group_size", 1)),
        )
        kind = str(table["kind"])
        spec = ToyGameSpec(
            kind=kind,
            partition=partition,
            t_len=int(table["t_len"]),
            seed=int(table.get("seed", 0)),
            snr_db=_parse_snr(table.get("snr_db", math.inf)),
            n_blocks=int(table["n_blocks"]) if "n_blocks" in table else None,
            interaction_scale=float(table.get("interaction_scale", 0.5)),
        )
    except KeyError as missing:
        raise ToySpecError(f"toy spec table is missing key {missing}") from None
    return spec


def toy_oracle_from_table(table: Mapping) -> ToyOracle:
    """Oracle from a table, preferring stored coefficients over resampling."""
    spec = toy_spec_from_table(table)
    if "weights" not in table:
        return build_toy_oracle(spec)
    weights = np.array(table["weights"], dtype=np.float64)
    bias = np.array(table["bias"], dtype=np.float64)
    pairs = tuple((int(a), int(b)) for a, b in table.get("pairs", []))
    pair_weights = (
        np.array(table["pair_weights"], dtype=np.float64) if pairs else None
    )
    return ToyOracle(spec.partition, weights, bias, pairs=pairs, pair_weights=pair_weights)


def _parse_snr(value: object) -> float:
    # Accepts numbers or strings; "inf" strings appear in JSON contexts
    # that cannot carry IEEE infinities.
    return float(value)  # type: ignore[arg-type]
