"""Modality-contribution analyses derived from a Shapley matrix.

All three analyses work on absolute attribution values: what matters is
how strongly a feature moved a token's log-probability, not in which
direction. Ratios of absolute mass are scale invariant, so rescaling a
matrix changes nothing here.

Zero-mass denominators are never defaulted (to 0.5, or to a uniform row);
they are flagged undefined so that aggregates can exclude them and report
the exclusion count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .game import AUDIO, MODALITIES, ShapleyMatrix


class MetricError(ValueError):
    """Analysis request is invalid for the given matrix."""


def split_ranges(total: int, parts: int, start: int = 0) -> tuple[range, ...]:
    """Split ``range(start, start + total)`` into contiguous near-equal parts.

    Earlier parts absorb the remainder: 7 items in 3 parts gives sizes
    (3, 2, 2). Deterministic by construction; the exact remainder rule
    matters less than every caller agreeing on it.
    """
    if parts < 1:
        raise MetricError(f"cannot split into {parts} parts")
    if parts > total:
        raise MetricError(f"cannot split {total} items into {parts} nonempty parts")
    base, remainder = divmod(total, parts)
    ranges = []
    cursor = start
    for i in range(parts):
        size = base + (1 if i < remainder else 0)
        ranges.append(range(cursor, cursor + size))
        cursor += size
    return tuple(ranges)


@dataclass(frozen=True)
class GlobalBalance:
    """Overall share of absolute attribution mass per modality.

    ``a_shap`` and ``v_shap`` sum to one when defined; 0.5 means balanced
    use of the two modalities. ``defined`` is False when the matrix
    carries no mass at all, in which case the shares are NaN.
    """

    a_shap: float
    v_shap: float
    total_mass: float
    defined: bool


@dataclass(frozen=True)
class GenerativeTrajectory:
    """Audio share per contiguous token window, tracing decoding progress."""

    windows: tuple[range, ...]
    a_shap_per_window: np.ndarray
    window_defined: np.ndarray

    @property
    def window_count(self) -> int:
        return len(self.windows)

    @property
    def v_shap_per_window(self) -> np.ndarray:
        return 1.0 - self.a_shap_per_window


@dataclass(frozen=True)
class AlignmentMatrix:
    """Row-stochastic map from feature bins to token windows for one modality.

    ``values[k, w]`` is the share of feature bin k's absolute attribution
    mass that lands in token window w. Rows with zero mass are NaN and
    flagged in ``row_defined``. ``diagonal_score`` is attached only for
    square matrices with every row defined.
    """

    modality: str
    values: np.ndarray
    feature_bins: tuple[range, ...]
    token_windows: tuple[range, ...]
    row_defined: np.ndarray
    diagonal_score: float | None


def global_shap(matrix: ShapleyMatrix) -> GlobalBalance:
    """Fraction of total absolute attribution mass carried by audio players."""
    mass = np.abs(matrix.values)
    total = float(mass.sum())
    if total == 0.0:
        return GlobalBalance(
            a_shap=math.nan, v_shap=math.nan, total_mass=0.0, defined=False
        )
    audio = matrix.partition.players_of(AUDIO)
    a_share = float(mass[audio.start : audio.stop].sum() / total)
    return GlobalBalance(
        a_shap=a_share, v_shap=1.0 - a_share, total_mass=total, defined=True
    )


def generative_shap(matrix: ShapleyMatrix, window_count: int) -> GenerativeTrajectory:
    """Audio share restricted to each of ``window_count`` token windows.

    With one window this reduces to the global balance. Windows with no
    attribution mass are flagged undefined rather than given a default.
    """
    t_len = matrix.t_len
    if not 1 <= window_count <= t_len:
        raise MetricError(
            f"window count {window_count} must be between 1 and {t_len} tokens"
        )
    windows = split_ranges(t_len, window_count)
    mass = np.abs(matrix.values)
    audio = matrix.partition.players_of(AUDIO)

    shares = np.empty(window_count, dtype=np.float64)
    defined = np.empty(window_count, dtype=bool)
    for i, window in enumerate(windows):
        total = float(mass[:, window.start : window.stop].sum())
        if total == 0.0:
            shares[i] = math.nan
            defined[i] = False
        else:
            shares[i] = float(
                mass[audio.start : audio.stop, window.start : window.stop].sum() / total
            )
            defined[i] = True
    shares.setflags(write=False)
    defined.setflags(write=False)
    return GenerativeTrajectory(
        windows=windows, a_shap_per_window=shares, window_defined=defined
    )


def alignment_shap(
    matrix: ShapleyMatrix,
    modality: str,
    feature_bins: int,
    token_windows: int,
) -> AlignmentMatrix:
    """Distribution of each feature bin's attribution mass over token windows.

    The modality's players are split into ``feature_bins`` contiguous bins
    and the tokens into ``token_windows`` contiguous windows; each row of
    the result is normalized to sum to one. A diagonal pattern means early
    features feed early tokens and late features late tokens.
    """
    if modality not in MODALITIES:
        raise MetricError(f"unknown modality {modality!r}")
    players = matrix.partition.players_of(modality)
    if len(players) < 1:
        raise MetricError(f"partition has no {modality} players")
    if not 1 <= feature_bins <= len(players):
        raise MetricError(
            f"{feature_bins} feature bins requested but {modality} has "
            f"{len(players)} players"
        )
    if not 1 <= token_windows <= matrix.t_len:
        raise MetricError(
            f"token window count {token_windows} must be between 1 and {matrix.t_len}"
        )

    bins = split_ranges(len(players), feature_bins, start=players.start)
    windows = split_ranges(matrix.t_len, token_windows)
    mass = np.abs(matrix.values)

    binned = np.empty((feature_bins, token_windows), dtype=np.float64)
    for k, fbin in enumerate(bins):
        for w, window in enumerate(windows):
            binned[k, w] = mass[fbin.start : fbin.stop, window.start : window.stop].sum()

    row_totals = binned.sum(axis=1)
    row_defined = row_totals > 0.0
    values = np.full_like(binned, math.nan)
    values[row_defined] = binned[row_defined] / row_totals[row_defined, None]

    score: float | None = None
    if feature_bins == token_windows and bool(row_defined.all()):
        score = diagonal_alignment_score(values)

    values.setflags(write=False)
    row_defined.setflags(write=False)
    return AlignmentMatrix(
        modality=modality,
        values=values,
        feature_bins=bins,
        token_windows=windows,
        row_defined=row_defined,
        diagonal_score=score,
    )


def diagonal_alignment_score(rows: np.ndarray | Sequence[Sequence[float]]) -> float:
    """Mean diagonal entry divided by mean off-diagonal entry.

    Defined for square row-stochastic matrices. 1.0 means no temporal
    structure (uniform rows); larger values mean stronger input-output
    alignment; a matrix with all mass on the diagonal returns +inf. This
    normalization is a convention of this library, chosen so the score is
    scale-free in the bin count; other tools may report a different
    diagonal statistic.
    """
    h = np.asarray(rows, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise MetricError(f"diagonal score needs a square matrix, got shape {h.shape}")
    k = h.shape[0]
    if not np.all(np.isfinite(h)) or np.any(h < -1e-12):
        raise MetricError("matrix entries must be finite and nonnegative")
    row_gap = np.abs(h.sum(axis=1) - 1.0)
    if float(row_gap.max()) > 1e-6:
        raise MetricError("rows must sum to 1")

    diag_mean = float(np.trace(h)) / k
    off_count = k * k - k
    if off_count == 0:
        return math.inf
    off_mean = (float(h.sum()) - float(np.trace(h))) / off_count
    if off_mean <= 0.0:
        return math.inf
    return diag_mean / off_mean


def aggregate_mean(values: Iterable[float]) -> tuple[float, int, int]:
    """Mean of the defined (non-NaN) values, with defined/undefined counts.

    Per-item averaging: each utterance contributes one ratio, so long
    utterances do not dominate a group mean.
    """
    defined = []
    undefined = 0
    for v in values:
        if v is None or math.isnan(v):
            undefined += 1
        else:
            defined.append(float(v))
    if not defined:
        return math.nan, 0, undefined
    return sum(defined) / len(defined), len(defined), undefined
