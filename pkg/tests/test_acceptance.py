"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines on the console.
"""

import hashlib
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from avshap import (
    AUDIO,
    CoalitionMask,
    EstimatorConfig,
    FeaturePartition,
    Method,
    ShapleyMatrix,
    ToyGameSpec,
    ToyOracle,
    alignment_shap,
    build_toy_oracle,
    diagonal_alignment_score,
    estimate_exact,
    estimate_permutation,
    estimate_sampling,
    generative_shap,
    global_shap,
)
from avshap.reference import brute_force_shapley
from avshap.report import run, run_config_from_table
from conftest import FunctionOracle, TabularOracle

SNR_GRID = [-10.0, -5.0, 0.0, 5.0, 10.0, math.inf]


@contextmanager
def criterion(number: int, name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} {name}: FAIL")
        raise
    print(f"ACCEPTANCE {number} {name}: PASS")


def _random_interaction_game(rng: np.random.Generator):
    n_players = int(rng.integers(2, 13))
    n_audio = int(rng.integers(0, n_players + 1))
    partition = FeaturePartition(n_audio=n_audio, n_video=n_players - n_audio)
    spec = ToyGameSpec(
        kind="pairwise_interaction",
        partition=partition,
        t_len=int(rng.integers(1, 9)),
        seed=int(rng.integers(0, 2**31)),
    )
    return build_toy_oracle(spec), partition


def test_criterion_1_exact_matches_brute_force():
    with criterion(1, "exact vs brute force on 50 random games"):
        rng = np.random.default_rng(20240817)
        started = time.monotonic()
        worst = 0.0
        for _ in range(50):
            oracle, partition = _random_interaction_game(rng)
            fast = estimate_exact(oracle, partition)
            slow = brute_force_shapley(oracle, partition)
            worst = max(worst, float(np.abs(fast.values - slow.values).max()))
        elapsed = time.monotonic() - started
        assert worst <= 1e-10, f"max |diff| = {worst:.3e}"
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_criterion_2_axiom_suite():
    with criterion(2, "efficiency / null player / symmetry / linearity"):
        # efficiency, on an interaction game
        partition = FeaturePartition(n_audio=4, n_video=3)
        spec = ToyGameSpec(
            kind="pairwise_interaction", partition=partition, t_len=5, seed=99
        )
        matrix = estimate_exact(build_toy_oracle(spec), partition)
        gap = matrix.values.sum(axis=0) - (matrix.full - matrix.baseline)
        assert np.abs(gap).max() <= 1e-9

        # null player: exact and permutation give literal zero
        null_partition = FeaturePartition(n_audio=3, n_video=2)
        inner = TabularOracle(FeaturePartition(n_audio=2, n_video=2), 3, seed=7)
        ignored = 2

        def without_ignored(coalition):
            reduced = frozenset(
                p if p < ignored else p - 1 for p in coalition if p != ignored
            )
            return inner.score(CoalitionMask.from_players(inner.partition, reduced))

        null_oracle = FunctionOracle(null_partition, 3, without_ignored)
        exact_values = estimate_exact(null_oracle, null_partition).values
        assert np.abs(exact_values[ignored]).max() == 0.0
        perm_values = estimate_permutation(
            null_oracle,
            null_partition,
            EstimatorConfig(method=Method.PERMUTATION, budget_m=160, seed=3),
        ).values
        assert np.abs(perm_values[ignored]).max() == 0.0

        # symmetry: interchangeable players receive equal attribution
        sym_partition = FeaturePartition(n_audio=1, n_video=2)
        symmetric = FunctionOracle(
            sym_partition,
            2,
            lambda c: [
                len({0, 1} & c) * 1.7 + (0.9 if 2 in c else 0.0),
                math.cos(len({0, 1} & c)),
            ],
        )
        sym_values = estimate_exact(symmetric, sym_partition).values
        assert np.abs(sym_values[0] - sym_values[1]).max() <= 1e-9

        # linearity over two independent games
        lin_partition = FeaturePartition(n_audio=2, n_video=2)
        f = TabularOracle(lin_partition, 2, seed=21)
        g = TabularOracle(lin_partition, 2, seed=22)
        a, b = 1.25, -2.0
        combo = FunctionOracle(
            lin_partition,
            2,
            lambda c: a * f.score(CoalitionMask.from_players(lin_partition, c))
            + b * g.score(CoalitionMask.from_players(lin_partition, c)),
        )
        lhs = estimate_exact(combo, lin_partition).values
        rhs = (
            a * estimate_exact(f, lin_partition).values
            + b * estimate_exact(g, lin_partition).values
        )
        assert np.abs(lhs - rhs).max() <= 1e-9


def test_criterion_3_estimator_convergence():
    with criterion(3, "sampled estimators converge at M=2000 over 20 seeds"):
        started = time.monotonic()
        partition = FeaturePartition(n_audio=6, n_video=6)
        spec = ToyGameSpec(
            kind="pairwise_interaction", partition=partition, t_len=4, seed=1234
        )
        oracle = build_toy_oracle(spec)
        exact = estimate_exact(oracle, partition).values
        value_range = float(exact.max() - exact.min())

        for estimator, tolerance in (
            (estimate_permutation, 0.01),
            (estimate_sampling, 0.02),
        ):
            total = np.zeros_like(exact)
            for seed in range(20):
                config = EstimatorConfig(
                    method=Method.PERMUTATION, budget_m=2000, seed=seed
                )
                total += estimator(oracle, partition, config).values
            seed_mean = total / 20
            worst = float(np.abs(seed_mean - exact).max())
            assert worst <= tolerance * value_range, (
                f"{estimator.__name__}: {worst:.4e} > "
                f"{tolerance} * {value_range:.3f}"
            )
        elapsed = time.monotonic() - started
        assert elapsed < 120.0, f"took {elapsed:.1f}s"


def test_criterion_4_snr_shift_shape():
    with criterion(4, "audio share tracks SNR (10 seeds, exact)"):
        partition = FeaturePartition(n_audio=5, n_video=4)
        for seed in range(10):
            shares = {}
            for snr_db in SNR_GRID:
                spec = ToyGameSpec(
                    kind="snr_mixture",
                    partition=partition,
                    t_len=4,
                    seed=seed,
                    snr_db=snr_db,
                )
                matrix = estimate_exact(build_toy_oracle(spec), partition)
                shares[snr_db] = global_shap(matrix).a_shap
            ordered = [shares[s] for s in SNR_GRID]
            assert all(
                later > earlier for earlier, later in zip(ordered, ordered[1:])
            ), f"seed {seed}: not strictly increasing: {ordered}"

            # at 0 dB the share must match the closed form implied by a
            # 0.5 reliability applied to this seed's clean weight masses
            clean = build_toy_oracle(
                ToyGameSpec(
                    kind="snr_mixture",
                    partition=partition,
                    t_len=4,
                    seed=seed,
                    snr_db=math.inf,
                )
            )
            audio_mass = float(np.abs(clean.weights[:5]).sum())
            video_mass = float(np.abs(clean.weights[5:]).sum())
            closed_form = 0.5 * audio_mass / (0.5 * audio_mass + video_mass)
            assert abs(shares[0.0] - closed_form) <= 0.05


def test_criterion_5_metric_identities():
    with criterion(5, "metric identities and scale invariance"):
        partition = FeaturePartition(n_audio=4, n_video=3)
        spec = ToyGameSpec(
            kind="pairwise_interaction", partition=partition, t_len=9, seed=55
        )
        matrix = estimate_exact(build_toy_oracle(spec), partition)

        balance = global_shap(matrix)
        assert abs(balance.a_shap + balance.v_shap - 1.0) <= 1e-9

        single = generative_shap(matrix, 1)
        assert abs(single.a_shap_per_window[0] - balance.a_shap) <= 1e-12

        trajectory = generative_shap(matrix, 4)
        mass = np.abs(matrix.values)
        window_masses = np.array(
            [mass[:, w.start : w.stop].sum() for w in trajectory.windows]
        )
        recombined = float(
            (trajectory.a_shap_per_window * window_masses).sum() / window_masses.sum()
        )
        assert abs(recombined - balance.a_shap) <= 1e-9

        for modality, bins in ((AUDIO, 4), ("video", 3)):
            alignment = alignment_shap(matrix, modality, bins, 3)
            defined_rows = alignment.values[alignment.row_defined]
            assert np.abs(defined_rows.sum(axis=1) - 1.0).max() <= 1e-9

        scaled = ShapleyMatrix(
            values=3.0 * matrix.values,
            partition=partition,
            method="permutation",
            baseline=matrix.baseline,
            full=matrix.full,
        )
        assert abs(global_shap(scaled).a_shap - balance.a_shap) <= 1e-12
        assert (
            np.abs(
                generative_shap(scaled, 4).a_shap_per_window
                - trajectory.a_shap_per_window
            ).max()
            <= 1e-12
        )
        base_alignment = alignment_shap(matrix, AUDIO, 3, 3)
        scaled_alignment = alignment_shap(scaled, AUDIO, 3, 3)
        assert np.abs(scaled_alignment.values - base_alignment.values).max() <= 1e-12
        assert (
            abs(scaled_alignment.diagonal_score - base_alignment.diagonal_score)
            <= 1e-12 * max(1.0, abs(base_alignment.diagonal_score))
        )


def test_criterion_6_temporal_alignment_shape():
    with criterion(6, "block-diagonal game aligns; uniform game does not"):
        partition = FeaturePartition(n_audio=10, n_video=0)
        spec = ToyGameSpec(
            kind="block_diagonal", partition=partition, t_len=10, seed=42, n_blocks=10
        )
        matrix = estimate_exact(build_toy_oracle(spec), partition)
        alignment = alignment_shap(matrix, AUDIO, 10, 10)
        off_diagonal = alignment.values - np.diag(np.diag(alignment.values))
        assert np.abs(off_diagonal).max() <= 1e-9
        assert alignment.diagonal_score == math.inf

        uniform_partition = FeaturePartition(n_audio=6, n_video=6)
        uniform = ToyOracle(
            uniform_partition,
            np.full((12, 8), 0.4),
            np.full(8, -2.0),
        )
        uniform_matrix = estimate_exact(uniform, uniform_partition)
        uniform_alignment = alignment_shap(uniform_matrix, AUDIO, 4, 4)
        assert abs(uniform_alignment.diagonal_score - 1.0) <= 1e-9
        assert (
            abs(diagonal_alignment_score(uniform_alignment.values) - 1.0) <= 1e-9
        )


def test_criterion_7_deterministic_reports(tmp_path):
    with criterion(7, "byte-identical reports across reruns and pool sizes"):
        def config_table(out_dir, workers):
            return {
                "seed": 77,
                "estimator": {"method": "permutation", "budget": 600},
                "analyses": {
                    "global": True,
                    "generative_windows": 3,
                    "alignment": [
                        {"modality": "audio", "feature_bins": 3, "token_windows": 3}
                    ],
                    "ablation": ["audio", "video"],
                },
                "oracle": {
                    "kind": "toy",
                    "sweep": {
                        "snr_db": [-10.0, 0.0, math.inf],
                        "seeds": [0, 1, 2, 3, 4],
                        "toy": {
                            "kind": "snr_mixture",
                            "n_audio": 6,
                            "n_video": 3,
                            "t_len": 6,
                        },
                    },
                },
                "output": {
                    "directory": str(out_dir),
                    "formats": ["csv", "json"],
                    "workers": workers,
                },
            }

        def checksums(directory):
            return {
                p.name: hashlib.sha256(p.read_bytes()).hexdigest()
                for p in sorted(directory.iterdir())
            }

        runs = {}
        for label, workers in (("first", 1), ("second", 1), ("pool8", 8)):
            out = tmp_path / label
            report = run(run_config_from_table(config_table(out, workers)))
            assert not report.failures
            runs[label] = checksums(out)
        assert runs["first"] == runs["second"]
        assert runs["first"] == runs["pool8"]
