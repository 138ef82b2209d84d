"""Run orchestration and report emission.

A run scores one or many utterances (in-process toy games or a bridged
adapter), estimates each one's attribution matrix, derives the requested
analyses, and writes plot-ready long-format CSVs plus a hierarchical JSON
mirror. Reports are byte-identical across reruns of the same config and
seed: per-utterance estimator seeds are split from the root seed by
utterance index, assembly is ordered by utterance id, floats are written
with shortest round-trip precision, and nothing time- or path-dependent
is embedded.

One utterance failing (adapter error, undefined analysis bounds) is
recorded and the run continues; only transport-level failures that
prevent any scoring at all are fatal.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import tomlio
from .ablation import AblationResult, ablate_modality
from .bridge import (
    BridgeClient,
    BridgeConfig,
    BridgedOracle,
    BridgeError,
    HandshakeError,
    StdioTransport,
    TcpTransport,
    TransportError,
)
from .estimators import EstimatorConfig, EstimatorError, Method, estimate
from .game import GameError, MODALITIES, ScoringOracle, FeaturePartition
from .metrics import (
    AlignmentMatrix,
    GenerativeTrajectory,
    GlobalBalance,
    MetricError,
    aggregate_mean,
    alignment_shap,
    generative_shap,
    global_shap,
)
from .synthetic import SNR_MIXTURE, ToySpecError, toy_oracle_from_table
from .wer import wer as compute_wer

DEFAULT_WER_BUCKET_EDGES = (0.0, 0.05, 0.15, 0.30, 0.50)
DEFAULT_DURATION_BUCKET_SECONDS = 1.0


class ConfigError(Exception):
    """Run configuration is unreadable or inconsistent."""


class OracleFatalError(Exception):
    """No oracle could be reached at all; nothing was scored."""


@dataclass(frozen=True)
class AlignmentRequest:
    modality: str
    feature_bins: int
    token_windows: int


@dataclass(frozen=True)
class AnalysisRequest:
    global_balance: bool = True
    generative_windows: int | None = None
    alignments: tuple[AlignmentRequest, ...] = ()
    ablations: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not (
            self.global_balance
            or self.generative_windows
            or self.alignments
            or self.ablations
        ):
            raise ConfigError("at least one analysis must be requested")


@dataclass(frozen=True)
class ToyUtteranceSpec:
    utterance_id: str
    toy_table: Mapping
    tags: Mapping[str, str] = field(default_factory=dict)
    reference: str | None = None
    hypothesis: str | None = None


@dataclass(frozen=True)
class RunConfig:
    seed: int
    estimator: EstimatorConfig
    analyses: AnalysisRequest
    toy_utterances: tuple[ToyUtteranceSpec, ...] = ()
    bridge: BridgeConfig | None = None
    out_dir: Path = Path("out")
    formats: tuple[str, ...] = ("csv", "json")
    workers: int = 0  # 0 = available parallelism
    wer_bucket_edges: tuple[float, ...] = DEFAULT_WER_BUCKET_EDGES
    duration_bucket_seconds: float = DEFAULT_DURATION_BUCKET_SECONDS

    def __post_init__(self) -> None:
        if bool(self.toy_utterances) == bool(self.bridge):
            raise ConfigError("configure exactly one oracle source: toy or bridge")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")
        for fmt in self.formats:
            if fmt not in ("csv", "json"):
                raise ConfigError(f"unknown report format {fmt!r}")
        if not self.formats:
            raise ConfigError("at least one report format is required")


@dataclass
class UtteranceRecord:
    utterance_id: str
    tags: dict[str, str]
    method: str
    n_evaluations: int
    global_balance: GlobalBalance | None = None
    trajectory: GenerativeTrajectory | None = None
    alignments: list[AlignmentMatrix] = field(default_factory=list)
    ablations: list[AblationResult] = field(default_factory=list)
    wer: float | None = None


@dataclass
class UtteranceFailure:
    utterance_id: str
    message: str


@dataclass
class GroupRow:
    value: str
    mean_a_shap: float
    n_defined: int
    n_undefined: int


@dataclass
class AnalysisReport:
    records: list[UtteranceRecord]
    failures: list[UtteranceFailure]
    aggregates: dict[str, list[GroupRow]]
    seed: int
    method: str


# --- config parsing ----------------------------------------------------------


def load_run_config(path: str | Path, overrides: Mapping | None = None) -> RunConfig:
    try:
        data = tomlio.load_path(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except Exception as exc:  # tomllib.TOMLDecodeError and friends
        raise ConfigError(f"cannot parse config {path}: {exc}")
    return run_config_from_table(data, overrides or {})


def run_config_from_table(data: Mapping, overrides: Mapping | None = None) -> RunConfig:
    overrides = dict(overrides or {})
    try:
        estimator_table = dict(data.get("estimator", {}))
        method_name = overrides.get("method") or estimator_table.get("method", "exact")
        try:
            method = Method(str(method_name))
        except ValueError:
            raise ConfigError(
                f"unknown estimator method {method_name!r}; "
                f"expected exact, permutation, or sampling"
            )
        estimator = EstimatorConfig(
            method=method,
            budget_m=int(overrides.get("budget") or estimator_table.get("budget", 2000)),
            seed=int(overrides.get("seed", data.get("seed", 0))),
            batch_size=int(estimator_table.get("batch_size", 64)),
        )

        analyses = _parse_analyses(data.get("analyses", {"global": True}))
        toy_utterances, bridge = _parse_oracle_source(data.get("oracle", {}))

        output_table = dict(data.get("output", {}))
        out_dir = Path(overrides.get("out") or output_table.get("directory", "out"))
        formats_value = overrides.get("formats") or output_table.get(
            "formats", ["csv", "json"]
        )
        if isinstance(formats_value, str):
            formats_value = [f for f in formats_value.split(",") if f]
        workers = int(overrides.get("workers", output_table.get("workers", 0)))

        report_table = dict(data.get("report", {}))
        wer_edges = tuple(
            float(x)
            for x in report_table.get("wer_bucket_edges", DEFAULT_WER_BUCKET_EDGES)
        )
        duration_bucket = float(
            report_table.get("duration_bucket_seconds", DEFAULT_DURATION_BUCKET_SECONDS)
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, EstimatorError) as exc:
        raise ConfigError(f"invalid run config: {exc}")

    return RunConfig(
        seed=estimator.seed,
        estimator=estimator,
        analyses=analyses,
        toy_utterances=toy_utterances,
        bridge=bridge,
        out_dir=out_dir,
        formats=tuple(formats_value),
        workers=workers,
        wer_bucket_edges=wer_edges,
        duration_bucket_seconds=duration_bucket,
    )


def _parse_analyses(table: Mapping) -> AnalysisRequest:
    alignments = []
    for entry in table.get("alignment", []):
        alignments.append(
            AlignmentRequest(
                modality=str(entry["modality"]),
                feature_bins=int(entry["feature_bins"]),
                token_windows=int(entry["token_windows"]),
            )
        )
    ablations = tuple(str(m) for m in table.get("ablation", []))
    for modality in ablations:
        if modality not in MODALITIES:
            raise ConfigError(f"unknown ablation modality {modality!r}")
    generative = table.get("generative_windows")
    return AnalysisRequest(
        global_balance=bool(table.get("global", True)),
        generative_windows=int(generative) if generative else None,
        alignments=tuple(alignments),
        ablations=ablations,
    )


def _parse_oracle_source(
    table: Mapping,
) -> tuple[tuple[ToyUtteranceSpec, ...], BridgeConfig | None]:
    kind = table.get("kind", "toy")
    if kind == "bridge":
        bridge_table = table.get("bridge")
        if not bridge_table:
            raise ConfigError("oracle.kind = 'bridge' requires an [oracle.bridge] table")
        return (), _parse_bridge(bridge_table)
    if kind != "toy":
        raise ConfigError(f"unknown oracle kind {kind!r}")

    utterances: list[ToyUtteranceSpec] = []
    for index, entry in enumerate(table.get("utterances", [])):
        toy_table = entry.get("toy")
        if toy_table is None:
            raise ConfigError(f"utterance #{index} is missing its [.. .toy] table")
        utterances.append(
            ToyUtteranceSpec(
                utterance_id=str(entry.get("id", f"utt-{index:03d}")),
                toy_table=toy_table,
                tags={str(k): str(v) for k, v in entry.get("tags", {}).items()},
                reference=entry.get("reference"),
                hypothesis=entry.get("hypothesis"),
            )
        )
    utterances.extend(_expand_sweep(table.get("sweep")))
    if not utterances:
        raise ConfigError("toy oracle source declares no utterances")
    seen: set[str] = set()
    for utt in utterances:
        if utt.utterance_id in seen:
            raise ConfigError(f"duplicate utterance id {utt.utterance_id!r}")
        seen.add(utt.utterance_id)
    return tuple(utterances), None


def _expand_sweep(sweep: Mapping | None) -> list[ToyUtteranceSpec]:
    if not sweep:
        return []
    base = sweep.get("toy")
    if base is None:
        raise ConfigError("[oracle.sweep] requires an [oracle.sweep.toy] base table")
    seeds = [int(s) for s in sweep.get("seeds", [int(base.get("seed", 0))])]
    snr_values = sweep.get("snr_db")
    if snr_values is not None and base.get("kind") != SNR_MIXTURE:
        raise ConfigError("an snr_db sweep needs a snr_mixture base game")

    out = []
    for seed in seeds:
        if snr_values is None:
            table = dict(base)
            table["seed"] = seed
            out.append(
                ToyUtteranceSpec(
                    utterance_id=f"seed{seed}",
                    toy_table=table,
                    tags={"seed": str(seed)},
                )
            )
            continue
        for snr in snr_values:
            snr_f = float(snr)
            table = dict(base)
            table["seed"] = seed
            table["snr_db"] = snr_f
            label = _format_number(snr_f)
            out.append(
                ToyUtteranceSpec(
                    utterance_id=f"seed{seed}_snr{label}",
                    toy_table=table,
                    tags={"seed": str(seed), "snr_db": label},
                )
            )
    return out


def _parse_bridge(table: Mapping) -> BridgeConfig:
    transport_kind = table.get("transport", "stdio")
    if transport_kind == "stdio":
        command = table.get("command")
        if not command:
            raise ConfigError("stdio transport requires a command list")
        transport: StdioTransport | TcpTransport = StdioTransport(
            command=tuple(str(c) for c in command)
        )
    elif transport_kind == "tcp":
        transport = TcpTransport(host=str(table["host"]), port=int(table["port"]))
    else:
        raise ConfigError(f"unknown transport {transport_kind!r}")
    return BridgeConfig(
        transport=transport,
        handshake_timeout_ms=int(table.get("handshake_timeout_ms", 10_000)),
        call_timeout_ms=int(table.get("call_timeout_ms", 30_000)),
        max_batch=int(table.get("max_batch", 32)),
    )


# --- running -----------------------------------------------------------------


@dataclass
class _Job:
    index: int
    utterance_id: str
    tags: dict[str, str]
    make_oracle: Callable[[], tuple[ScoringOracle, FeaturePartition]]
    wer_value: float | None = None


def _derived_seed(root_seed: int, index: int) -> int:
    state = np.random.SeedSequence(entropy=root_seed, spawn_key=(index,)).generate_state(
        1, np.uint64
    )
    return int(state[0])


def run(config: RunConfig) -> AnalysisReport:
    """Execute the configured run and write its reports."""
    client: BridgeClient | None = None
    try:
        if config.bridge is not None:
            try:
                client = BridgeClient.connect(config.bridge)
            except (TransportError, HandshakeError) as exc:
                raise OracleFatalError(str(exc)) from exc
            jobs = _bridge_jobs(client)
        else:
            jobs = _build_jobs(config)
        if not jobs:
            raise OracleFatalError("oracle offers no utterances to score")

        workers = config.workers or os.cpu_count() or 1
        results: list[UtteranceRecord | UtteranceFailure] = [None] * len(jobs)  # type: ignore[list-item]

        def process(job: _Job) -> UtteranceRecord | UtteranceFailure:
            try:
                return _process_utterance(job, config)
            except (GameError, BridgeError, EstimatorError, MetricError, ToySpecError) as exc:
                return UtteranceFailure(job.utterance_id, f"{type(exc).__name__}: {exc}")

        if workers == 1:
            for i, job in enumerate(jobs):
                results[i] = process(job)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for i, outcome in enumerate(pool.map(process, jobs)):
                    results[i] = outcome

        records = sorted(
            (r for r in results if isinstance(r, UtteranceRecord)),
            key=lambda r: r.utterance_id,
        )
        failures = sorted(
            (r for r in results if isinstance(r, UtteranceFailure)),
            key=lambda r: r.utterance_id,
        )
        report = AnalysisReport(
            records=records,
            failures=failures,
            aggregates=_aggregate(records, config),
            seed=config.seed,
            method=config.estimator.method.value,
        )
        write_report(report, config)
        return report
    finally:
        if client is not None:
            client.close()


def _build_jobs(config: RunConfig) -> list[_Job]:
    jobs = []
    for index, utt in enumerate(config.toy_utterances):
        wer_value: float | None = None
        if utt.reference is not None and utt.hypothesis is not None:
            wer_value = compute_wer(utt.reference, utt.hypothesis)
        elif "wer" in utt.tags:
            try:
                wer_value = float(utt.tags["wer"])
            except ValueError:
                wer_value = None

        def make_oracle(table=utt.toy_table):
            oracle = toy_oracle_from_table(table)
            return oracle, oracle.partition

        jobs.append(
            _Job(
                index=index,
                utterance_id=utt.utterance_id,
                tags=dict(utt.tags),
                make_oracle=make_oracle,
                wer_value=wer_value,
            )
        )
    return jobs


def _bridge_jobs(client: BridgeClient) -> list[_Job]:
    jobs = []
    for index, manifest in enumerate(client.manifests):
        def make_oracle(uid=manifest.utterance_id):
            oracle = BridgedOracle(client, uid)
            return oracle, oracle.partition

        wer_value = None
        if "wer" in manifest.tags:
            try:
                wer_value = float(manifest.tags["wer"])
            except ValueError:
                wer_value = None
        jobs.append(
            _Job(
                index=index,
                utterance_id=manifest.utterance_id,
                tags=dict(manifest.tags),
                make_oracle=make_oracle,
                wer_value=wer_value,
            )
        )
    return jobs


def _process_utterance(job: _Job, config: RunConfig) -> UtteranceRecord:
    oracle, partition = job.make_oracle()
    estimator_config = replace(
        config.estimator, seed=_derived_seed(config.seed, job.index)
    )
    matrix = estimate(oracle, partition, estimator_config)

    record = UtteranceRecord(
        utterance_id=job.utterance_id,
        tags=job.tags,
        method=matrix.method,
        n_evaluations=matrix.n_evaluations,
        wer=job.wer_value,
    )
    requested = config.analyses
    if requested.global_balance:
        record.global_balance = global_shap(matrix)
    if requested.generative_windows:
        record.trajectory = generative_shap(matrix, requested.generative_windows)
    for alignment in requested.alignments:
        record.alignments.append(
            alignment_shap(
                matrix,
                alignment.modality,
                alignment.feature_bins,
                alignment.token_windows,
            )
        )
    for modality in requested.ablations:
        record.ablations.append(ablate_modality(oracle, partition, modality))
    return record


# --- aggregation -------------------------------------------------------------


def _wer_bucket(value: float, edges: Sequence[float]) -> str:
    for low, high in zip(edges, list(edges[1:]) + [math.inf]):
        if low <= value < high:
            if math.isinf(high):
                return f"[{_format_number(low)},inf)"
            return f"[{_format_number(low)},{_format_number(high)})"
    return f"(-inf,{_format_number(edges[0])})"


def _duration_bucket(seconds: float, width: float) -> str:
    k = math.floor(seconds / width)
    return f"[{_format_number(k * width)},{_format_number((k + 1) * width)})s"


def _format_number(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if value == int(value):
        return str(int(value))
    return repr(value)


def _aggregate(
    records: Sequence[UtteranceRecord], config: RunConfig
) -> dict[str, list[GroupRow]]:
    def a_shap_of(record: UtteranceRecord) -> float:
        balance = record.global_balance
        if balance is None:
            return math.nan
        return balance.a_shap if balance.defined else math.nan

    dimensions: dict[str, dict[str, list[float]]] = {}

    def add(dimension: str, value: str, record: UtteranceRecord) -> None:
        dimensions.setdefault(dimension, {}).setdefault(value, []).append(
            a_shap_of(record)
        )

    for record in records:
        if "snr_db" in record.tags:
            add("snr_db", record.tags["snr_db"], record)
        if "noise_type" in record.tags:
            add("noise_type", record.tags["noise_type"], record)
        if "duration_s" in record.tags:
            try:
                seconds = float(record.tags["duration_s"])
            except ValueError:
                pass
            else:
                add(
                    "duration",
                    _duration_bucket(seconds, config.duration_bucket_seconds),
                    record,
                )
        if record.wer is not None:
            add("wer", _wer_bucket(record.wer, config.wer_bucket_edges), record)

    out: dict[str, list[GroupRow]] = {}
    for dimension, groups in dimensions.items():
        rows = []
        for value in sorted(groups, key=_group_sort_key):
            mean, n_defined, n_undefined = aggregate_mean(groups[value])
            rows.append(
                GroupRow(
                    value=value,
                    mean_a_shap=mean,
                    n_defined=n_defined,
                    n_undefined=n_undefined,
                )
            )
        out[dimension] = rows
    return out


def _group_sort_key(value: str) -> tuple:
    try:
        return (0, float(value), value)
    except ValueError:
        # bucket labels sort by their lower edge
        stripped = value.strip("[()s").split(",")[0]
        try:
            return (0, float(stripped), value)
        except ValueError:
            return (1, 0.0, value)


# --- emission ----------------------------------------------------------------


def _json_safe(value: float | None) -> float | str | None:
    if value is None:
        return None
    if math.isnan(value):
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _float_cell(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return repr(float(value))


def _ranges_json(ranges: Sequence[range]) -> list[list[int]]:
    return [[r.start, r.stop] for r in ranges]


def report_to_json_dict(report: AnalysisReport) -> dict:
    utterances = []
    for record in report.records:
        entry: dict = {
            "utterance_id": record.utterance_id,
            "tags": dict(sorted(record.tags.items())),
            "method": record.method,
            "n_evaluations": record.n_evaluations,
            "wer": _json_safe(record.wer),
        }
        if record.global_balance is not None:
            balance = record.global_balance
            entry["global"] = {
                "a_shap": _json_safe(balance.a_shap),
                "v_shap": _json_safe(balance.v_shap),
                "total_mass": balance.total_mass,
                "defined": balance.defined,
            }
        if record.trajectory is not None:
            trajectory = record.trajectory
            entry["generative"] = {
                "windows": _ranges_json(trajectory.windows),
                "a_shap": [_json_safe(float(x)) for x in trajectory.a_shap_per_window],
                "defined": [bool(b) for b in trajectory.window_defined],
            }
        if record.alignments:
            entry["alignments"] = [
                {
                    "modality": alignment.modality,
                    "feature_bins": _ranges_json(alignment.feature_bins),
                    "token_windows": _ranges_json(alignment.token_windows),
                    "rows": [
                        [_json_safe(float(x)) for x in row] for row in alignment.values
                    ],
                    "row_defined": [bool(b) for b in alignment.row_defined],
                    "diagonal_score": _json_safe(alignment.diagonal_score),
                }
                for alignment in record.alignments
            ]
        if record.ablations:
            entry["ablations"] = [
                {
                    "modality": ablation.modality,
                    "delta_logprob_per_token": [
                        float(x) for x in ablation.delta_logprob_per_token
                    ],
                    "mean_delta": ablation.mean_delta,
                }
                for ablation in record.ablations
            ]
        utterances.append(entry)

    return {
        "seed": report.seed,
        "method": report.method,
        "utterances": utterances,
        "failures": [
            {"utterance_id": f.utterance_id, "message": f.message}
            for f in report.failures
        ],
        "aggregates": {
            dimension: [
                {
                    "value": row.value,
                    "mean_a_shap": _json_safe(row.mean_a_shap),
                    "n_defined": row.n_defined,
                    "n_undefined": row.n_undefined,
                }
                for row in rows
            ]
            for dimension, rows in sorted(report.aggregates.items())
        },
    }


def _tags_cell(tags: Mapping[str, str]) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(tags.items()))


def _long_rows(report: AnalysisReport):
    """Yield (file, utterance_id, tags, metric, index, value) rows."""
    for record in report.records:
        tags = _tags_cell(record.tags)
        uid = record.utterance_id
        if record.global_balance is not None:
            balance = record.global_balance
            yield "global", uid, tags, "a_shap", "", _float_cell(balance.a_shap)
            yield "global", uid, tags, "v_shap", "", _float_cell(balance.v_shap)
            yield "global", uid, tags, "total_mass", "", _float_cell(balance.total_mass)
        if record.trajectory is not None:
            for w, value in enumerate(record.trajectory.a_shap_per_window):
                yield "generative", uid, tags, "a_shap", str(w), _float_cell(float(value))
        for alignment in record.alignments:
            for k, row in enumerate(alignment.values):
                for w, value in enumerate(row):
                    yield (
                        "alignment",
                        uid,
                        tags,
                        f"h_{alignment.modality}",
                        f"{k}-{w}",
                        _float_cell(float(value)),
                    )
            if alignment.diagonal_score is not None:
                yield (
                    "alignment",
                    uid,
                    tags,
                    f"diagonal_score_{alignment.modality}",
                    "",
                    _float_cell(alignment.diagonal_score),
                )
        for ablation in record.ablations:
            for t, value in enumerate(ablation.delta_logprob_per_token):
                yield (
                    "ablation",
                    uid,
                    tags,
                    f"delta_logprob_{ablation.modality}",
                    str(t),
                    _float_cell(float(value)),
                )
            yield (
                "ablation",
                uid,
                tags,
                f"mean_delta_{ablation.modality}",
                "",
                _float_cell(ablation.mean_delta),
            )


def write_report(report: AnalysisReport, config: RunConfig) -> list[Path]:
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if "json" in config.formats:
        path = out_dir / "report.json"
        payload = json.dumps(
            report_to_json_dict(report), indent=2, sort_keys=True, allow_nan=False
        )
        path.write_text(payload + "\n", encoding="utf-8")
        written.append(path)

    if "csv" in config.formats:
        streams: dict[str, io.StringIO] = {}
        writers: dict[str, csv.writer] = {}
        for file_key, uid, tags, metric, index, value in _long_rows(report):
            if file_key not in streams:
                streams[file_key] = io.StringIO()
                writers[file_key] = csv.writer(streams[file_key], lineterminator="\n")
                writers[file_key].writerow(
                    ["utterance_id", "tags", "metric", "index", "value"]
                )
            writers[file_key].writerow([uid, tags, metric, index, value])
        for file_key, stream in streams.items():
            path = out_dir / f"{file_key}.csv"
            path.write_text(stream.getvalue(), encoding="utf-8")
            written.append(path)

        if report.aggregates:
            stream = io.StringIO()
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(["group", "value", "mean_a_shap", "n_defined", "n_undefined"])
            for dimension in sorted(report.aggregates):
                for row in report.aggregates[dimension]:
                    writer.writerow(
                        [
                            dimension,
                            row.value,
                            _float_cell(row.mean_a_shap),
                            row.n_defined,
                            row.n_undefined,
                        ]
                    )
            path = out_dir / "aggregate.csv"
            path.write_text(stream.getvalue(), encoding="utf-8")
            written.append(path)

    return written


def summarize(report: AnalysisReport) -> str:
    lines = [
        f"method={report.method} seed={report.seed} "
        f"utterances={len(report.records)} failures={len(report.failures)}"
    ]
    for record in report.records:
        parts = [f"{record.utterance_id}:"]
        if record.global_balance is not None:
            if record.global_balance.defined:
                parts.append(f"a_shap={record.global_balance.a_shap:.4f}")
            else:
                parts.append("a_shap=undefined")
        parts.append(f"evals={record.n_evaluations}")
        lines.append("  " + " ".join(parts))
    for failure in report.failures:
        lines.append(f"  {failure.utterance_id}: FAILED ({failure.message})")
    for dimension in sorted(report.aggregates):
        lines.append(f"aggregate by {dimension}:")
        for row in report.aggregates[dimension]:
            mean = "undefined" if math.isnan(row.mean_a_shap) else f"{row.mean_a_shap:.4f}"
            lines.append(
                f"  {row.value}: mean_a_shap={mean} "
                f"n={row.n_defined} undefined={row.n_undefined}"
            )
    return "\n".join(lines)
