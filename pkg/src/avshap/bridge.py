"""Client side of the line-delimited JSON scoring protocol (version 1).

An adapter process (any language) exposes one or more utterances it can
score. The client handshakes, receives the utterance manifests, and then
sends batches of player-level coalition masks; the adapter replies with
one log-probability vector per mask, teacher-forced against its fixed
decode. Masking is the adapter's job (it knows where in its architecture
zeroing the named feature slots is meaningful); the manifest's group
sizes tell it which slots each mask bit controls.

Message flow, one JSON object per line, UTF-8:

    -> {"type": "hello", "version": 1}
    <- {"type": "hello_ok", "version": 1, "manifests": [...]}
    -> {"type": "score", "id": 1, "utterance": "u0", "masks": [[0, 1, ...]]}
    <- {"type": "score_ok", "id": 1, "logprobs": [[...]]}
    <- {"type": "error", "id": 1, "message": "..."}   (terminates the utterance)

The client enforces the scoring-oracle contract: non-finite numbers,
shape mismatches, and id reordering abort loudly rather than continue.
Request ids are strictly increasing per connection. One batch is in
flight at a time; use one connection per worker for parallelism across
utterances.
"""

from __future__ import annotations

import json
import math
import queue
import socket
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .game import (
    CoalitionMask,
    FeaturePartition,
    OracleContractError,
    PartitionError,
)

PROTOCOL_VERSION = 1


class BridgeError(Exception):
    """Base error for bridge transport and protocol failures."""


class TransportError(BridgeError):
    """Could not reach, keep, or cleanly use the adapter's byte stream."""


class BridgeTimeout(BridgeError):
    """No reply within the configured window (after one retry for calls)."""


class HandshakeError(BridgeError):
    """Adapter is unreachable, senseless, or speaks the wrong version."""


class ProtocolError(BridgeError):
    """Traffic violated the wire protocol (ids, shapes, message types)."""


class RemoteScoreError(BridgeError):
    """Adapter reported an error or returned unusable scores."""


@dataclass(frozen=True)
class StdioTransport:
    """Spawn a child process and talk over its stdin/stdout."""

    command: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.command:
            raise ValueError("stdio transport needs a command")
        object.__setattr__(self, "command", tuple(str(c) for c in self.command))

    def describe(self) -> str:
        return f"stdio:{' '.join(self.command)}"


@dataclass(frozen=True)
class TcpTransport:
    host: str
    port: int

    def describe(self) -> str:
        return f"tcp:{self.host}:{self.port}"


@dataclass(frozen=True)
class BridgeConfig:
    transport: StdioTransport | TcpTransport
    handshake_timeout_ms: int = 10_000
    call_timeout_ms: int = 30_000
    max_batch: int = 32

    def __post_init__(self) -> None:
        if self.handshake_timeout_ms <= 0 or self.call_timeout_ms <= 0:
            raise ValueError("timeouts must be positive")
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")


@dataclass(frozen=True)
class UtteranceManifest:
    """What an adapter can score: partition geometry, token count, tags.

    ``tokens`` are display strings only. ``tags`` carry free-form
    condition labels (snr_db, noise_type, duration_s, ...) used by report
    grouping; they are never interpreted by the engine itself.
    """

    utterance_id: str
    n_audio: int
    n_video: int
    audio_group_size: int
    video_group_size: int
    t_len: int
    tokens: tuple[str, ...]
    tags: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.t_len != len(self.tokens):
            raise ValueError(
                f"manifest {self.utterance_id!r}: t_len={self.t_len} but "
                f"{len(self.tokens)} tokens listed"
            )
        self.partition()  # must satisfy the divisibility invariants

    def partition(self) -> FeaturePartition:
        return FeaturePartition(
            n_audio=self.n_audio,
            n_video=self.n_video,
            audio_group_size=self.audio_group_size,
            video_group_size=self.video_group_size,
        )

    def to_json(self) -> dict:
        return {
            "utterance_id": self.utterance_id,
            "n_audio": self.n_audio,
            "n_video": self.n_video,
            "audio_group_size": self.audio_group_size,
            "video_group_size": self.video_group_size,
            "t_len": self.t_len,
            "tokens": list(self.tokens),
            "tags": dict(self.tags),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "UtteranceManifest":
        try:
            return cls(
                utterance_id=str(data["utterance_id"]),
                n_audio=int(data["n_audio"]),
                n_video=int(data["n_video"]),
                audio_group_size=int(data.get("audio_group_size", 1)),
                video_group_size=int(data.get("video_group_size", 1)),
                t_len=int(data["t_len"]),
                tokens=tuple(str(t) for t in data.get("tokens", [])),
                tags={str(k): str(v) for k, v in data.get("tags", {}).items()},
            )
        except (KeyError, TypeError, ValueError, PartitionError) as exc:
            raise ProtocolError(f"invalid utterance manifest: {exc}") from exc


_EOF = object()


class _LineChannel:
    """Line-oriented duplex channel over a child process or TCP socket."""

    def __init__(self, transport: StdioTransport | TcpTransport) -> None:
        self.description = transport.describe()
        self._proc: subprocess.Popen | None = None
        self._sock: socket.socket | None = None
        if isinstance(transport, StdioTransport):
            try:
                self._proc = subprocess.Popen(
                    transport.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    encoding="utf-8",
                    bufsize=1,
                )
            except OSError as exc:
                raise TransportError(f"cannot spawn adapter ({self.description}): {exc}")
            self._writer = self._proc.stdin
            reader = self._proc.stdout
        else:
            try:
                self._sock = socket.create_connection(
                    (transport.host, transport.port), timeout=10.0
                )
            except OSError as exc:
                raise TransportError(
                    f"cannot connect to adapter ({self.description}): {exc}"
                )
            self._sock.settimeout(None)
            self._writer = self._sock.makefile("w", encoding="utf-8", newline="\n")
            reader = self._sock.makefile("r", encoding="utf-8")

        self._lines: queue.Queue = queue.Queue()
        self._reader_thread = threading.Thread(
            target=self._pump, args=(reader,), daemon=True
        )
        self._reader_thread.start()

    def _pump(self, reader) -> None:
        try:
            for line in reader:
                self._lines.put(line)
        except (OSError, ValueError):
            pass
        self._lines.put(_EOF)

    def send_line(self, text: str) -> None:
        try:
            self._writer.write(text + "\n")
            self._writer.flush()
        except (OSError, ValueError) as exc:
            raise TransportError(f"adapter stream closed ({self.description}): {exc}")

    def recv_line(self, timeout_s: float) -> str:
        deadline = time.monotonic() + timeout_s
        remaining = timeout_s
        while True:
            try:
                item = self._lines.get(timeout=max(remaining, 0.001))
            except queue.Empty:
                raise BridgeTimeout(
                    f"no reply within {timeout_s:.3f}s ({self.description})"
                )
            if item is _EOF:
                raise TransportError(f"adapter closed the stream ({self.description})")
            line = item.strip()
            if line:
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BridgeTimeout(
                    f"no reply within {timeout_s:.3f}s ({self.description})"
                )

    def close(self) -> None:
        try:
            self._writer.close()
        except (OSError, ValueError):
            pass
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        if self._proc is not None:
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class BridgeClient:
    """Handshaken connection to one adapter process or endpoint."""

    def __init__(
        self,
        channel: _LineChannel,
        config: BridgeConfig,
        manifests: tuple[UtteranceManifest, ...],
    ) -> None:
        self._channel = channel
        self.config = config
        self.manifests = manifests
        self._by_id = {m.utterance_id: m for m in manifests}
        self._next_id = 1
        self._abandoned: set[int] = set()
        self._lock = threading.Lock()

    @classmethod
    def connect(cls, config: BridgeConfig) -> "BridgeClient":
        channel = _LineChannel(config.transport)
        try:
            channel.send_line(json.dumps({"type": "hello", "version": PROTOCOL_VERSION}))
            try:
                reply = json.loads(
                    channel.recv_line(config.handshake_timeout_ms / 1000.0)
                )
            except BridgeTimeout as exc:
                raise HandshakeError(f"handshake timed out: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise HandshakeError(f"handshake reply is not JSON: {exc}") from exc
            if not isinstance(reply, dict) or reply.get("type") != "hello_ok":
                raise HandshakeError(f"expected hello_ok, got {reply!r}")
            if reply.get("version") != PROTOCOL_VERSION:
                raise HandshakeError(
                    f"protocol version mismatch: adapter speaks "
                    f"{reply.get('version')!r}, this client speaks {PROTOCOL_VERSION}"
                )
            manifests = tuple(
                UtteranceManifest.from_json(m) for m in reply.get("manifests", [])
            )
        except BridgeError:
            channel.close()
            raise
        return cls(channel, config, manifests)

    def manifest_for(self, utterance_id: str) -> UtteranceManifest:
        try:
            return self._by_id[utterance_id]
        except KeyError:
            raise BridgeError(f"adapter declared no utterance {utterance_id!r}")

    def score(
        self, utterance_id: str, masks: Sequence[CoalitionMask]
    ) -> list[np.ndarray]:
        """Score one batch of coalitions, in request order.

        Retries exactly once on timeout (with a fresh id; a late reply to
        the abandoned id is discarded). Any other irregularity aborts.
        """
        manifest = self.manifest_for(utterance_id)
        if len(masks) == 0:
            return []
        if len(masks) > self.config.max_batch:
            raise BridgeError(
                f"batch of {len(masks)} masks exceeds max_batch={self.config.max_batch}"
            )
        n_players = manifest.partition().n_players
        for mask in masks:
            if mask.n_players != n_players:
                raise BridgeError(
                    f"mask has {mask.n_players} bits, utterance "
                    f"{utterance_id!r} has {n_players} players"
                )

        with self._lock:
            for attempt in range(2):
                request_id = self._next_id
                self._next_id += 1
                self._channel.send_line(
                    json.dumps(
                        {
                            "type": "score",
                            "id": request_id,
                            "utterance": utterance_id,
                            "masks": [list(m.bits) for m in masks],
                        },
                        separators=(",", ":"),
                    )
                )
                try:
                    return self._await_scores(request_id, manifest, len(masks))
                except BridgeTimeout:
                    self._abandoned.add(request_id)
                    if attempt == 1:
                        raise BridgeTimeout(
                            f"utterance {utterance_id!r}: no reply after retry"
                        )
        raise AssertionError("unreachable")

    def _await_scores(
        self, request_id: int, manifest: UtteranceManifest, n_masks: int
    ) -> list[np.ndarray]:
        timeout_s = self.config.call_timeout_ms / 1000.0
        deadline = time.monotonic() + timeout_s
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BridgeTimeout("call timed out")
            line = self._channel.recv_line(remaining)
            try:
                message = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProtocolError(f"adapter sent non-JSON line: {exc}")
            if not isinstance(message, dict):
                raise ProtocolError(f"adapter sent non-object message: {message!r}")
            reply_id = message.get("id")
            if reply_id in self._abandoned:
                continue  # late answer to a timed-out request
            if reply_id != request_id:
                raise ProtocolError(
                    f"reply id {reply_id!r} does not match request {request_id}"
                )
            kind = message.get("type")
            if kind == "error":
                raise RemoteScoreError(
                    f"adapter error for utterance {manifest.utterance_id!r}: "
                    f"{message.get('message', '')}"
                )
            if kind != "score_ok":
                raise ProtocolError(f"unexpected message type {kind!r}")
            return self._parse_logprobs(message, manifest, n_masks)

    def _parse_logprobs(
        self, message: Mapping, manifest: UtteranceManifest, n_masks: int
    ) -> list[np.ndarray]:
        logprobs = message.get("logprobs")
        if not isinstance(logprobs, list) or len(logprobs) != n_masks:
            raise ProtocolError(
                f"expected {n_masks} score vectors, got "
                f"{len(logprobs) if isinstance(logprobs, list) else logprobs!r}"
            )
        out = []
        for vector in logprobs:
            if not isinstance(vector, list) or len(vector) != manifest.t_len:
                raise ProtocolError(
                    f"score vector length mismatch: expected {manifest.t_len}"
                )
            if not all(isinstance(x, (int, float)) and math.isfinite(x) for x in vector):
                raise RemoteScoreError(
                    f"non-finite score for utterance {manifest.utterance_id!r}; "
                    "aborting attribution"
                )
            out.append(np.array(vector, dtype=np.float64))
        return out

    def close(self) -> None:
        self._channel.close()

    def __enter__(self) -> "BridgeClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class BridgedOracle:
    """ScoringOracle adapter over a BridgeClient for one utterance.

    Not safe for concurrent score calls (the protocol is lock-step); the
    engine serializes access. On construction the full-input coalition is
    scored twice and compared bit-for-bit, catching nondeterministic
    adapters before any estimate is built on them.
    """

    thread_safe = False

    def __init__(
        self,
        client: BridgeClient,
        utterance_id: str,
        verify_determinism: bool = True,
    ) -> None:
        self._client = client
        self.utterance_id = utterance_id
        manifest = client.manifest_for(utterance_id)
        self.manifest = manifest
        self.partition = manifest.partition()
        self.t_len = manifest.t_len
        if verify_determinism:
            probe = CoalitionMask.full(self.partition)
            first = client.score(utterance_id, [probe])[0]
            second = client.score(utterance_id, [probe])[0]
            if not np.array_equal(first, second):
                raise OracleContractError(
                    f"adapter is nondeterministic for utterance {utterance_id!r}: "
                    "two scores of the full coalition differ"
                )

    def score(self, mask: CoalitionMask) -> np.ndarray:
        return self._client.score(self.utterance_id, [mask])[0]

    def score_batch(self, masks: Sequence[CoalitionMask]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        step = self._client.config.max_batch
        for start in range(0, len(masks), step):
            out.extend(
                self._client.score(self.utterance_id, list(masks[start : start + step]))
            )
        return out
