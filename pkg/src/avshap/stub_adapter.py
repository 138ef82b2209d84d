"""Stub scoring adapter: serves protocol v1 from a toy-game fixture file.

A pure function of the mask, which makes it the conformance target for
the bridge client: the same fixture scored in-process and through this
adapter must produce identical attribution matrices.

Run as a module:

    python -m avshap.stub_adapter --config fixtures.toml
    python -m avshap.stub_adapter --config fixtures.toml --listen 0

The fixture file declares one ``[[utterance]]`` table per utterance, each
with an id, optional display tokens, optional condition tags, and a
``toy`` table understood by :mod:`avshap.synthetic`.

Fault-injection flags (for exercising the client's error paths):
``--reply-version``, ``--scramble-ids``, ``--emit-nan``, ``--hang-ms`` /
``--hang-count``.
"""

from __future__ import annotations

import argparse
import itertools
import json
import socket
import sys
import time
from dataclasses import dataclass

from .bridge import PROTOCOL_VERSION, UtteranceManifest
from .game import CoalitionMask, GameError
from .synthetic import ToyOracle, ToySpecError, toy_oracle_from_table
from . import tomlio


@dataclass
class StubUtterance:
    manifest: UtteranceManifest
    oracle: ToyOracle


def load_stub_utterances(path: str) -> list[StubUtterance]:
    data = tomlio.load_path(path)
    entries = data.get("utterance")
    if not entries:
        raise ToySpecError(f"{path}: no [[utterance]] tables found")
    utterances = []
    for index, entry in enumerate(entries):
        oracle = toy_oracle_from_table(entry.get("toy", {}))
        utterance_id = str(entry.get("id", f"utt-{index:03d}"))
        tokens = [str(t) for t in entry.get("tokens", [])]
        if not tokens:
            tokens = [f"tok-{t}" for t in range(oracle.t_len)]
        if len(tokens) != oracle.t_len:
            raise ToySpecError(
                f"{utterance_id}: {len(tokens)} tokens listed but t_len={oracle.t_len}"
            )
        partition = oracle.partition
        manifest = UtteranceManifest(
            utterance_id=utterance_id,
            n_audio=partition.n_audio,
            n_video=partition.n_video,
            audio_group_size=partition.audio_group_size,
            video_group_size=partition.video_group_size,
            t_len=oracle.t_len,
            tokens=tuple(tokens),
            tags={str(k): str(v) for k, v in entry.get("tags", {}).items()},
        )
        utterances.append(StubUtterance(manifest=manifest, oracle=oracle))
    return utterances


class StubServer:
    def __init__(self, utterances: list[StubUtterance], args: argparse.Namespace) -> None:
        self._utterances = {u.manifest.utterance_id: u for u in utterances}
        self._reply_version = args.reply_version
        self._scramble_ids = args.scramble_ids
        self._emit_nan = args.emit_nan
        self._hang_ms = args.hang_ms
        self._hangs_left = args.hang_count
        self._jitter = itertools.count(1) if args.random_jitter else None

    def handle_line(self, line: str) -> str | None:
        line = line.strip()
        if not line:
            return None
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            return self._error(0, "malformed request line")
        if not isinstance(message, dict):
            return self._error(0, "request must be a JSON object")
        kind = message.get("type")
        if kind == "hello":
            return self._handle_hello(message)
        if kind == "score":
            return self._handle_score(message)
        return self._error(self._id_of(message), f"unknown request type {kind!r}")

    def _handle_hello(self, message: dict) -> str:
        if message.get("version") != PROTOCOL_VERSION:
            return self._error(0, f"unsupported protocol version {message.get('version')!r}")
        return json.dumps(
            {
                "type": "hello_ok",
                "version": self._reply_version,
                "manifests": [
                    u.manifest.to_json() for u in self._utterances.values()
                ],
            }
        )

    def _handle_score(self, message: dict) -> str:
        request_id = self._id_of(message)
        if self._hangs_left > 0:
            self._hangs_left -= 1
            time.sleep(self._hang_ms / 1000.0)
        utterance = self._utterances.get(str(message.get("utterance")))
        if utterance is None:
            return self._error(request_id, f"unknown utterance {message.get('utterance')!r}")
        masks = message.get("masks")
        if not isinstance(masks, list) or not masks:
            return self._error(request_id, "score request carries no masks")
        n_players = utterance.oracle.partition.n_players
        vectors = []
        for mask_bits in masks:
            if not isinstance(mask_bits, list) or len(mask_bits) != n_players:
                return self._error(
                    request_id,
                    f"mask length {len(mask_bits) if isinstance(mask_bits, list) else '?'} "
                    f"invalid, expected {n_players} bits",
                )
            try:
                mask = CoalitionMask(tuple(int(b) for b in mask_bits))
                vector = utterance.oracle.score(mask)
            except (GameError, ValueError, TypeError) as exc:
                return self._error(request_id, f"cannot score mask: {exc}")
            values = [float(x) for x in vector]
            if self._emit_nan:
                values[0] = float("nan")
            if self._jitter is not None:
                values[0] += next(self._jitter) * 1e-6
            vectors.append(values)
        reply_id = request_id + 1000 if self._scramble_ids else request_id
        return json.dumps({"type": "score_ok", "id": reply_id, "logprobs": vectors})

    @staticmethod
    def _id_of(message: dict) -> int:
        value = message.get("id", 0)
        return value if isinstance(value, int) else 0

    @staticmethod
    def _error(request_id: int, text: str) -> str:
        return json.dumps({"type": "error", "id": request_id, "message": text})

    def serve_stream(self, reader, writer) -> None:
        for line in reader:
            reply = self.handle_line(line)
            if reply is not None:
                writer.write(reply + "\n")
                writer.flush()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="avshap-stub-adapter",
        description="Serve toy-game scoring over the v1 wire protocol.",
    )
    parser.add_argument("--config", required=True, help="toy fixture file (TOML)")
    parser.add_argument(
        "--listen",
        type=int,
        default=None,
        metavar="PORT",
        help="serve one TCP connection on 127.0.0.1:PORT (0 = ephemeral) "
        "instead of stdio",
    )
    parser.add_argument("--reply-version", type=int, default=PROTOCOL_VERSION,
                        help=argparse.SUPPRESS)
    parser.add_argument("--scramble-ids", action="store_true", help=argparse.SUPPRESS)
    parser.add_argument("--emit-nan", action="store_true", help=argparse.SUPPRESS)
    parser.add_argument("--random-jitter", action="store_true", help=argparse.SUPPRESS)
    parser.add_argument("--hang-ms", type=int, default=0, help=argparse.SUPPRESS)
    parser.add_argument("--hang-count", type=int, default=0, help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    try:
        utterances = load_stub_utterances(args.config)
    except (OSError, ToySpecError, GameError, ValueError) as exc:
        print(f"stub adapter: {exc}", file=sys.stderr)
        return 2

    server = StubServer(utterances, args)
    if args.listen is None:
        server.serve_stream(sys.stdin, sys.stdout)
        return 0

    listener = socket.create_server(("127.0.0.1", args.listen))
    port = listener.getsockname()[1]
    print(f"LISTENING {port}", flush=True)
    conn, _ = listener.accept()
    with conn:
        reader = conn.makefile("r", encoding="utf-8")
        writer = conn.makefile("w", encoding="utf-8", newline="\n")
        server.serve_stream(reader, writer)
    listener.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
