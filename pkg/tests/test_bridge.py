"""Bridge client against the in-repo stub adapter (subprocess and TCP)."""

import socket
import subprocess
import sys

import numpy as np
import pytest

from avshap import (
    BridgeClient,
    BridgeConfig,
    BridgedOracle,
    BridgeError,
    BridgeTimeout,
    CoalitionMask,
    FeaturePartition,
    HandshakeError,
    OracleContractError,
    ProtocolError,
    RemoteScoreError,
    StdioTransport,
    TcpTransport,
    ToyGameSpec,
    build_toy_oracle,
    estimate_exact,
    toy_spec_to_table,
)
from avshap import tomlio


SPEC = ToyGameSpec(
    kind="snr_mixture",
    partition=FeaturePartition(n_audio=4, n_video=4),
    t_len=5,
    seed=31,
    snr_db=0.0,
)


@pytest.fixture(scope="module")
def fixture_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("stub") / "fixture.toml"
    tomlio.dump_path(
        {
            "utterance": [
                {
                    "id": "u0",
                    "tags": {"snr_db": "0", "noise_type": "babble"},
                    "toy": toy_spec_to_table(SPEC),
                }
            ]
        },
        path,
    )
    return str(path)


def _stdio_config(fixture_path, *extra, **kwargs):
    command = (
        sys.executable,
        "-m",
        "avshap.stub_adapter",
        "--config",
        fixture_path,
        *extra,
    )
    return BridgeConfig(transport=StdioTransport(command=command), **kwargs)


@pytest.fixture
def client(fixture_path):
    bridge = BridgeClient.connect(_stdio_config(fixture_path))
    yield bridge
    bridge.close()


class TestHandshake:
    def test_manifest_echo(self, client):
        assert len(client.manifests) == 1
        manifest = client.manifests[0]
        assert manifest.utterance_id == "u0"
        assert manifest.t_len == 5
        assert manifest.partition().n_players == 8
        assert manifest.tags["noise_type"] == "babble"

    def test_version_mismatch_is_fatal(self, fixture_path):
        with pytest.raises(HandshakeError, match="version"):
            BridgeClient.connect(_stdio_config(fixture_path, "--reply-version", "2"))

    def test_unreachable_tcp_endpoint_fails_before_protocol_traffic(self):
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        free_port = probe.getsockname()[1]
        probe.close()
        config = BridgeConfig(transport=TcpTransport(host="127.0.0.1", port=free_port))
        with pytest.raises(Exception, match="connect"):
            BridgeClient.connect(config)

    def test_spawn_failure_reported(self):
        config = BridgeConfig(
            transport=StdioTransport(command=("/nonexistent/adapter-binary",))
        )
        with pytest.raises(Exception, match="spawn"):
            BridgeClient.connect(config)


class TestRemoteScore:
    def test_full_mask_matches_in_process_oracle_bit_exactly(self, client):
        local = build_toy_oracle(SPEC)
        full = CoalitionMask.full(SPEC.partition)
        remote = client.score("u0", [full])[0]
        assert np.array_equal(remote, local.score(full))

    def test_batch_returns_vectors_in_request_order(self, client):
        local = build_toy_oracle(SPEC)
        empty = CoalitionMask.empty(SPEC.partition)
        full = CoalitionMask.full(SPEC.partition)
        replies = client.score("u0", [empty, full])
        assert np.array_equal(replies[0], local.score(empty))
        assert np.array_equal(replies[1], local.score(full))

    def test_unknown_utterance_rejected_locally(self, client):
        with pytest.raises(BridgeError, match="no utterance"):
            client.score("unknown", [CoalitionMask.full(SPEC.partition)])

    def test_wrong_mask_length_rejected_locally(self, client):
        with pytest.raises(BridgeError, match="bits"):
            client.score("u0", [CoalitionMask((1, 0))])

    def test_oversized_batch_rejected(self, fixture_path):
        with BridgeClient.connect(_stdio_config(fixture_path, max_batch=2)) as bridge:
            masks = [CoalitionMask.full(SPEC.partition)] * 3
            with pytest.raises(BridgeError, match="max_batch"):
                bridge.score("u0", masks)

    def test_adapter_side_length_error_names_expected_count(self, fixture_path):
        # bypass the client's own validation to exercise the adapter's
        import json

        with BridgeClient.connect(_stdio_config(fixture_path)) as bridge:
            bridge._channel.send_line(
                json.dumps(
                    {"type": "score", "id": 1, "utterance": "u0", "masks": [[1, 0]]}
                )
            )
            with pytest.raises(RemoteScoreError, match="expected 8"):
                bridge._await_scores(1, bridge.manifests[0], 1)

    def test_nan_reply_aborts_the_utterance(self, fixture_path):
        with BridgeClient.connect(_stdio_config(fixture_path, "--emit-nan")) as bridge:
            with pytest.raises(RemoteScoreError, match="non-finite"):
                bridge.score("u0", [CoalitionMask.full(SPEC.partition)])

    def test_mismatched_reply_id_is_a_protocol_error(self, fixture_path):
        with BridgeClient.connect(_stdio_config(fixture_path, "--scramble-ids")) as bridge:
            with pytest.raises(ProtocolError, match="id"):
                bridge.score("u0", [CoalitionMask.full(SPEC.partition)])

    def test_timeout_retries_once_then_succeeds(self, fixture_path):
        # the stub hangs once for 500 ms: the first attempt times out at
        # 300 ms, the retry sees the stale reply (discarded) and then the
        # real one at ~500 ms, well inside its own 300 ms window
        config = _stdio_config(
            fixture_path,
            "--hang-ms",
            "500",
            "--hang-count",
            "1",
            call_timeout_ms=300,
        )
        with BridgeClient.connect(config) as bridge:
            local = build_toy_oracle(SPEC)
            full = CoalitionMask.full(SPEC.partition)
            remote = bridge.score("u0", [full])[0]
            assert np.array_equal(remote, local.score(full))

    def test_second_timeout_aborts(self, fixture_path):
        config = _stdio_config(
            fixture_path,
            "--hang-ms",
            "800",
            "--hang-count",
            "5",
            call_timeout_ms=150,
        )
        with BridgeClient.connect(config) as bridge:
            with pytest.raises(BridgeTimeout, match="retry"):
                bridge.score("u0", [CoalitionMask.full(SPEC.partition)])


class TestBridgedOracle:
    def test_dual_path_attribution_agrees(self, client):
        oracle = BridgedOracle(client, "u0")
        bridged = estimate_exact(oracle, SPEC.partition, batch_size=16)
        local = estimate_exact(build_toy_oracle(SPEC), SPEC.partition)
        assert np.abs(bridged.values - local.values).max() <= 1e-9

    def test_nondeterministic_adapter_caught_at_construction(self, fixture_path):
        config = _stdio_config(fixture_path, "--random-jitter")
        with BridgeClient.connect(config) as bridge:
            with pytest.raises(OracleContractError, match="nondeterministic"):
                BridgedOracle(bridge, "u0")

    def test_score_batch_chunks_by_max_batch(self, fixture_path):
        with BridgeClient.connect(_stdio_config(fixture_path, max_batch=3)) as bridge:
            oracle = BridgedOracle(bridge, "u0")
            masks = [
                CoalitionMask.from_players(SPEC.partition, [p]) for p in range(8)
            ]
            local = build_toy_oracle(SPEC)
            replies = oracle.score_batch(masks)
            assert len(replies) == 8
            for mask, reply in zip(masks, replies):
                assert np.array_equal(reply, local.score(mask))


class TestTcpTransport:
    def test_full_session_over_tcp(self, fixture_path):
        process = subprocess.Popen(
            (
                sys.executable,
                "-m",
                "avshap.stub_adapter",
                "--config",
                fixture_path,
                "--listen",
                "0",
            ),
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            announcement = process.stdout.readline().split()
            assert announcement[0] == "LISTENING"
            port = int(announcement[1])
            config = BridgeConfig(transport=TcpTransport(host="127.0.0.1", port=port))
            with BridgeClient.connect(config) as bridge:
                oracle = BridgedOracle(bridge, "u0")
                local = build_toy_oracle(SPEC)
                full = CoalitionMask.full(SPEC.partition)
                assert np.array_equal(oracle.score(full), local.score(full))
        finally:
            process.terminate()
            process.wait(timeout=5)
