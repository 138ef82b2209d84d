import { describe, expect, it } from 'vitest';
import { AdapterServer, stubScoringUtterance } from '../src/server.js';
import { parseStubFixture } from '../src/toyspec.js';

const FIXTURE = `
[[utterance]]
id = "u0"
[utterance.toy]
kind = "additive"
n_audio = 2
n_video = 2
t_len = 3
weights = [[0.5, 0.0, 1.0], [0.25, 0.25, 0.25], [-1.0, 2.0, 0.0], [0.1, 0.1, 0.1]]
bias = [-2.0, -2.0, -2.0]
`;

function server(): AdapterServer {
  const utterances = parseStubFixture(FIXTURE).map((u) =>
    stubScoringUtterance(u, { masking_site: 'stub' }),
  );
  return new AdapterServer(utterances);
}

function roundTrip(s: AdapterServer, message: unknown): any {
  return JSON.parse(s.handleLine(JSON.stringify(message))!);
}

describe('handshake', () => {
  it('answers hello with version and manifests', () => {
    const reply = roundTrip(server(), { type: 'hello', version: 1 });
    expect(reply.type).toBe('hello_ok');
    expect(reply.version).toBe(1);
    expect(reply.manifests).toHaveLength(1);
    const manifest = reply.manifests[0];
    expect(manifest.utterance_id).toBe('u0');
    expect(manifest.t_len).toBe(3);
    expect(manifest.n_audio + manifest.n_video).toBe(4);
    expect(manifest.tags.masking_site).toBe('stub');
    expect(manifest.n_audio % manifest.audio_group_size).toBe(0);
    expect(manifest.n_video % manifest.video_group_size).toBe(0);
  });

  it('rejects other protocol versions', () => {
    const reply = roundTrip(server(), { type: 'hello', version: 2 });
    expect(reply.type).toBe('error');
    expect(reply.message).toMatch(/version/);
  });
});

describe('scoring', () => {
  it('scores batches in request order', () => {
    const s = server();
    const reply = roundTrip(s, {
      type: 'score',
      id: 3,
      utterance: 'u0',
      masks: [
        [0, 0, 0, 0],
        [1, 1, 1, 1],
      ],
    });
    expect(reply).toEqual({
      type: 'score_ok',
      id: 3,
      logprobs: [
        [-2.0, -2.0, -2.0],
        [-2.0 + 0.5 + 0.25 - 1.0 + 0.1, -2.0 + 0.25 + 2.0 + 0.1, -2.0 + 1.0 + 0.25 + 0.1],
      ],
    });
  });

  it('repeats identical requests with identical reply lines', () => {
    const s = server();
    const line = JSON.stringify({
      type: 'score',
      id: 9,
      utterance: 'u0',
      masks: [[1, 0, 1, 0]],
    });
    expect(s.handleLine(line)).toBe(s.handleLine(line));
  });

  it('names the expected mask length on mismatch', () => {
    const reply = roundTrip(server(), {
      type: 'score',
      id: 4,
      utterance: 'u0',
      masks: [[1, 0]],
    });
    expect(reply.type).toBe('error');
    expect(reply.id).toBe(4);
    expect(reply.message).toMatch(/expected 4/);
  });

  it('rejects unknown utterances', () => {
    const reply = roundTrip(server(), {
      type: 'score',
      id: 5,
      utterance: 'ghost',
      masks: [[1, 1, 1, 1]],
    });
    expect(reply.type).toBe('error');
    expect(reply.message).toMatch(/unknown utterance/);
  });

  it('rejects non-binary mask bits', () => {
    const reply = roundTrip(server(), {
      type: 'score',
      id: 6,
      utterance: 'u0',
      masks: [[1, 2, 0, 0]],
    });
    expect(reply.type).toBe('error');
  });
});

describe('robustness', () => {
  it('answers malformed lines with an error and keeps serving', () => {
    const s = server();
    const error = JSON.parse(s.handleLine('this is not json')!);
    expect(error.type).toBe('error');
    expect(error.id).toBe(0);
    const next = roundTrip(s, { type: 'hello', version: 1 });
    expect(next.type).toBe('hello_ok');
  });

  it('recovers the id from a broken line when it is visible', () => {
    const reply = JSON.parse(server().handleLine('{"type":"score","id": 41, norble}')!);
    expect(reply.type).toBe('error');
    expect(reply.id).toBe(41);
  });

  it('ignores blank lines', () => {
    expect(server().handleLine('   ')).toBeNull();
  });

  it('errors on unknown request types', () => {
    const reply = roundTrip(server(), { type: 'reboot', id: 7 });
    expect(reply.type).toBe('error');
    expect(reply.id).toBe(7);
  });
});
