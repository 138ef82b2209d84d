import { describe, expect, it } from 'vitest';
import { FeaturePartition } from '../src/partition.js';
import { oracleFromToyTable, parseStubFixture } from '../src/toyspec.js';

const FIXTURE = `
[[utterance]]
id = "u0"
[utterance.tags]
snr_db = "0"
[utterance.toy]
kind = "additive"
n_audio = 2
n_video = 1
t_len = 2
seed = 7
weights = [[0.5, -1.0], [0.25, 0.25], [2.0, 0.0]]
bias = [-2.0, -3.0]
`;

describe('partition', () => {
  it('computes player counts from group sizes', () => {
    const partition = new FeaturePartition({
      nAudio: 8,
      nVideo: 4,
      audioGroupSize: 2,
      videoGroupSize: 1,
    });
    expect(partition.nPlayers).toBe(8);
    expect(partition.nAudioPlayers).toBe(4);
    expect(partition.slotsOfPlayer(0)).toEqual([0, 2]);
    expect(partition.slotsOfPlayer(4)).toEqual([8, 9]);
  });

  it('rejects counts that leave a partial group', () => {
    expect(
      () => new FeaturePartition({ nAudio: 5, nVideo: 0, audioGroupSize: 2, videoGroupSize: 1 }),
    ).toThrow(/divisible/);
  });

  it('expands player masks to slot masks', () => {
    const partition = new FeaturePartition({
      nAudio: 4,
      nVideo: 2,
      audioGroupSize: 2,
      videoGroupSize: 1,
    });
    expect([...partition.expandMask([0, 1, 1, 0])]).toEqual([0, 0, 1, 1, 1, 0]);
  });
});

describe('toy oracle', () => {
  it('scores an additive game by summing present rows into the bias', () => {
    const utterances = parseStubFixture(FIXTURE);
    expect(utterances).toHaveLength(1);
    const { oracle } = utterances[0];
    expect(oracle.score([1, 1, 1])).toEqual([-2.0 + 0.5 + 0.25 + 2.0, -3.0 - 1.0 + 0.25]);
    expect(oracle.score([0, 0, 0])).toEqual([-2.0, -3.0]);
    expect(oracle.score([1, 0, 0])).toEqual([-1.5, -4.0]);
  });

  it('adds pair payoffs only when both players are present', () => {
    const oracle = oracleFromToyTable({
      kind: 'pairwise_interaction',
      n_audio: 2,
      n_video: 0,
      t_len: 1,
      weights: [[1.0], [2.0]],
      bias: [0.0],
      pairs: [[0, 1]],
      pair_weights: [[10.0]],
    });
    expect(oracle.score([1, 1])).toEqual([13.0]);
    expect(oracle.score([1, 0])).toEqual([1.0]);
    expect(oracle.score([0, 1])).toEqual([2.0]);
  });

  it('is a pure function of the mask', () => {
    const { oracle } = parseStubFixture(FIXTURE)[0];
    const first = oracle.score([1, 0, 1]);
    const second = oracle.score([1, 0, 1]);
    expect(second).toEqual(first);
  });

  it('refuses fixtures without materialized coefficients', () => {
    expect(() =>
      oracleFromToyTable({ kind: 'additive', n_audio: 1, n_video: 0, t_len: 1, seed: 3 }),
    ).toThrow(/coefficients/);
  });

  it('rejects mask length mismatches', () => {
    const { oracle } = parseStubFixture(FIXTURE)[0];
    expect(() => oracle.score([1, 0])).toThrow(/expected 3/);
  });

  it('validates token counts against t_len', () => {
    const broken = FIXTURE.replace('id = "u0"', 'id = "u0"\ntokens = ["just-one"]');
    expect(() => parseStubFixture(broken)).toThrow(/t_len/);
  });
});
