/**
 * Toy-game fixtures: linear (optionally pairwise-interacting) scoring
 * games over a feature partition, loaded from the engine's fixture files.
 *
 * A fixture must carry its materialized coefficients (weights, bias, and
 * pair payoffs when present). The generator seed recorded in the file
 * belongs to the engine's sampler; this adapter does not re-derive
 * coefficients from it, it refuses fixtures that omit them.
 */

import { readFileSync } from 'node:fs';
import { parse as parseToml } from 'smol-toml';
import { FeaturePartition } from './partition.js';

export interface ToyOracle {
  readonly partition: FeaturePartition;
  readonly tLen: number;
  /** Natural-log token scores for a player-level coalition mask. */
  score(bits: readonly number[]): number[];
}

export interface StubUtterance {
  id: string;
  tokens: string[];
  tags: Record<string, string>;
  oracle: ToyOracle;
}

class LinearGameOracle implements ToyOracle {
  readonly partition: FeaturePartition;
  readonly tLen: number;
  private readonly weights: number[][];
  private readonly bias: number[];
  private readonly pairs: Array<[number, number]>;
  private readonly pairWeights: number[][];

  constructor(
    partition: FeaturePartition,
    weights: number[][],
    bias: number[],
    pairs: Array<[number, number]> = [],
    pairWeights: number[][] = [],
  ) {
    if (weights.length !== partition.nPlayers) {
      throw new Error(
        `weights have ${weights.length} rows, expected ${partition.nPlayers} players`,
      );
    }
    const tLen = bias.length;
    if (tLen < 1 || weights.some((row) => row.length !== tLen)) {
      throw new Error('weights rows and bias must share one length per token');
    }
    if (pairs.length !== pairWeights.length) {
      throw new Error('pairs and pair_weights must align');
    }
    for (const [a, b] of pairs) {
      if (a < 0 || a >= partition.nPlayers || b < 0 || b >= partition.nPlayers) {
        throw new Error(`pair (${a}, ${b}) out of player range`);
      }
    }
    this.partition = partition;
    this.weights = weights;
    this.bias = bias;
    this.pairs = pairs;
    this.pairWeights = pairWeights;
    this.tLen = tLen;
  }

  score(bits: readonly number[]): number[] {
    if (bits.length !== this.partition.nPlayers) {
      throw new Error(`mask has ${bits.length} bits, expected ${this.partition.nPlayers}`);
    }
    const total = this.bias.slice();
    for (let player = 0; player < bits.length; player++) {
      if (!bits[player]) continue;
      const row = this.weights[player];
      for (let t = 0; t < this.tLen; t++) total[t] += row[t];
    }
    for (let k = 0; k < this.pairs.length; k++) {
      const [a, b] = this.pairs[k];
      if (!bits[a] || !bits[b]) continue;
      const row = this.pairWeights[k];
      for (let t = 0; t < this.tLen; t++) total[t] += row[t];
    }
    return total;
  }
}

type TomlTable = Record<string, unknown>;

function asTable(value: unknown, context: string): TomlTable {
  if (typeof value !== 'object' || value === null || Array.isArray(value)) {
    throw new Error(`${context} must be a table`);
  }
  return value as TomlTable;
}

function asInt(value: unknown, context: string, fallback?: number): number {
  if (value === undefined && fallback !== undefined) return fallback;
  if (typeof value === 'bigint') value = Number(value);
  if (typeof value !== 'number' || !Number.isInteger(value)) {
    throw new Error(`${context} must be an integer, got ${String(value)}`);
  }
  return value;
}

function asMatrix(value: unknown, context: string): number[][] {
  if (!Array.isArray(value) || value.some((row) => !Array.isArray(row))) {
    throw new Error(`${context} must be an array of arrays`);
  }
  return value.map((row) =>
    (row as unknown[]).map((x) => {
      if (typeof x === 'bigint') return Number(x);
      if (typeof x !== 'number' || !Number.isFinite(x)) {
        throw new Error(`${context} entries must be finite numbers`);
      }
      return x;
    }),
  );
}

function asVector(value: unknown, context: string): number[] {
  if (!Array.isArray(value)) throw new Error(`${context} must be an array`);
  return (value as unknown[]).map((x) => {
    if (typeof x === 'bigint') return Number(x);
    if (typeof x !== 'number' || !Number.isFinite(x)) {
      throw new Error(`${context} entries must be finite numbers`);
    }
    return x;
  });
}

export function oracleFromToyTable(table: TomlTable): ToyOracle {
  const partition = new FeaturePartition({
    nAudio: asInt(table['n_audio'], 'n_audio'),
    nVideo: asInt(table['n_video'], 'n_video'),
    audioGroupSize: asInt(table['audio_group_size'], 'audio_group_size', 1),
    videoGroupSize: asInt(table['video_group_size'], 'video_group_size', 1),
  });
  if (table['weights'] === undefined || table['bias'] === undefined) {
    throw new Error(
      'fixture omits materialized coefficients (weights/bias); ' +
        'regenerate it with coefficients included',
    );
  }
  const weights = asMatrix(table['weights'], 'weights');
  const bias = asVector(table['bias'], 'bias');
  const tLen = asInt(table['t_len'], 't_len', bias.length);
  if (tLen !== bias.length) {
    throw new Error(`t_len=${tLen} does not match bias length ${bias.length}`);
  }

  let pairs: Array<[number, number]> = [];
  let pairWeights: number[][] = [];
  if (table['pairs'] !== undefined) {
    pairs = asMatrix(table['pairs'], 'pairs').map(([a, b]) => [a, b] as [number, number]);
    pairWeights = asMatrix(table['pair_weights'], 'pair_weights');
  }
  return new LinearGameOracle(partition, weights, bias, pairs, pairWeights);
}

export function parseStubFixture(text: string): StubUtterance[] {
  const root = parseToml(text) as TomlTable;
  const entries = root['utterance'];
  if (!Array.isArray(entries) || entries.length === 0) {
    throw new Error('fixture declares no [[utterance]] tables');
  }
  return entries.map((raw, index) => {
    const entry = asTable(raw, `utterance #${index}`);
    const oracle = oracleFromToyTable(asTable(entry['toy'], 'toy'));
    const id = typeof entry['id'] === 'string' ? entry['id'] : `utt-${String(index).padStart(3, '0')}`;
    let tokens = Array.isArray(entry['tokens']) ? (entry['tokens'] as unknown[]).map(String) : [];
    if (tokens.length === 0) {
      tokens = Array.from({ length: oracle.tLen }, (_, t) => `tok-${t}`);
    }
    if (tokens.length !== oracle.tLen) {
      throw new Error(`${id}: ${tokens.length} tokens listed but t_len=${oracle.tLen}`);
    }
    const tags: Record<string, string> = {};
    if (entry['tags'] !== undefined) {
      for (const [key, value] of Object.entries(asTable(entry['tags'], 'tags'))) {
        tags[key] = String(value);
      }
    }
    return { id, tokens, tags, oracle };
  });
}

export function loadStubFixture(path: string): StubUtterance[] {
  return parseStubFixture(readFileSync(path, 'utf-8'));
}
