/**
 * Protocol server: maps request lines to reply lines.
 *
 * Pure with respect to scoring: identical request lines always produce
 * identical reply lines, which is what lets the engine cross-check a
 * bridged attribution matrix against an in-process one. Malformed lines
 * get an error reply (with the request id when one can be recovered) and
 * the loop continues; only stream EOF ends a session.
 */

import type { Interface } from 'node:readline';
import type { Writable } from 'node:stream';
import {
  PROTOCOL_VERSION,
  errorReply,
  type ManifestJson,
  type Reply,
} from './protocol.js';
import type { StubUtterance } from './toyspec.js';

export interface ScoringUtterance {
  id: string;
  tokens: string[];
  tags: Record<string, string>;
  nPlayers: number;
  manifest: ManifestJson;
  score(bits: readonly number[]): number[];
}

export function stubScoringUtterance(
  utterance: StubUtterance,
  extraTags: Record<string, string> = {},
): ScoringUtterance {
  const partition = utterance.oracle.partition;
  const tags = { ...utterance.tags, ...extraTags };
  return {
    id: utterance.id,
    tokens: utterance.tokens,
    tags,
    nPlayers: partition.nPlayers,
    manifest: {
      utterance_id: utterance.id,
      n_audio: partition.nAudio,
      n_video: partition.nVideo,
      audio_group_size: partition.audioGroupSize,
      video_group_size: partition.videoGroupSize,
      t_len: utterance.oracle.tLen,
      tokens: utterance.tokens,
      tags,
    },
    score: (bits) => utterance.oracle.score(bits),
  };
}

export class AdapterServer {
  private readonly utterances = new Map<string, ScoringUtterance>();

  constructor(utterances: ScoringUtterance[]) {
    for (const utterance of utterances) {
      if (this.utterances.has(utterance.id)) {
        throw new Error(`duplicate utterance id ${utterance.id}`);
      }
      this.utterances.set(utterance.id, utterance);
    }
  }

  handleLine(line: string): string | null {
    const trimmed = line.trim();
    if (!trimmed) return null;

    let message: unknown;
    try {
      message = JSON.parse(trimmed);
    } catch {
      return this.reply(errorReply(this.recoverId(trimmed), 'malformed request line'));
    }
    if (typeof message !== 'object' || message === null || Array.isArray(message)) {
      return this.reply(errorReply(0, 'request must be a JSON object'));
    }
    const request = message as Record<string, unknown>;
    const id = typeof request['id'] === 'number' ? (request['id'] as number) : 0;

    switch (request['type']) {
      case 'hello':
        return this.handleHello(request);
      case 'score':
        return this.handleScore(request, id);
      default:
        return this.reply(errorReply(id, `unknown request type ${JSON.stringify(request['type'])}`));
    }
  }

  private handleHello(request: Record<string, unknown>): string {
    if (request['version'] !== PROTOCOL_VERSION) {
      return this.reply(
        errorReply(0, `unsupported protocol version ${JSON.stringify(request['version'])}`),
      );
    }
    const manifests = [...this.utterances.values()].map((u) => u.manifest);
    return this.reply({ type: 'hello_ok', version: PROTOCOL_VERSION, manifests });
  }

  private handleScore(request: Record<string, unknown>, id: number): string {
    const utterance = this.utterances.get(String(request['utterance']));
    if (!utterance) {
      return this.reply(
        errorReply(id, `unknown utterance ${JSON.stringify(request['utterance'])}`),
      );
    }
    const masks = request['masks'];
    if (!Array.isArray(masks) || masks.length === 0) {
      return this.reply(errorReply(id, 'score request carries no masks'));
    }
    const logprobs: number[][] = [];
    for (const mask of masks) {
      if (!Array.isArray(mask) || mask.length !== utterance.nPlayers) {
        const got = Array.isArray(mask) ? mask.length : '?';
        return this.reply(
          errorReply(id, `mask length ${got} invalid, expected ${utterance.nPlayers} bits`),
        );
      }
      if (mask.some((b) => b !== 0 && b !== 1)) {
        return this.reply(errorReply(id, 'mask bits must be 0 or 1'));
      }
      try {
        logprobs.push(utterance.score(mask as number[]));
      } catch (err) {
        return this.reply(errorReply(id, `cannot score mask: ${(err as Error).message}`));
      }
    }
    return this.reply({ type: 'score_ok', id, logprobs });
  }

  /** Best-effort id recovery from a line that did not parse as JSON. */
  private recoverId(line: string): number {
    const match = /"id"\s*:\s*(\d+)/.exec(line);
    return match ? Number(match[1]) : 0;
  }

  private reply(payload: Reply): string {
    return JSON.stringify(payload);
  }
}

export async function serveLines(
  server: AdapterServer,
  lines: Interface,
  out: Writable,
): Promise<void> {
  for await (const line of lines) {
    const reply = server.handleLine(line);
    if (reply !== null) out.write(reply + '\n');
  }
}
