/**
 * Wire protocol v1: line-delimited JSON, one object per line, UTF-8.
 *
 *   -> {"type": "hello", "version": 1}
 *   <- {"type": "hello_ok", "version": 1, "manifests": [...]}
 *   -> {"type": "score", "id": 1, "utterance": "u0", "masks": [[0, 1, ...]]}
 *   <- {"type": "score_ok", "id": 1, "logprobs": [[...]]}
 *   <- {"type": "error", "id": 1, "message": "..."}
 *
 * Request ids are client-chosen and strictly increasing per connection;
 * an error reply terminates attribution of the utterance it answered.
 */

export const PROTOCOL_VERSION = 1;

export interface ManifestJson {
  utterance_id: string;
  n_audio: number;
  n_video: number;
  audio_group_size: number;
  video_group_size: number;
  t_len: number;
  tokens: string[];
  tags: Record<string, string>;
}

export interface HelloRequest {
  type: 'hello';
  version: number;
}

export interface ScoreRequest {
  type: 'score';
  id: number;
  utterance: string;
  masks: number[][];
}

export interface HelloOkReply {
  type: 'hello_ok';
  version: number;
  manifests: ManifestJson[];
}

export interface ScoreOkReply {
  type: 'score_ok';
  id: number;
  logprobs: number[][];
}

export interface ErrorReply {
  type: 'error';
  id: number;
  message: string;
}

export type Reply = HelloOkReply | ScoreOkReply | ErrorReply;

export function errorReply(id: number, message: string): ErrorReply {
  return { type: 'error', id, message };
}
