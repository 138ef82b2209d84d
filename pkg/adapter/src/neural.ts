/**
 * Neural adapter skeleton: teacher-forced coalition scoring for a real
 * autoregressive multimodal model.
 *
 * Lifecycle per utterance:
 *   1. `prepare` runs ONE greedy decode on the full (unmasked) input and
 *      freezes the produced token sequence.
 *   2. Every score request then zeroes the feature slots named by the
 *      expanded coalition mask and re-scores the frozen sequence token by
 *      token (teacher forcing), returning one natural-log probability per
 *      token. The frozen sequence never changes between coalitions, so
 *      coalition scores are comparable.
 *
 * Where the zeroing happens is architecture knowledge, so it is part of
 * the backend contract:
 *   - post_projection: token-concatenation models; zero the projected
 *     audio/video tokens that enter the language model.
 *   - pre_fusion: encoder-decoder models that fuse modalities (MLP or
 *     encoder fusion); zero the per-modality features before fusion.
 *   - pre_cross_attention: decoders with modality-specific cross
 *     attention; zero the cross-attended features.
 * The chosen site is stamped on every manifest as the `masking_site` tag
 * so downstream reports carry the provenance.
 *
 * This module ships without model weights: implement `ModelBackend` for a
 * concrete runtime and hand it to `NeuralAdapter`. Everything protocol-
 * facing (manifest shape, mask expansion, purity expectations) is already
 * handled here.
 */

import { FeaturePartition } from './partition.js';
import type { ManifestJson } from './protocol.js';
import type { ScoringUtterance } from './server.js';

export type MaskingSite = 'post_projection' | 'pre_fusion' | 'pre_cross_attention';

export const MASKING_SITES: readonly MaskingSite[] = [
  'post_projection',
  'pre_fusion',
  'pre_cross_attention',
];

export interface NeuralUtteranceInput {
  /** Stable id; also the backend's cache key for encoder state. */
  id: string;
  partition: FeaturePartition;
  tags: Record<string, string>;
}

export interface DecodedSequence {
  /** Display strings for the manifest; length defines T. */
  tokens: string[];
}

export interface ModelBackend {
  /** Greedy full-input decode; called once per utterance. */
  decodeGreedy(utteranceId: string): DecodedSequence;

  /**
   * Teacher-forced scores of the frozen sequence with the given slots
   * kept (1) or zeroed (0) at the configured masking site. Must be a
   * deterministic function of (utteranceId, slotMask): fix every dropout
   * and sampling source before serving.
   */
  scoreTeacherForced(utteranceId: string, slotMask: Uint8Array, tokens: string[]): number[];
}

export class NeuralAdapter {
  constructor(
    private readonly backend: ModelBackend,
    private readonly maskingSite: MaskingSite,
    private readonly modelId: string,
  ) {
    if (!MASKING_SITES.includes(maskingSite)) {
      throw new Error(`unknown masking site ${maskingSite}`);
    }
  }

  /** Decode once, freeze the sequence, and expose the scoring surface. */
  prepare(input: NeuralUtteranceInput): ScoringUtterance {
    const decoded = this.backend.decodeGreedy(input.id);
    if (decoded.tokens.length < 1) {
      throw new Error(`utterance ${input.id}: decode produced no scorable tokens`);
    }
    const frozen = [...decoded.tokens];
    const tags = {
      ...input.tags,
      masking_site: this.maskingSite,
      model_id: this.modelId,
    };
    const manifest: ManifestJson = {
      utterance_id: input.id,
      n_audio: input.partition.nAudio,
      n_video: input.partition.nVideo,
      audio_group_size: input.partition.audioGroupSize,
      video_group_size: input.partition.videoGroupSize,
      t_len: frozen.length,
      tokens: frozen,
      tags,
    };
    return {
      id: input.id,
      tokens: frozen,
      tags,
      nPlayers: input.partition.nPlayers,
      manifest,
      score: (bits) => {
        const scores = this.backend.scoreTeacherForced(
          input.id,
          input.partition.expandMask(bits),
          frozen,
        );
        if (scores.length !== frozen.length || scores.some((x) => !Number.isFinite(x))) {
          throw new Error(
            `backend returned ${scores.length} scores (expected ${frozen.length}) or non-finite values`,
          );
        }
        return scores;
      },
    };
  }
}
