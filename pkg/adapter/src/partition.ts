/**
 * Feature-slot partition: audio slots first, then video slots, grouped
 * into mask-level players of consecutive same-modality slots.
 *
 * Mirrors the engine's validation rules so that every manifest this
 * adapter emits is accepted on the client side: counts must divide evenly
 * by their group sizes and the game must have at least one slot.
 */

export interface PartitionFields {
  nAudio: number;
  nVideo: number;
  audioGroupSize: number;
  videoGroupSize: number;
}

export class FeaturePartition {
  readonly nAudio: number;
  readonly nVideo: number;
  readonly audioGroupSize: number;
  readonly videoGroupSize: number;

  constructor(fields: PartitionFields) {
    const { nAudio, nVideo, audioGroupSize, videoGroupSize } = fields;
    if (!Number.isInteger(nAudio) || nAudio < 0 || !Number.isInteger(nVideo) || nVideo < 0) {
      throw new Error(`slot counts must be nonnegative integers, got ${nAudio}/${nVideo}`);
    }
    if (!Number.isInteger(audioGroupSize) || audioGroupSize < 1) {
      throw new Error(`audio group size must be a positive integer, got ${audioGroupSize}`);
    }
    if (!Number.isInteger(videoGroupSize) || videoGroupSize < 1) {
      throw new Error(`video group size must be a positive integer, got ${videoGroupSize}`);
    }
    if (nAudio + nVideo < 1) {
      throw new Error('empty game: need at least one feature slot');
    }
    if (nAudio % audioGroupSize !== 0) {
      throw new Error(`audio slot count ${nAudio} is not divisible by group size ${audioGroupSize}`);
    }
    if (nVideo % videoGroupSize !== 0) {
      throw new Error(`video slot count ${nVideo} is not divisible by group size ${videoGroupSize}`);
    }
    this.nAudio = nAudio;
    this.nVideo = nVideo;
    this.audioGroupSize = audioGroupSize;
    this.videoGroupSize = videoGroupSize;
  }

  get nSlots(): number {
    return this.nAudio + this.nVideo;
  }

  get nAudioPlayers(): number {
    return this.nAudio / this.audioGroupSize;
  }

  get nVideoPlayers(): number {
    return this.nVideo / this.videoGroupSize;
  }

  get nPlayers(): number {
    return this.nAudioPlayers + this.nVideoPlayers;
  }

  /** Slot-level 0/1 vector for a player-level mask. */
  expandMask(bits: readonly number[]): Uint8Array {
    if (bits.length !== this.nPlayers) {
      throw new Error(`mask has ${bits.length} bits, expected ${this.nPlayers}`);
    }
    const slots = new Uint8Array(this.nSlots);
    for (let player = 0; player < bits.length; player++) {
      if (!bits[player]) continue;
      const [start, stop] = this.slotsOfPlayer(player);
      slots.fill(1, start, stop);
    }
    return slots;
  }

  slotsOfPlayer(player: number): [number, number] {
    if (player < 0 || player >= this.nPlayers) {
      throw new Error(`player ${player} out of range for ${this.nPlayers} players`);
    }
    if (player < this.nAudioPlayers) {
      const start = player * this.audioGroupSize;
      return [start, start + this.audioGroupSize];
    }
    const start = this.nAudio + (player - this.nAudioPlayers) * this.videoGroupSize;
    return [start, start + this.videoGroupSize];
  }
}
