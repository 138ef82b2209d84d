/**
 * Adapter configuration file (TOML):
 *
 *   mode = "stub"              # or "neural"
 *   device = "cpu"             # hint only, passed to the backend
 *
 *   [stub]
 *   spec_path = "fixture.toml"   # toy-game fixture with coefficients
 *
 *   [neural]
 *   model_id = "org/model"
 *   masking_site = "pre_fusion"  # post_projection | pre_fusion | pre_cross_attention
 */

import { readFileSync } from 'node:fs';
import { dirname, resolve } from 'node:path';
import { parse as parseToml } from 'smol-toml';
import { MASKING_SITES, type MaskingSite } from './neural.js';

export type AdapterConfig =
  | { mode: 'stub'; specPath: string; device: string }
  | { mode: 'neural'; modelId: string; maskingSite: MaskingSite; device: string };

export function loadAdapterConfig(path: string): AdapterConfig {
  const root = parseToml(readFileSync(path, 'utf-8')) as Record<string, unknown>;
  const mode = root['mode'];
  const device = typeof root['device'] === 'string' ? root['device'] : 'cpu';

  if (mode === 'stub') {
    const stub = root['stub'] as Record<string, unknown> | undefined;
    const specPath = stub?.['spec_path'];
    if (typeof specPath !== 'string') {
      throw new Error('stub mode requires [stub] spec_path');
    }
    return { mode, specPath: resolve(dirname(path), specPath), device };
  }
  if (mode === 'neural') {
    const neural = root['neural'] as Record<string, unknown> | undefined;
    const modelId = neural?.['model_id'];
    const maskingSite = neural?.['masking_site'];
    if (typeof modelId !== 'string') {
      throw new Error('neural mode requires [neural] model_id');
    }
    if (typeof maskingSite !== 'string' || !MASKING_SITES.includes(maskingSite as MaskingSite)) {
      throw new Error(
        `neural mode requires masking_site in {${MASKING_SITES.join(', ')}}`,
      );
    }
    return { mode, modelId, maskingSite: maskingSite as MaskingSite, device };
  }
  throw new Error(`config mode must be "stub" or "neural", got ${JSON.stringify(mode)}`);
}
