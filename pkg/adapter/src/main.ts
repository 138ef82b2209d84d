/**
 * Adapter entry point: serve the v1 scoring protocol on stdio.
 *
 *   node dist/main.js --config adapter.toml
 *
 * Stub mode answers from the configured toy-game fixture. Neural mode is
 * a wiring skeleton: it validates its configuration and explains what a
 * concrete ModelBackend must provide (see src/neural.ts); no model
 * runtime ships with this package. Diagnostics go to stderr; stdout
 * carries protocol traffic only.
 */

import { createInterface } from 'node:readline';
import { loadAdapterConfig } from './config.js';
import { AdapterServer, serveLines, stubScoringUtterance } from './server.js';
import { loadStubFixture } from './toyspec.js';

function parseArgs(argv: string[]): { config: string } {
  const index = argv.indexOf('--config');
  if (index === -1 || index + 1 >= argv.length) {
    throw new Error('usage: main.js --config <adapter.toml>');
  }
  return { config: argv[index + 1] };
}

async function main(): Promise<number> {
  let server: AdapterServer;
  try {
    const { config: configPath } = parseArgs(process.argv.slice(2));
    const config = loadAdapterConfig(configPath);
    if (config.mode === 'neural') {
      process.stderr.write(
        `neural mode configured for ${config.modelId} ` +
          `(masking_site=${config.maskingSite}, device=${config.device}) ` +
          'but no ModelBackend is compiled into this build; ' +
          'implement src/neural.ts#ModelBackend and register it here.\n',
      );
      return 2;
    }
    const utterances = loadStubFixture(config.specPath).map((u) =>
      stubScoringUtterance(u, { masking_site: 'stub' }),
    );
    server = new AdapterServer(utterances);
  } catch (err) {
    process.stderr.write(`adapter: ${(err as Error).message}\n`);
    return 2;
  }

  await serveLines(server, createInterface({ input: process.stdin }), process.stdout);
  return 0;
}

main().then((code) => {
  process.exitCode = code;
});
