#!/usr/bin/env node
/**
 * posesim-convert: third-party pose exports -> canonical pose files.
 *
 *   convert --format {h36m17,npc16,base23} --fps N --units {m,mm}
 *           --up {y,z} [--downsample] IN OUT
 *
 * Exit codes: 0 ok, 2 bad arguments or conversion/schema error.
 */

import { readFileSync, writeFileSync, renameSync } from 'node:fs';
import { ConversionError, ConvertOptions, convert } from './convert.js';
import { FormatId } from './formats.js';
import { checkCanonical } from './schema.js';

interface CliArgs extends ConvertOptions {
  input: string;
  output: string;
}

export function parseArgs(argv: string[]): CliArgs {
  if (argv[0] === 'convert') {
    argv = argv.slice(1);
  }
  const flags = new Map<string, string>();
  const positional: string[] = [];
  let downsample = false;
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    if (arg === '--downsample') {
      downsample = true;
    } else if (arg.startsWith('--')) {
      const value = argv[i + 1];
      if (value === undefined) {
        throw new ConversionError(`flag ${arg} needs a value`);
      }
      flags.set(arg.slice(2), value);
      i += 1;
    } else {
      positional.push(arg);
    }
  }
  for (const required of ['format', 'fps', 'units', 'up']) {
    if (!flags.has(required)) {
      throw new ConversionError(`missing required flag --${required}`);
    }
  }
  if (positional.length !== 2) {
    throw new ConversionError('expected exactly two positional arguments: IN OUT');
  }
  const format = flags.get('format')! as FormatId;
  if (!['h36m17', 'npc16', 'base23'].includes(format)) {
    throw new ConversionError(`--format must be h36m17, npc16, or base23`);
  }
  const units = flags.get('units')!;
  if (units !== 'm' && units !== 'mm') {
    throw new ConversionError('--units must be m or mm');
  }
  const up = flags.get('up')!;
  if (up !== 'y' && up !== 'z') {
    throw new ConversionError('--up must be y or z');
  }
  const fps = Number(flags.get('fps'));
  if (!Number.isFinite(fps) || fps <= 0) {
    throw new ConversionError('--fps must be a positive number');
  }
  return {
    format, fps, units, up, downsample,
    input: positional[0], output: positional[1],
  };
}

export function run(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`argument error: ${(err as Error).message}`);
    return 2;
  }
  try {
    const raw = JSON.parse(readFileSync(args.input, 'utf-8'));
    const doc = convert(raw, { ...args, log: (m) => console.error(m) });
    const problems = checkCanonical(doc);
    if (problems.length > 0) {
      throw new ConversionError(`output failed schema check: ${problems.join('; ')}`);
    }
    const tmp = `${args.output}.tmp`;
    writeFileSync(tmp, JSON.stringify(doc));
    renameSync(tmp, args.output);
    console.error(
      `${args.input} -> ${args.output}: ${doc.format_id}, ` +
      `${doc.num_frames} frames at ${doc.fps} fps`);
    return 0;
  } catch (err) {
    console.error(`conversion error: ${(err as Error).message}`);
    return 2;
  }
}

const entry = process.argv[1] ?? '';
if (entry.endsWith('cli.js') || entry.endsWith('posesim-convert')) {
  process.exit(run(process.argv.slice(2)));
}
