/**
 * Source pose exports -> canonical pose documents.
 *
 * Source container: JSON holding either a bare T x J x 3 nested array or an
 * object { frames: T x J x 3, joint_names?: string[], fps?: number }. When
 * joint_names are present, joints map by name and unknown extras are dropped
 * with a logged summary; otherwise the format's standard order applies.
 */

import { CANONICAL_LAYOUTS, FormatId, SOURCE_ORDERS } from './formats.js';

export type Units = 'm' | 'mm';
export type UpAxis = 'y' | 'z';

export interface ConvertOptions {
  format: FormatId;
  fps: number;
  units: Units;
  up: UpAxis;
  downsample?: boolean;
  log?: (message: string) => void;
}

export interface CanonicalPoseDocument {
  schema_version: 1;
  format_id: string;
  fps: number;
  joint_names: string[];
  parent_index: number[];
  num_frames: number;
  frames: number[];
}

export class ConversionError extends Error {}

type Vec3 = [number, number, number];

interface SourceData {
  frames: Vec3[][];
  jointNames: string[] | null;
  fps: number | null;
}

export function parseSource(doc: unknown, format: FormatId): SourceData {
  let frames: unknown;
  let jointNames: string[] | null = null;
  let fps: number | null = null;
  if (Array.isArray(doc)) {
    frames = doc;
  } else if (doc !== null && typeof doc === 'object') {
    const obj = doc as Record<string, unknown>;
    frames = obj.frames ?? obj.poses;
    if (Array.isArray(obj.joint_names)) {
      jointNames = obj.joint_names.map(String);
    }
    if (typeof obj.fps === 'number') {
      fps = obj.fps;
    }
  }
  if (!Array.isArray(frames) || frames.length < 2) {
    throw new ConversionError('source must contain at least 2 frames');
  }
  const expected = jointNames ? jointNames.length : SOURCE_ORDERS[format].length;
  const out: Vec3[][] = [];
  for (let t = 0; t < frames.length; t += 1) {
    const frame = frames[t];
    if (!Array.isArray(frame) || frame.length !== expected) {
      throw new ConversionError(
        `frame ${t} has ${Array.isArray(frame) ? frame.length : 'no'} joints, ` +
        `expected ${expected}`);
    }
    const row: Vec3[] = [];
    for (let j = 0; j < frame.length; j += 1) {
      const p = frame[j];
      if (!Array.isArray(p) || p.length !== 3 || p.some((v) => typeof v !== 'number' || !Number.isFinite(v))) {
        throw new ConversionError(`frame ${t} joint ${j} is not a finite 3-vector`);
      }
      row.push([p[0], p[1], p[2]]);
    }
    out.push(row);
  }
  return { frames: out, jointNames, fps };
}

/** meters + Z-up world position from a source point */
function toCanonicalPoint(p: Vec3, units: Units, up: UpAxis): Vec3 {
  const s = units === 'mm' ? 1e-3 : 1.0;
  const [x, y, z] = [p[0] * s, p[1] * s, p[2] * s];
  // y-up -> z-up is the +90 degree rotation about x: (x, y, z) -> (x, -z, y)
  return up === 'y' ? [x, -z, y] : [x, y, z];
}

export function convert(doc: unknown, options: ConvertOptions): CanonicalPoseDocument {
  const log = options.log ?? (() => undefined);
  const layout = CANONICAL_LAYOUTS[options.format];
  if (!layout) {
    throw new ConversionError(`unknown format '${options.format}'`);
  }
  const source = parseSource(doc, options.format);
  const sourceNames = source.jointNames ?? SOURCE_ORDERS[options.format];

  const index = new Map<string, number>();
  sourceNames.forEach((name, i) => index.set(name, i));
  const known = new Set<string>([...layout.jointNames]);
  const dropped = sourceNames.filter((n) => !known.has(n));
  if (dropped.length > 0) {
    log(`dropping ${dropped.length} unmapped source joints: ${dropped.join(', ')}`);
  }

  for (const name of layout.jointNames) {
    if (!index.has(name) && !(name in layout.synthesized)) {
      throw new ConversionError(`source is missing required joint '${name}'`);
    }
  }
  for (const [name, parts] of Object.entries(layout.synthesized)) {
    if (!index.has(name)) {
      for (const part of parts) {
        if (!index.has(part)) {
          throw new ConversionError(
            `cannot synthesize '${name}': source lacks '${part}'`);
        }
      }
    }
  }

  let frames = source.frames;
  let fps = options.fps;
  if (options.downsample) {
    if (Math.abs(fps - 50) > 1e-9) {
      throw new ConversionError(
        `downsampling expects a 50 fps source, got ${fps}`);
    }
    frames = frames.filter((_, t) => t % 2 === 0);
    fps = 25;
  }

  const J = layout.jointNames.length;
  const flat: number[] = new Array(frames.length * J * 3);
  for (let t = 0; t < frames.length; t += 1) {
    for (let j = 0; j < J; j += 1) {
      const name = layout.jointNames[j];
      let p: Vec3;
      if (index.has(name)) {
        p = toCanonicalPoint(frames[t][index.get(name)!], options.units, options.up);
      } else {
        const parts = layout.synthesized[name];
        const acc: Vec3 = [0, 0, 0];
        for (const part of parts) {
          const q = toCanonicalPoint(frames[t][index.get(part)!], options.units,
                                     options.up);
          acc[0] += q[0];
          acc[1] += q[1];
          acc[2] += q[2];
        }
        p = [acc[0] / parts.length, acc[1] / parts.length, acc[2] / parts.length];
      }
      const base = (t * J + j) * 3;
      flat[base] = p[0];
      flat[base + 1] = p[1];
      flat[base + 2] = p[2];
    }
  }

  return {
    schema_version: 1,
    format_id: layout.formatId,
    fps,
    joint_names: [...layout.jointNames],
    parent_index: [...layout.parentIndex],
    num_frames: frames.length,
    frames: flat,
  };
}
