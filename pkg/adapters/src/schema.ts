/** Local structural checks mirroring the canonical pose file schema. */

import { CanonicalPoseDocument } from './convert.js';

export function checkCanonical(doc: CanonicalPoseDocument): string[] {
  const problems: string[] = [];
  if (doc.schema_version !== 1) {
    problems.push(`schema_version must be 1, got ${doc.schema_version}`);
  }
  if (!(doc.fps > 0)) {
    problems.push('fps must be positive');
  }
  if (doc.joint_names.length !== doc.parent_index.length) {
    problems.push('joint_names and parent_index lengths differ');
  }
  const roots = doc.parent_index.filter((p) => p < 0).length;
  if (roots !== 1) {
    problems.push(`expected exactly one root, found ${roots}`);
  }
  const rootIdx = doc.parent_index.indexOf(-1);
  if (rootIdx >= 0 && doc.joint_names[rootIdx] !== 'pelvis') {
    problems.push('tree must be rooted at the pelvis');
  }
  doc.parent_index.forEach((p, i) => {
    if (p >= doc.parent_index.length || p === i) {
      problems.push(`invalid parent ${p} for joint ${doc.joint_names[i]}`);
    }
  });
  if (doc.num_frames < 2) {
    problems.push('need at least 2 frames');
  }
  const expected = doc.num_frames * doc.joint_names.length * 3;
  if (doc.frames.length !== expected) {
    problems.push(`frames has ${doc.frames.length} values, expected ${expected}`);
  }
  if (doc.frames.some((v) => !Number.isFinite(v))) {
    problems.push('non-finite positions');
  }
  return problems;
}
