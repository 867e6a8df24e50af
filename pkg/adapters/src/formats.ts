/**
 * Joint layouts: source export orders and the canonical skeletons they map
 * to. Canonical layouts must match the primary's registry exactly (see
 * docs/file_formats.md in the repository root).
 */

export type FormatId = 'h36m17' | 'npc16' | 'base23';

export const CANONICAL_H36M17 = [
  'pelvis', 'right_hip', 'right_knee', 'right_ankle',
  'left_hip', 'left_knee', 'left_ankle',
  'spine', 'thorax', 'neck', 'head',
  'left_shoulder', 'left_elbow', 'left_wrist',
  'right_shoulder', 'right_elbow', 'right_wrist',
];
export const CANONICAL_H36M17_PARENTS =
  [-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15];

export const CANONICAL_NPC16 = CANONICAL_H36M17.filter((n) => n !== 'spine');
export const CANONICAL_NPC16_PARENTS =
  [-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 7, 10, 11, 7, 13, 14];

// the 23 wholebody detections plus the three joints synthesized from
// hip/shoulder midpoints so the tree can root at the pelvis
export const CANONICAL_BASE23 = [
  'pelvis', 'thorax', 'neck',
  'nose', 'left_eye', 'right_eye', 'left_ear', 'right_ear',
  'left_shoulder', 'right_shoulder', 'left_elbow', 'right_elbow',
  'left_wrist', 'right_wrist',
  'left_hip', 'right_hip', 'left_knee', 'right_knee',
  'left_ankle', 'right_ankle',
  'left_big_toe', 'left_small_toe', 'left_heel',
  'right_big_toe', 'right_small_toe', 'right_heel',
];
export const CANONICAL_BASE23_PARENTS = [
  -1, 0, 1, 2, 3, 3, 4, 5, 1, 1, 8, 9, 10, 11,
  0, 0, 14, 15, 16, 17, 18, 18, 18, 19, 19, 19,
];

/** Default joint order of each source export when the file carries none. */
export const SOURCE_ORDERS: Record<FormatId, string[]> = {
  h36m17: CANONICAL_H36M17,
  npc16: CANONICAL_NPC16,
  base23: [
    'nose', 'left_eye', 'right_eye', 'left_ear', 'right_ear',
    'left_shoulder', 'right_shoulder', 'left_elbow', 'right_elbow',
    'left_wrist', 'right_wrist',
    'left_hip', 'right_hip', 'left_knee', 'right_knee',
    'left_ankle', 'right_ankle',
    'left_big_toe', 'left_small_toe', 'left_heel',
    'right_big_toe', 'right_small_toe', 'right_heel',
  ],
};

export interface CanonicalLayout {
  formatId: string;
  jointNames: string[];
  parentIndex: number[];
  /** canonical joints synthesized as the mean of source joints */
  synthesized: Record<string, string[]>;
}

export const CANONICAL_LAYOUTS: Record<FormatId, CanonicalLayout> = {
  h36m17: {
    formatId: 'H36M17',
    jointNames: CANONICAL_H36M17,
    parentIndex: CANONICAL_H36M17_PARENTS,
    synthesized: {},
  },
  npc16: {
    formatId: 'NPC16',
    jointNames: CANONICAL_NPC16,
    parentIndex: CANONICAL_NPC16_PARENTS,
    synthesized: {},
  },
  base23: {
    formatId: 'BASE23',
    jointNames: CANONICAL_BASE23,
    parentIndex: CANONICAL_BASE23_PARENTS,
    synthesized: {
      pelvis: ['left_hip', 'right_hip'],
      thorax: ['left_shoulder', 'right_shoulder'],
      neck: ['left_shoulder', 'right_shoulder'],
    },
  },
};
