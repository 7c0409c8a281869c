/**
 * The 20 selectable analysis perceptions, mirroring the service contract:
 * 16 consumer emotions plus 4 consumer evaluations. Ids must match the
 * service's output column names exactly.
 */

export const EMOTIONS: readonly string[] = [
  'anger',
  'discontent',
  'worry',
  'sadness',
  'fear',
  'shame',
  'envy',
  'loneliness',
  'romantic_love',
  'love',
  'peacefulness',
  'contentment',
  'optimism',
  'joy',
  'excitement',
  'surprise',
];

export const EVALUATIONS: readonly string[] = [
  'trust',
  'commitment',
  'recommendation',
  'sentiment',
];

export const ALL_PERCEPTIONS: readonly string[] = [...EMOTIONS, ...EVALUATIONS];
