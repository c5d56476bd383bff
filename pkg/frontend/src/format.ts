// Display-only helpers. All statistics arrive precomputed from the API;
// nothing here changes a value, only its rendering.

/** Significance legend. The service is the source of truth (tables
 * responses carry it); this copy is only a render fallback and must
 * match byte-for-byte. */
export const STAR_LEGEND = '***: α = 1%; **: α = 5%; *: α = 10%';

export function formatPercent(fraction: number, digits = 1): string {
  return `${(fraction * 100).toFixed(digits)}%`;
}

/** Signed difference in percentage points, e.g. +10.5 or -3.2. */
export function formatDiffPoints(fraction: number, digits = 1): string {
  const pts = fraction * 100;
  const sign = pts >= 0 ? '+' : '';
  return `${sign}${pts.toFixed(digits)}`;
}

export function formatNumber(x: number, digits = 3): string {
  return x.toFixed(digits);
}

export function formatSimilarity(x: number): string {
  return x.toFixed(3);
}
