/** Chart-ready rows for the horizontal importance bars. Service values are
 * already relative to the highest-ranked feature (leading value 1.0). */

import type { ImportanceEntry } from "./types.js";

export interface Bar {
  name: string;
  value: number;
  widthPct: number;
}

export function toBars(features: ImportanceEntry[], topK = 10): Bar[] {
  return features.slice(0, topK).map((f) => ({
    name: f.name,
    value: f.value,
    widthPct: Math.max(0, Math.min(100, f.value * 100)),
  }));
}
