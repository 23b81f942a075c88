/** Per-indicator differences between the current forecast and the previous
 * scenario. Only numbers received from the service, or differences of two
 * received numbers, ever leave this module. */

import { INDICATOR_KEYS, type IndicatorKey } from "./types.js";

export type Deltas = Record<IndicatorKey, number | null>;

export function computeDeltas(
  current: Record<IndicatorKey, number>,
  previous: Record<IndicatorKey, number> | null,
): Deltas {
  const out = {} as Deltas;
  for (const key of INDICATOR_KEYS) {
    out[key] = previous === null ? null : current[key] - previous[key];
  }
  return out;
}

export type Trend = "up" | "down" | "flat" | "none";

export function trend(delta: number | null): Trend {
  if (delta === null) return "none";
  if (delta > 0) return "up";
  if (delta < 0) return "down";
  return "flat";
}

export const TREND_ARROWS: Record<Trend, string> = {
  up: "↑",
  down: "↓",
  flat: "→",
  none: "",
};
