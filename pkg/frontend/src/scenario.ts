/** The planner loop, UI-free: validate, forecast, diff against the
 * previous scenario, append to history. Invalid forms never reach the
 * network. */

import type { ApiClient } from "./client.js";
import { computeDeltas, type Deltas } from "./deltas.js";
import type { ScenarioHistory } from "./history.js";
import type { ForecastResponse, FormFields } from "./types.js";
import { validateForm, type FieldErrors } from "./validation.js";

export type SubmitOutcome =
  | { kind: "invalid"; errors: FieldErrors }
  | { kind: "forecast"; response: ForecastResponse; deltas: Deltas };

export async function submitScenario(
  fields: FormFields,
  client: Pick<ApiClient, "forecast">,
  history: ScenarioHistory,
  now: () => number = Date.now,
): Promise<SubmitOutcome> {
  const validation = validateForm(fields);
  if (!validation.ok || !validation.request) {
    return { kind: "invalid", errors: validation.errors };
  }
  const previous = history.last();
  const response = await client.forecast(validation.request);
  const deltas = computeDeltas(
    response.indicators,
    previous ? previous.response.indicators : null,
  );
  history.add(fields, validation.request, response, now());
  return { kind: "forecast", response, deltas };
}
