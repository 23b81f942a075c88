/** Append-only session history of submitted scenarios. */

import type { ForecastRequest, ForecastResponse, FormFields } from "./types.js";

export interface ScenarioEntry {
  readonly index: number;
  readonly timestamp: number;
  readonly fields: FormFields;
  readonly request: ForecastRequest;
  readonly response: ForecastResponse;
}

export class ScenarioHistory {
  private readonly items: ScenarioEntry[] = [];

  add(
    fields: FormFields,
    request: ForecastRequest,
    response: ForecastResponse,
    timestamp: number,
  ): ScenarioEntry {
    const entry: ScenarioEntry = {
      index: this.items.length,
      timestamp,
      fields: { ...fields },
      request: { ...request },
      response,
    };
    this.items.push(entry);
    return entry;
  }

  get length(): number {
    return this.items.length;
  }

  last(): ScenarioEntry | null {
    return this.items.length ? this.items[this.items.length - 1] : null;
  }

  at(index: number): ScenarioEntry {
    const entry = this.items[index];
    if (!entry) throw new RangeError(`no scenario at index ${index}`);
    return entry;
  }

  all(): readonly ScenarioEntry[] {
    return this.items;
  }

  /** A detached copy of a past scenario's form state, for replay. */
  restore(index: number): FormFields {
    return { ...this.at(index).fields };
  }
}
