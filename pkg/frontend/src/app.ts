/** DOM wiring for the planner: form on the left, six-indicator panel with
 * change arrows, importance bars and the scenario history. */

import { ApiClient, RequestCancelled, ServiceUnreachable } from "./client.js";
import { TREND_ARROWS, trend } from "./deltas.js";
import { ScenarioHistory } from "./history.js";
import { toBars } from "./importance.js";
import { submitScenario } from "./scenario.js";
import {
  CHANNEL_KEYS,
  INDICATOR_KEYS,
  INDICATOR_LABELS,
  type FormFields,
  type IndicatorKey,
} from "./types.js";

const SERVICE_URL =
  new URLSearchParams(window.location.search).get("service") ??
  "http://127.0.0.1:8080";

const client = new ApiClient(SERVICE_URL);
const history = new ScenarioHistory();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function input(id: string): HTMLInputElement {
  return el<HTMLInputElement>(id);
}

function readForm(): FormFields {
  return {
    group: input("group").value,
    store_id: input("store_id").value,
    product_id: input("product_id").value,
    promo_price: input("promo_price").value,
    price_change: input("price_change").value,
    start_date: input("start_date").value,
    duration_days: input("duration_days").value,
    tv: input("tv").checked,
    radio: input("radio").checked,
    internet: input("internet").checked,
    other: input("other").checked,
  };
}

function writeForm(fields: FormFields): void {
  input("group").value = fields.group;
  input("store_id").value = fields.store_id;
  input("product_id").value = fields.product_id;
  input("promo_price").value = fields.promo_price;
  input("price_change").value = fields.price_change;
  input("start_date").value = fields.start_date;
  input("duration_days").value = fields.duration_days;
  for (const channel of CHANNEL_KEYS) input(channel).checked = fields[channel];
}

function clearFieldErrors(): void {
  for (const node of document.querySelectorAll(".field-error")) {
    node.textContent = "";
  }
}

function showBanner(message: string | null): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = message ?? "";
  banner.hidden = message === null;
}

function renderIndicators(
  values: Record<IndicatorKey, number>,
  deltas: Record<IndicatorKey, number | null>,
): void {
  const panel = el<HTMLDivElement>("indicators");
  panel.replaceChildren();
  for (const key of INDICATOR_KEYS) {
    const card = document.createElement("div");
    card.className = "indicator";
    const label = document.createElement("span");
    label.className = "indicator-label";
    label.textContent = INDICATOR_LABELS[key];
    const value = document.createElement("span");
    value.className = "indicator-value";
    value.textContent = values[key].toFixed(3);
    card.append(label, value);
    const delta = deltas[key];
    if (delta !== null) {
      const arrow = document.createElement("span");
      const direction = trend(delta);
      arrow.className = `indicator-delta ${direction}`;
      arrow.textContent = `${TREND_ARROWS[direction]} ${delta >= 0 ? "+" : ""}${delta.toFixed(3)}`;
      card.append(arrow);
    }
    panel.append(card);
  }
}

function renderHistory(): void {
  const list = el<HTMLUListElement>("history");
  list.replaceChildren();
  for (const entry of history.all()) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.type = "button";
    const r = entry.request;
    button.textContent =
      `#${entry.index + 1} ${r.group}/${r.store_id} ` +
      `-${(r.price_change * 100).toFixed(0)}% ${r.duration_days}d ${r.start_date}`;
    button.addEventListener("click", () => {
      writeForm(history.restore(entry.index));
      renderIndicators(
        entry.response.indicators,
        Object.fromEntries(INDICATOR_KEYS.map((k) => [k, null])) as Record<
          IndicatorKey,
          null
        >,
      );
    });
    item.append(button);
    list.append(item);
  }
}

async function renderImportance(): Promise<void> {
  const group = input("group").value.trim();
  const indicator = el<HTMLSelectElement>("importance-indicator").value;
  const chart = el<HTMLDivElement>("importance-chart");
  if (!group) return;
  try {
    const response = await client.importance(group, indicator, 10);
    chart.replaceChildren();
    for (const bar of toBars(response.features, 10)) {
      const row = document.createElement("div");
      row.className = "bar-row";
      const name = document.createElement("span");
      name.className = "bar-name";
      name.textContent = bar.name;
      const track = document.createElement("div");
      track.className = "bar-track";
      const fill = document.createElement("div");
      fill.className = "bar-fill";
      fill.style.width = `${bar.widthPct}%`;
      fill.title = bar.value.toFixed(3);
      track.append(fill);
      row.append(name, track);
      chart.append(row);
    }
    showBanner(null);
  } catch (err) {
    if (err instanceof ServiceUnreachable) {
      showBanner("Service unreachable; importance chart not updated.");
    } else {
      chart.replaceChildren();
      chart.textContent = (err as Error).message;
    }
  }
}

async function onSubmit(event: Event): Promise<void> {
  event.preventDefault();
  clearFieldErrors();
  let outcome;
  try {
    outcome = await submitScenario(readForm(), client, history);
  } catch (err) {
    if (err instanceof RequestCancelled) return; // superseded by a newer submit
    if (err instanceof ServiceUnreachable) {
      showBanner("Service unreachable; the form stays editable. Retry when it is back.");
      return;
    }
    showBanner((err as Error).message);
    return;
  }
  showBanner(null);
  if (outcome.kind === "invalid") {
    for (const [field, message] of Object.entries(outcome.errors)) {
      const slot = document.getElementById(`error-${field}`);
      if (slot) slot.textContent = message ?? "";
    }
    return;
  }
  renderIndicators(outcome.response.indicators, outcome.deltas);
  renderHistory();
  void renderImportance();
}

function populateIndicatorSelect(): void {
  const select = el<HTMLSelectElement>("importance-indicator");
  for (const key of INDICATOR_KEYS) {
    const option = document.createElement("option");
    option.value = key;
    option.textContent = INDICATOR_LABELS[key];
    select.append(option);
  }
}

export function start(): void {
  populateIndicatorSelect();
  el<HTMLFormElement>("scenario-form").addEventListener("submit", (e) => {
    void onSubmit(e);
  });
  el<HTMLSelectElement>("importance-indicator").addEventListener("change", () => {
    void renderImportance();
  });
  void client
    .health()
    .then(() => showBanner(null))
    .catch(() => showBanner("Service unreachable; the form stays editable."));
}

start();
