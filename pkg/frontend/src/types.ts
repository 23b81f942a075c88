/** Shared request/response shapes of the forecasting service. */

export const INDICATOR_KEYS = [
  "avg_amount",
  "avg_nb_receipts",
  "avg_basket",
  "avg_basket_without_item",
  "avg_nb_unique_items",
  "avg_nb_clients",
] as const;

export type IndicatorKey = (typeof INDICATOR_KEYS)[number];

export const INDICATOR_LABELS: Record<IndicatorKey, string> = {
  avg_amount: "Avg. Amount",
  avg_nb_receipts: "Avg. Nb. Receipts",
  avg_basket: "Avg. Basket",
  avg_basket_without_item: "Avg. Basket Without Item",
  avg_nb_unique_items: "Avg. Nb. Unique Items",
  avg_nb_clients: "Avg. Nb. Clients",
};

export const CHANNEL_KEYS = ["tv", "radio", "internet", "other"] as const;
export type ChannelKey = (typeof CHANNEL_KEYS)[number];

export interface ForecastRequest {
  group: string;
  store_id: string;
  product_id?: string;
  promo_price: number;
  price_change: number;
  start_date: string;
  duration_days: number;
  tv: boolean;
  radio: boolean;
  internet: boolean;
  other: boolean;
}

export interface ForecastResponse {
  indicators: Record<IndicatorKey, number>;
  model_version: number;
  request: ForecastRequest;
}

export interface ImportanceEntry {
  name: string;
  value: number;
}

export interface ImportanceResponse {
  group: string;
  indicator: IndicatorKey;
  features: ImportanceEntry[];
}

export interface ModelInfo {
  group: string;
  indicator: IndicatorKey;
  version: number;
  [meta: string]: string | number;
}

/** Editable form state: everything starts as raw strings plus flags. */
export interface FormFields {
  group: string;
  store_id: string;
  product_id: string;
  promo_price: string;
  price_change: string;
  start_date: string;
  duration_days: string;
  tv: boolean;
  radio: boolean;
  internet: boolean;
  other: boolean;
}
