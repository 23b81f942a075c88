/** Field-by-field client-side validation mirroring the service's 400
 * semantics, so invalid scenarios never reach the network. */

import type { ForecastRequest, FormFields } from "./types.js";

export type FieldErrors = Partial<Record<keyof FormFields, string>>;

export interface ValidationResult {
  ok: boolean;
  errors: FieldErrors;
  request?: ForecastRequest;
}

const ISO_DATE = /^\d{4}-\d{2}-\d{2}$/;

function isValidIsoDate(value: string): boolean {
  if (!ISO_DATE.test(value)) return false;
  const parsed = new Date(`${value}T00:00:00Z`);
  if (Number.isNaN(parsed.getTime())) return false;
  // reject normalized overflow such as 2018-02-30
  return parsed.toISOString().slice(0, 10) === value;
}

export function validateForm(fields: FormFields): ValidationResult {
  const errors: FieldErrors = {};

  if (!fields.group.trim()) errors.group = "group is required";
  if (!fields.store_id.trim()) errors.store_id = "store is required";

  const promoPrice = Number(fields.promo_price);
  if (fields.promo_price.trim() === "" || !Number.isFinite(promoPrice)) {
    errors.promo_price = "promo price must be a number";
  } else if (promoPrice <= 0) {
    errors.promo_price = "promo price must be positive";
  }

  const priceChange = Number(fields.price_change);
  if (fields.price_change.trim() === "" || !Number.isFinite(priceChange)) {
    errors.price_change = "price change must be a number";
  } else if (priceChange <= 0 || priceChange >= 1) {
    errors.price_change = "price change must be between 0 and 1";
  }

  if (!isValidIsoDate(fields.start_date)) {
    errors.start_date = "start date must be YYYY-MM-DD";
  }

  const duration = Number(fields.duration_days);
  if (!Number.isInteger(duration)) {
    errors.duration_days = "duration must be a whole number of days";
  } else if (duration < 1 || duration > 7) {
    errors.duration_days = "promotions last 1 to 7 days";
  }

  if (Object.keys(errors).length > 0) {
    return { ok: false, errors };
  }
  const request: ForecastRequest = {
    group: fields.group.trim(),
    store_id: fields.store_id.trim(),
    promo_price: promoPrice,
    price_change: priceChange,
    start_date: fields.start_date,
    duration_days: duration,
    tv: fields.tv,
    radio: fields.radio,
    internet: fields.internet,
    other: fields.other,
  };
  const productId = fields.product_id.trim();
  if (productId) request.product_id = productId;
  return { ok: true, errors: {}, request };
}
