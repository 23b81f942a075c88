/** Thin typed client for the forecasting service.
 *
 * Keeps a single in-flight forecast: submitting again aborts the pending
 * request, so rapid re-submits never race. */

import type {
  ForecastRequest,
  ForecastResponse,
  ImportanceResponse,
  ModelInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class RequestCancelled extends Error {
  constructor() {
    super("request cancelled by a newer submission");
    this.name = "RequestCancelled";
  }
}

export class ServiceUnreachable extends Error {
  constructor(cause: unknown) {
    super(`service unreachable: ${String(cause)}`);
    this.name = "ServiceUnreachable";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    return typeof body.detail === "string"
      ? body.detail
      : JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText || `HTTP ${response.status}`;
  }
}

export class ApiClient {
  private inflight: AbortController | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  /** POST /forecast; aborts any forecast still in flight. */
  async forecast(request: ForecastRequest): Promise<ForecastResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/forecast`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(request),
        signal: controller.signal,
      });
    } catch (cause) {
      if (controller.signal.aborted || (cause as Error)?.name === "AbortError") {
        throw new RequestCancelled();
      }
      throw new ServiceUnreachable(cause);
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return (await response.json()) as ForecastResponse;
  }

  cancelPending(): void {
    this.inflight?.abort();
    this.inflight = null;
  }

  async importance(
    group: string,
    indicator: string,
    topK = 10,
  ): Promise<ImportanceResponse> {
    return this.getJson(
      `/importance/${encodeURIComponent(group)}/${encodeURIComponent(indicator)}?top_k=${topK}`,
    );
  }

  async models(): Promise<ModelInfo[]> {
    return this.getJson("/models");
  }

  async health(): Promise<{ status: string; version: number }> {
    return this.getJson("/health");
  }

  private async getJson<T>(path: string): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`);
    } catch (cause) {
      throw new ServiceUnreachable(cause);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorMessage(response));
    }
    return (await response.json()) as T;
  }
}
