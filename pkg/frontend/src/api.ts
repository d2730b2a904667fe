// Thin typed client for the croon service. Every error becomes a
// ServiceError carrying the body's stage/code so the UI can tag banners.

import type {
  BackendListingJson,
  CharacterJson,
  ConfigOverrides,
  EvalReportJson,
  MelodyListingJson,
  ServiceErrorBody,
  TurnResultJson,
} from "./types.js";

export class ServiceError extends Error {
  readonly status: number;
  readonly stage?: string;
  readonly code: string;

  constructor(status: number, body: ServiceErrorBody) {
    super(body.message);
    this.status = status;
    this.stage = body.stage;
    this.code = body.code;
  }
}

export class ConnectionError extends Error {}

export class CroonClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ConnectionError(`service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let body: ServiceErrorBody;
      try {
        body = (await response.json()) as ServiceErrorBody;
      } catch {
        body = { code: "error", message: `HTTP ${response.status}` };
      }
      throw new ServiceError(response.status, body);
    }
    return (await response.json()) as T;
  }

  postTurn(sessionId: string, audioB64: string, config: ConfigOverrides): Promise<TurnResultJson> {
    return this.request<TurnResultJson>("/api/turn", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ session_id: sessionId, audio_b64: audioB64, config }),
    });
  }

  getCharacters(): Promise<CharacterJson[]> {
    return this.request<CharacterJson[]>("/api/characters");
  }

  getMelodies(): Promise<MelodyListingJson[]> {
    return this.request<MelodyListingJson[]>("/api/melodies");
  }

  getBackends(): Promise<BackendListingJson> {
    return this.request<BackendListingJson>("/api/backends");
  }

  postEval(
    items: { id: string; audio_b64: string; ref_text?: string }[],
    config: ConfigOverrides,
  ): Promise<EvalReportJson> {
    return this.request<EvalReportJson>("/api/eval", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ items, config }),
    });
  }

  health(): Promise<{ status: string; backends: Record<string, string> }> {
    return this.request("/healthz");
  }
}
