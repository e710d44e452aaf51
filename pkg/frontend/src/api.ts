// Typed client for the model service. The UI never computes model math:
// every decoded grid it shows came back from one of these calls.

import { TokenGrid } from "./tokens.js";

export interface EncodeResponse {
  mu: number[];
  sigma: number[];
  z: number[];
}

export interface GenresResponse {
  tags: string[];
  component_of: number[];
  latent_dim: number;
  timesteps: number;
}

export interface ExemplarInfo {
  id: string;
  song_id: string;
  tokens: TokenGrid;
}

export interface HealthResponse {
  status: string;
  checkpoint: string;
  latent_dim: number;
  timesteps: number;
  prior: string;
  exemplars: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`service error ${status}: ${JSON.stringify(detail)}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail: unknown = null;
  try {
    detail = (await response.json()).detail;
  } catch {
    detail = await response.text().catch(() => null);
  }
  throw new ApiError(response.status, detail);
}

export class ServiceClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.getJson("/health");
  }

  genres(): Promise<GenresResponse> {
    return this.getJson("/genres");
  }

  async exemplars(limit: number): Promise<ExemplarInfo[]> {
    const body = await this.getJson<{ exemplars: ExemplarInfo[] }>(`/exemplars?limit=${limit}`);
    return body.exemplars;
  }

  encode(tokens: TokenGrid, seed?: number): Promise<EncodeResponse> {
    return this.postJson("/encode", seed === undefined ? { tokens } : { tokens, seed });
  }

  async decode(z: number[]): Promise<TokenGrid> {
    const body = await this.postJson<{ tokens: TokenGrid }>("/decode", { z });
    return body.tokens;
  }

  async interpolate(z1: number[], z2: number[], alphas: number[]): Promise<TokenGrid[]> {
    const body = await this.postJson<{ tokens: TokenGrid[] }>("/interpolate", { z1, z2, alphas });
    return body.tokens;
  }

  async sample(count: number, genreId?: number, seed?: number): Promise<{ z: number[][]; tokens: TokenGrid[] }> {
    const body: Record<string, unknown> = { count };
    if (genreId !== undefined) body.genre_id = genreId;
    if (seed !== undefined) body.seed = seed;
    return this.postJson("/sample", body);
  }

  async exportMidi(tokens: TokenGrid, tempoBpm = 120): Promise<ArrayBuffer> {
    const response = await this.fetchFn(`${this.baseUrl}/export`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ tokens, tempo_bpm: tempoBpm }),
    });
    if (!response.ok) await parseError(response);
    return response.arrayBuffer();
  }
}
