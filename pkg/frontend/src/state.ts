// Editor state and the service-driven edit loop. All mutations funnel
// through actions; in-flight decodes are superseded latest-wins so a stale
// response never overwrites a newer edit.

import { ServiceClient, ExemplarInfo, GenresResponse } from "./api.js";
import { TokenGrid, cloneGrid } from "./tokens.js";

export interface EditorState {
  latentDim: number;
  timesteps: number;
  genres: GenresResponse | null;
  exemplars: ExemplarInfo[];
  selectedA: number | null;
  selectedB: number | null;
  muA: number[] | null;
  muB: number[] | null;
  alpha: number;
  z: number[] | null;
  genreId: number | null;
  decoded: TokenGrid | null;
  playing: boolean;
  positionCell: number | null;
  error: string | null;
  stale: boolean;
}

type Listener = (state: EditorState) => void;

export class EditorStore {
  private state: EditorState = {
    latentDim: 0,
    timesteps: 32,
    genres: null,
    exemplars: [],
    selectedA: null,
    selectedB: null,
    muA: null,
    muB: null,
    alpha: 0,
    z: null,
    genreId: null,
    decoded: null,
    playing: false,
    positionCell: null,
    error: null,
    stale: false,
  };
  private listeners: Listener[] = [];
  private decodeSequence = 0;

  constructor(private client: ServiceClient) {}

  get current(): EditorState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(patch: Partial<EditorState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  async init(exemplarLimit = 32): Promise<void> {
    try {
      const [genres, exemplars] = await Promise.all([
        this.client.genres(),
        this.client.exemplars(exemplarLimit),
      ]);
      this.update({
        genres,
        exemplars,
        latentDim: genres.latent_dim,
        timesteps: genres.timesteps,
        error: null,
      });
    } catch (err) {
      this.update({ error: String(err) });
    }
  }

  /** Tag a response with a sequence number; stale replies are dropped. */
  private async latestWins(work: (seq: number) => Promise<void>): Promise<void> {
    const seq = ++this.decodeSequence;
    try {
      await work(seq);
    } catch (err) {
      if (seq === this.decodeSequence) this.update({ error: String(err), stale: true });
    }
  }

  private fresh(seq: number): boolean {
    return seq === this.decodeSequence;
  }

  async selectExemplar(which: "A" | "B", index: number): Promise<void> {
    const exemplar = this.state.exemplars[index];
    if (!exemplar) return;
    const encoded = await this.client.encode(exemplar.tokens);
    if (which === "A") {
      this.update({ selectedA: index, muA: encoded.mu });
    } else {
      this.update({ selectedB: index, muB: encoded.mu });
    }
    await this.refreshInterpolation();
  }

  /** Decode the current alpha position between the two selections. */
  async refreshInterpolation(): Promise<void> {
    const { muA, muB, alpha } = this.state;
    if (!muA) return;
    await this.latestWins(async (seq) => {
      if (muB) {
        const grids = await this.client.interpolate(muA, muB, [alpha]);
        if (this.fresh(seq)) {
          this.update({ decoded: grids[0], z: lerp(muA, muB, alpha), error: null, stale: false });
        }
      } else {
        const grid = await this.client.decode(muA);
        if (this.fresh(seq)) this.update({ decoded: grid, z: muA.slice(), error: null, stale: false });
      }
    });
  }

  async setAlpha(alpha: number): Promise<void> {
    this.update({ alpha });
    await this.refreshInterpolation();
  }

  /** Directly edit latent dimensions (2-D genre pad and sliders). */
  async setLatent(dims: Record<number, number>): Promise<void> {
    const z = (this.state.z ?? new Array(this.state.latentDim).fill(0)).slice();
    for (const [dim, value] of Object.entries(dims)) {
      z[Number(dim)] = value;
    }
    this.update({ z });
    await this.latestWins(async (seq) => {
      const grid = await this.client.decode(z);
      if (this.fresh(seq)) this.update({ decoded: grid, error: null, stale: false });
    });
  }

  async sampleFromGenre(genreId: number | null): Promise<void> {
    await this.latestWins(async (seq) => {
      const body = await this.client.sample(1, genreId ?? undefined);
      if (this.fresh(seq)) {
        this.update({
          genreId,
          z: body.z[0],
          decoded: body.tokens[0],
          error: null,
          stale: false,
        });
      }
    });
  }

  /** Grid edit: write a cell, re-encode through the service, show its z. */
  async editCell(cell: number, track: number, token: number): Promise<void> {
    if (!this.state.decoded) return;
    const grid = cloneGrid(this.state.decoded);
    grid[cell][track] = token;
    this.update({ decoded: grid });
    const encoded = await this.client.encode(grid);
    this.update({ z: encoded.mu, error: null });
  }

  setPlayback(playing: boolean, positionCell: number | null = null): void {
    this.update({ playing, positionCell });
  }
}

export function lerp(a: number[], b: number[], alpha: number): number[] {
  return a.map((v, i) => (1 - alpha) * v + alpha * b[i]);
}
