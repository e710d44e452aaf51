// Token alphabet shared with the service: 0-127 pitch onset, 128 hold, 129 silence.

export const HOLD = 128;
export const SILENCE = 129;
export const NUM_TRACKS = 4;
export const CELLS_PER_BEAT = 4;

export type TokenGrid = number[][]; // [timestep][track]

export const TRACK_NAMES = ["drums", "bass", "guitar", "strings"] as const;

export function gridsEqual(a: TokenGrid, b: TokenGrid): boolean {
  if (a.length !== b.length) return false;
  for (let t = 0; t < a.length; t++) {
    if (a[t].length !== b[t].length) return false;
    for (let k = 0; k < a[t].length; k++) {
      if (a[t][k] !== b[t][k]) return false;
    }
  }
  return true;
}

export function cloneGrid(grid: TokenGrid): TokenGrid {
  return grid.map((row) => row.slice());
}

export function validGrid(grid: TokenGrid, timesteps: number): string | null {
  if (grid.length !== timesteps) {
    return `expected ${timesteps} timesteps, got ${grid.length}`;
  }
  for (let t = 0; t < grid.length; t++) {
    if (grid[t].length !== NUM_TRACKS) {
      return `timestep ${t} has ${grid[t].length} tracks`;
    }
    for (const value of grid[t]) {
      if (!Number.isInteger(value) || value < 0 || value > SILENCE) {
        return `token ${value} at timestep ${t} outside [0, ${SILENCE}]`;
      }
    }
  }
  return null;
}
