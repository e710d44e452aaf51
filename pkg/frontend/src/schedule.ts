// Token grid -> timed note events at 4 cells per beat.

import { CELLS_PER_BEAT, TokenGrid } from "./tokens.js";
import { noteRects } from "./pianoroll.js";

export interface ScheduledNote {
  track: number;
  pitch: number;
  startSec: number;
  durationSec: number;
}

export function cellDurationSec(bpm: number): number {
  return 60 / bpm / CELLS_PER_BEAT;
}

export function totalDurationSec(timesteps: number, bpm: number): number {
  return timesteps * cellDurationSec(bpm);
}

export function scheduleNotes(tokens: TokenGrid, bpm: number): ScheduledNote[] {
  const cell = cellDurationSec(bpm);
  return noteRects(tokens).map((rect) => ({
    track: rect.track,
    pitch: rect.pitch,
    startSec: rect.startCell * cell,
    durationSec: rect.lengthCells * cell,
  }));
}

export function pitchToFrequency(pitch: number): number {
  return 440 * Math.pow(2, (pitch - 69) / 12);
}
